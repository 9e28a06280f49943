use thiserror::Error;

/// Errors produced by the numerical kernels and the higher-level analyses.
#[derive(Debug, Clone, Error)]
pub enum Error {
    #[error("domain violation: {0}")]
    Domain(String),

    #[error("no sign change on [{a:e}, {b:e}] (f(a) = {fa:e}, f(b) = {fb:e})")]
    Bracket { a: f64, b: f64, fa: f64, fb: f64 },

    #[error("quadrature did not converge: estimate {estimate:e}, error bound {error_bound:e}")]
    Quadrature { estimate: f64, error_bound: f64 },

    #[error("point (u = {u}, v = {v}) is not strictly inside the zero-energy manifold")]
    OutsideManifold { u: f64, v: f64 },

    #[error("integrand does not decay like x^(-3/2) or faster; refusing the infinite tail")]
    NonDecay,

    #[error("initial value s = {s} is blocked: the outer trajectory reaches u = 0 before t = sigma (blocked interval [{lo}, {hi}])")]
    Blocked { s: f64, lo: f64, hi: f64 },

    #[error("evaluation too close to the manifold asymptote (energy gap {gap:e})")]
    NearAsymptote { gap: f64 },

    #[error("internal error: {0}")]
    Internal(String),
}

pub type Result<T> = std::result::Result<T, Error>;
