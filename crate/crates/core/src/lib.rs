//! Time-map and phase-plane machinery for the Neumann problem
//! -u'' = a(t) u^2 (1 - u) with a step-wise indefinite weight equal to
//! +lambda on [0, sigma] and [1 - sigma, 1] and -mu in between.
//!
//! The crate enumerates all positive non-constant solutions by matching
//! connection times across the middle interval against its length, computes
//! every existence/multiplicity threshold in the (lambda, mu) plane, traces
//! the mu-parametrized solution branches, and evaluates the large-lambda
//! limits along rays mu = K lambda, together with executable certificates
//! for the underlying polynomial sign conditions and small-s expansions.

pub mod appendix;
pub mod asymptotics;
pub mod bifurcation;
pub mod connection;
pub mod error;
pub mod model;
pub mod negative;
pub mod positive;
pub mod quad;
pub mod solver;

pub use error::{Error, Result};
pub use model::{AsymKey, Params, PhasePoint};
