//! Large-lambda limits along the rays mu = K lambda: the scaled profile
//! integral, the sign-weighted landmark function, the limiting landmark
//! ratios, the two limiting connection times, and the K- and sigma-
//! thresholds for four and eight solutions.

use crate::error::{Error, Result};
use crate::model::AsymKey;
use crate::quad::{self, SingularitySpec};
use serde::{Deserialize, Serialize};

const TOL: f64 = 1e-12;

/// Limiting landmark ratios and connection times along mu = K lambda.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct AsymptoticConstants {
    pub k: f64,
    pub sigma: f64,
    /// Limit of (transported abscissa / starting value) at the first
    /// manifold crossing: (1 + K)^(-1/3).
    pub l0m_ratio: f64,
    /// Limit of lambda times the first-crossing starting value.
    pub l0m_scale: f64,
    /// Limit ratio at the interior tangency (minimizer of the landmark
    /// function), in ((1+K)^(-1/3), 1).
    pub l0tau: f64,
    /// Scaled turning abscissa of the tangent level.
    pub m0tau: f64,
    /// Limit ratio at the tangency partner toward 1.
    pub l1tau: f64,
    /// Limit of the common first/second connection time at the tangency.
    pub theta1: f64,
    /// Limit of the third connection time there.
    pub theta2: f64,
}

/// The scaled profile integral sqrt(3) * integral over (r, 1) of
/// (1 - xi^3)^(-1/2); strictly decreasing with value 0 at r = 1.
pub fn profile_integral(r: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&r) {
        return Err(Error::Domain(format!("profile integral needs r in [0, 1], got {r}")));
    }
    if r == 1.0 {
        return Ok(0.0);
    }
    // xi = 1 - w^2 removes the endpoint singularity exactly:
    // 1 - xi^3 = w^2 (1 + xi + xi^2)
    let w_max = (1.0 - r).sqrt();
    let val = quad::integrate(
        |w| {
            let xi = 1.0 - w * w;
            2.0 / (1.0 + xi * (1.0 + xi)).sqrt()
        },
        0.0,
        w_max,
        SingularitySpec::NONE,
        TOL,
    )?;
    Ok(3.0_f64.sqrt() * val)
}

fn profile_integral_derivative(r: f64) -> f64 {
    -(3.0 / (1.0 - r * r * r)).sqrt()
}

/// The landmark function I(r)^6 (1 - (1+K) r^3): negative exactly on
/// ((1+K)^(-1/3), 1) with a single interior minimum.
pub fn landmark_function(r: f64, k: f64) -> Result<f64> {
    let i = profile_integral(r)?;
    Ok(i.powi(6) * (1.0 - (1.0 + k) * r * r * r))
}

/// The minimizer of the landmark function, from its stationarity condition
/// 2 I'(r)/I(r) = (1+K) r^2 / (1 - (1+K) r^3) rather than from direct
/// minimization (the minimum is flat).
pub fn landmark_minimizer(k: f64) -> Result<f64> {
    let l0m = (1.0 + k).powf(-1.0 / 3.0);
    let f = |r: f64| {
        let i = profile_integral(r).unwrap_or(f64::NAN);
        let w1 = 2.0 * profile_integral_derivative(r) / i;
        let w2 = (1.0 + k) * r * r / (1.0 - (1.0 + k) * r * r * r);
        w1 - w2
    };
    let lo = l0m + (1.0 - l0m) * 1e-9;
    let hi = 1.0 - 1e-9;
    quad::find_root(f, lo, hi, 1e-14)
}

/// All limiting constants along mu = K lambda.
pub fn landmarks(key: &AsymKey) -> Result<AsymptoticConstants> {
    let (k, sigma) = (key.k, key.sigma);
    let l0m_ratio = (1.0 + k).powf(-1.0 / 3.0);
    let i_l0m = profile_integral(l0m_ratio)?;
    let l0m_scale = (i_l0m / (2.0_f64.sqrt() * sigma)).powi(2);

    let l0tau = landmark_minimizer(k)?;
    let m0tau = (((1.0 + k) * l0tau.powi(3) - 1.0) / k).cbrt();

    // G(r) = G(1) / (1 + K) on (0, 1)
    let target = (1.0 / 12.0) / (1.0 + k);
    let l1tau = quad::find_root(
        |r| crate::model::g_primitive_unchecked(r) - target,
        0.0,
        1.0,
        1e-15,
    )?;

    let i_tau = profile_integral(l0tau)?;
    // core integral from the turning ratio up to the tangency ratio, with
    // the usual square-root substitution at the lower end
    let w_max = (l0tau - m0tau).sqrt();
    let core = quad::integrate(
        |w| {
            let u = m0tau + w * w;
            2.0 / ((u * u + u * m0tau + m0tau * m0tau) / 3.0).sqrt()
        },
        0.0,
        w_max,
        SingularitySpec::NONE,
        TOL,
    )?;
    let theta1 = 2.0 * sigma / (i_tau * k.sqrt()) * core;

    // tail integral to infinity; x^(-3/2) decay
    let tail = quad::integrate_to_infinity(
        |u| 1.0 / ((u * u * u - m0tau.powi(3)) / 3.0).sqrt(),
        l0tau,
        TOL,
    )?;
    let theta2 = theta1 + sigma / (i_tau * k.sqrt()) * tail;

    Ok(AsymptoticConstants {
        k,
        sigma,
        l0m_ratio,
        l0m_scale,
        l0tau,
        m0tau,
        l1tau,
        theta1,
        theta2,
    })
}

/// First limiting connection time as a function of K at fixed sigma.
pub fn theta1_of(k: f64, sigma: f64) -> Result<f64> {
    Ok(landmarks(&AsymKey::new(k, sigma)?)?.theta1)
}

/// Third limiting connection time as a function of K at fixed sigma.
pub fn theta2_of(k: f64, sigma: f64) -> Result<f64> {
    Ok(landmarks(&AsymKey::new(k, sigma)?)?.theta2)
}

/// The K-thresholds: largest roots of theta1(K) and theta2(K) against the
/// middle length 1 - 2 sigma. Four (resp. eight) solutions exist for large
/// lambda beyond them.
pub fn k4_k8(sigma: f64) -> Result<(f64, f64)> {
    if !(sigma > 0.0 && sigma < 0.5) {
        return Err(Error::Domain(format!("sigma must lie in (0, 1/2), got {sigma}")));
    }
    let c = 1.0 - 2.0 * sigma;
    let last_root = |f: &dyn Fn(f64) -> f64| -> Result<f64> {
        let grid = quad::log_grid(1e-3, 1e4, 60);
        let brs = quad::sign_change_brackets(|k| f(k) - c, &grid);
        let (a, b) = *brs
            .last()
            .ok_or_else(|| Error::Internal("no K-threshold bracket in [1e-3, 1e4]".into()))?;
        if a == b {
            return Ok(a);
        }
        quad::find_root(|k| f(k) - c, a, b, 1e-12 * b)
    };
    let k4 = last_root(&|k| theta1_of(k, sigma).unwrap_or(f64::NAN))?;
    let k8 = last_root(&|k| theta2_of(k, sigma).unwrap_or(f64::NAN))?;
    Ok((k4, k8))
}

/// The sigma-thresholds at fixed K: unique roots of theta1(sigma) and
/// theta2(sigma) against 1 - 2 sigma. Both thetas are linear in sigma, so
/// the roots are sigma = 1 / (c + 2) with c the per-sigma coefficient; the
/// closed form is still confirmed by a bracketed solve.
pub fn sigma4_sigma8(k: f64) -> Result<(f64, f64)> {
    if !(k > 0.0) {
        return Err(Error::Domain(format!("K must be positive, got {k}")));
    }
    let solve = |theta: &dyn Fn(f64) -> f64| -> Result<f64> {
        let f = |sigma: f64| theta(sigma) - (1.0 - 2.0 * sigma);
        quad::find_root(f, 1e-9, 0.5 - 1e-9, 1e-14)
    };
    let s4 = solve(&|sigma| theta1_of(k, sigma).unwrap_or(f64::NAN))?;
    let s8 = solve(&|sigma| theta2_of(k, sigma).unwrap_or(f64::NAN))?;
    Ok((s4, s8))
}

/// Inverse of the profile integral along scaled starting values: the ratio
/// L with I(L) = sqrt(theta) * I((1+K)^(-1/3)), decreasing from 1 to the
/// first-crossing ratio as theta runs over (0, 1).
pub fn scaled_ratio(theta: f64, key: &AsymKey) -> Result<f64> {
    if !(theta > 0.0 && theta < 1.0) {
        return Err(Error::Domain(format!("theta must lie in (0, 1), got {theta}")));
    }
    let l0m = (1.0 + key.k).powf(-1.0 / 3.0);
    let target = theta.sqrt() * profile_integral(l0m)?;
    quad::find_root(
        |r| profile_integral(r).unwrap_or(f64::NAN) - target,
        l0m,
        1.0,
        1e-14,
    )
}

/// The two solutions of landmark_function(r) = rho straddling the minimizer,
/// for a level rho strictly between the minimum and zero.
pub fn landmark_level_pair(k: f64, rho: f64) -> Result<(f64, f64)> {
    let l0m = (1.0 + k).powf(-1.0 / 3.0);
    let rmin = landmark_minimizer(k)?;
    let fmin = landmark_function(rmin, k)?;
    if !(rho > fmin && rho < 0.0) {
        return Err(Error::Domain(format!(
            "level must lie in ({fmin}, 0), got {rho}"
        )));
    }
    let f = |r: f64| landmark_function(r, k).unwrap_or(f64::NAN) - rho;
    let r_minus = quad::find_root(f, l0m + (rmin - l0m) * 1e-12, rmin, 1e-14)?;
    let r_plus = quad::find_root(f, rmin, 1.0 - 1e-12, 1e-14)?;
    Ok((r_minus, r_plus))
}
