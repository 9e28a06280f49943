//! Phase-plane analysis on the outer intervals [0, sigma] and [1 - sigma, 1],
//! where the weight is +lambda: the time map for reaching the v-axis, its
//! lambda-independent minimizer, the threshold lambda at which that minimal
//! time equals sigma, and the transported Neumann curves.

use crate::error::{Error, Result};
use crate::model::{g_primitive_diff, Params, PhasePoint};
use crate::quad;
use std::collections::HashMap;
use std::sync::{Mutex, OnceLock};

/// Quadrature tolerance used throughout this module.
const TOL: f64 = 1e-10;

/// Landmark constants of the outer time map.
#[derive(Debug, Clone, Copy)]
pub struct PositivePhaseConstants {
    /// The lambda-independent minimizer of the time map.
    pub s_star: f64,
    /// The lambda at which the minimal time equals sigma.
    pub lambda_star: f64,
    /// Left root of `time_to_axis = sigma`, present iff lambda > lambda_star.
    pub s0: Option<f64>,
    /// Right root, present iff lambda > lambda_star.
    pub s1: Option<f64>,
}

/// Integrand core of the scaled time integral. With xi = 1 - w^2,
/// the radicand (1-xi^3)/3 - s (1-xi^4)/4 factors exactly as
/// w^2 (1 + 2 xi + 3 xi^2)/12 + (1-s) (1 + xi + xi^2 + xi^3)/4,
/// which removes the endpoint singularity and keeps full precision
/// for s near 1.
#[inline]
fn scaled_integrand(w: f64, one_minus_s: f64) -> f64 {
    let xi = 1.0 - w * w;
    let a = w * w * (1.0 + xi * (2.0 + 3.0 * xi)) / 12.0
        + one_minus_s * (1.0 + xi * (1.0 + xi * (1.0 + xi))) / 4.0;
    2.0 / a.sqrt()
}

/// The scaled time integral: the integral over (0, 1) of
/// [ (1-xi^3)/3 - s (1-xi^4)/4 ]^(-1/2). Finite for s < 1, divergent as
/// s -> 1^-.
pub fn scaled_time_integral(s: f64) -> Result<f64> {
    if !(s > 0.0 && s < 1.0) {
        return Err(Error::Domain(format!("scaled time integral needs s in (0, 1), got {s}")));
    }
    scaled_time_integral_c(1.0 - s)
}

/// Same as [`scaled_time_integral`] parametrized by 1 - s, which preserves
/// precision for s extremely close to 1.
pub fn scaled_time_integral_c(one_minus_s: f64) -> Result<f64> {
    if !(one_minus_s > 0.0 && one_minus_s < 1.0) {
        return Err(Error::Domain(format!(
            "scaled time integral needs 1 - s in (0, 1), got {one_minus_s}"
        )));
    }
    // boundary layer of width sqrt(2 (1-s)) at w = 0 as s -> 1
    let r = (2.0 * one_minus_s).sqrt().min(1.0);
    quad::integrate_layer(|w| scaled_integrand(w, one_minus_s), 1.0, r, TOL)
}

/// Time for the outer trajectory started at (s, 0) to reach the v-axis:
/// the scaled integral divided by sqrt(2 lambda s). Diverges at both ends
/// of (0, 1) and is strictly decreasing in lambda.
pub fn time_to_axis(s: f64, lambda: f64) -> Result<f64> {
    Ok(scaled_time_integral(s)? / (2.0 * lambda * s).sqrt())
}

fn time_to_axis_c(one_minus_s: f64, lambda: f64) -> Result<f64> {
    let s = 1.0 - one_minus_s;
    Ok(scaled_time_integral_c(one_minus_s)? / (2.0 * lambda * s).sqrt())
}

/// (s*, scaled integral / sqrt(s) at s*): computed once per process since it
/// does not depend on lambda or sigma.
fn s_star_cached() -> (f64, f64) {
    static CACHE: OnceLock<(f64, f64)> = OnceLock::new();
    *CACHE.get_or_init(|| {
        let phi = |s: f64| scaled_time_integral(s).unwrap() / s.sqrt();
        // 64-point log-symmetric bracket grid
        let mut grid: Vec<f64> = quad::log_grid(1e-6, 0.5, 32);
        grid.extend(quad::log_grid(1e-6, 0.5, 32).into_iter().rev().map(|t| 1.0 - t));
        let (mut best_i, mut best) = (0usize, f64::INFINITY);
        for (i, &s) in grid.iter().enumerate() {
            let v = phi(s);
            if v < best {
                best = v;
                best_i = i;
            }
        }
        let lo = grid[best_i.saturating_sub(1)];
        let hi = grid[(best_i + 1).min(grid.len() - 1)];
        quad::find_min(phi, lo, hi, 1e-13)
    })
}

/// Computes the time-map landmarks for the given sigma, together with the
/// roots of `time_to_axis = sigma` when lambda exceeds the threshold.
pub fn compute_constants(sigma: f64, lambda: f64) -> Result<PositivePhaseConstants> {
    if !(sigma > 0.0 && sigma < 0.5) {
        return Err(Error::Domain(format!("sigma must lie in (0, 1/2), got {sigma}")));
    }
    if !(lambda > 0.0) {
        return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
    }
    let (s_star, phi_min) = s_star_cached();
    // minimal time sigma at lambda*: phi(s*)/sqrt(2 lambda*) = sigma
    let lambda_star = phi_min * phi_min / (2.0 * sigma * sigma);

    let (s0, s1) = if lambda > lambda_star {
        (Some(left_axis_root(sigma, lambda, s_star)?), Some(right_axis_root(sigma, lambda, s_star)?))
    } else {
        (None, None)
    };
    Ok(PositivePhaseConstants { s_star, lambda_star, s0, s1 })
}

/// Root of time_to_axis(., lambda) = sigma in (0, s*), searched in log s.
fn left_axis_root(sigma: f64, lambda: f64, s_star: f64) -> Result<f64> {
    let f = |ls: f64| time_to_axis(ls.exp(), lambda).unwrap() - sigma;
    let mut lo = s_star.ln() - 2.0;
    while f(lo) < 0.0 {
        lo -= 2.0;
        if lo < -700.0 {
            return Err(Error::Internal("left axis-time root escaped the representable range".into()));
        }
    }
    let r = quad::find_root(f, lo, s_star.ln(), 1e-14)?;
    Ok(r.exp())
}

/// Root of time_to_axis(., lambda) = sigma in (s*, 1), searched in log(1 - s).
fn right_axis_root(sigma: f64, lambda: f64, s_star: f64) -> Result<f64> {
    let f = |lc: f64| time_to_axis_c(lc.exp(), lambda).unwrap() - sigma;
    let hi = (1.0 - s_star).ln();
    let mut lo = hi - 2.0;
    while f(lo) < 0.0 {
        lo -= 2.0;
        if lo < (4.0 * f64::EPSILON).ln() {
            return Err(Error::Internal(
                "right axis-time root is too close to s = 1 for double precision".into(),
            ));
        }
    }
    let r = quad::find_root(f, lo, hi, 1e-14)?;
    Ok(1.0 - r.exp())
}

/// The curve of transported Neumann starting points at t = sigma, together
/// with the admissibility bookkeeping and a per-instance memo of computed
/// points. All evaluations are exact (root-find + quadrature); the memo only
/// avoids recomputation when the same abscissa is requested twice.
pub struct GammaCurve {
    pub lambda: f64,
    pub sigma: f64,
    pub constants: PositivePhaseConstants,
    memo: Mutex<HashMap<u64, (f64, f64)>>,
}

impl GammaCurve {
    pub fn new(lambda: f64, sigma: f64) -> Result<Self> {
        let constants = compute_constants(sigma, lambda)?;
        Ok(Self { lambda, sigma, constants, memo: Mutex::new(HashMap::new()) })
    }

    /// Admissible abscissas: all of (0,1) below the threshold, the two side
    /// intervals above it.
    pub fn admissible(&self, s: f64) -> bool {
        if !(s > 0.0 && s < 1.0) {
            return false;
        }
        match (self.constants.s0, self.constants.s1) {
            (Some(s0), Some(s1)) => s < s0 || s > s1,
            _ => {
                if self.lambda == self.constants.lambda_star {
                    s != self.constants.s_star
                } else {
                    true
                }
            }
        }
    }

    /// The admissible segments of (0, 1), in increasing order.
    pub fn segments(&self) -> Vec<(f64, f64)> {
        match (self.constants.s0, self.constants.s1) {
            (Some(s0), Some(s1)) => vec![(0.0, s0), (s1, 1.0)],
            _ => vec![(0.0, 1.0)],
        }
    }

    /// (u, v) of the transported point at t = sigma for the trajectory with
    /// u(0) = s, u'(0) = 0. v < 0 strictly inside the strip.
    pub fn point(&self, s: f64) -> Result<(f64, f64)> {
        if let Some(&p) = self.memo.lock().unwrap().get(&s.to_bits()) {
            return Ok(p);
        }
        let p = self.compute_point(s)?;
        self.memo.lock().unwrap().insert(s.to_bits(), p);
        Ok(p)
    }

    fn compute_point(&self, s: f64) -> Result<(f64, f64)> {
        if !(s > 0.0 && s < 1.0) {
            return Err(Error::Domain(format!("curve parameter must lie in (0, 1), got {s}")));
        }
        let total = time_to_axis(s, self.lambda)?;
        // guard band around the admissibility boundary
        if total < self.sigma + 1e-12 * (1.0 + self.sigma) {
            let (lo, hi) = match (self.constants.s0, self.constants.s1) {
                (Some(s0), Some(s1)) => (s0, s1),
                _ => (self.constants.s_star, self.constants.s_star),
            };
            return Err(Error::Blocked { s, lo, hi });
        }
        // partial transit time from u up to s: strictly decreasing in u,
        // equal to `total` at u = 0 and 0 at u = s, with the analytic
        // derivative d tau / du = -1 / sqrt(2 lambda (G(s) - G(u)))
        let f = |u: f64| {
            let tau = self.partial_time(s, u).unwrap_or(f64::NAN);
            let d = -1.0 / (2.0 * self.lambda * g_primitive_diff(s, u)).sqrt();
            (tau - self.sigma, d)
        };
        let u = quad::find_root_deriv(f, 0.0, s, 1e-15 * s.max(1e-6))?;
        let v = -(2.0 * self.lambda * g_primitive_diff(s, u)).max(0.0).sqrt();
        Ok((u, v))
    }

    /// Transit time from phase point (u1, .) on the level of (s, 0) up to s.
    fn partial_time(&self, s: f64, u1: f64) -> Result<f64> {
        if u1 >= s {
            return Ok(0.0);
        }
        // substitute xi = s - w^2; radicand G(s) - G(xi) = w^2 * slope(s, xi).
        // The remaining profile slope(s, s - w^2) ~ g(s) + c w^2 has a genuine
        // boundary layer of width sqrt(g(s)) (vanishing as s -> 1), which the
        // sinh stretch in the layer integrator absorbs.
        let w_max = (s - u1).sqrt();
        let p0 = crate::model::g_unchecked(s);
        let p1 = crate::model::g_primitive_slope(s, u1);
        let r = if p1 > p0 { w_max * (p0 / (p1 - p0)).sqrt() } else { w_max };
        let val = quad::integrate_layer(
            |w| 2.0 / crate::model::g_primitive_slope_down(s, w * w).sqrt(),
            w_max,
            r,
            TOL,
        )?;
        Ok(val / (2.0 * self.lambda).sqrt())
    }

    /// Value of the outer trajectory started at (s, 0) at an arbitrary time
    /// t in [0, sigma], by inverting the partial-time integral.
    pub fn transported_at(&self, s: f64, t: f64) -> Result<(f64, f64)> {
        if !(0.0..=self.sigma).contains(&t) {
            return Err(Error::Domain(format!(
                "transport time must lie in [0, sigma], got {t}"
            )));
        }
        if t == 0.0 {
            return Ok((s, 0.0));
        }
        let total = time_to_axis(s, self.lambda)?;
        if total < t + 1e-12 * (1.0 + t) {
            return Err(Error::Domain(format!("trajectory reaches the axis before t = {t}")));
        }
        let f = |u: f64| {
            let tau = self.partial_time(s, u).unwrap_or(f64::NAN);
            let d = -1.0 / (2.0 * self.lambda * g_primitive_diff(s, u)).sqrt();
            (tau - t, d)
        };
        let u = quad::find_root_deriv(f, 0.0, s, 1e-15 * s.max(1e-6))?;
        let v = -(2.0 * self.lambda * g_primitive_diff(s, u)).max(0.0).sqrt();
        Ok((u, v))
    }

    /// Point of the curve transported from t = 0 (v < 0).
    pub fn gamma0_point(&self, s: f64) -> Result<PhasePoint> {
        let (u, v) = self.point(s)?;
        PhasePoint::new(u, v)
    }

    /// Mirror curve transported backwards from t = 1 (v > 0).
    pub fn gamma1_point(&self, s: f64) -> Result<PhasePoint> {
        let (u, v) = self.point(s)?;
        PhasePoint::new(u, -v)
    }
}

/// Convenience wrapper matching the flat operation signature.
pub fn gamma0_point(s: f64, p: &Params) -> Result<PhasePoint> {
    GammaCurve::new(p.lambda, p.sigma)?.gamma0_point(s)
}

/// Convenience wrapper matching the flat operation signature.
pub fn gamma1_point(s: f64, p: &Params) -> Result<PhasePoint> {
    GammaCurve::new(p.lambda, p.sigma)?.gamma1_point(s)
}
