//! Phase-plane analysis on the middle interval (sigma, 1 - sigma), where the
//! weight is -mu: the zero-energy manifold, the turning abscissa of interior
//! level lines, and the model time maps for trajectories started on a
//! parabola or on a line through (1, 0).

use crate::error::{Error, Result};
use crate::model::{g_primitive_diff, g_primitive_slope, g_primitive_unchecked};
use crate::quad;

const TOL: f64 = 1e-10;

/// Evaluations closer than this to the manifold, relative to the local energy
/// scale, are refused; the transit time there is huge and unreliable.
pub const ASYMPTOTE_ENERGY_GAP: f64 = 1e-10;

/// A level line of the middle-interval energy.
#[derive(Debug, Clone, Copy)]
pub struct LevelLine {
    /// Value of the middle-interval energy on the line.
    pub energy: f64,
    /// Turning abscissa where the line meets the u-axis; present iff the
    /// energy is negative.
    pub m: Option<f64>,
}

impl LevelLine {
    pub fn through(u: f64, v: f64, mu: f64) -> Result<Self> {
        let energy = v * v - 2.0 * mu * g_primitive_unchecked(u);
        let m = if energy < 0.0 { Some(turning_abscissa(u, v, mu)?) } else { None };
        Ok(Self { energy, m })
    }
}

/// |v| on the zero-energy manifold at abscissa u.
pub fn manifold_v(u: f64, mu: f64) -> f64 {
    (2.0 * mu * g_primitive_unchecked(u)).max(0.0).sqrt()
}

/// Turning abscissa of the level line through (x, y): the unique m in (0, x]
/// with y^2 - 2 mu G(x) = -2 mu G(m). Requires the point to lie strictly
/// inside the manifold (negative middle-interval energy).
pub fn turning_abscissa(x: f64, y: f64, mu: f64) -> Result<f64> {
    let h = y * y - 2.0 * mu * g_primitive_unchecked(x);
    if h >= 0.0 {
        return Err(Error::OutsideManifold { u: x, v: y });
    }
    if y == 0.0 {
        return Ok(x);
    }
    // solve G(x) - G(m) = y^2 / (2 mu) on (0, x); the left side is strictly
    // decreasing in m, positive at 0, zero at x
    let rhs = y * y / (2.0 * mu);
    let f = |m: f64| g_primitive_diff(x, m) - rhs;
    quad::find_root(f, 0.0, x, 1e-15 * x.max(1e-6))
}

/// Transit time along a level line from abscissa `x` down (or up) to the
/// turning point at `m`: the integral over (m, x) of
/// [2 mu (G(u) - G(m))]^(-1/2). This single kernel underlies every
/// middle-interval time in the crate.
pub fn time_between(m: f64, x: f64, mu: f64) -> Result<f64> {
    if x < m {
        return Err(Error::Domain(format!("time_between: need x >= m, got m = {m}, x = {x}")));
    }
    if x == m {
        return Ok(0.0);
    }
    // u = m + w^2 removes the turning-point singularity exactly:
    // G(u) - G(m) = w^2 * slope(u, m). The residual profile g(m) + c w^2
    // narrows to a boundary layer when the turning point sits near a zero of
    // g (the asymptote regimes); the sinh stretch keeps it resolved.
    let w_max = (x - m).sqrt();
    let p0 = crate::model::g_unchecked(m);
    let p1 = g_primitive_slope(x, m);
    let r = if p1 > p0 { w_max * (p0 / (p1 - p0)).sqrt() } else { w_max };
    quad::integrate_layer(
        |w| 2.0 / (2.0 * mu * crate::model::g_primitive_slope_up(m, w * w)).sqrt(),
        w_max,
        r,
        TOL,
    )
}

/// Time from the interior phase point (x, y), y < 0, to its turning point on
/// the u-axis, moving along the level line of the middle-interval energy.
pub fn time_half(x: f64, y: f64, mu: f64) -> Result<f64> {
    let h = y * y - 2.0 * mu * g_primitive_unchecked(x);
    let scale = y * y + 2.0 * mu * g_primitive_unchecked(x);
    if h >= -ASYMPTOTE_ENERGY_GAP * scale {
        if h >= 0.0 {
            return Err(Error::OutsideManifold { u: x, v: y });
        }
        return Err(Error::NearAsymptote { gap: -h });
    }
    let m = turning_abscissa(x, y, mu)?;
    time_between(m, x, mu)
}

/// Abscissa where the parabola (x, -k x^2) meets the manifold, or 1 when the
/// parabola stays inside the manifold over the whole strip (k^2 <= mu / 6).
pub fn parabola_manifold_abscissa(k: f64, mu: f64) -> f64 {
    if k * k <= mu / 6.0 {
        return 1.0;
    }
    // k^2 x^4 = 2 mu G(x); divide by x^3: k^2 x = 2 mu (1/3 - x/4)
    // (linear! the quartic collapses once the triple root at 0 is removed)
    (2.0 * mu / 3.0) / (k * k + mu / 2.0)
}

/// Abscissa where the line (x, -k (1 - x)) meets the manifold.
pub fn line_manifold_abscissa(k: f64, mu: f64) -> Result<f64> {
    let f = |x: f64| k * k * (1.0 - x) * (1.0 - x) - 2.0 * mu * g_primitive_unchecked(x);
    quad::find_root(f, 0.0, 1.0, 1e-15)
}

/// First-crossing time to the u-axis from the parabola point (x, -k x^2).
/// Defined (and strictly increasing) on (0, x_p).
pub fn time_parabola(x: f64, k: f64, mu: f64) -> Result<f64> {
    let xp = parabola_manifold_abscissa(k, mu);
    if !(x > 0.0 && x < xp) {
        return Err(Error::Domain(format!(
            "parabola time needs x in (0, x_p) with x_p = {xp}, got {x}"
        )));
    }
    time_half(x, -k * x * x, mu)
}

/// First-crossing time to the u-axis from the line point (x, -k (1 - x)).
/// Defined (and strictly decreasing) on (x_l, 1).
pub fn time_line(x: f64, k: f64, mu: f64) -> Result<f64> {
    let xl = line_manifold_abscissa(k, mu)?;
    if !(x > xl && x < 1.0) {
        return Err(Error::Domain(format!(
            "line time needs x in (x_l, 1) with x_l = {xl}, got {x}"
        )));
    }
    time_half(x, -k * (1.0 - x), mu)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn manifold_values() {
        assert_eq!(manifold_v(0.0, 3.0), 0.0);
        assert_abs_diff_eq!(manifold_v(1.0, 6.0), 1.0);
        // small-u law: |v| / u^(3/2) -> sqrt(2 mu / 3)
        let mu = 5.0;
        let u = 1e-6;
        assert_relative_eq!(
            manifold_v(u, mu) / u.powf(1.5),
            (2.0 * mu / 3.0).sqrt(),
            max_relative = 1e-6
        );
    }

    #[test]
    fn turning_point_identity_cases() {
        // y = 0 gives m = x
        assert_abs_diff_eq!(turning_abscissa(0.4, 0.0, 2.0).unwrap(), 0.4);
        // energy relation holds at the returned point
        let (x, y, mu) = (0.6, -0.2, 3.0);
        let m = turning_abscissa(x, y, mu).unwrap();
        let lhs = y * y - 2.0 * mu * g_primitive_unchecked(x);
        assert_relative_eq!(lhs, -2.0 * mu * g_primitive_unchecked(m), max_relative = 1e-12);
        assert!(0.0 < m && m < x);
        // outside the manifold: rejected
        assert!(turning_abscissa(0.1, -5.0, 0.5).is_err());
    }

    #[test]
    fn turning_point_parabola_start_law() {
        // (x - m) / x^2 -> k^2 / (2 mu) along y = -k x^2 as x -> 0+
        let (k, mu) = (1.5, 2.0);
        for &x in &[1e-3, 1e-4] {
            let m = turning_abscissa(x, -k * x * x, mu).unwrap();
            assert_relative_eq!((x - m) / (x * x), k * k / (2.0 * mu), max_relative = 2e-3);
        }
    }

    #[test]
    fn turning_point_line_start_law() {
        // (1 - m) / (1 - x) -> sqrt(1 + k^2 / mu) along y = -k (1 - x) as x -> 1-
        let (k, mu) = (1.0, 2.0);
        let x = 1.0 - 1e-6;
        let m = turning_abscissa(x, -k * (1.0 - x), mu).unwrap();
        assert_relative_eq!(
            (1.0 - m) / (1.0 - x),
            (1.0 + k * k / mu).sqrt(),
            max_relative = 1e-4
        );
    }

    /// RK4 on u'' = mu g(u) from (x, y) until v crosses zero, with a final
    /// bisection on the crossing time; independent of the quadrature path.
    fn rk_half_time_oracle(x: f64, y: f64, mu: f64, dt: f64) -> f64 {
        let f = |u: f64, v: f64| (v, mu * u * u * (1.0 - u));
        let (mut u, mut v) = (x, y);
        let mut t = 0.0;
        let step = |u: f64, v: f64, h: f64| {
            let (k1u, k1v) = f(u, v);
            let (k2u, k2v) = f(u + 0.5 * h * k1u, v + 0.5 * h * k1v);
            let (k3u, k3v) = f(u + 0.5 * h * k2u, v + 0.5 * h * k2v);
            let (k4u, k4v) = f(u + h * k3u, v + h * k3v);
            (
                u + h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u),
                v + h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v),
            )
        };
        loop {
            let (nu, nv) = step(u, v, dt);
            if nv >= 0.0 {
                // bisect the crossing inside [t, t + dt]
                let (mut lo, mut hi) = (0.0, dt);
                for _ in 0..60 {
                    let mid = 0.5 * (lo + hi);
                    let (_, vm) = step(u, v, mid);
                    if vm >= 0.0 {
                        hi = mid;
                    } else {
                        lo = mid;
                    }
                }
                return t + 0.5 * (lo + hi);
            }
            u = nu;
            v = nv;
            t += dt;
        }
    }

    #[test]
    fn half_time_pinned_instance_vs_rk_oracle() {
        let (x, y, mu) = (0.5, -0.05, 2.0);
        let t = time_half(x, y, mu).unwrap();
        // frozen from an independent high-precision evaluation
        assert_relative_eq!(t, 0.20136045106100643, max_relative = 1e-9);
        let rk = rk_half_time_oracle(x, y, mu, 1e-6);
        assert_relative_eq!(t, rk, max_relative = 1e-6);
    }

    #[test]
    fn half_time_scaling_law() {
        // scaling t -> t / sqrt(c) under (y, mu) -> (sqrt(c) y, c mu)
        let (x, y, mu) = (0.5, -0.1, 1.5);
        let c: f64 = 7.3;
        let t1 = time_half(x, y, mu).unwrap();
        let t2 = time_half(x, c.sqrt() * y, c * mu).unwrap();
        assert_relative_eq!(t2, t1 / c.sqrt(), max_relative = 1e-10);
    }

    #[test]
    fn parabola_time_limit_at_zero() {
        // lim_{x->0+} = k / mu; k = 2, mu = 4 -> 0.5, via Richardson
        let (k, mu) = (2.0, 4.0);
        let t3 = time_parabola(1e-3, k, mu).unwrap();
        let t4 = time_parabola(1e-4, k, mu).unwrap();
        let extrap = t4 + (t4 - t3) / 9.0;
        assert_relative_eq!(extrap, k / mu, max_relative = 1e-4);
    }

    #[test]
    fn line_time_limit_at_one() {
        // lim_{x->1-} = arctan(k / sqrt(mu)) / sqrt(mu); k = mu = 1 -> pi/4
        let (k, mu) = (1.0, 1.0);
        let t = time_line(1.0 - 1e-7, k, mu).unwrap();
        assert_relative_eq!(t, std::f64::consts::FRAC_PI_4, max_relative = 1e-4);
    }

    #[test]
    fn parabola_time_diverges_at_manifold() {
        let (k, mu) = (2.0, 1.0); // k^2 > mu/6, interior intersection
        let xp = parabola_manifold_abscissa(k, mu);
        assert!(xp < 1.0);
        // exactly on the manifold the energy-gap guard kicks in; just inside,
        // the time is already enormous
        let x = xp - 1e-8;
        let t = time_parabola(x, k, mu).unwrap();
        assert!(t > 100.0, "t = {t}");
    }

    #[test]
    fn parabola_abscissa_convention() {
        // k^2 <= mu/6 extends the domain to the whole strip
        assert_eq!(parabola_manifold_abscissa(0.1, 1.0), 1.0);
        let xp = parabola_manifold_abscissa(2.0, 1.0);
        // manifold and parabola cross there
        assert_relative_eq!(
            2.0 * 2.0 * xp.powi(4),
            2.0 * g_primitive_unchecked(xp),
            max_relative = 1e-10
        );
    }

    #[test]
    fn model_time_monotonicity_grids() {
        for &(k, mu) in &[(1.0, 1.0), (3.0, 0.5), (0.2, 5.0)] {
            let xp = parabola_manifold_abscissa(k, mu);
            let mut prev = 0.0;
            for i in 1..=100 {
                let x = xp * i as f64 / 101.0;
                let t = time_parabola(x, k, mu).unwrap();
                assert!(t > prev, "parabola time not increasing at x = {x} (k={k}, mu={mu})");
                prev = t;
            }
            let xl = line_manifold_abscissa(k, mu).unwrap();
            let mut prev = f64::INFINITY;
            for i in 1..=100 {
                let x = xl + (1.0 - xl) * i as f64 / 101.0;
                let t = time_line(x, k, mu).unwrap();
                assert!(t < prev, "line time not decreasing at x = {x} (k={k}, mu={mu})");
                prev = t;
            }
        }
    }

    #[test]
    fn turning_abscissa_increases_along_line_family() {
        // m'(x) > 0 along y = -k (1 - x), checked by finite differences
        let (k, mu) = (1.0, 1.0);
        let xl = line_manifold_abscissa(k, mu).unwrap();
        let mut prev = -1.0;
        for i in 1..60 {
            let x = xl + (1.0 - xl) * i as f64 / 60.0;
            let m = turning_abscissa(x, -k * (1.0 - x), mu).unwrap();
            assert!(m > prev);
            prev = m;
        }
    }

    #[test]
    fn near_manifold_evaluations_are_refused() {
        let mu = 2.0;
        let x = 0.5;
        let v = manifold_v(x, mu);
        let y = -(v - 1e-13);
        assert!(matches!(time_half(x, y, mu), Err(Error::NearAsymptote { .. })));
    }
}
