//! Executable certificates for the polynomial sign conditions behind the
//! monotonicity of the model time maps, and for the small-s expansions of
//! the transported points and the first connection time.

use crate::connection::Connection;
use crate::error::Result;
use crate::model::Params;
use crate::negative::{time_between, turning_abscissa};
use crate::positive::GammaCurve;
use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

/// Coefficients of the cubic expansions of the transported point and its
/// turning abscissa near s = 0.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExpansionCoeffs {
    /// u_s(sigma) = s + alpha2 s^2 + alpha3 s^3 + ...
    pub alpha2: f64,
    pub alpha3: f64,
    /// v_s(sigma) = beta2 s^2 + beta3 s^3 + ...
    pub beta2: f64,
    pub beta3: f64,
    /// m(u_s(sigma)) = s + m2 s^2 + m3 s^3 + ...
    pub m2: f64,
    pub m3: f64,
}

impl ExpansionCoeffs {
    pub fn for_params(p: &Params) -> Self {
        let (l, mu, s) = (p.lambda, p.mu, p.sigma);
        let alpha2 = -l * s * s / 2.0;
        let alpha3 = l * s * s / 12.0 * (6.0 + l * s * s);
        let beta2 = -l * s;
        let beta3 = l * s / 3.0 * (3.0 + l * s * s);
        let m2 = -l * (l + mu) * s * s / (2.0 * mu);
        let m3 = l * l * s * s / (12.0 * mu * mu) * (6.0 * mu - 3.0 * l * l * s * s - 2.0 * l * mu * s * s)
            + l * s * s / 12.0 * (6.0 + l * s * s);
        Self { alpha2, alpha3, beta2, beta3, m2, m3 }
    }
}

/// Quadratic coefficients (in the integration variable) controlling the sign
/// of the derivative of the parabola-start time map, evaluated exactly as
/// polynomials in (x, m).
pub fn parabola_polynomials(x: f64, m: f64) -> (f64, f64, f64) {
    let a = 2.0 * (x - m) * (x - m) * (3.0 * m * m * m - 4.0 * m * m - m * x - x * x);
    let b = (x - m)
        * (-4.0 * m * m + 3.0 * m * m * m - m * x + 13.0 * m * m * x - 12.0 * m * m * m * x
            - x * x
            + m * x * x
            + x * x * x);
    let c = x
        * (2.0 * m * m - 3.0 * m * m * m - m * x - 5.0 * m * m * x + 6.0 * m * m * m * x - x * x
            + m * x * x
            + x * x * x);
    (a, b, c)
}

/// The quadratic itself together with its coefficients: (a, b, c, value).
pub fn parabola_quadratic(x: f64, m: f64, xi: f64) -> Result<(f64, f64, f64, f64)> {
    check_region(x, m, xi)?;
    let (a, b, c) = parabola_polynomials(x, m);
    Ok((a, b, c, (a * xi + b) * xi + c))
}

/// Same for the line-start time map (all three coefficients negative there).
pub fn line_polynomials(x: f64, m: f64) -> (f64, f64, f64) {
    let a = 2.0
        * (x - m)
        * (x - m)
        * (-6.0 * m + 2.0 * m * m + 3.0 * m * m * m - 6.0 * x + 8.0 * m * x - 3.0 * m * m * x
            + 8.0 * x * x
            - 3.0 * m * x * x
            - 3.0 * x * x * x);
    let b = (x - 1.0)
        * (x - m)
        * (6.0 * m + 16.0 * m * m - 21.0 * m * m * m + 6.0 * x - 8.0 * m * x + 3.0 * m * m * x
            - 8.0 * x * x
            + 3.0 * m * x * x
            + 3.0 * x * x * x);
    let c = (x - 1.0)
        * (12.0 * m * m - 12.0 * m * m * m + 6.0 * m * x - 20.0 * m * m * x
            + 15.0 * m * m * m * x
            + 6.0 * x * x
            - 8.0 * m * x * x
            + 3.0 * m * m * x * x
            - 8.0 * x * x * x
            + 3.0 * m * x * x * x
            + 3.0 * x * x * x * x);
    (a, b, c)
}

/// The quadratic of the line case: (a, b, c, value).
pub fn line_quadratic(x: f64, m: f64, xi: f64) -> Result<(f64, f64, f64, f64)> {
    check_region(x, m, xi)?;
    let (a, b, c) = line_polynomials(x, m);
    Ok((a, b, c, (a * xi + b) * xi + c))
}

fn check_region(x: f64, m: f64, xi: f64) -> Result<()> {
    if !(0.0 < m && m < x && x < 1.0 && 0.0 < xi && xi < 1.0) {
        return Err(crate::error::Error::Domain(format!(
            "need 0 < m < x < 1 and 0 < xi < 1, got x = {x}, m = {m}, xi = {xi}"
        )));
    }
    Ok(())
}

/// Result of a sign-certification sweep: sample count, violations, and the
/// worst margins observed (negative margins mean the conditions held with
/// room to spare).
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CertReport {
    pub samples: usize,
    pub violations: usize,
    /// Largest value of the leading coefficient (must stay negative).
    pub worst_a: f64,
    /// Largest value of the constant coefficient (must stay negative).
    pub worst_c: f64,
    /// Largest value of the middle coefficient (line case; must stay
    /// negative there). For the parabola case, the largest discriminant
    /// among samples with a positive middle coefficient (must stay negative).
    pub worst_b_or_disc: f64,
    /// Largest value of the quadratic itself (must stay negative).
    pub worst_quadratic: f64,
}

impl CertReport {
    pub fn passed(&self) -> bool {
        self.violations == 0
    }
}

fn sample_region(rng: &mut ChaCha8Rng) -> (f64, f64, f64) {
    // random interior points plus occasional pushes toward the corners,
    // where the margins degenerate
    let mut x: f64 = rng.gen_range(0.0..1.0);
    let mut frac: f64 = rng.gen_range(0.0..1.0);
    let edge: u8 = rng.gen_range(0..8);
    match edge {
        0 => x = 1.0 - rng.gen_range(1e-6..1e-2),
        1 => x = rng.gen_range(1e-6..1e-2),
        2 => frac = 1.0 - rng.gen_range(1e-6..1e-2),
        3 => frac = rng.gen_range(1e-6..1e-2),
        _ => {}
    }
    let m = x * frac.clamp(1e-12, 1.0 - 1e-12);
    let xi = rng.gen_range(1e-9..1.0);
    (x.clamp(1e-12, 1.0 - 1e-12), m, xi)
}

/// Certifies the sign conditions of the parabola-case lemma on a random
/// sample of the region 0 < m < x < 1, 0 < xi < 1: leading and constant
/// coefficients negative, discriminant negative whenever the middle
/// coefficient is positive, and the quadratic itself negative.
pub fn certify_parabola_lemma(samples: usize) -> CertReport {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0001);
    let mut rep = CertReport {
        samples,
        violations: 0,
        worst_a: f64::NEG_INFINITY,
        worst_c: f64::NEG_INFINITY,
        worst_b_or_disc: f64::NEG_INFINITY,
        worst_quadratic: f64::NEG_INFINITY,
    };
    for _ in 0..samples {
        let (x, m, xi) = sample_region(&mut rng);
        let (a, b, c) = parabola_polynomials(x, m);
        let nhat = (a * xi + b) * xi + c;
        rep.worst_a = rep.worst_a.max(a);
        rep.worst_c = rep.worst_c.max(c);
        rep.worst_quadratic = rep.worst_quadratic.max(nhat);
        let mut bad = a >= 0.0 || c >= 0.0 || nhat >= 0.0;
        if b > 0.0 {
            let disc = b * b - 4.0 * a * c;
            rep.worst_b_or_disc = rep.worst_b_or_disc.max(disc);
            bad |= disc >= 0.0;
        }
        if bad {
            rep.violations += 1;
        }
    }
    rep
}

/// Certifies the line-case lemma: all three coefficients negative, hence the
/// quadratic negative on the whole region.
pub fn certify_line_lemma(samples: usize) -> CertReport {
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_0002);
    let mut rep = CertReport {
        samples,
        violations: 0,
        worst_a: f64::NEG_INFINITY,
        worst_c: f64::NEG_INFINITY,
        worst_b_or_disc: f64::NEG_INFINITY,
        worst_quadratic: f64::NEG_INFINITY,
    };
    for _ in 0..samples {
        let (x, m, xi) = sample_region(&mut rng);
        let (a, b, c) = line_polynomials(x, m);
        let nhat = (a * xi + b) * xi + c;
        rep.worst_a = rep.worst_a.max(a);
        rep.worst_c = rep.worst_c.max(c);
        rep.worst_b_or_disc = rep.worst_b_or_disc.max(b);
        rep.worst_quadratic = rep.worst_quadratic.max(nhat);
        if a >= 0.0 || b >= 0.0 || c >= 0.0 || nhat >= 0.0 {
            rep.violations += 1;
        }
    }
    rep
}

/// Closed-form limit of the slope of the first connection time at s = 0:
/// 4 lambda^2 (lambda + mu) sigma^3 / (3 mu^2).
pub fn slope_limit(p: &Params) -> f64 {
    4.0 * p.lambda * p.lambda * (p.lambda + p.mu) * p.sigma.powi(3) / (3.0 * p.mu * p.mu)
}

/// Residual ratios of the numerically evaluated transported quantities
/// against their closed-form expansions, at decreasing s.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ExpansionReport {
    pub coeffs: ExpansionCoeffs,
    /// ((v + lambda sigma s^2) / s^3) at s = 1e-2, 1e-3, 1e-4; tends to beta3.
    pub beta3_fits: Vec<f64>,
    /// ((m - s) / s^2) at the same s values; tends to m2.
    pub m2_fits: Vec<f64>,
    /// ((u - s) / s^2) at the same s values; tends to alpha2.
    pub alpha2_fits: Vec<f64>,
    /// max over a t-grid of |u_s(t) - s - alpha2(t) s^2| / s^2 at s = 1e-3
    /// and 1e-4; must decrease (the quadratic term is uniform in t).
    pub uniform_residuals: Vec<f64>,
    /// The first connection time rebuilt from the expansions at s = 1e-4,
    /// and the limit 2 lambda sigma / mu it must reproduce.
    pub t1_from_expansion: f64,
    pub t1_limit: f64,
}

/// Fits the small-s expansions of the transported point, its turning
/// abscissa, and the first connection time against the closed forms.
pub fn expansion_check(p: &Params) -> Result<ExpansionReport> {
    let coeffs = ExpansionCoeffs::for_params(p);
    let curve = GammaCurve::new(p.lambda, p.sigma)?;
    let s_values = [1e-2, 1e-3, 1e-4];

    let mut beta3_fits = Vec::new();
    let mut m2_fits = Vec::new();
    let mut alpha2_fits = Vec::new();
    for &s in &s_values {
        let (u, v) = curve.point(s)?;
        beta3_fits.push((v + p.lambda * p.sigma * s * s) / (s * s * s));
        alpha2_fits.push((u - s) / (s * s));
        let m = turning_abscissa(u, v, p.mu)?;
        m2_fits.push((m - s) / (s * s));
    }

    // uniformity of the quadratic term over the outer interval
    let mut uniform_residuals = Vec::new();
    for &s in &[1e-3, 1e-4] {
        let mut worst: f64 = 0.0;
        for k in 1..=8 {
            let t = p.sigma * k as f64 / 8.0;
            let (u, _) = curve.transported_at(s, t)?;
            let pred = s - p.lambda * t * t / 2.0 * s * s;
            worst = worst.max((u - pred).abs() / (s * s));
        }
        uniform_residuals.push(worst);
    }

    // first connection time through the expansion route: expand u and v,
    // recover the turning abscissa from the energy, and integrate
    let s = 1e-4;
    let u = s + coeffs.alpha2 * s * s + coeffs.alpha3 * s * s * s;
    let v = coeffs.beta2 * s * s + coeffs.beta3 * s * s * s;
    let m = turning_abscissa(u, v, p.mu)?;
    let t1_from_expansion = 2.0 * time_between(m, u, p.mu)?;
    let t1_limit = 2.0 * p.lambda * p.sigma / p.mu;

    Ok(ExpansionReport {
        coeffs,
        beta3_fits,
        m2_fits,
        alpha2_fits,
        uniform_residuals,
        t1_from_expansion,
        t1_limit,
    })
}

/// Central-difference slope of the first connection time at a small s,
/// compared against [`slope_limit`]. Returns (numeric, closed form).
pub fn slope_check(p: &Params, s: f64, h: f64) -> Result<(f64, f64)> {
    let curve = GammaCurve::new(p.lambda, p.sigma)?;
    let conn = Connection::new(&curve, p.mu)?;
    let t1 = |s: f64| -> Result<f64> { Ok(conn.connect_times(s)?[0].1) };
    let numeric = (t1(s + h)? - t1(s - h)?) / (2.0 * h);
    Ok((numeric, slope_limit(p)))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::{assert_abs_diff_eq, assert_relative_eq};

    #[test]
    fn parabola_polynomials_pinned_values() {
        let (a, _, _) = parabola_polynomials(0.5, 0.25);
        assert_abs_diff_eq!(a, -0.072265625, epsilon = 1e-15);
        // boundary identity of the leading-coefficient factor at m = x:
        // f1(x, x) = 3 x^2 (x - 2)
        let x = 0.5_f64;
        let f1 = |x: f64, m: f64| 3.0 * m * m * m - 4.0 * m * m - m * x - x * x;
        assert_abs_diff_eq!(f1(x, x), 3.0 * x * x * (x - 2.0), epsilon = 1e-15);
        assert_abs_diff_eq!(f1(x, x), -1.125, epsilon = 1e-15);
    }

    #[test]
    fn discriminant_factorization_holds() {
        let mut rng = ChaCha8Rng::seed_from_u64(42);
        for _ in 0..1000 {
            let x: f64 = rng.gen_range(1e-3..1.0 - 1e-3);
            let m: f64 = x * rng.gen_range(1e-3..1.0_f64 - 1e-3);
            let (a, b, c) = parabola_polynomials(x, m);
            let delta = b * b - 4.0 * a * c;
            let d1 = -4.0 * m * m + 3.0 * m * m * m - m * x + m * m * x - x * x
                + m * x * x
                + x * x * x;
            let d2 = -4.0 * m * m + 3.0 * m * m * m - m * x + 9.0 * m * m * x - x * x
                + 9.0 * m * x * x
                + 9.0 * x * x * x;
            let factored = (x - m) * (x - m) * d1 * d2;
            let scale = delta.abs().max(factored.abs()).max(1e-30);
            assert!(
                ((delta - factored) / scale).abs() < 1e-12,
                "x = {x}, m = {m}"
            );
        }
    }

    #[test]
    fn lemma_certifications_pass() {
        let rep = certify_parabola_lemma(10_000);
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.worst_a < 0.0 && rep.worst_c < 0.0 && rep.worst_quadratic < 0.0);
        let rep = certify_line_lemma(10_000);
        assert!(rep.passed(), "{rep:?}");
        assert!(rep.worst_a < 0.0 && rep.worst_c < 0.0 && rep.worst_b_or_disc < 0.0);
        assert!(rep.worst_quadratic < 0.0);
        // domain guard
        assert!(parabola_quadratic(0.3, 0.5, 0.5).is_err());
        assert!(line_quadratic(0.5, 0.25, 1.5).is_err());
    }

    #[test]
    fn slope_limit_values() {
        let p = Params::new(1.0, 2.0, 0.25).unwrap();
        assert_abs_diff_eq!(slope_limit(&p), 0.015625, epsilon = 1e-15);
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..100 {
            let p = Params::new(
                rng.gen_range(0.1..10.0),
                rng.gen_range(0.1..10.0),
                rng.gen_range(0.05..0.45),
            )
            .unwrap();
            assert!(slope_limit(&p) > 0.0);
        }
    }

    #[test]
    fn numeric_slope_matches_limit() {
        let p = Params::new(1.0, 1.0, 0.25).unwrap();
        let (numeric, closed) = slope_check(&p, 1e-3, 1e-4).unwrap();
        assert_relative_eq!(numeric, closed, max_relative = 2e-2);
    }

    #[test]
    fn expansion_coefficients_closed_forms() {
        let p = Params::new(1.3, 0.7, 0.2).unwrap();
        let c = ExpansionCoeffs::for_params(&p);
        let (l, mu, s) = (1.3, 0.7, 0.2_f64);
        assert_abs_diff_eq!(c.alpha2, -l * s * s / 2.0);
        assert_abs_diff_eq!(c.beta2, -l * s);
        assert_abs_diff_eq!(c.beta3, l * s / 3.0 * (3.0 + l * s * s));
        assert_abs_diff_eq!(c.alpha3, l * s * s / 12.0 * (6.0 + l * s * s));
        assert_abs_diff_eq!(c.m2, -l * (l + mu) * s * s / (2.0 * mu));
        // frozen cross-check of the cubic turning coefficient at (1,1,1/4)
        let p = Params::new(1.0, 1.0, 0.25).unwrap();
        assert_relative_eq!(
            ExpansionCoeffs::for_params(&p).m3,
            0.061197916666666664,
            max_relative = 1e-14
        );
    }

    #[test]
    fn expansion_fits_converge() {
        let p = Params::new(1.0, 1.0, 0.25).unwrap();
        let rep = expansion_check(&p).unwrap();
        let c = rep.coeffs;
        // the cubic coefficient of v within 5% at s = 1e-4
        assert_relative_eq!(rep.beta3_fits[2], c.beta3, max_relative = 5e-2);
        // the quadratic coefficient of the turning abscissa within 5%
        assert_relative_eq!(rep.m2_fits[2], c.m2, max_relative = 5e-2);
        assert_relative_eq!(rep.alpha2_fits[2], c.alpha2, max_relative = 5e-2);
        // uniform quadratic term: scaled residual shrinks with s
        assert!(rep.uniform_residuals[1] < rep.uniform_residuals[0]);
        // the expansion route reproduces the s -> 0 limit of the first time
        assert_relative_eq!(rep.t1_from_expansion, rep.t1_limit, max_relative = 1e-2);
    }
}
