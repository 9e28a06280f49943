//! Problem data: the cubic nonlinearity, its primitive, the two phase-plane
//! energies, and the step-wise indefinite weight.
//!
//! The equation under study is -u'' = a(t) g(u) on (0, 1) with Neumann data,
//! where g(s) = s^2 (1 - s) and a(t) equals `lambda` on the two outer
//! intervals [0, sigma] and [1 - sigma, 1] and `-mu` on the middle interval.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// The weight triple (lambda, mu, sigma).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Params {
    /// Height of the weight on the outer intervals [0, sigma] and [1 - sigma, 1].
    pub lambda: f64,
    /// Depth of the weight on the middle interval (sigma, 1 - sigma).
    pub mu: f64,
    /// Switch abscissa, in (0, 1/2).
    pub sigma: f64,
}

impl Params {
    pub fn new(lambda: f64, mu: f64, sigma: f64) -> Result<Self> {
        if !(lambda > 0.0) || !lambda.is_finite() {
            return Err(Error::Domain(format!("lambda must be positive, got {lambda}")));
        }
        if !(mu > 0.0) || !mu.is_finite() {
            return Err(Error::Domain(format!("mu must be positive, got {mu}")));
        }
        if !(sigma > 0.0 && sigma < 0.5) {
            return Err(Error::Domain(format!("sigma must lie in (0, 1/2), got {sigma}")));
        }
        Ok(Self { lambda, mu, sigma })
    }

    /// Length of the middle interval; connection times are compared against it.
    pub fn middle_length(&self) -> f64 {
        1.0 - 2.0 * self.sigma
    }
}

/// A point (u, u') in the phase strip [0, 1] x R.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PhasePoint {
    pub u: f64,
    pub v: f64,
}

impl PhasePoint {
    pub fn new(u: f64, v: f64) -> Result<Self> {
        if !(0.0..=1.0).contains(&u) {
            return Err(Error::Domain(format!("u must lie in [0, 1], got {u}")));
        }
        Ok(Self { u, v })
    }

    /// Mirror image across the u-axis.
    pub fn mirrored(self) -> Self {
        Self { u: self.u, v: -self.v }
    }
}

/// Parameters of the one-parameter family mu = K * lambda used by the
/// large-lambda analysis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AsymKey {
    /// Ratio mu / lambda.
    pub k: f64,
    pub sigma: f64,
}

impl AsymKey {
    pub fn new(k: f64, sigma: f64) -> Result<Self> {
        if !(k > 0.0) || !k.is_finite() {
            return Err(Error::Domain(format!("K must be positive, got {k}")));
        }
        if !(sigma > 0.0 && sigma < 0.5) {
            return Err(Error::Domain(format!("sigma must lie in (0, 1/2), got {sigma}")));
        }
        Ok(Self { k, sigma })
    }
}

/// The nonlinearity g(s) = s^2 (1 - s).
pub fn g(s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("g: argument must lie in [0, 1], got {s}")));
    }
    Ok(g_unchecked(s))
}

#[inline]
pub(crate) fn g_unchecked(s: f64) -> f64 {
    s * s * (1.0 - s)
}

/// The primitive G(s) = s^3/3 - s^4/4 of g, vanishing at 0.
pub fn g_primitive(s: f64) -> Result<f64> {
    if !(0.0..=1.0).contains(&s) {
        return Err(Error::Domain(format!("G: argument must lie in [0, 1], got {s}")));
    }
    Ok(g_primitive_unchecked(s))
}

#[inline]
pub(crate) fn g_primitive_unchecked(s: f64) -> f64 {
    s * s * s / 3.0 - s * s * s * s / 4.0
}

#[inline]
fn slope_direct(s: f64, x: f64) -> f64 {
    (s * s + s * x + x * x) / 3.0 - (s * s * s + s * s * x + s * x * x + x * x * x) / 4.0
}

// G(1-a) - G(1-b) = (b - a) * [(a+b)/2 - (2/3)(a^2+ab+b^2) + (a^3+a^2 b+a b^2+b^3)/4]
#[inline]
fn slope_complement(a: f64, b: f64) -> f64 {
    (a + b) / 2.0 - 2.0 / 3.0 * (a * a + a * b + b * b)
        + (a * a * a + a * a * b + a * b * b + b * b * b) / 4.0
}

/// (G(s) - G(x)) / (s - x) in factored form, so that the difference of
/// primitives never suffers cancellation. For s and x both close to 1 the
/// complementary variables are used instead (1 - s is exact for s >= 1/2);
/// the radicands of all the time integrals go through here.
#[inline]
pub(crate) fn g_primitive_slope(s: f64, x: f64) -> f64 {
    if s + x > 1.5 {
        slope_complement(1.0 - s, 1.0 - x)
    } else {
        slope_direct(s, x)
    }
}

/// Slope between s - d and s for a gap d >= 0 that may be far below the
/// rounding granularity of s itself; the complementary branch adds the gap
/// to the exact complement instead of forming s - d first.
#[inline]
pub(crate) fn g_primitive_slope_down(s: f64, d: f64) -> f64 {
    if 2.0 * s - d > 1.5 {
        let a = 1.0 - s;
        slope_complement(a, a + d)
    } else {
        slope_direct(s, s - d)
    }
}

/// Slope between m and m + d, stable in the same sense as
/// [`g_primitive_slope_down`].
#[inline]
pub(crate) fn g_primitive_slope_up(m: f64, d: f64) -> f64 {
    if 2.0 * m + d > 1.5 {
        let b = 1.0 - m;
        slope_complement(b - d, b)
    } else {
        slope_direct(m + d, m)
    }
}

/// G(s) - G(x) without cancellation.
#[inline]
pub(crate) fn g_primitive_diff(s: f64, x: f64) -> f64 {
    (s - x) * g_primitive_slope(s, x)
}

/// The step-wise weight: lambda on [0, sigma] and [1 - sigma, 1] (closed
/// intervals), -mu on the open middle interval.
pub fn weight(t: f64, p: &Params) -> Result<f64> {
    if !(0.0..=1.0).contains(&t) {
        return Err(Error::Domain(format!("weight: t must lie in [0, 1], got {t}")));
    }
    if t <= p.sigma || t >= 1.0 - p.sigma {
        Ok(p.lambda)
    } else {
        Ok(-p.mu)
    }
}

/// Outer-interval energy v^2 + 2 lambda G(u), conserved where the weight is +lambda.
pub fn energy_pos(p: PhasePoint, lambda: f64) -> f64 {
    p.v * p.v + 2.0 * lambda * g_primitive_unchecked(p.u)
}

/// Middle-interval energy v^2 - 2 mu G(u), conserved where the weight is -mu.
/// Negative exactly inside the region embraced by the zero-energy manifold.
pub fn energy_neg(p: PhasePoint, mu: f64) -> f64 {
    p.v * p.v - 2.0 * mu * g_primitive_unchecked(p.u)
}
