//! Connection analysis across the middle interval: the energy of transported
//! Neumann points as a function of the starting value, the landmark abscissas
//! where that energy meets the zero-energy manifold or turns, the regime
//! classification, and the one-to-three connection times from the descending
//! curve to its mirror image.

use crate::error::{Error, Result};
use crate::model::{g_primitive_unchecked, Params};
use crate::negative::{time_between, turning_abscissa, ASYMPTOTE_ENERGY_GAP};
use crate::positive::GammaCurve;
use crate::quad;
use serde::{Deserialize, Serialize};

/// Qualitative shape of the connection-time diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Regime {
    /// The transported curve crosses the manifold twice: two vertical
    /// asymptotes in the connection times. Always the case above the
    /// outer-time threshold, and below it for small mu.
    TwoAsymptotes,
    /// The manifold is tangent to the transported curve (single asymptote).
    Tangent,
    /// No intersection and no interior fold: a single bounded connection time.
    BoundedPlain,
    /// No intersection but an interior fold pair: bounded times with a loop.
    BoundedWithLoop,
}

/// Landmark abscissas of the connection analysis. All fields are starting
/// values s of the outer trajectories, not phase-plane abscissas.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConnectionStructure {
    pub regime: Regime,
    /// Manifold crossings closest to 0 and to 1 (TwoAsymptotes/Tangent).
    pub s0m: Option<f64>,
    pub s1m: Option<f64>,
    /// Interior minimum of the transported energy and its level partner.
    pub s0tau: Option<f64>,
    pub s1tau: Option<f64>,
    /// Loop landmarks (BoundedWithLoop only): level partner and interior
    /// maximum of the transported energy.
    pub s0omega: Option<f64>,
    pub s1omega: Option<f64>,
    /// False when the transported energy shows more interior extrema than
    /// the minimal configuration; enumeration then falls back to scanning.
    pub minimal_config: bool,
}

/// Endpoint and landmark limits of the connection times.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ConnectionLimits {
    /// Limit of the first connection time at s -> 0: 2 lambda sigma / mu.
    pub l0: f64,
    /// Limit at s -> 1: (2/sqrt(mu)) arctan(sqrt(lambda) tanh(sqrt(lambda) sigma) / sqrt(mu)).
    pub l1: f64,
    pub l12_0: Option<f64>,
    pub l3_0: Option<f64>,
    pub l12_1: Option<f64>,
    pub l3_1: Option<f64>,
    pub kappa0: Option<f64>,
    pub kappa1: Option<f64>,
    pub kappa2: Option<f64>,
    pub kappa3: Option<f64>,
    pub kappa4: Option<f64>,
}

/// A level crossing of the transported energy: the starting value, the
/// phase-plane abscissa it is transported to, and the transported speed.
#[derive(Debug, Clone, Copy)]
pub struct Crossing {
    pub s: f64,
    pub u: f64,
    pub v: f64,
}

/// Connection analysis at fixed (lambda, sigma, mu), sharing the transported
/// curve (which does not depend on mu).
pub struct Connection<'a> {
    pub curve: &'a GammaCurve,
    pub mu: f64,
    pub structure: ConnectionStructure,
    grid: Vec<f64>,
}

const GRID_PER_SEGMENT: usize = 256;

impl<'a> Connection<'a> {
    pub fn new(curve: &'a GammaCurve, mu: f64) -> Result<Self> {
        if !(mu > 0.0) {
            return Err(Error::Domain(format!("mu must be positive, got {mu}")));
        }
        let grid = scan_grid(curve);
        let structure = classify_on_grid(curve, mu, &grid)?;
        Ok(Self { curve, mu, structure, grid })
    }

    pub fn lambda(&self) -> f64 {
        self.curve.lambda
    }

    pub fn sigma(&self) -> f64 {
        self.curve.sigma
    }

    /// The scan grid used for landmark detection and by the root scans of
    /// the solver; geometric refinement toward the segment ends.
    pub fn scan_grid(&self) -> &[f64] {
        &self.grid
    }

    /// Middle-interval energy of the transported point at parameter s,
    /// with the continuity extensions h(0) = 0 and h(1) = -mu/6.
    pub fn h(&self, s: f64) -> Result<f64> {
        if s == 0.0 {
            return Ok(0.0);
        }
        if s == 1.0 {
            return Ok(-self.mu / 6.0);
        }
        let (u, v) = self.curve.point(s)?;
        Ok(v * v - 2.0 * self.mu * g_primitive_unchecked(u))
    }

    fn h_or_nan(&self, s: f64) -> f64 {
        self.h(s).unwrap_or(f64::NAN)
    }

    /// All starting values whose transported points share the energy level
    /// of s, ordered by the transported abscissa. A tangential crossing (at
    /// the interior minimum or maximum of the energy) is reported twice, so
    /// the list length matches the number of connection times.
    pub fn level_crossings(&self, s: f64) -> Result<Vec<Crossing>> {
        let level = self.h(s)?;
        let mut roots: Vec<f64> = Vec::new();
        if self.structure.minimal_config {
            for (lo, hi) in self.monotone_pieces() {
                if s > lo && s < hi {
                    roots.push(s);
                    continue;
                }
                let f = |x: f64| self.h_or_nan(x) - level;
                let (flo, fhi) = (f(lo), f(hi));
                if flo.is_finite() && fhi.is_finite() && flo != 0.0 && fhi != 0.0 {
                    if flo.signum() != fhi.signum() {
                        roots.push(quad::find_root(&f, lo, hi, 1e-14)?);
                    }
                } else if flo == 0.0 {
                    roots.push(lo);
                } else if fhi == 0.0 {
                    roots.push(hi);
                }
            }
        } else {
            // generic configuration: take whatever the sign scan finds
            let f = |x: f64| self.h_or_nan(x) - level;
            let mut brs = quad::sign_change_brackets(&f, &self.grid);
            brs.retain(|&(a, b)| !(s >= a && s <= b));
            roots.push(s);
            for (a, b) in brs {
                if a == b {
                    roots.push(a);
                } else {
                    roots.push(quad::find_root(&f, a, b, 1e-14)?);
                }
            }
        }
        let mut out = Vec::with_capacity(roots.len());
        for r in roots {
            let (u, v) = self.curve.point(r)?;
            out.push(Crossing { s: r, u, v });
        }
        out.sort_by(|a, b| a.u.partial_cmp(&b.u).unwrap());
        Ok(out)
    }

    /// The monotone pieces of the transported energy in the minimal
    /// configuration, as parameter intervals. Piece boundaries are the
    /// landmarks; a level in the piece's range crosses it exactly once.
    fn monotone_pieces(&self) -> Vec<(f64, f64)> {
        let st = &self.structure;
        let eps = 1e-13;
        match st.regime {
            Regime::TwoAsymptotes | Regime::Tangent => {
                let s0m = st.s0m.unwrap();
                let s1m = st.s1m.unwrap();
                let tau = st.s0tau.unwrap();
                vec![
                    (eps, tau),
                    (tau, s0m * (1.0 - 1e-12)),
                    (s1m + (1.0 - s1m) * 1e-12, 1.0 - eps),
                ]
            }
            Regime::BoundedWithLoop => {
                let tau = st.s0tau.unwrap();
                let omega = st.s1omega.unwrap();
                vec![(eps, tau), (tau, omega), (omega, 1.0 - eps)]
            }
            Regime::BoundedPlain => vec![(eps, 1.0 - eps)],
        }
    }

    /// Turning abscissa and first half-time of the level line through the
    /// transported point of s. Refuses evaluations too close to the manifold.
    fn half_data(&self, s: f64) -> Result<(f64, f64)> {
        let (u, v) = self.curve.point(s)?;
        let h = v * v - 2.0 * self.mu * g_primitive_unchecked(u);
        let scale = v * v + 2.0 * self.mu * g_primitive_unchecked(u);
        if h >= -ASYMPTOTE_ENERGY_GAP * scale {
            if h >= 0.0 {
                return Err(Error::OutsideManifold { u, v });
            }
            return Err(Error::NearAsymptote { gap: -h });
        }
        let m = turning_abscissa(u, v, self.mu)?;
        Ok((m, time_between(m, u, self.mu)?))
    }

    /// Connection times to the mirror curve, one per level crossing, ordered
    /// (first crossing = smallest transported abscissa). Entries are
    /// (crossing index starting at 1, time).
    pub fn connect_times(&self, s: f64) -> Result<Vec<(usize, f64)>> {
        let (m, half) = self.half_data(s)?;
        let crossings = self.level_crossings(s)?;
        let mut out = Vec::with_capacity(crossings.len());
        for (i, c) in crossings.iter().enumerate() {
            let t = half + time_between(m, c.u, self.mu)?;
            out.push((i + 1, t));
        }
        Ok(out)
    }

    /// Time to the mirror image of the transported point itself.
    pub fn t_sym(&self, s: f64) -> Result<f64> {
        let (_, half) = self.half_data(s)?;
        Ok(2.0 * half)
    }

    /// The maximal connection time at s: the first time outside the fold
    /// window and the third inside it, which is the pointwise maximum of the
    /// defined times.
    pub fn t_max(&self, s: f64) -> Result<f64> {
        let times = self.connect_times(s)?;
        Ok(times.iter().map(|&(_, t)| t).fold(f64::NEG_INFINITY, f64::max))
    }

    /// Endpoint and landmark limits of the connection times.
    pub fn limits(&self) -> Result<ConnectionLimits> {
        let (lambda, mu, sigma) = (self.curve.lambda, self.mu, self.curve.sigma);
        let l0 = 2.0 * lambda * sigma / mu;
        let l1 =
            2.0 / mu.sqrt() * (lambda.sqrt() * (lambda.sqrt() * sigma).tanh() / mu.sqrt()).atan();
        let mut lim = ConnectionLimits {
            l0,
            l1,
            l12_0: None,
            l3_0: None,
            l12_1: None,
            l3_1: None,
            kappa0: None,
            kappa1: None,
            kappa2: None,
            kappa3: None,
            kappa4: None,
        };
        let st = &self.structure;
        match st.regime {
            Regime::TwoAsymptotes | Regime::Tangent => {
                if let (Some(tau0), Some(tau1)) = (st.s0tau, st.s1tau) {
                    let (m0, half0) = self.half_data(tau0)?;
                    let (u1, _) = self.curve.point(tau1)?;
                    let cross01 = time_between(m0, u1, self.mu)?;
                    lim.l12_0 = Some(2.0 * half0);
                    lim.l3_0 = Some(half0 + cross01);
                    // evaluated through the other tangent point as the
                    // definitions state; when the partner is pinned to the
                    // manifold crossing (unresolvable at double precision,
                    // large lambda) its own level is off, and the shared
                    // tau level gives the same limits exactly
                    let (u0, _) = self.curve.point(tau0)?;
                    let independent = self
                        .half_data(tau1)
                        .and_then(|(m1, half1)| {
                            Ok((half1 + time_between(m1, u0, self.mu)?, 2.0 * half1))
                        })
                        .ok()
                        .filter(|_| {
                            let (h0, h1) =
                                (self.h_or_nan(tau0), self.h_or_nan(tau1));
                            (h0 - h1).abs() <= 1e-6 * h0.abs().max(h1.abs())
                        });
                    let (l12_1, l3_1) = independent
                        .unwrap_or((half0 + cross01, 2.0 * cross01));
                    lim.l12_1 = Some(l12_1);
                    lim.l3_1 = Some(l3_1);
                }
            }
            Regime::BoundedWithLoop => {
                let tau0 = st.s0tau.unwrap();
                let tau1 = st.s1tau.unwrap();
                let om0 = st.s0omega.unwrap();
                let om1 = st.s1omega.unwrap();
                lim.kappa0 = Some(self.t_sym(om0)?);
                lim.kappa1 = Some(self.t_sym(tau1)?);
                lim.kappa3 = Some(self.t_sym(tau0)?);
                lim.kappa4 = Some(self.t_sym(om1)?);
                // mixed time on the fold level: the common limit of the first
                // and second times at the upper fold parameter; same energy
                // level as kappa1 and kappa3, hence kappa3 < kappa2 < kappa1
                let (m, half) = self.half_data(tau0)?;
                let (u1, _) = self.curve.point(tau1)?;
                lim.kappa2 = Some(half + time_between(m, u1, self.mu)?);
            }
            Regime::BoundedPlain => {}
        }
        Ok(lim)
    }
}

/// Geometric scan grid over the admissible segments of the curve.
fn scan_grid(curve: &GammaCurve) -> Vec<f64> {
    let mut grid = Vec::new();
    for (lo, hi) in curve.segments() {
        let n = GRID_PER_SEGMENT / 2;
        if lo == 0.0 {
            // cluster toward 0 in log s, covering many decades for large lambda
            let inner = (hi * 1e-8).max(1e-12);
            grid.extend(quad::log_grid(inner, hi * 0.5, n));
        } else {
            let inner = ((hi - lo) * 1e-9).max(1e-14);
            grid.extend(quad::log_grid(inner, (hi - lo) * 0.5, n).into_iter().map(|d| lo + d));
        }
        if hi == 1.0 {
            let inner = ((1.0 - lo) * 1e-10).max(4.0 * f64::EPSILON);
            grid.extend(
                quad::log_grid(inner, (1.0 - lo) * 0.5, n).into_iter().rev().map(|d| 1.0 - d),
            );
        } else {
            let inner = ((hi - lo) * 1e-9).max(1e-14);
            grid.extend(
                quad::log_grid(inner, (hi - lo) * 0.5, n).into_iter().rev().map(|d| hi - d),
            );
        }
    }
    grid.sort_by(|a, b| a.partial_cmp(b).unwrap());
    grid.dedup_by(|a, b| (*a - *b).abs() <= 1e-14 * a.abs().max(1e-3));
    grid
}

/// Classifies the regime and locates the landmarks on the given grid.
fn classify_on_grid(curve: &GammaCurve, mu: f64, grid: &[f64]) -> Result<ConnectionStructure> {
    let h = |s: f64| -> f64 {
        match curve.point(s) {
            Ok((u, v)) => v * v - 2.0 * mu * g_primitive_unchecked(u),
            Err(_) => f64::NAN,
        }
    };
    let vals: Vec<f64> = grid.iter().map(|&s| h(s)).collect();

    // manifold crossings
    let brackets = quad::sign_change_brackets(h, grid);
    let mut zeros = Vec::new();
    for &(a, b) in &brackets {
        if a == b {
            zeros.push(a);
        } else {
            zeros.push(quad::find_root(h, a, b, 1e-15)?);
        }
    }

    // interior extrema from grid triples (NaN-safe), requiring a prominence
    // above rounding noise of the plateau near s = 1
    let h_scale = vals.iter().filter(|v| v.is_finite()).fold(0.0_f64, |m, &v| m.max(v.abs()));
    let prom = 1e-11 * h_scale.max(1e-300);
    let mut minima = Vec::new();
    let mut maxima = Vec::new();
    for i in 1..grid.len() - 1 {
        let (a, b, c) = (vals[i - 1], vals[i], vals[i + 1]);
        if !(a.is_finite() && b.is_finite() && c.is_finite()) {
            continue;
        }
        if b < a - prom && b < c - prom {
            minima.push(i);
        }
        if b > a + prom && b > c + prom {
            maxima.push(i);
        }
    }
    let refine_min = |i: usize| -> (f64, f64) { quad::find_min(h, grid[i - 1], grid[i + 1], 1e-13) };
    let refine_max = |i: usize| -> (f64, f64) {
        let (x, v) = quad::find_min(|s| -h(s), grid[i - 1], grid[i + 1], 1e-13);
        (x, -v)
    };

    if !zeros.is_empty() {
        // two-asymptote geometry (possibly degenerate): landmarks are the
        // crossings closest to 0 and to 1
        let s0m = zeros[0];
        let s1m = *zeros.last().unwrap();
        let min_left: Vec<usize> = minima.iter().copied().filter(|&i| grid[i] < s0m).collect();
        let minimal = zeros.len() == 2
            && min_left.len() == 1
            && maxima.iter().all(|&i| grid[i] >= s0m && grid[i] <= s1m)
            && minima.len() == 1;
        let (s0tau, tau_level) = match min_left.first() {
            Some(&i) => refine_min(i),
            // dip not resolved left of the crossing; fall back to the midpoint
            None => (0.5 * s0m, h(0.5 * s0m)),
        };
        // level partner on the falling branch right of s1m; the crossing can
        // sit arbitrarily close to s1m, so s1m itself anchors the bracket
        let mut tail: Vec<f64> = vec![s1m];
        tail.extend(grid.iter().copied().filter(|&s| s > s1m));
        let fpart = |s: f64| h(s) - tau_level;
        let brs = quad::sign_change_brackets(fpart, &tail);
        let s1tau = match brs.first() {
            Some(&(a, b)) => Some(if a == b { a } else { quad::find_root(fpart, a, b, 1e-15)? }),
            // at very large lambda the parametrization near s = 1 is so
            // compressed that the partner lies within one representable step
            // of the crossing itself; the transported abscissas then agree
            // to the same precision, so the crossing stands in for it
            None => {
                if tail.iter().skip(1).any(|&s| fpart(s).is_finite()) {
                    Some(s1m)
                } else {
                    None
                }
            }
        };
        return Ok(ConnectionStructure {
            regime: Regime::TwoAsymptotes,
            s0m: Some(s0m),
            s1m: Some(s1m),
            s0tau: Some(s0tau),
            s1tau,
            s0omega: None,
            s1omega: None,
            minimal_config: minimal && s1tau.is_some(),
        });
    }

    // no crossings: tangent or bounded; look at the largest interior maximum
    if let Some(&imax) = maxima.iter().max_by(|&&i, &&j| vals[i].partial_cmp(&vals[j]).unwrap()) {
        let (s1omega, peak) = refine_max(imax);
        let min_left: Vec<usize> = minima.iter().copied().filter(|&i| grid[i] < s1omega).collect();
        let (s0tau, tau_level) = match min_left.first() {
            Some(&i) => refine_min(i),
            None => (0.5 * s1omega, h(0.5 * s1omega)),
        };
        let mut tail: Vec<f64> = vec![s1omega];
        tail.extend(grid.iter().copied().filter(|&s| s > s1omega));
        let ftau = |s: f64| h(s) - tau_level;
        let brs = quad::sign_change_brackets(ftau, &tail);
        let s1tau = match brs.first() {
            Some(&(a, b)) => Some(if a == b { a } else { quad::find_root(ftau, a, b, 1e-15)? }),
            None => None,
        };
        if peak.abs() < 1e-9 * 2.0 * mu {
            // manifold tangent to the transported curve
            return Ok(ConnectionStructure {
                regime: Regime::Tangent,
                s0m: Some(s1omega),
                s1m: Some(s1omega),
                s0tau: Some(s0tau),
                s1tau,
                s0omega: None,
                s1omega: None,
                minimal_config: minima.len() == 1 && maxima.len() == 1 && s1tau.is_some(),
            });
        }
        if peak < 0.0 {
            // interior fold strictly inside the manifold: loop regime
            let head: Vec<f64> = grid.iter().copied().filter(|&s| s < s0tau).collect();
            let fomega = |s: f64| h(s) - peak;
            let brs = quad::sign_change_brackets(fomega, &head);
            let s0omega = match brs.first() {
                Some(&(a, b)) => {
                    if a == b {
                        a
                    } else {
                        quad::find_root(fomega, a, b, 1e-15)?
                    }
                }
                None => return Err(Error::Internal("fold level has no partner toward 0".into())),
            };
            return Ok(ConnectionStructure {
                regime: Regime::BoundedWithLoop,
                s0m: None,
                s1m: None,
                s0tau: Some(s0tau),
                s1tau,
                s0omega: Some(s0omega),
                s1omega: Some(s1omega),
                minimal_config: minima.len() == 1 && maxima.len() == 1 && s1tau.is_some(),
            });
        }
    }

    Ok(ConnectionStructure {
        regime: Regime::BoundedPlain,
        s0m: None,
        s1m: None,
        s0tau: None,
        s1tau: None,
        s0omega: None,
        s1omega: None,
        minimal_config: minima.is_empty() && maxima.is_empty(),
    })
}

/// The depth at which the manifold becomes tangent to the transported curve.
/// Defined for lambda below the outer-time threshold; above it the curve
/// always crosses the manifold.
pub fn mu_tilde(lambda: f64, sigma: f64) -> Result<f64> {
    let curve = GammaCurve::new(lambda, sigma)?;
    mu_tilde_for(&curve)
}

/// As [`mu_tilde`], reusing an existing curve and its memoized points.
pub fn mu_tilde_for(curve: &GammaCurve) -> Result<f64> {
    if curve.lambda >= curve.constants.lambda_star {
        return Err(Error::Domain(format!(
            "tangency depth exists only below the threshold {}, got lambda = {}",
            curve.constants.lambda_star, curve.lambda
        )));
    }
    let grid = scan_grid(curve);
    // peak of the transported energy over the interior; strictly decreasing in mu
    let peak = |mu: f64| -> f64 {
        let h = |s: f64| match curve.point(s) {
            Ok((u, v)) => v * v - 2.0 * mu * g_primitive_unchecked(u),
            Err(_) => f64::NAN,
        };
        let mut best = f64::NEG_INFINITY;
        let mut best_i = 0;
        for (i, &s) in grid.iter().enumerate() {
            let v = h(s);
            if v.is_finite() && v > best {
                best = v;
                best_i = i;
            }
        }
        let lo = grid[best_i.saturating_sub(1)];
        let hi = grid[(best_i + 1).min(grid.len() - 1)];
        let (_, neg) = quad::find_min(|s| -h(s), lo, hi, 1e-13);
        -neg
    };
    let mut lo = curve.lambda;
    let mut hi = curve.lambda;
    while peak(lo) <= 0.0 {
        lo /= 4.0;
        if lo < 1e-12 {
            return Err(Error::Internal("tangency depth not bracketed from below".into()));
        }
    }
    while peak(hi) > 0.0 {
        hi *= 4.0;
        if hi > 1e12 {
            return Err(Error::Internal("tangency depth not bracketed from above".into()));
        }
    }
    quad::find_root(peak, lo, hi, 1e-12 * hi)
}

/// Flat wrapper: transported energy at s for the given parameters.
pub fn h_mu(s: f64, p: &Params) -> Result<f64> {
    let curve = GammaCurve::new(p.lambda, p.sigma)?;
    let conn = Connection::new(&curve, p.mu)?;
    conn.h(s)
}

/// Flat wrapper: regime classification for the given parameters.
pub fn classify(p: &Params) -> Result<ConnectionStructure> {
    let curve = GammaCurve::new(p.lambda, p.sigma)?;
    Ok(Connection::new(&curve, p.mu)?.structure)
}
