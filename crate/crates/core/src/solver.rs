//! Solution enumeration and verification: roots of the connection times at
//! the middle-interval length, an independent Runge-Kutta shooting oracle,
//! profile reconstruction, and the existence/multiplicity thresholds in mu.

use crate::connection::{Connection, ConnectionStructure, Regime};
use crate::error::{Error, Result};
use crate::model::{g_unchecked, Params};
use crate::positive::GammaCurve;
use crate::quad;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

/// Default fixed step for verification integrations.
pub const VERIFY_DT: f64 = 1e-5;
/// Coarser step used by dense scans.
pub const SCAN_DT: f64 = 1e-3;
/// Residual bound |u'(1)| for accepting a candidate.
pub const VERIFY_TOL: f64 = 1e-6;
/// Two initial values closer than this are the same solution.
pub const DEDUP_TOL: f64 = 1e-7;

/// Sampled solution profile on a uniform grid.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Profile {
    pub t: Vec<f64>,
    pub u: Vec<f64>,
    pub du: Vec<f64>,
}

/// A verified solution of the Neumann problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Solution {
    /// u(0)
    pub s_init: f64,
    /// u(1)
    pub s_term: f64,
    /// Which level crossing the middle passage lands on (1, 2 or 3).
    pub crossing_index: usize,
    /// |u'(1)| of the verifying integration.
    pub residual: f64,
    pub profile: Profile,
}

/// A candidate that failed verification, kept for diagnostics.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Rejected {
    pub s_init: f64,
    pub crossing_index: usize,
    pub reason: String,
}

/// Result of the enumeration: verified solutions plus rejects.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SolveReport {
    pub solutions: Vec<Solution>,
    pub rejected: Vec<Rejected>,
    /// False when the landmark analysis saw more structure than the minimal
    /// configuration; the enumeration then relies on generic scanning.
    pub minimal_config: bool,
}

/// Outcome of a single shooting integration.
#[derive(Debug, Clone)]
pub enum Shot {
    /// Stayed in the strip; carries the profile and u'(1).
    Completed { profile: Profile, final_slope: f64 },
    /// Left the strip at time t with value u.
    Escaped { t: f64, u: f64 },
}

/// Integrates u'' = -a(t) g(u) from (s_init, 0) over [0, 1] with classical
/// fixed-step RK4, restarting exactly at the weight switches. The profile is
/// sampled on `n_out` uniform intervals. Escapes as soon as the trajectory
/// leaves the strip.
pub fn shoot(s_init: f64, p: &Params, dt: f64, n_out: usize) -> Shot {
    shoot_bounded(s_init, p, dt, n_out, 1e-9)
}

/// As [`shoot`] but following the flow outside the strip up to |u - 1/2|
/// <= 1/2 + margin. The scans use a wide margin so that u'(1) stays a
/// continuous function of the initial value across strip exits; validity is
/// checked afterwards on the profile.
pub fn shoot_bounded(s_init: f64, p: &Params, dt: f64, n_out: usize, margin: f64) -> Shot {
    let accel = |u: f64, a: f64| -a * g_unchecked(u);
    let mut targets: Vec<f64> = (1..=n_out).map(|k| k as f64 / n_out as f64).collect();
    targets.push(p.sigma);
    targets.push(1.0 - p.sigma);
    targets.sort_by(|a, b| a.partial_cmp(b).unwrap());
    targets.dedup_by(|a, b| (*a - *b).abs() < 1e-14);

    let mut t_vec = Vec::with_capacity(n_out + 1);
    let mut u_vec = Vec::with_capacity(n_out + 1);
    let mut du_vec = Vec::with_capacity(n_out + 1);

    let (mut u, mut v) = (s_init, 0.0_f64);
    let mut t_cur = 0.0_f64;
    let is_output = |t: f64| (t * n_out as f64 - (t * n_out as f64).round()).abs() < 1e-12;
    t_vec.push(0.0);
    u_vec.push(u);
    du_vec.push(v);

    for &target in &targets {
        let span = target - t_cur;
        if span <= 0.0 {
            continue;
        }
        let a = crate::model::weight(0.5 * (t_cur + target), p).unwrap();
        let n_steps = (span / dt).ceil().max(1.0) as usize;
        let h = span / n_steps as f64;
        for _ in 0..n_steps {
            let k1u = v;
            let k1v = accel(u, a);
            let k2u = v + 0.5 * h * k1v;
            let k2v = accel(u + 0.5 * h * k1u, a);
            let k3u = v + 0.5 * h * k2v;
            let k3v = accel(u + 0.5 * h * k2u, a);
            let k4u = v + h * k3v;
            let k4v = accel(u + h * k3u, a);
            u += h / 6.0 * (k1u + 2.0 * k2u + 2.0 * k3u + k4u);
            v += h / 6.0 * (k1v + 2.0 * k2v + 2.0 * k3v + k4v);
            t_cur += h;
            if !(-margin..=1.0 + margin).contains(&u) || !u.is_finite() {
                return Shot::Escaped { t: t_cur, u };
            }
        }
        t_cur = target;
        if is_output(target) {
            t_vec.push(target);
            u_vec.push(u);
            du_vec.push(v);
        }
    }
    Shot::Completed { profile: Profile { t: t_vec, u: u_vec, du: du_vec }, final_slope: v }
}

/// Verifies a candidate initial value by direct integration: the residual is
/// |u'(1)| and the profile must stay strictly inside (0, 1).
pub fn verify_solution(s_init: f64, p: &Params, tol: f64) -> Result<(f64, Profile)> {
    verify_solution_dt(s_init, p, tol, VERIFY_DT)
}

/// As [`verify_solution`] with an explicit step.
pub fn verify_solution_dt(s_init: f64, p: &Params, tol: f64, dt: f64) -> Result<(f64, Profile)> {
    if !(s_init > 0.0 && s_init < 1.0) {
        return Err(Error::Domain(format!("initial value must lie in (0, 1), got {s_init}")));
    }
    match shoot(s_init, p, dt, 1000) {
        Shot::Escaped { t, u } => {
            Err(Error::Domain(format!("trajectory escaped the strip at t = {t} (u = {u})")))
        }
        Shot::Completed { profile, final_slope } => {
            let residual = final_slope.abs();
            if profile.u.iter().any(|&u| u <= 0.0 || u >= 1.0) {
                return Err(Error::Domain("profile touches the strip boundary".into()));
            }
            if residual >= tol {
                return Err(Error::Domain(format!(
                    "residual {residual:e} exceeds tolerance {tol:e}"
                )));
            }
            Ok((residual, profile))
        }
    }
}

/// Scan windows and the number of connection-time indices defined on each.
fn windows(st: &ConnectionStructure) -> Vec<(f64, f64, usize)> {
    match st.regime {
        Regime::TwoAsymptotes | Regime::Tangent => {
            let s0m = st.s0m.unwrap();
            let s1m = st.s1m.unwrap();
            let t1 = st.s1tau.unwrap_or(s1m);
            vec![(0.0, s0m, 3), (s1m, t1, 3), (t1, 1.0, 1)]
        }
        Regime::BoundedWithLoop => {
            let (o0, t0) = (st.s0omega.unwrap(), st.s0tau.unwrap());
            let (o1, t1) = (st.s1omega.unwrap(), st.s1tau.unwrap());
            vec![(0.0, o0, 1), (o0, t0, 3), (t0, o1, 3), (o1, t1, 3), (t1, 1.0, 1)]
        }
        Regime::BoundedPlain => vec![(0.0, 1.0, 1)],
    }
}

/// Scan grid inside (lo, hi): the shared base grid plus geometric refinement
/// (ratio 1.3) toward the window ends, where the times vary fastest.
fn window_grid(lo: f64, hi: f64, base: &[f64]) -> Vec<f64> {
    let span = hi - lo;
    let mut pts: Vec<f64> = base.iter().copied().filter(|&s| s > lo && s < hi).collect();
    let mut offset = span / 2.6;
    for _ in 0..32 {
        pts.push(lo + offset);
        pts.push(hi - offset);
        offset /= 1.3;
    }
    pts.retain(|&s| s > lo && s < hi);
    pts.sort_by(|a, b| a.partial_cmp(b).unwrap());
    pts.dedup_by(|a, b| (*a - *b).abs() <= 1e-13 * a.abs().max(1e-6));
    pts
}

/// All (initial value, crossing index) pairs whose connection time equals
/// the middle length, from windowed scans plus bracketed root polishing.
/// The grid values are computed in a single pass per window and reused for
/// every index.
fn time_map_candidates(conn: &Connection) -> Vec<(f64, usize)> {
    let c = 1.0 - 2.0 * conn.sigma();
    let mut found: Vec<(f64, usize)> = Vec::new();
    let base = conn.scan_grid();
    for (lo, hi, n_idx) in windows(&conn.structure) {
        if !(hi > lo) {
            continue;
        }
        let grid = window_grid(lo, hi, base);
        if grid.len() < 4 {
            continue;
        }
        let table: Vec<[f64; 3]> = grid
            .iter()
            .map(|&s| {
                let mut row = [f64::NAN; 3];
                if let Ok(times) = conn.connect_times(s) {
                    for (i, &(_, t)) in times.iter().take(3).enumerate() {
                        row[i] = t - c;
                    }
                }
                row
            })
            .collect();
        for idx in 1..=n_idx {
            let f = |s: f64| match conn.connect_times(s) {
                Ok(times) => times.get(idx - 1).map(|&(_, t)| t - c).unwrap_or(f64::NAN),
                Err(_) => f64::NAN,
            };
            let mut prev: Option<(f64, f64)> = None;
            for (i, &s) in grid.iter().enumerate() {
                let v = table[i][idx - 1];
                if !v.is_finite() {
                    prev = None;
                    continue;
                }
                if v == 0.0 {
                    found.push((s, idx));
                    prev = None;
                    continue;
                }
                if let Some((ps, pv)) = prev {
                    if pv.signum() != v.signum() {
                        if let Ok(r) = quad::find_root(f, ps, s, 1e-13) {
                            found.push((r, idx));
                        }
                    }
                }
                prev = Some((s, v));
            }
            // a shallow interior extremum of the time can cross the target
            // twice between grid points; zoom into every dip of |T - c|
            // that shows no sign change
            for i in 1..grid.len() - 1 {
                let (a, b, d) = (table[i - 1][idx - 1], table[i][idx - 1], table[i + 1][idx - 1]);
                if !(a.is_finite() && b.is_finite() && d.is_finite()) {
                    continue;
                }
                if b.abs() < a.abs()
                    && b.abs() < d.abs()
                    && a.signum() == b.signum()
                    && b.signum() == d.signum()
                {
                    dip_zoom(&f, grid[i - 1], grid[i + 1], 3, &mut |r| found.push((r, idx)));
                }
            }
        }
    }
    found.sort_by(|x, y| x.0.partial_cmp(&y.0).unwrap());
    found.dedup_by(|x, y| (x.0 - y.0).abs() < DEDUP_TOL);
    found
}

/// Recursively samples a dip of |f| looking for a double crossing; pushes
/// every polished root found.
fn dip_zoom<F: Fn(f64) -> f64, G: FnMut(f64)>(f: &F, mut lo: f64, mut hi: f64, depth: usize, sink: &mut G) {
    for _ in 0..depth {
        let n = 16;
        let sub: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
        let vals: Vec<f64> = sub.iter().map(|&s| f(s)).collect();
        let mut any = false;
        for j in 1..sub.len() {
            if vals[j - 1].is_finite()
                && vals[j].is_finite()
                && vals[j - 1].signum() != vals[j].signum()
            {
                if let Ok(r) = quad::find_root(f, sub[j - 1], sub[j], 1e-13) {
                    sink(r);
                    any = true;
                }
            }
        }
        if any {
            return;
        }
        let (jmin, _) = match vals
            .iter()
            .enumerate()
            .filter(|(_, v)| v.is_finite())
            .min_by(|x, y| x.1.abs().partial_cmp(&y.1.abs()).unwrap())
        {
            Some(m) => m,
            None => return,
        };
        lo = sub[jmin.saturating_sub(1)];
        hi = sub[(jmin + 1).min(sub.len() - 1)];
    }
}

/// The raw candidate roots, exposed for the branch tracer so that branch
/// crossing counts agree with the enumeration by construction.
pub fn time_map_candidates_public(conn: &Connection) -> Vec<(f64, usize)> {
    time_map_candidates(conn)
}

/// Enumerates all solutions at the given parameters: every root of a
/// connection time at the middle length, each verified by an independent
/// shooting integration before inclusion.
pub fn find_solutions(p: &Params) -> Result<SolveReport> {
    let curve = GammaCurve::new(p.lambda, p.sigma)?;
    find_solutions_with(&curve, p.mu)
}

/// As [`find_solutions`], reusing a transported curve.
pub fn find_solutions_with(curve: &GammaCurve, mu: f64) -> Result<SolveReport> {
    let p = Params::new(curve.lambda, mu, curve.sigma)?;
    let conn = Connection::new(curve, mu)?;
    let mut report = SolveReport {
        solutions: Vec::new(),
        rejected: Vec::new(),
        minimal_config: conn.structure.minimal_config,
    };
    for (s, idx) in time_map_candidates(&conn) {
        match verify_solution(s, &p, VERIFY_TOL) {
            Ok((residual, profile)) => {
                let s_term = *profile.u.last().unwrap();
                report.solutions.push(Solution {
                    s_init: s,
                    s_term,
                    crossing_index: idx,
                    residual,
                    profile,
                });
            }
            Err(e) => {
                report.rejected.push(Rejected {
                    s_init: s,
                    crossing_index: idx,
                    reason: e.to_string(),
                });
            }
        }
    }
    Ok(report)
}

/// Independent oracle: dense shooting scan for sign changes of u'(1) over
/// the initial value, bisection refinement, verification. Shares nothing
/// with the time-map route.
pub fn shooting_scan(p: &Params, n_grid: usize) -> Vec<(f64, f64)> {
    // follow the flow beyond the strip so that u'(1) stays continuous in the
    // initial value, mapping hard divergence to a signed sentinel; the final
    // verification enforces the strip constraint
    let eval = |s: f64, dt: f64| match shoot_bounded(s, p, dt, 4, 9.5) {
        Shot::Completed { final_slope, .. } => final_slope,
        Shot::Escaped { u, .. } => 1e6_f64.copysign(u - 0.5),
    };
    let f = |s: f64| eval(s, SCAN_DT);

    let grid: Vec<f64> = (1..n_grid).map(|i| i as f64 / n_grid as f64).collect();
    let vals: Vec<f64> = grid.iter().map(|&s| f(s)).collect();

    // roots cluster tightly near the fold onsets and the asymptotes, and
    // narrow spikes of u'(1) hide between uniform samples; every interval
    // showing a sign change or a dip of |u'(1)| is refined recursively
    let mut brackets: Vec<(f64, f64)> = Vec::new();
    let mut pending_dips: Vec<(f64, f64)> = Vec::new();
    for i in 1..grid.len() {
        let sign_change = vals[i - 1].signum() != vals[i].signum();
        let dip = i + 1 < grid.len()
            && vals[i].abs() < vals[i - 1].abs()
            && vals[i].abs() < vals[i + 1].abs();
        if sign_change {
            scan_refine(&f, grid[i - 1], grid[i], 3, &mut brackets, &mut pending_dips);
        } else if dip {
            scan_refine(&f, grid[i - 1], grid[i + 1], 3, &mut brackets, &mut pending_dips);
        }
    }

    // near-tangent pairs can sit below the phase accuracy of the coarse
    // integrations: rescue every unresolved near-zero dip at the fine step
    let fine = |s: f64| eval(s, VERIFY_DT);
    for (lo, hi) in pending_dips {
        let sub: Vec<f64> = (0..=24).map(|k| lo + (hi - lo) * k as f64 / 24.0).collect();
        let sub_vals: Vec<f64> = sub.iter().map(|&s| fine(s)).collect();
        for j in 1..sub.len() {
            if sub_vals[j - 1].signum() != sub_vals[j].signum() {
                brackets.push((sub[j - 1], sub[j]));
            }
        }
    }

    let mut roots = Vec::new();
    for (a, b) in brackets {
        // two-stage bisection: narrow at dt = 1e-4, but not below the
        // root displacement between the coarse and fine integrations, then
        // widen a hair and polish at the fine step
        let (mut lo, mut hi) = (a, b);
        let fr = |s: f64| eval(s, 1e-4);
        let (mut flo, fhi) = (fr(lo), fr(hi));
        if flo.signum() != fhi.signum() {
            while hi - lo > 1e-7 {
                let mid = 0.5 * (lo + hi);
                let fm = fr(mid);
                if fm.signum() == flo.signum() {
                    lo = mid;
                    flo = fm;
                } else {
                    hi = mid;
                }
            }
        }
        let pad = 5e-7_f64.min(0.45 * DEDUP_TOL.max(hi - lo) * 10.0).max(1e-9);
        let (mut lo, mut hi) = ((lo - pad).max(1e-12), (hi + pad).min(1.0 - 1e-12));
        let (mut flo, fhi) = (fine(lo), fine(hi));
        if flo.signum() == fhi.signum() {
            continue;
        }
        for _ in 0..45 {
            let mid = 0.5 * (lo + hi);
            let fm = fine(mid);
            if fm.signum() == flo.signum() {
                lo = mid;
                flo = fm;
            } else {
                hi = mid;
            }
        }
        roots.push(0.5 * (lo + hi));
    }
    roots.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let mut verified: Vec<(f64, f64)> = Vec::new();
    for s in roots {
        if let Ok((residual, _)) = verify_solution(s, p, VERIFY_TOL) {
            verified.push((s, residual));
        }
    }
    verified.dedup_by(|x, y| (x.0 - y.0).abs() < DEDUP_TOL);
    verified
}

/// Recursive scan of one interval: collect leaf brackets around every sign
/// change, descending into sub-intervals with sign changes or dips. Dips
/// that never resolve into a crossing at full depth are reported separately
/// (candidates for a finer integration step).
fn scan_refine<F: Fn(f64) -> f64>(
    f: &F,
    lo: f64,
    hi: f64,
    depth: usize,
    out: &mut Vec<(f64, f64)>,
    pending: &mut Vec<(f64, f64)>,
) {
    let n = 24;
    let sub: Vec<f64> = (0..=n).map(|k| lo + (hi - lo) * k as f64 / n as f64).collect();
    let vals: Vec<f64> = sub.iter().map(|&s| f(s)).collect();
    for i in 1..sub.len() {
        let sign_change = vals[i - 1].signum() != vals[i].signum();
        let dip = i + 1 < sub.len()
            && vals[i].abs() < vals[i - 1].abs()
            && vals[i].abs() < vals[i + 1].abs()
            && vals[i].abs() < 1e5;
        if sign_change {
            if depth == 0 {
                out.push((sub[i - 1], sub[i]));
            } else {
                scan_refine(f, sub[i - 1], sub[i], depth - 1, out, pending);
            }
        } else if dip {
            if depth == 0 {
                if vals[i].abs() < 1.0 {
                    pending.push((sub[i - 1], sub[i + 1]));
                }
            } else {
                scan_refine(f, sub[i - 1], sub[i + 1], depth - 1, out, pending);
            }
        }
    }
}

/// The existence/multiplicity thresholds at fixed lambda and sigma. Absent
/// fields do not apply to the regime of lambda.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct Thresholds {
    pub lambda: f64,
    pub sigma: f64,
    pub lambda_star: f64,
    /// Smallest depth at which the minimal first connection time reaches the
    /// middle length (no solutions below it).
    pub mu0_star: Option<f64>,
    /// Largest such depth (at least one solution above it).
    pub mu1_star: Option<f64>,
    /// Depth at which the s -> 0 limit of the first time equals the middle
    /// length: 2 lambda sigma / (1 - 2 sigma).
    pub mu2_star: f64,
    /// Smallest depth past the tangency at which the maximal time drops to
    /// the middle length (two solutions between mu2_star and here).
    pub mu2_dstar: Option<f64>,
    /// Largest such depth (no solutions above it). Below the threshold only.
    pub mu0_dstar: Option<f64>,
    /// Largest depth at which the left tangent-level limit of the first two
    /// times equals the middle length (four solutions above). At-or-above
    /// the threshold only.
    pub mu4_star: Option<f64>,
    /// Same for the third time (eight solutions above).
    pub mu8_star: Option<f64>,
    /// Tangency depth (below the threshold only).
    pub mu_tilde: Option<f64>,
}

/// Smallest value of the first connection time over its extended domain.
fn min_t1(conn: &Connection) -> f64 {
    let lim = match conn.limits() {
        Ok(l) => l,
        Err(_) => return f64::NAN,
    };
    let mut best = lim.l0.min(lim.l1);
    for v in [lim.l12_0, lim.l12_1, lim.kappa2, lim.kappa3] {
        if let Some(v) = v {
            best = best.min(v);
        }
    }
    // the symmetric time covers the first time on the outer windows
    for &s in conn.scan_grid() {
        if let Ok(t) = conn.t_sym(s) {
            best = best.min(t);
        }
    }
    // coarse sweep of the full time lists guards non-minimal configurations
    for &s in conn.scan_grid().iter().step_by(4) {
        if let Ok(times) = conn.connect_times(s) {
            if let Some(&(_, t)) = times.first() {
                best = best.min(t);
            }
        }
    }
    best
}

/// Largest value of the maximal connection time (bounded regimes).
fn max_tmax(conn: &Connection) -> f64 {
    let mut best = f64::NEG_INFINITY;
    if let Ok(lim) = conn.limits() {
        best = lim.l0.max(lim.l1);
        for v in [lim.kappa1, lim.kappa4] {
            if let Some(v) = v {
                best = best.max(v);
            }
        }
    }
    for &s in conn.scan_grid() {
        if let Ok(t) = conn.t_sym(s) {
            best = best.max(t);
        }
    }
    for &s in conn.scan_grid().iter().step_by(4) {
        if let Ok(t) = conn.t_max(s) {
            best = best.max(t);
        }
    }
    best
}

/// Scans a function of mu over a log grid and polishes the first and last
/// sign change. Returns (first root, last root).
fn mu_scan_roots<F: Fn(f64) -> f64>(
    f: F,
    mu_lo: f64,
    mu_hi: f64,
    n: usize,
) -> Result<(Option<f64>, Option<f64>)> {
    let grid = quad::log_grid(mu_lo, mu_hi, n);
    let brs = quad::sign_change_brackets(&f, &grid);
    let polish = |&(a, b): &(f64, f64)| -> Result<f64> {
        if a == b {
            Ok(a)
        } else {
            quad::find_root(&f, a, b, 1e-11 * b)
        }
    };
    match brs.len() {
        0 => Ok((None, None)),
        _ => Ok((Some(polish(brs.first().unwrap())?), Some(polish(brs.last().unwrap())?))),
    }
}

/// Computes all thresholds for the given lambda and sigma.
pub fn thresholds(lambda: f64, sigma: f64) -> Result<Thresholds> {
    let curve = GammaCurve::new(lambda, sigma)?;
    thresholds_with(&curve)
}

/// As [`thresholds`], reusing a transported curve.
pub fn thresholds_with(curve: &GammaCurve) -> Result<Thresholds> {
    let lambda = curve.lambda;
    let sigma = curve.sigma;
    let c = 1.0 - 2.0 * sigma;
    let lambda_star = curve.constants.lambda_star;
    let above = lambda >= lambda_star;
    let mu2_star = 2.0 * lambda * sigma / c;

    let (mu_lo, mu_hi) = (1e-4 * lambda.max(1.0), 1e6 * lambda.max(1.0));

    // first-time minimum crossing the middle length
    let f1 = |mu: f64| match Connection::new(curve, mu) {
        Ok(conn) => min_t1(&conn) - c,
        Err(_) => f64::NAN,
    };
    let (mu0_star, mu1_star) = mu_scan_roots(f1, mu_lo, mu_hi, 31)?;

    let mut th = Thresholds {
        lambda,
        sigma,
        lambda_star,
        mu0_star,
        mu1_star,
        mu2_star,
        mu2_dstar: None,
        mu0_dstar: None,
        mu4_star: None,
        mu8_star: None,
        mu_tilde: None,
    };

    if above {
        // tangent-level limits against the middle length; the thresholds are
        // the largest roots, floored by mu2_star
        let fl12 = |mu: f64| match Connection::new(curve, mu) {
            Ok(conn) => match conn.limits() {
                Ok(lim) => lim.l12_0.map(|v| v - c).unwrap_or(f64::NAN),
                Err(_) => f64::NAN,
            },
            Err(_) => f64::NAN,
        };
        let (_, last) = mu_scan_roots(fl12, mu_lo, mu_hi, 31)?;
        th.mu4_star = last.map(|m| m.max(mu2_star));
        let fl3 = |mu: f64| match Connection::new(curve, mu) {
            Ok(conn) => match conn.limits() {
                Ok(lim) => lim.l3_0.map(|v| v - c).unwrap_or(f64::NAN),
                Err(_) => f64::NAN,
            },
            Err(_) => f64::NAN,
        };
        let (_, last) = mu_scan_roots(fl3, mu_lo, mu_hi, 31)?;
        th.mu8_star = last.map(|m| m.max(mu2_star));
    } else {
        let mt = crate::connection::mu_tilde_for(curve)?;
        th.mu_tilde = Some(mt);
        // maximal-time crossing past the tangency
        let f2 = |mu: f64| match Connection::new(curve, mu) {
            Ok(conn) => max_tmax(&conn) - c,
            Err(_) => f64::NAN,
        };
        let (first, last) = mu_scan_roots(f2, mt * (1.0 + 1e-6), mu_hi, 31)?;
        th.mu2_dstar = first;
        th.mu0_dstar = last;
    }
    Ok(th)
}

/// Qualitative region of the parameter plane.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegionLabel {
    NonExistence,
    AtLeastOne,
    AtLeastTwo,
    AtLeastFour,
    AtLeastEight,
    /// Between the non-existence and existence thresholds, where the theory
    /// is silent (empty when the conjectured equalities hold).
    Indeterminate,
}

/// One cell of the parameter-plane map.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct PlaneCell {
    pub lambda: f64,
    pub mu: f64,
    pub count: usize,
    pub label: RegionLabel,
    pub error: Option<String>,
}

/// Region label from the thresholds alone.
pub fn classify_cell(th: &Thresholds, mu: f64) -> RegionLabel {
    if let Some(m0) = th.mu0_star {
        if mu < m0 {
            return RegionLabel::NonExistence;
        }
    }
    if th.lambda < th.lambda_star {
        if let Some(m0d) = th.mu0_dstar {
            if mu > m0d {
                return RegionLabel::NonExistence;
            }
        }
        if th.mu2_star < mu && th.mu2_dstar.map(|m| mu < m).unwrap_or(false) {
            return RegionLabel::AtLeastTwo;
        }
        if th.mu1_star.map(|m| mu > m).unwrap_or(false)
            && th.mu2_dstar.map(|m| mu < m).unwrap_or(true)
        {
            return RegionLabel::AtLeastOne;
        }
        RegionLabel::Indeterminate
    } else {
        if th.mu8_star.map(|m| mu > m).unwrap_or(false) {
            return RegionLabel::AtLeastEight;
        }
        if th.mu4_star.map(|m| mu > m).unwrap_or(false) {
            return RegionLabel::AtLeastFour;
        }
        if mu > th.mu2_star {
            return RegionLabel::AtLeastTwo;
        }
        if th.mu1_star.map(|m| mu > m).unwrap_or(false) {
            return RegionLabel::AtLeastOne;
        }
        RegionLabel::Indeterminate
    }
}

/// Verified solution counts and region labels over a parameter grid. Rows
/// (fixed lambda) are processed in parallel; each worker owns its curve and
/// caches, and the cells are returned in deterministic row-major order.
pub fn plane_map(lambda_grid: &[f64], mu_grid: &[f64], sigma: f64) -> Result<Vec<PlaneCell>> {
    let rows: Vec<Result<Vec<PlaneCell>>> = lambda_grid
        .par_iter()
        .map(|&lambda| {
            let curve = GammaCurve::new(lambda, sigma)?;
            let th = thresholds_with(&curve)?;
            let mut row = Vec::with_capacity(mu_grid.len());
            for &mu in mu_grid {
                let (count, error) = match find_solutions_with(&curve, mu) {
                    Ok(rep) => (rep.solutions.len(), None),
                    Err(e) => (0, Some(e.to_string())),
                };
                row.push(PlaneCell { lambda, mu, count, label: classify_cell(&th, mu), error });
            }
            Ok(row)
        })
        .collect();
    let mut cells = Vec::with_capacity(lambda_grid.len() * mu_grid.len());
    for row in rows {
        cells.extend(row?);
    }
    Ok(cells)
}

/// The time-reflected solution t -> u(1 - t), again a solution by the
/// symmetry of the weight. The stored residual carries over; re-verification
/// reproduces it within integration accuracy.
pub fn reflect(sol: &Solution) -> Solution {
    let n = sol.profile.t.len();
    let mut t = Vec::with_capacity(n);
    let mut u = Vec::with_capacity(n);
    let mut du = Vec::with_capacity(n);
    for i in (0..n).rev() {
        t.push(1.0 - sol.profile.t[i]);
        u.push(sol.profile.u[i]);
        du.push(-sol.profile.du[i]);
    }
    Solution {
        s_init: sol.s_term,
        s_term: sol.s_init,
        crossing_index: sol.crossing_index,
        residual: sol.residual,
        profile: Profile { t, u, du },
    }
}
