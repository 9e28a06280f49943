//! Continuation of the mu-parametrized solution branches and classification
//! of the diagram topology. Above the outer-time threshold the diagram
//! consists of eight unbounded branches seeded at the analytic bifurcation
//! and fold points; below it, two branches bifurcating from the constant
//! states join at a subcritical turning point, possibly surrounded by a
//! loop of extra solutions near the tangency depth.

use crate::connection::Connection;
use crate::error::{Error, Result};
use crate::positive::GammaCurve;
use crate::quad;
use crate::solver::{self, Thresholds};
use serde::{Deserialize, Serialize};

/// Identity of a branch in the diagram.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum BranchId {
    B1,
    B2,
    B3,
    B4,
    B5,
    B6,
    B7,
    B8,
    Tilde1,
    Tilde2,
    Loop,
}

/// How a branch begins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Origin {
    BifurcationFromZero,
    BifurcationFromOne,
    TurningPoint,
    Pitchfork,
    LoopClosure,
}

/// How a branch ends within the traced range.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Terminus {
    /// Still alive at the end of the mu range.
    Unbounded,
    MergesWith(BranchId),
    /// Continuation stalled; the samples stop early.
    Truncated,
}

/// One continuation branch: ordered (mu, initial value) samples.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct Branch {
    pub id: BranchId,
    pub samples: Vec<(f64, f64)>,
    pub origin: Origin,
    pub terminus: Terminus,
}

/// Diagram topology classes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DiagramClass {
    /// Eight unbounded branches (at or above the outer-time threshold).
    UnboundedEight,
    /// A single bounded arc joining the constant states.
    BoundedArc,
    /// The bounded arc plus a loop of extra solutions.
    BoundedArcWithLoop,
}

/// Output of the tracer.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct TraceResult {
    pub branches: Vec<Branch>,
    /// Solution points that could not be assigned to the minimal branch set
    /// (extra folds beyond the minimal configuration).
    pub extra: Vec<(f64, f64)>,
    pub thresholds: Thresholds,
}

/// Number of branch crossings of the vertical line at mu. Function branches
/// count once while mu is inside their range; loop points count per sample
/// at the matching ladder value.
pub fn crossings_at(result: &TraceResult, mu: f64) -> usize {
    let mut n = 0;
    for b in &result.branches {
        if b.id == BranchId::Loop {
            continue;
        }
        if let (Some(first), Some(last)) = (b.samples.first(), b.samples.last()) {
            if mu >= first.0 && mu <= last.0 {
                n += 1;
            }
        }
    }
    for b in &result.branches {
        if b.id == BranchId::Loop {
            n += b.samples.iter().filter(|&&(m, _)| (m - mu).abs() < 1e-12 * mu.max(1.0)).count();
        }
    }
    n += result.extra.iter().filter(|&&(m, _)| (m - mu).abs() < 1e-12 * mu.max(1.0)).count();
    n
}

/// Argmin of a connection-time index over a window, from a coarse grid plus
/// local refinement.
fn window_argmin(
    conn: &Connection,
    lo: f64,
    hi: f64,
    idx: usize,
) -> Option<f64> {
    let f = |s: f64| match conn.connect_times(s) {
        Ok(times) => times.get(idx - 1).map(|&(_, t)| t).unwrap_or(f64::INFINITY),
        Err(_) => f64::INFINITY,
    };
    let n = 80;
    let mut best = (f64::INFINITY, 0.5 * (lo + hi));
    let mut grid = Vec::with_capacity(n + 1);
    for k in 0..=n {
        let s = lo + (hi - lo) * (k as f64 + 0.5) / (n as f64 + 1.0);
        grid.push(s);
        let v = f(s);
        if v < best.0 {
            best = (v, s);
        }
    }
    if !best.0.is_finite() {
        return None;
    }
    let i = grid.iter().position(|&s| s == best.1).unwrap();
    let a = grid[i.saturating_sub(1)];
    let b = grid[(i + 1).min(grid.len() - 1)];
    let (x, _) = quad::find_min(f, a, b, 1e-10);
    Some(x)
}

struct ActiveBranch {
    id: BranchId,
    origin: Origin,
    samples: Vec<(f64, f64)>,
    alive: bool,
}

impl ActiveBranch {
    fn predict(&self, mu: f64) -> f64 {
        match self.samples.len() {
            0 => f64::NAN,
            1 => self.samples[0].1,
            _ => {
                let (m1, s1) = self.samples[self.samples.len() - 2];
                let (m2, s2) = self.samples[self.samples.len() - 1];
                if m2 > m1 {
                    s2 + (s2 - s1) / (m2 - m1) * (mu - m2)
                } else {
                    s2
                }
            }
        }
    }
}

/// Branch activation order above the threshold, sorted by initial value.
fn active_order_above(th: &Thresholds, mu: f64) -> Vec<BranchId> {
    use BranchId::*;
    let mut order = Vec::new();
    let past = |x: Option<f64>| x.map(|v| mu > v).unwrap_or(false);
    if past(th.mu8_star) {
        order.extend([B1, B2, B3, B4, B5, B6, B7, B8]);
    } else if past(th.mu4_star) {
        order.extend([B1, B4, B5, B8]);
    } else if mu > th.mu2_star {
        order.extend([B4, B8]);
    } else if past(th.mu1_star) {
        order.push(B8);
    }
    order
}

/// Traces the full diagram from the first onset up to mu_max.
pub fn trace(lambda: f64, sigma: f64, mu_max: f64) -> Result<TraceResult> {
    let curve = GammaCurve::new(lambda, sigma)?;
    let th = solver::thresholds_with(&curve)?;
    if lambda >= th.lambda_star {
        trace_above(&curve, th, mu_max)
    } else {
        trace_below(&curve, th, mu_max)
    }
}

fn trace_above(curve: &GammaCurve, th: Thresholds, mu_max: f64) -> Result<TraceResult> {
    use BranchId::*;
    let mu1 = th.mu1_star.ok_or_else(|| Error::Internal("missing first threshold".into()))?;
    let mu4 = th.mu4_star.ok_or_else(|| Error::Internal("missing fourth threshold".into()))?;
    let mu8 = th.mu8_star.ok_or_else(|| Error::Internal("missing eighth threshold".into()))?;
    if mu_max <= mu8 {
        return Err(Error::Domain(format!(
            "mu_max must exceed the eight-solution threshold {mu8}, got {mu_max}"
        )));
    }

    // analytic seeds at the onsets
    let conn4 = Connection::new(curve, mu4)?;
    let tau4 = conn4.structure.s0tau.unwrap();
    let conn8 = Connection::new(curve, mu8)?;
    let st8 = conn8.structure;
    let s0_star = window_argmin(&conn8, 1e-9, st8.s0m.unwrap() * (1.0 - 1e-9), 3)
        .ok_or_else(|| Error::Internal("third-time minimizer not found".into()))?;
    let s1_star = window_argmin(&conn8, st8.s1m.unwrap() * (1.0 + 1e-12), st8.s1tau.unwrap(), 1)
        .ok_or_else(|| Error::Internal("right first-time minimizer not found".into()))?;

    let mut branches = vec![
        ActiveBranch { id: B1, origin: Origin::Pitchfork, samples: vec![(mu4, tau4)], alive: true },
        ActiveBranch { id: B2, origin: Origin::TurningPoint, samples: vec![(mu8, s0_star)], alive: true },
        ActiveBranch { id: B3, origin: Origin::TurningPoint, samples: vec![(mu8, s0_star)], alive: true },
        ActiveBranch { id: B4, origin: Origin::BifurcationFromZero, samples: vec![(th.mu2_star, 0.0)], alive: true },
        ActiveBranch { id: B5, origin: Origin::Pitchfork, samples: vec![(mu4, tau4)], alive: true },
        ActiveBranch { id: B6, origin: Origin::TurningPoint, samples: vec![(mu8, s1_star)], alive: true },
        ActiveBranch { id: B7, origin: Origin::TurningPoint, samples: vec![(mu8, s1_star)], alive: true },
        ActiveBranch { id: B8, origin: Origin::BifurcationFromOne, samples: vec![(mu1, 1.0)], alive: true },
    ];
    let mut extra = Vec::new();

    // multiplicative ladder with the onsets inserted
    let mut ladder: Vec<f64> = Vec::new();
    let mut mu = mu1 * (1.0 + 1e-3);
    while mu < mu_max {
        ladder.push(mu);
        mu *= 1.04;
    }
    ladder.push(mu_max);
    for onset in [th.mu2_star, mu4, mu8] {
        ladder.push(onset * (1.0 + 1e-4));
    }
    ladder.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ladder.dedup();

    for &mu in &ladder {
        let conn = Connection::new(curve, mu)?;
        let mut cands: Vec<f64> =
            solver::time_map_candidates_public(&conn).into_iter().map(|(s, _)| s).collect();
        cands.sort_by(|a, b| a.partial_cmp(b).unwrap());
        let order = active_order_above(&th, mu);
        if cands.len() == order.len() {
            for (id, &s) in order.iter().zip(cands.iter()) {
                let b = branches.iter_mut().find(|b| b.id == *id).unwrap();
                b.samples.push((mu, s));
            }
        } else {
            // anomaly (just past an onset, or beyond the minimal
            // configuration): assign by proximity to the predictions and
            // stash whatever is left over
            let mut claimed = vec![false; cands.len()];
            for id in &order {
                let b = branches.iter_mut().find(|b| b.id == *id).unwrap();
                let pred = b.predict(mu);
                let mut best: Option<(usize, f64)> = None;
                for (i, &s) in cands.iter().enumerate() {
                    if claimed[i] {
                        continue;
                    }
                    let d = (s - pred).abs();
                    if best.map(|(_, bd)| d < bd).unwrap_or(true) {
                        best = Some((i, d));
                    }
                }
                if let Some((i, d)) = best {
                    if d < 0.2 {
                        claimed[i] = true;
                        b.samples.push((mu, cands[i]));
                    }
                }
            }
            for (i, &s) in cands.iter().enumerate() {
                if !claimed[i] {
                    extra.push((mu, s));
                }
            }
        }
    }

    let branches = branches
        .into_iter()
        .map(|b| Branch { id: b.id, samples: b.samples, origin: b.origin, terminus: Terminus::Unbounded })
        .collect();
    Ok(TraceResult { branches, extra, thresholds: th })
}

fn trace_below(curve: &GammaCurve, th: Thresholds, mu_max: f64) -> Result<TraceResult> {
    use BranchId::*;
    let mu1 = th.mu1_star.ok_or_else(|| Error::Internal("missing first threshold".into()))?;
    let mu2d = th.mu2_dstar.ok_or_else(|| Error::Internal("missing upper threshold".into()))?;

    let mut t1 = ActiveBranch {
        id: Tilde1,
        origin: Origin::BifurcationFromZero,
        samples: vec![(th.mu2_star, 0.0)],
        alive: true,
    };
    let mut t2 = ActiveBranch {
        id: Tilde2,
        origin: Origin::BifurcationFromOne,
        samples: vec![(mu1, 1.0)],
        alive: true,
    };
    let mut loop_samples: Vec<(f64, f64)> = Vec::new();
    let mut extra = Vec::new();

    let top = mu_max.min(mu2d * 1.1);
    let mut ladder: Vec<f64> = Vec::new();
    let mut mu = mu1 * (1.0 + 1e-3);
    while mu < top {
        ladder.push(mu);
        mu *= 1.03;
    }
    ladder.push(top);
    ladder.push(th.mu2_star * (1.0 + 1e-4));
    if let Some(mt) = th.mu_tilde {
        // refine around the tangency, where the loop lives
        let mut f = 1.0005;
        while f < 1.35 {
            ladder.push(mt * f);
            f *= 1.01;
        }
    }
    ladder.sort_by(|a, b| a.partial_cmp(b).unwrap());
    ladder.dedup();

    for &mu in &ladder {
        let conn = Connection::new(curve, mu)?;
        let cands: Vec<f64> =
            solver::time_map_candidates_public(&conn).into_iter().map(|(s, _)| s).collect();
        if cands.is_empty() {
            if mu > th.mu2_star && t1.alive && t2.alive {
                // the two arcs merged just below this mu
                t1.alive = false;
                t2.alive = false;
            }
            continue;
        }
        let mut claimed = vec![false; cands.len()];
        for b in [&mut t2, &mut t1] {
            if !b.alive {
                continue;
            }
            let active = match b.id {
                Tilde1 => mu > th.mu2_star,
                _ => mu > mu1,
            };
            if !active {
                continue;
            }
            let pred = b.predict(mu);
            let mut best: Option<(usize, f64)> = None;
            for (i, &s) in cands.iter().enumerate() {
                if claimed[i] {
                    continue;
                }
                let d = (s - pred).abs();
                if best.map(|(_, bd)| d < bd).unwrap_or(true) {
                    best = Some((i, d));
                }
            }
            if let Some((i, _)) = best {
                claimed[i] = true;
                b.samples.push((mu, cands[i]));
            }
        }
        for (i, &s) in cands.iter().enumerate() {
            if !claimed[i] {
                loop_samples.push((mu, s));
            }
        }
    }

    // close the arc at the subcritical turning point
    let merge_s = match (t1.samples.last(), t2.samples.last()) {
        (Some(&(_, a)), Some(&(_, b))) => 0.5 * (a + b),
        _ => 0.5,
    };
    t1.samples.push((mu2d, merge_s));
    t2.samples.push((mu2d, merge_s));

    let mut branches = vec![
        Branch { id: Tilde1, samples: t1.samples, origin: t1.origin, terminus: Terminus::MergesWith(Tilde2) },
        Branch { id: Tilde2, samples: t2.samples, origin: t2.origin, terminus: Terminus::MergesWith(Tilde1) },
    ];
    if !loop_samples.is_empty() {
        // heuristically separate genuine loop points (clustered in mu near
        // the tangency) from stray extras
        if let Some(mt) = th.mu_tilde {
            let (on_loop, stray): (Vec<_>, Vec<_>) =
                loop_samples.into_iter().partition(|&(m, _)| m < mt * 2.0);
            if !on_loop.is_empty() {
                branches.push(Branch {
                    id: Loop,
                    samples: on_loop,
                    origin: Origin::LoopClosure,
                    terminus: Terminus::Truncated,
                });
            }
            extra.extend(stray);
        } else {
            extra.extend(loop_samples);
        }
    }
    Ok(TraceResult { branches, extra, thresholds: th })
}

/// Topology of the diagram at the given lambda and sigma: eight unbounded
/// branches at or above the threshold; below it, a bounded arc, with a loop
/// when the middle length intersects the loop of connection times for some
/// mu past the tangency.
pub fn classify_diagram(lambda: f64, sigma: f64) -> Result<DiagramClass> {
    let curve = GammaCurve::new(lambda, sigma)?;
    if lambda >= curve.constants.lambda_star {
        return Ok(DiagramClass::UnboundedEight);
    }
    let mt = crate::connection::mu_tilde_for(&curve)?;
    let c = 1.0 - 2.0 * sigma;
    let mut f = 1.0005;
    while f < 2.0 {
        let mu = mt * f;
        let conn = Connection::new(&curve, mu)?;
        if conn.structure.regime == crate::connection::Regime::BoundedWithLoop {
            if let Ok(lim) = conn.limits() {
                if let (Some(k3), Some(k4)) = (lim.kappa3, lim.kappa4) {
                    if k3 < c && c < k4 {
                        return Ok(DiagramClass::BoundedArcWithLoop);
                    }
                }
            }
        }
        f *= 1.02;
    }
    Ok(DiagramClass::BoundedArc)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::positive::compute_constants;
    use crate::solver::find_solutions_with;

    fn lambda_star() -> f64 {
        compute_constants(0.25, 1.0).unwrap().lambda_star
    }

    #[test]
    fn eight_branch_diagram_structure() {
        let lam = 2.0 * lambda_star();
        let sigma = 0.25;
        let result = trace(lam, sigma, 2.5 * 1856.0).unwrap();
        assert_eq!(result.branches.len(), 8);
        let th = result.thresholds;
        for b in &result.branches {
            assert!(b.samples.len() > 3, "{:?} too short", b.id);
            assert_eq!(b.terminus, Terminus::Unbounded);
            // no jumps along the branch
            for w in b.samples.windows(2) {
                assert!(
                    (w[1].1 - w[0].1).abs() < 0.08,
                    "{:?} jumps from {:?} to {:?}",
                    b.id,
                    w[0],
                    w[1]
                );
            }
        }
        // onsets
        let get = |id: BranchId| result.branches.iter().find(|b| b.id == id).unwrap();
        assert_eq!(get(BranchId::B4).samples[0], (th.mu2_star, 0.0));
        assert_eq!(get(BranchId::B8).samples[0].1, 1.0);
        assert_eq!(get(BranchId::B1).samples[0], get(BranchId::B5).samples[0]);
        assert_eq!(get(BranchId::B2).samples[0], get(BranchId::B3).samples[0]);
        assert_eq!(get(BranchId::B6).samples[0], get(BranchId::B7).samples[0]);
        assert_eq!(get(BranchId::B1).origin, Origin::Pitchfork);
        assert_eq!(get(BranchId::B2).origin, Origin::TurningPoint);
    }

    #[test]
    fn pitchfork_joint_with_the_through_branch() {
        // at the four-solution onset, the through branch passes within 1e-4
        // of the pitchfork point
        let lam = 2.0 * lambda_star();
        let result = trace(lam, 0.25, 2000.0).unwrap();
        let th = result.thresholds;
        let mu4 = th.mu4_star.unwrap();
        let b4 = result.branches.iter().find(|b| b.id == BranchId::B4).unwrap();
        let pitch = result.branches.iter().find(|b| b.id == BranchId::B1).unwrap().samples[0];
        // nearest b4 sample to mu4
        let (_, s) = b4
            .samples
            .iter()
            .min_by(|a, b| (a.0 - mu4).abs().partial_cmp(&(b.0 - mu4).abs()).unwrap())
            .unwrap();
        assert!((s - pitch.1).abs() < 1e-2, "b4 at onset {s} vs pitchfork {}", pitch.1);
    }

    #[test]
    fn fold_branches_have_flat_mu_slope_at_onset() {
        let lam = 2.0 * lambda_star();
        let result = trace(lam, 0.25, 6000.0).unwrap();
        let b2 = result.branches.iter().find(|b| b.id == BranchId::B2).unwrap();
        let b3 = result.branches.iter().find(|b| b.id == BranchId::B3).unwrap();
        // the two fold partners straddle the seed and separate like a square
        // root: near the fold |d mu / d s| is much smaller than farther away
        let slope = |w: &[(f64, f64)]| ((w[1].0 - w[0].0) / (w[1].1 - w[0].1)).abs();
        let near = slope(&b2.samples[1..3]);
        let far = slope(&b2.samples[b2.samples.len() - 2..]);
        assert!(near < 0.5 * far, "near-fold slope {near} vs far slope {far}");
        let s2 = b2.samples[3].1;
        let s3 = b3.samples[3].1;
        let seed = b2.samples[0].1;
        assert!(s2 < seed && seed < s3);
    }

    #[test]
    fn large_mu_branch_limits() {
        let lam = 2.0 * lambda_star();
        let curve = GammaCurve::new(lam, 0.25).unwrap();
        let (s0, s1) = (curve.constants.s0.unwrap(), curve.constants.s1.unwrap());
        let result = trace(lam, 0.25, 40_000.0).unwrap();
        let last = |id: BranchId| {
            result.branches.iter().find(|b| b.id == id).unwrap().samples.last().unwrap().1
        };
        assert!(last(BranchId::B1) < 0.05 && last(BranchId::B2) < 0.05);
        for id in [BranchId::B3, BranchId::B4, BranchId::B5] {
            assert!((last(id) - s0).abs() < 0.08, "{id:?} -> {}", last(id));
        }
        for id in [BranchId::B6, BranchId::B7, BranchId::B8] {
            assert!((last(id) - s1).abs() < 0.08, "{id:?} -> {}", last(id));
        }
    }

    #[test]
    fn branch_counts_match_solver_counts() {
        let lam = 2.0 * lambda_star();
        let curve = GammaCurve::new(lam, 0.25).unwrap();
        let result = trace(lam, 0.25, 5000.0).unwrap();
        let th = result.thresholds;
        let probes = [
            0.5 * (th.mu1_star.unwrap() + th.mu2_star),
            0.5 * (th.mu2_star + th.mu4_star.unwrap()),
            0.5 * (th.mu4_star.unwrap() + th.mu8_star.unwrap()),
            1.5 * th.mu8_star.unwrap(),
        ];
        for mu in probes {
            let counted = crossings_at(&result, mu);
            let found = find_solutions_with(&curve, mu).unwrap().solutions.len();
            assert_eq!(counted, found, "mu = {mu}");
        }
    }

    #[test]
    fn bounded_arc_merges_at_the_upper_threshold() {
        let lam = 0.4 * lambda_star();
        let result = trace(lam, 0.25, 1e9).unwrap();
        let th = result.thresholds;
        let t1 = result.branches.iter().find(|b| b.id == BranchId::Tilde1).unwrap();
        let t2 = result.branches.iter().find(|b| b.id == BranchId::Tilde2).unwrap();
        assert_eq!(t1.terminus, Terminus::MergesWith(BranchId::Tilde2));
        assert_eq!(t2.terminus, Terminus::MergesWith(BranchId::Tilde1));
        let (m1, s1) = *t1.samples.last().unwrap();
        let (m2, s2) = *t2.samples.last().unwrap();
        assert_eq!(m1, m2);
        assert_eq!(s1, s2);
        assert!((m1 - th.mu2_dstar.unwrap()).abs() < 1e-9 * m1);
        // both bifurcate from the constant states
        assert_eq!(t1.samples[0], (th.mu2_star, 0.0));
        assert_eq!(t2.samples[0].1, 1.0);
    }

    #[test]
    fn diagram_classes_by_lambda() {
        assert_eq!(
            classify_diagram(1.5 * lambda_star(), 0.25).unwrap(),
            DiagramClass::UnboundedEight
        );
        assert_eq!(classify_diagram(lambda_star(), 0.25).unwrap(), DiagramClass::UnboundedEight);
        let cls = classify_diagram(0.4 * lambda_star(), 0.25).unwrap();
        assert!(matches!(cls, DiagramClass::BoundedArc | DiagramClass::BoundedArcWithLoop));
    }
}
