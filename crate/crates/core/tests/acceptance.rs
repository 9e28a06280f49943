//! Acceptance suite: one test per criterion, each printing a pass/fail line
//! (run with `cargo test --test acceptance -- --nocapture` to see the lines
//! for passing criteria as well).

use std::time::Instant;
use timemap_core::appendix;
use timemap_core::asymptotics;
use timemap_core::bifurcation::{self, DiagramClass};
use timemap_core::connection::Connection;
use timemap_core::model::{energy_neg, energy_pos};
use timemap_core::negative;
use timemap_core::positive::{compute_constants, GammaCurve};
use timemap_core::solver::{self, Thresholds};
use timemap_core::{AsymKey, Params};

const SIGMA: f64 = 0.25;

fn lambda_star() -> f64 {
    compute_constants(SIGMA, 1.0).unwrap().lambda_star
}

struct Criterion {
    name: &'static str,
    failures: Vec<String>,
    start: Instant,
}

impl Criterion {
    fn new(name: &'static str) -> Self {
        Self { name, failures: Vec::new(), start: Instant::now() }
    }

    fn check(&mut self, ok: bool, detail: String) {
        if !ok {
            self.failures.push(detail);
        }
    }

    fn finish(self) {
        let elapsed = self.start.elapsed();
        if self.failures.is_empty() {
            println!("acceptance {}: PASS ({elapsed:.1?})", self.name);
        } else {
            println!("acceptance {}: FAIL ({elapsed:.1?})", self.name);
            for f in &self.failures {
                println!("  - {f}");
            }
            panic!("acceptance {} failed: {:?}", self.name, self.failures);
        }
    }
}

/// Criterion 1: on a 3x3 grid of (lambda, mu) spanning the five regions, the
/// time-map solution set equals the dense shooting sign-scan solution set
/// (s_init within 1e-6, residuals < 1e-6). Runtime < 2 min.
#[test]
fn criterion_1_oracle_equivalence() {
    let mut cr = Criterion::new("1 (oracle equivalence on 3x3 grid)");
    let ls = lambda_star();

    // three lambdas and three mus each, spanning: non-existence, >=1, >=2
    // below the threshold; non-existence, >=2, >=4 and >=1, >=4, >=8 above
    let lam_below = 0.6 * ls;
    let th_b = solver::thresholds(lam_below, SIGMA).unwrap();
    let cells_below = [
        0.5 * th_b.mu0_star.unwrap(),
        0.5 * (th_b.mu1_star.unwrap() + th_b.mu2_star),
        (th_b.mu2_star * th_b.mu2_dstar.unwrap()).sqrt(),
    ];
    let lam_mid = 1.2 * ls;
    let th_m = solver::thresholds(lam_mid, SIGMA).unwrap();
    let cells_mid = [
        0.4 * th_m.mu0_star.unwrap(),
        0.5 * (th_m.mu2_star + th_m.mu4_star.unwrap()),
        1.2 * th_m.mu4_star.unwrap(),
    ];
    let lam_above = 2.0 * ls;
    let th_a = solver::thresholds(lam_above, SIGMA).unwrap();
    let cells_above = [
        0.5 * (th_a.mu1_star.unwrap() + th_a.mu2_star),
        1.2 * th_a.mu4_star.unwrap(),
        1.5 * th_a.mu8_star.unwrap(),
    ];

    for (lam, mus) in [(lam_below, cells_below), (lam_mid, cells_mid), (lam_above, cells_above)] {
        for mu in mus {
            let p = Params::new(lam, mu, SIGMA).unwrap();
            let rep = solver::find_solutions(&p).unwrap();
            let oracle = solver::shooting_scan(&p, 2000);
            cr.check(
                rep.solutions.len() == oracle.len(),
                format!(
                    "cell ({lam:.4}, {mu:.4}): time-map count {} vs oracle count {}",
                    rep.solutions.len(),
                    oracle.len()
                ),
            );
            for (sol, &(s_o, res_o)) in rep.solutions.iter().zip(oracle.iter()) {
                cr.check(
                    (sol.s_init - s_o).abs() < 1e-6,
                    format!("cell ({lam:.4}, {mu:.4}): s {} vs oracle {}", sol.s_init, s_o),
                );
                cr.check(
                    sol.residual < 1e-6 && res_o < 1e-6,
                    format!("cell ({lam:.4}, {mu:.4}): residuals {} / {}", sol.residual, res_o),
                );
            }
        }
    }
    cr.check(cr.start.elapsed().as_secs() < 120, format!("runtime {:?}", cr.start.elapsed()));
    cr.finish();
}

/// Criterion 2: exactly eight verified solutions at lambda = 2 lambda*,
/// mu = 1.5 mu8*. Runtime < 30 s.
#[test]
fn criterion_2_eight_solutions() {
    let mut cr = Criterion::new("2 (exactly eight solutions)");
    let lam = 2.0 * lambda_star();
    let th = solver::thresholds(lam, SIGMA).unwrap();
    let mu = 1.5 * th.mu8_star.unwrap();
    let p = Params::new(lam, mu, SIGMA).unwrap();
    let rep = solver::find_solutions(&p).unwrap();
    cr.check(rep.minimal_config, "configuration is not minimal".into());
    cr.check(
        rep.solutions.len() == 8,
        format!("found {} solutions, expected 8", rep.solutions.len()),
    );
    for sol in &rep.solutions {
        cr.check(sol.residual < 1e-6, format!("residual {} at s = {}", sol.residual, sol.s_init));
    }
    cr.check(cr.start.elapsed().as_secs() < 30, format!("runtime {:?}", cr.start.elapsed()));
    cr.finish();
}

fn rel_gap(a: f64, b: f64) -> f64 {
    (b - a) / a.abs().max(b.abs())
}

/// Criterion 3: threshold orderings with strict gaps beyond 1e-6 relative,
/// for lambda in {0.5, 1, 3} lambda*.
#[test]
fn criterion_3_threshold_orderings() {
    let mut cr = Criterion::new("3 (threshold orderings)");
    let ls = lambda_star();
    for f in [0.5, 1.0, 3.0] {
        let lam = f * ls;
        let th: Thresholds = solver::thresholds(lam, SIGMA).unwrap();
        let (m0, m1) = (th.mu0_star.unwrap(), th.mu1_star.unwrap());
        cr.check(m0 <= m1, format!("lambda = {f} l*: mu0* = {m0} > mu1* = {m1}"));
        cr.check(
            rel_gap(m1, th.mu2_star) > 1e-6,
            format!("lambda = {f} l*: mu1* = {m1} not below mu2* = {}", th.mu2_star),
        );
        if lam >= ls {
            let (m4, m8) = (th.mu4_star.unwrap(), th.mu8_star.unwrap());
            cr.check(th.mu2_star <= m4, format!("lambda = {f} l*: mu2* > mu4*"));
            cr.check(m4 <= m8, format!("lambda = {f} l*: mu4* = {m4} > mu8* = {m8}"));
        } else {
            let (m2d, m0d) = (th.mu2_dstar.unwrap(), th.mu0_dstar.unwrap());
            cr.check(
                rel_gap(th.mu2_star, m2d) > 1e-6,
                format!("lambda = {f} l*: mu2* = {} not below mu2** = {m2d}", th.mu2_star),
            );
            cr.check(m2d <= m0d, format!("lambda = {f} l*: mu2** = {m2d} > mu0** = {m0d}"));
        }
    }
    cr.finish();
}

/// Criterion 4: endpoint limits of the first connection time reproduced by
/// extrapolation within 0.5%, and L0 > L1 on 1000 random parameter triples.
#[test]
fn criterion_4_closed_form_limits() {
    let mut cr = Criterion::new("4 (endpoint limits of the first time)");
    for (lam, mu) in [(2.0, 1.0), (1.0, 1.0), (5.0, 3.0)] {
        let curve = GammaCurve::new(lam, SIGMA).unwrap();
        let conn = Connection::new(&curve, mu).unwrap();
        let l0 = 2.0 * lam * SIGMA / mu;
        let l1 = 2.0 / mu.sqrt() * (lam.sqrt() * (lam.sqrt() * SIGMA).tanh() / mu.sqrt()).atan();
        let t_near0 = conn.connect_times(1e-4).unwrap()[0].1;
        let t_near1 = conn.connect_times(1.0 - 1e-4).unwrap()[0].1;
        cr.check(
            (t_near0 / l0 - 1.0).abs() < 5e-3,
            format!("(lambda, mu) = ({lam}, {mu}): T1(1e-4) = {t_near0} vs L0 = {l0}"),
        );
        cr.check(
            (t_near1 / l1 - 1.0).abs() < 5e-3,
            format!("(lambda, mu) = ({lam}, {mu}): T1(1-1e-4) = {t_near1} vs L1 = {l1}"),
        );
    }
    // closed-form order on a random grid
    let mut state = 0x1234_5678_9abc_def0_u64;
    let mut next = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        state as f64 / u64::MAX as f64
    };
    for _ in 0..1000 {
        let lam = 10f64.powf(-2.0 + 4.0 * next());
        let mu = 10f64.powf(-2.0 + 4.0 * next());
        let sg = 0.01 + 0.48 * next();
        let l0 = 2.0 * lam * sg / mu;
        let l1 = 2.0 / mu.sqrt() * (lam.sqrt() * (lam.sqrt() * sg).tanh() / mu.sqrt()).atan();
        cr.check(l0 > l1, format!("L0 <= L1 at ({lam}, {mu}, {sg})"));
    }
    cr.finish();
}

/// Criterion 5: model time-map endpoint limits within 0.2% for five (k, mu)
/// pairs, by Richardson extrapolation over x = 1e-3, 1e-4.
#[test]
fn criterion_5_model_time_limits() {
    let mut cr = Criterion::new("5 (model time-map limits)");
    for (k, mu) in [(2.0, 4.0), (1.0, 1.0), (0.5, 2.0), (3.0, 1.5), (0.2, 5.0)] {
        let t3 = negative::time_parabola(1e-3, k, mu).unwrap();
        let t4 = negative::time_parabola(1e-4, k, mu).unwrap();
        let extrap = t4 + (t4 - t3) / 9.0;
        cr.check(
            (extrap / (k / mu) - 1.0).abs() < 2e-3,
            format!("parabola (k, mu) = ({k}, {mu}): {extrap} vs {}", k / mu),
        );
        let t3 = negative::time_line(1.0 - 1e-3, k, mu).unwrap();
        let t4 = negative::time_line(1.0 - 1e-4, k, mu).unwrap();
        let extrap = t4 + (t4 - t3) / 9.0;
        let closed = (k / mu.sqrt()).atan() / mu.sqrt();
        cr.check(
            (extrap / closed - 1.0).abs() < 2e-3,
            format!("line (k, mu) = ({k}, {mu}): {extrap} vs {closed}"),
        );
    }
    cr.finish();
}

/// Criterion 6: the slope of the first connection time at s = 1e-3 matches
/// the closed form within 2% for three parameter triples.
#[test]
fn criterion_6_slope_formula() {
    let mut cr = Criterion::new("6 (first-time slope at the origin)");
    for (lam, mu, sg) in [(1.0, 1.0, 0.25), (1.0, 2.0, 0.25), (2.0, 1.0, 0.1)] {
        let p = Params::new(lam, mu, sg).unwrap();
        let (numeric, closed) = appendix::slope_check(&p, 1e-3, 1e-4).unwrap();
        cr.check(
            (numeric / closed - 1.0).abs() < 2e-2,
            format!("({lam}, {mu}, {sg}): numeric {numeric} vs closed {closed}"),
        );
    }
    cr.finish();
}

/// Criterion 7: along mu = 2 K4 lambda, the tangent-level limits approach
/// the two limiting connection times monotonically from lambda = 1e3 to
/// 1e4, with relative error < 2% at 1e4; the K- and sigma-thresholds are
/// ordered.
#[test]
fn criterion_7_asymptotic_convergence() {
    let mut cr = Criterion::new("7 (large-lambda convergence)");
    let (k4, k8) = asymptotics::k4_k8(SIGMA).unwrap();
    cr.check(k4 < k8, format!("K4 = {k4} not below K8 = {k8}"));
    let (s4, s8) = asymptotics::sigma4_sigma8(1.0).unwrap();
    cr.check(s8 < s4, format!("sigma8 = {s8} not below sigma4 = {s4}"));

    let k = 2.0 * k4;
    let c = asymptotics::landmarks(&AsymKey::new(k, SIGMA).unwrap()).unwrap();
    let mut errs = Vec::new();
    for lam in [1e3, 1e4] {
        let curve = GammaCurve::new(lam, SIGMA).unwrap();
        let conn = Connection::new(&curve, k * lam).unwrap();
        let lim = conn.limits().unwrap();
        errs.push((
            (lim.l12_0.unwrap() / c.theta1 - 1.0).abs(),
            (lim.l3_0.unwrap() / c.theta2 - 1.0).abs(),
        ));
    }
    cr.check(
        errs[1].0 < errs[0].0,
        format!("l12_0 error not decreasing: {:.4e} -> {:.4e}", errs[0].0, errs[1].0),
    );
    cr.check(
        errs[1].1 < errs[0].1,
        format!("l3_0 error not decreasing: {:.4e} -> {:.4e}", errs[0].1, errs[1].1),
    );
    cr.check(
        errs[1].0 < 2e-2,
        format!("l12_0 relative error {:.4}% at lambda = 1e4", errs[1].0 * 100.0),
    );
    // The finite-lambda deficit of the third-time limit decays like
    // lambda^(-1/2) and sits at 2.20% at lambda = 1e4, confirmed against an
    // independent high-precision pipeline. The 2% bound is asserted as
    // stated and is expected red; see the repository notes.
    cr.check(
        errs[1].1 < 2e-2,
        format!("l3_0 relative error {:.4}% at lambda = 1e4 (bound 2%)", errs[1].1 * 100.0),
    );
    cr.finish();
}

/// Criterion 8: the polynomial sign certificates hold on 1e4 random samples
/// with strict margins, and the model time maps are monotone on 100-point
/// grids for three (k, mu) pairs.
#[test]
fn criterion_8_lemma_certification() {
    let mut cr = Criterion::new("8 (polynomial sign certificates)");
    let rep = appendix::certify_parabola_lemma(10_000);
    cr.check(rep.passed(), format!("parabola lemma violations: {}", rep.violations));
    cr.check(
        rep.worst_a < 0.0 && rep.worst_c < 0.0 && rep.worst_quadratic < 0.0,
        format!("parabola margins not strict: {rep:?}"),
    );
    let rep = appendix::certify_line_lemma(10_000);
    cr.check(rep.passed(), format!("line lemma violations: {}", rep.violations));
    cr.check(
        rep.worst_a < 0.0 && rep.worst_b_or_disc < 0.0 && rep.worst_c < 0.0
            && rep.worst_quadratic < 0.0,
        format!("line margins not strict: {rep:?}"),
    );

    for (k, mu) in [(1.0, 1.0), (3.0, 0.5), (0.2, 5.0)] {
        let xp = negative::parabola_manifold_abscissa(k, mu);
        let mut prev = 0.0;
        let mut mono = true;
        for i in 1..=100 {
            let x = xp * i as f64 / 101.0;
            let t = negative::time_parabola(x, k, mu).unwrap();
            mono &= t > prev;
            prev = t;
        }
        cr.check(mono, format!("parabola time not increasing for (k, mu) = ({k}, {mu})"));
        let xl = negative::line_manifold_abscissa(k, mu).unwrap();
        let mut prev = f64::INFINITY;
        let mut mono = true;
        for i in 1..=100 {
            let x = xl + (1.0 - xl) * i as f64 / 101.0;
            let t = negative::time_line(x, k, mu).unwrap();
            mono &= t < prev;
            prev = t;
        }
        cr.check(mono, format!("line time not decreasing for (k, mu) = ({k}, {mu})"));
    }
    cr.finish();
}

/// Criterion 9: solution profiles conserve the outer and middle energies to
/// 1e-8 relative, and the solution set is closed under time reflection with
/// pairing within 1e-6.
#[test]
fn criterion_9_energy_and_reflection() {
    let mut cr = Criterion::new("9 (energy conservation and reflection closure)");
    let lam = 2.0 * lambda_star();
    let th = solver::thresholds(lam, SIGMA).unwrap();
    let mu = 1.5 * th.mu8_star.unwrap();
    let p = Params::new(lam, mu, SIGMA).unwrap();
    let rep = solver::find_solutions(&p).unwrap();
    cr.check(!rep.solutions.is_empty(), "no solutions found".into());
    for sol in &rep.solutions {
        let prof = &sol.profile;
        let mut scale: f64 = 0.0;
        let (mut first_pieces, mut worst) = ([None::<f64>; 3], 0.0_f64);
        for i in 0..prof.t.len() {
            let (t, u, v) = (prof.t[i], prof.u[i], prof.du[i]);
            let point = timemap_core::PhasePoint::new(u, v).unwrap();
            let hp = energy_pos(point, p.lambda);
            let hm = energy_neg(point, p.mu);
            scale = scale.max(hp.abs()).max(hm.abs());
            let (piece, e) = if t < p.sigma - 1e-9 {
                (0, hp)
            } else if t < 1.0 - p.sigma - 1e-9 {
                if t > p.sigma + 1e-9 {
                    (1, hm)
                } else {
                    continue;
                }
            } else if t > 1.0 - p.sigma + 1e-9 {
                (2, hp)
            } else {
                continue;
            };
            match first_pieces[piece] {
                None => first_pieces[piece] = Some(e),
                Some(e0) => worst = worst.max((e - e0).abs() / scale),
            }
        }
        cr.check(
            worst < 1e-8,
            format!("energy drift {worst:.3e} on the profile starting at {}", sol.s_init),
        );
        let r = solver::reflect(sol);
        cr.check(
            rep.solutions.iter().any(|o| (o.s_init - r.s_init).abs() < 1e-6),
            format!("no reflection partner for s = {}", sol.s_init),
        );
    }
    cr.finish();
}

/// Criterion 10: diagram topology by lambda, and exact agreement between
/// branch crossing counts and the enumeration counts at sampled mu.
#[test]
fn criterion_10_diagram_topology() {
    let mut cr = Criterion::new("10 (diagram topology and crossing counts)");
    let ls = lambda_star();
    for f in [1.0, 1.5] {
        let cls = bifurcation::classify_diagram(f * ls, SIGMA).unwrap();
        cr.check(
            cls == DiagramClass::UnboundedEight,
            format!("lambda = {f} l*: {cls:?} instead of UnboundedEight"),
        );
    }
    let cls = bifurcation::classify_diagram(0.5 * ls, SIGMA).unwrap();
    cr.check(
        matches!(cls, DiagramClass::BoundedArc | DiagramClass::BoundedArcWithLoop),
        format!("lambda = 0.5 l*: {cls:?} is not a bounded-arc class"),
    );

    let lam = 2.0 * ls;
    let curve = GammaCurve::new(lam, SIGMA).unwrap();
    let result = bifurcation::trace(lam, SIGMA, 5000.0).unwrap();
    let th = result.thresholds;
    let probes = [
        0.5 * (th.mu1_star.unwrap() + th.mu2_star),
        0.5 * (th.mu2_star + th.mu4_star.unwrap()),
        0.5 * (th.mu4_star.unwrap() + th.mu8_star.unwrap()),
        1.5 * th.mu8_star.unwrap(),
    ];
    for mu in probes {
        let counted = bifurcation::crossings_at(&result, mu);
        let found = solver::find_solutions_with(&curve, mu).unwrap().solutions.len();
        cr.check(counted == found, format!("mu = {mu}: {counted} crossings vs {found} solutions"));
    }
    cr.finish();
}
