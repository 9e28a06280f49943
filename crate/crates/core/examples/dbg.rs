use timemap_core::solver::*;
use timemap_core::model::Params;

fn main() {
    let (lam, mu) = (329.2193828248509_f64, 2784.3734766320894_f64);
    let p = Params::new(lam, mu, 0.25).unwrap();
    let rep = find_solutions(&p).unwrap();
    println!("time-map: {:?}", rep.solutions.iter().map(|s| s.s_init).collect::<Vec<_>>());
    let oracle = shooting_scan(&p, 2000);
    println!("oracle:   {:?}", oracle.iter().map(|x| x.0).collect::<Vec<_>>());
    // inspect u'(1) near the right cluster with fine sampling
    let eval = |s: f64, dt: f64| match shoot_bounded(s, &p, dt, 4, 9.5) {
        Shot::Completed { final_slope, .. } => final_slope,
        Shot::Escaped { u, .. } => 1e6_f64.copysign(u - 0.5),
    };
    for k in 0..=25 {
        let s = 0.97380 + 0.00008 * k as f64 / 25.0;
        println!("f({s:.8}) = {:+.5e}   (dt=1e-4: {:+.5e})", eval(s, 1e-3), eval(s, 1e-4));
    }
}
