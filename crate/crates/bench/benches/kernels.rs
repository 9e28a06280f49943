//! Benchmarks for the numerical kernels on the paths that dominate the
//! solver: the singular time integrals, transported-point inversion,
//! connection times, and the full enumeration at one parameter point.

use criterion::{black_box, criterion_group, criterion_main, Criterion};
use timemap_core::connection::Connection;
use timemap_core::negative;
use timemap_core::positive::{self, GammaCurve};
use timemap_core::solver;
use timemap_core::Params;

fn lambda_star() -> f64 {
    positive::compute_constants(0.25, 1.0).unwrap().lambda_star
}

fn bench_scaled_integral(c: &mut Criterion) {
    c.bench_function("scaled_time_integral(0.5)", |b| {
        b.iter(|| positive::scaled_time_integral(black_box(0.5)).unwrap())
    });
    c.bench_function("scaled_time_integral(1 - 1e-9)", |b| {
        b.iter(|| positive::scaled_time_integral_c(black_box(1e-9)).unwrap())
    });
}

fn bench_half_time(c: &mut Criterion) {
    c.bench_function("time_half(0.5, -0.05, 2)", |b| {
        b.iter(|| negative::time_half(black_box(0.5), black_box(-0.05), black_box(2.0)).unwrap())
    });
}

fn bench_curve_point(c: &mut Criterion) {
    let lam = 2.0 * lambda_star();
    let curve = GammaCurve::new(lam, 0.25).unwrap();
    let mut k = 0u64;
    c.bench_function("transported point (fresh)", |b| {
        b.iter(|| {
            // vary the parameter so the memo never hits
            k += 1;
            let s = 0.001 + 0.15 * ((k % 4096) as f64 / 4096.0);
            curve.point(black_box(s)).unwrap()
        })
    });
}

fn bench_connect_times(c: &mut Criterion) {
    let lam = 2.0 * lambda_star();
    let curve = GammaCurve::new(lam, 0.25).unwrap();
    let conn = Connection::new(&curve, 900.0).unwrap();
    let tau = conn.structure.s0tau.unwrap();
    let mut k = 0u64;
    c.bench_function("connect_times (three crossings)", |b| {
        b.iter(|| {
            k += 1;
            let s = tau * (0.2 + 0.6 * ((k % 4096) as f64 / 4096.0));
            conn.connect_times(black_box(s)).unwrap()
        })
    });
}

fn bench_find_solutions(c: &mut Criterion) {
    let lam = 2.0 * lambda_star();
    let p = Params::new(lam, 700.0, 0.25).unwrap();
    let mut group = c.benchmark_group("enumeration");
    group.sample_size(10);
    group.bench_function("find_solutions (four-solution cell)", |b| {
        b.iter(|| solver::find_solutions(black_box(&p)).unwrap())
    });
    group.finish();
}

criterion_group!(
    benches,
    bench_scaled_integral,
    bench_half_time,
    bench_curve_point,
    bench_connect_times,
    bench_find_solutions
);
criterion_main!(benches);
