use cgflow::cp2;
use cgflow::flows::{conformal_rhs, integrate, Initial, IntegratorConfig};
use cgflow::killing::{killing_cg_criterion, KillingField};
use cgflow::geometry::MetricModel;
use cgflow_bench::fixtures;
use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use std::hint::black_box;

fn rhs(c: &mut Criterion) {
    let mut g = c.benchmark_group("conformal_rhs");
    for (name, model, st) in fixtures() {
        g.bench_function(name, |b| b.iter(|| conformal_rhs(&model, black_box(&st)).unwrap()));
    }
    g.finish();
}

fn span(c: &mut Criterion) {
    let mut g = c.benchmark_group("integrate_span_10");
    g.sample_size(20);
    let cfg = IntegratorConfig { rel_tol: 1e-10, abs_tol: 1e-12, samples: 11, ..Default::default() };
    for (name, model, st) in fixtures() {
        let init = Initial::Conformal(st);
        g.bench_with_input(BenchmarkId::from_parameter(name), &init, |b, init| {
            b.iter(|| integrate(&model, init, (0.0, 10.0), &cfg).unwrap())
        });
    }
    g.finish();
}

fn killing(c: &mut Criterion) {
    let psi = KillingField::coordinate("psi", 3);
    let q = [1.1, 0.9, 0.3, 0.2];
    c.bench_function("killing_criterion_cp2", |b| {
        b.iter(|| killing_cg_criterion(&MetricModel::Cp2, &psi, black_box(&q)).unwrap())
    });
}

fn classify(c: &mut Criterion) {
    c.bench_function("cp2_roots_from_tau_a", |b| b.iter(|| cp2::roots_from_tau_a(black_box(0.3), black_box(2.0)).unwrap()));
}

criterion_group!(benches, rhs, span, killing, classify);
criterion_main!(benches);
