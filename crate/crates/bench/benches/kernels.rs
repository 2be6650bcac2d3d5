use criterion::{black_box, criterion_group, criterion_main, Criterion};
use specshare::channel::evaluate_sample;
use specshare::geometry::sample_network_covered;
use specshare::rate_analysis::expected_rate;
use specshare::subsolver::solve_subproblem;
use specshare::Mno;
use specshare_bench::{desk_point, subproblem};

fn sampling(c: &mut Criterion) {
    let (cfg, a, p) = desk_point(2, 2, 2);
    let mut seed = 0u64;
    c.bench_function("sample_network 2x2x2", |b| {
        b.iter(|| {
            seed += 1;
            sample_network_covered(&cfg, black_box(seed)).unwrap()
        })
    });
    let xi = sample_network_covered(&cfg, 7).unwrap();
    c.bench_function("evaluate_sample with gradients", |b| b.iter(|| evaluate_sample(&xi, &a, &p, black_box(true)).unwrap()));
}

fn quadrature(c: &mut Criterion) {
    let (cfg, a, p) = desk_point(1, 1, 1);
    let settings = Default::default();
    c.bench_function("expected_rate buyer", |b| b.iter(|| expected_rate(&a, &p, &cfg, black_box(Mno::Buyer(0)), &settings).unwrap()));
    c.bench_function("expected_rate seller", |b| b.iter(|| expected_rate(&a, &p, &cfg, black_box(Mno::Seller(0)), &settings).unwrap()));
}

fn subsolver(c: &mut Criterion) {
    // Decision size of S=2, B=2, L=1 and its 2B+S+1 stochastic constraints.
    let spec = subproblem(6, 7);
    c.bench_function("subsolver 6x7", |b| b.iter(|| solve_subproblem(black_box(&spec), 1e-8).unwrap()));
}

criterion_group!(benches, sampling, quadrature, subsolver);
criterion_main!(benches);
