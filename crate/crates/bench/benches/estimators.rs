use criterion::{criterion_group, criterion_main, Criterion};
use pfas_bench::desk_fixture;
use pfas_core::harness::{estimate, Estimator};
use pfas_core::precoding::{objective, optimize_states, OptimizerConfig};
use std::hint::black_box;

fn estimators(c: &mut Criterion) {
    let f = desk_fixture(1, 1).unwrap();
    let red = &f.reduced[0];
    let mut g = c.benchmark_group("estimate_desk");
    g.sample_size(10);
    for e in [Estimator::Ls, Estimator::Omp, Estimator::Vbi] {
        g.bench_function(e.to_string(), |b| b.iter(|| estimate(&f.cfg, f.ctx.grid(), black_box(red), e).unwrap()));
    }
    g.finish();
}

fn precoding(c: &mut Criterion) {
    let f = desk_fixture(1, 8).unwrap();
    let set = &f.downlink;
    let p_t = f.cfg.p_t();
    let start = OptimizerConfig { restarts: 1, steps: 1, refine_sweeps: 0, ..Default::default() };
    let latent = optimize_states(set, &start, p_t, 1.0).unwrap().latent.unwrap();
    let mut g = c.benchmark_group("precoding_k8");
    g.sample_size(10);
    g.bench_function("objective", |b| b.iter(|| objective(set, black_box(&latent), p_t, 1.0).unwrap()));
    let cfg = OptimizerConfig { restarts: 1, steps: 100, refine_sweeps: 0, ..Default::default() };
    g.bench_function("adam_100_steps", |b| b.iter(|| optimize_states(set, &cfg, p_t, 1.0).unwrap()));
    g.finish();
}

criterion_group!(benches, estimators, precoding);
criterion_main!(benches);
