use cas_core::channel::{alphas_from_channel, generate_rayleigh, mmse_monte_carlo};
use cas_core::dual::{optimize_dual, optimize_dual_best, DualOptions, InitKind};
use cas_core::model::{source_eigenvalues, SystemConfig};
use cas_core::separated::{evaluate_split, optimize_separated, SeparatedOptions};
use cas_core::waterfilling::{reverse_waterfill, uniform_allocation, waterfill_capacity};
use criterion::{criterion_group, criterion_main, Criterion};
use std::hint::black_box;

fn setup() -> (SystemConfig, Vec<f64>) {
    let cfg = SystemConfig::default().with_snrs(20.0, 10.0);
    let alphas = alphas_from_channel(&generate_rayleigh(0, cfg.m_c, cfg.n_tx), &cfg);
    (cfg, alphas)
}

fn waterfilling(c: &mut Criterion) {
    let (cfg, alphas) = setup();
    let eigs = source_eigenvalues(&uniform_allocation(0.5, cfg.n_tx).unwrap(), &cfg).unwrap();
    c.bench_function("waterfill_capacity", |b| b.iter(|| waterfill_capacity(black_box(0.5), black_box(&alphas))));
    c.bench_function("reverse_waterfill", |b| b.iter(|| reverse_waterfill(black_box(&eigs), cfg.m_s, black_box(8.0))));
}

fn solvers(c: &mut Criterion) {
    let (cfg, alphas) = setup();
    c.bench_function("evaluate_split", |b| b.iter(|| evaluate_split(black_box(0.6), &cfg, &alphas)));
    c.bench_function("optimize_separated", |b| {
        b.iter(|| optimize_separated(&cfg, black_box(&alphas), SeparatedOptions::for_config(&cfg)))
    });
    c.bench_function("optimize_dual/communication_optimal", |b| {
        b.iter(|| {
            optimize_dual(&cfg, black_box(&alphas), InitKind::CommunicationOptimal, DualOptions::for_config(&cfg))
        })
    });
    c.bench_function("optimize_dual_best", |b| {
        b.iter(|| optimize_dual_best(&cfg, black_box(&alphas), DualOptions::for_config(&cfg)))
    });
}

fn monte_carlo(c: &mut Criterion) {
    let (cfg, _) = setup();
    let alloc = uniform_allocation(1.0, cfg.n_tx).unwrap();
    let mut group = c.benchmark_group("channel");
    group.sample_size(10);
    group.bench_function("mmse_monte_carlo/100", |b| b.iter(|| mmse_monte_carlo(&alloc, &cfg, 100, black_box(1))));
    group.finish();
}

criterion_group!(benches, waterfilling, solvers, monte_carlo);
criterion_main!(benches);
