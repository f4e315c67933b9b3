//! Sequential vs parallel throughput of the verification suites.
//!
//! With default features both execution modes are available and compared in
//! one run; built with `--no-default-features` the parallel mode falls back
//! to sequential and the two curves coincide.

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use simplex_strength::verify::{
    run_invariance_suite_with, run_lemma_suite_with, run_lipschitz_suite_with, Execution,
};
use simplex_strength::TrialConfig;

const MODES: [(Execution, &str); 2] = [
    (Execution::Sequential, "sequential"),
    (Execution::Parallel, "parallel"),
];

fn cfg(dim: usize, trials: u64) -> TrialConfig {
    TrialConfig {
        trials,
        seed: 99,
        ..TrialConfig::new(dim)
    }
}

fn bench_lipschitz(c: &mut Criterion) {
    let mut group = c.benchmark_group("lipschitz_suite");
    group.sample_size(10);
    for dim in [2usize, 3] {
        let config = cfg(dim, 4_000);
        for (exec, name) in MODES {
            group.bench_with_input(BenchmarkId::new(name, dim), &config, |b, config| {
                b.iter(|| run_lipschitz_suite_with(config, exec).unwrap());
            });
        }
    }
    group.finish();
}

fn bench_lemma(c: &mut Criterion) {
    let mut group = c.benchmark_group("lemma_suite");
    group.sample_size(10);
    for dim in [2usize, 4] {
        let config = cfg(dim, 2_000);
        for (exec, name) in MODES {
            group.bench_with_input(BenchmarkId::new(name, dim), &config, |b, config| {
                b.iter(|| run_lemma_suite_with(config, exec).unwrap());
            });
        }
    }
    group.finish();
}

fn bench_invariance(c: &mut Criterion) {
    let mut group = c.benchmark_group("invariance_suite");
    group.sample_size(10);
    let config = cfg(3, 2_000);
    for (exec, name) in MODES {
        group.bench_with_input(BenchmarkId::new(name, 3), &config, |b, config| {
            b.iter(|| run_invariance_suite_with(config, exec).unwrap());
        });
    }
    group.finish();
}

criterion_group!(benches, bench_lipschitz, bench_lemma, bench_invariance);
criterion_main!(benches);
