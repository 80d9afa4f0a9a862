//! Parallel vs sequential execution of the data-parallel kernels.
//!
//! With the `parallel` feature each kernel runs once on the global rayon
//! pool and once inside a single-thread pool. Without it only the
//! sequential variant exists.

use std::hint::black_box;

use criterion::{criterion_group, criterion_main, BenchmarkId, Criterion};
use qikmpp::oracle::exact_cost;
use qikmpp::seeding::{kmeanspp, qi_kmeanspp_with, QiConfig, SqIndex};
use qikmpp::synthetic::MixtureSpec;
use qikmpp::DataSet;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

type Kernel = fn(&DataSet);

fn build_index(ds: &DataSet) {
    black_box(SqIndex::build(ds, true));
}

fn kmpp_k10(ds: &DataSet) {
    black_box(kmeanspp(ds, 10, &mut ChaCha8Rng::seed_from_u64(1)).unwrap());
}

fn cost_k10(ds: &DataSet) {
    let centers = ds.gather(&(0..10).collect::<Vec<_>>());
    black_box(exact_cost(ds, &centers));
}

const KERNELS: [(&str, Kernel); 3] = [("sq_index_build", build_index), ("kmpp_k10", kmpp_k10), ("exact_cost_k10", cost_k10)];

#[cfg(feature = "parallel")]
fn modes() -> Vec<(&'static str, Option<rayon::ThreadPool>)> {
    let single = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
    vec![("parallel", None), ("sequential", Some(single))]
}

#[cfg(not(feature = "parallel"))]
fn modes() -> Vec<(&'static str, Option<()>)> {
    vec![("sequential", None)]
}

#[cfg(feature = "parallel")]
fn in_mode(pool: &Option<rayon::ThreadPool>, f: impl FnOnce() + Send) {
    match pool {
        Some(p) => p.install(f),
        None => f(),
    }
}

#[cfg(not(feature = "parallel"))]
fn in_mode(_: &Option<()>, f: impl FnOnce()) {
    f()
}

fn kernels(c: &mut Criterion) {
    let modes = modes();
    for n in [10_000, 100_000] {
        let ds = MixtureSpec::well_separated(n, 3).generate().unwrap();
        for (name, kernel) in KERNELS {
            let mut g = c.benchmark_group(name);
            g.sample_size(10);
            for (mode, pool) in &modes {
                g.bench_with_input(BenchmarkId::new(*mode, n), &ds, |b, ds| {
                    b.iter(|| in_mode(pool, || kernel(ds)))
                });
            }
            g.finish();
        }
    }
}

/// Sampling after setup: stays nearly flat in N.
fn qi_sampling(c: &mut Criterion) {
    let mut g = c.benchmark_group("qikmpp_k10_after_setup");
    g.sample_size(20);
    for n in [10_000, 100_000] {
        let ds = MixtureSpec::well_separated(n, 3).generate().unwrap();
        let ix = SqIndex::build(&ds, true);
        let cfg = QiConfig::default();
        g.bench_with_input(BenchmarkId::from_parameter(n), &ds, |b, ds| {
            let mut rng = ChaCha8Rng::seed_from_u64(2);
            b.iter(|| black_box(qi_kmeanspp_with(ds, &ix, 10, &cfg, &mut rng).unwrap()))
        });
    }
    g.finish();
}

criterion_group!(benches, kernels, qi_sampling);
criterion_main!(benches);
