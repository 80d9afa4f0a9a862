//! Cumulative-runtime benchmark over a list of `k` values.
//!
//! SQ-backed algorithms build their index once per series and that setup is
//! charged once, at the start of the cumulative curve. The other algorithms
//! pay their full cost at every `k`. Runs execute sequentially so timings
//! are not distorted by each other.

use anyhow::Result;
use qikmpp::seeding::{run, Algorithm, SeedParams, SqIndex};
use qikmpp::DataSet;

use crate::report::{mean, micros, variance, BenchPoint, BenchReport, BenchSeries, DatasetInfo, BENCH_SCHEMA};
use crate::run_seed;

pub struct BenchConfig {
    pub algorithms: Vec<Algorithm>,
    pub k_values: Vec<usize>,
    pub runs: usize,
    pub seed: u64,
    pub params: SeedParams,
    pub zeta: Option<f64>,
}

pub fn run_bench(ds: &DataSet, id: &str, cfg: &BenchConfig) -> Result<BenchReport> {
    let mut series = Vec::with_capacity(cfg.algorithms.len());
    for &algorithm in &cfg.algorithms {
        let index = algorithm
            .uses_sq_index()
            .then(|| SqIndex::build(ds, cfg.params.center_data));
        let setup = index.as_ref().map_or(0.0, SqIndex::setup_time_s);
        let mut cumulative = setup;
        let mut points = Vec::with_capacity(cfg.k_values.len());
        for (j, &k) in cfg.k_values.iter().enumerate() {
            let mut costs = Vec::with_capacity(cfg.runs);
            let mut seeds = Vec::with_capacity(cfg.runs);
            let mut times = Vec::with_capacity(cfg.runs);
            for r in 0..cfg.runs {
                let seed = run_seed(cfg.seed, j * cfg.runs + r);
                let res = run(algorithm, ds, index.as_ref(), k, &cfg.params, seed)?;
                costs.push(res.cost(ds));
                seeds.push(seed);
                times.push(res.sample_time_s);
            }
            let sample_time_s = mean(&times);
            cumulative += sample_time_s;
            points.push(BenchPoint {
                k,
                rng_seeds: seeds,
                cost_mean: mean(&costs),
                cost_variance: variance(&costs),
                costs,
                sample_time_s: micros(sample_time_s),
                cumulative_time_s: micros(cumulative),
            });
        }
        series.push(BenchSeries {
            algorithm: algorithm.tag().to_string(),
            setup_time_s: micros(setup),
            points,
        });
    }
    Ok(BenchReport {
        schema: BENCH_SCHEMA,
        dataset: DatasetInfo::new(id, ds),
        zeta: cfg.zeta,
        seed: cfg.seed,
        runs: cfg.runs,
        k_values: cfg.k_values.clone(),
        series,
    })
}

/// Parse `2..10` (inclusive), `2..=10`, or `2,3,5`.
pub fn parse_k_list(s: &str) -> Result<Vec<usize>> {
    let bad = || crate::usage(format!("invalid k list {s:?}; use 2..10 or 2,3,5"));
    let ks: Vec<usize> = if let Some((a, b)) = s.split_once("..") {
        let b = b.strip_prefix('=').unwrap_or(b);
        let lo: usize = a.trim().parse().map_err(|_| bad())?;
        let hi: usize = b.trim().parse().map_err(|_| bad())?;
        (lo..=hi).collect()
    } else {
        s.split(',')
            .map(|x| x.trim().parse().map_err(|_| bad()))
            .collect::<Result<_>>()?
    };
    if ks.is_empty() || ks.contains(&0) {
        return Err(bad());
    }
    Ok(ks)
}
