//! Report schemas. Every report is a JSON object whose key order follows
//! the field order below; timing fields (`*_time_s`) are the only values
//! that change between runs with the same seed.

use std::io::Write;
use std::path::Path;

use anyhow::{Context, Result};
use qikmpp::seeding::RoundStat;
use qikmpp::{AspectReport, DataSet, SeedingResult};
use serde::Serialize;

pub const SEED_SCHEMA: &str = "qikmpp.seed/1";
pub const BENCH_SCHEMA: &str = "qikmpp.bench/1";
pub const ASPECT_SCHEMA: &str = "qikmpp.aspect/1";
pub const APPROX_SCHEMA: &str = "qikmpp.approx/1";

#[derive(Debug, Clone, Serialize)]
pub struct DatasetInfo {
    pub id: String,
    pub n_points: usize,
    pub n_dims: usize,
}

impl DatasetInfo {
    pub fn new(id: impl Into<String>, ds: &DataSet) -> Self {
        Self {
            id: id.into(),
            n_points: ds.n_points(),
            n_dims: ds.n_dims(),
        }
    }
}

/// Seconds rounded to microseconds.
pub fn micros(seconds: f64) -> f64 {
    (seconds * 1e6).round() / 1e6
}

#[derive(Debug, Clone, Serialize)]
pub struct RoundReport {
    pub round: usize,
    pub trials: u64,
    pub wall_time_s: f64,
}

impl From<&RoundStat> for RoundReport {
    fn from(r: &RoundStat) -> Self {
        Self {
            round: r.round,
            trials: r.trials,
            wall_time_s: micros(r.wall_time_s),
        }
    }
}

/// Centers are reported by row index only.
#[derive(Debug, Clone, Serialize)]
pub struct SeedRun {
    pub rng_seed: u64,
    pub center_indices: Vec<usize>,
    pub cost: f64,
    pub total_trials: u64,
    pub setup_time_s: f64,
    pub sample_time_s: f64,
    pub per_round: Vec<RoundReport>,
}

impl SeedRun {
    pub fn new(r: &SeedingResult, ds: &DataSet) -> Self {
        Self {
            rng_seed: r.rng_seed.unwrap_or_default(),
            center_indices: r.center_indices.clone(),
            cost: r.cost(ds),
            total_trials: r.total_trials(),
            setup_time_s: micros(r.setup_time_s),
            sample_time_s: micros(r.sample_time_s),
            per_round: r.per_round.iter().map(RoundReport::from).collect(),
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedParamsReport {
    pub delta: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub eps: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub chain_len: Option<usize>,
    pub phi_hat: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct SeedReport {
    pub schema: &'static str,
    pub dataset: DatasetInfo,
    pub algorithm: String,
    pub k: usize,
    pub params: SeedParamsReport,
    pub runs: Vec<SeedRun>,
    pub cost_mean: f64,
    /// Sample variance; present only for two or more runs.
    pub cost_variance: Option<f64>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchPoint {
    pub k: usize,
    pub rng_seeds: Vec<u64>,
    pub costs: Vec<f64>,
    pub cost_mean: f64,
    pub cost_variance: Option<f64>,
    /// Mean seeding time over the runs at this `k`.
    pub sample_time_s: f64,
    /// Setup plus the mean seeding times of every `k` up to this one.
    pub cumulative_time_s: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchSeries {
    pub algorithm: String,
    /// Charged once per series; zero for algorithms without an index.
    pub setup_time_s: f64,
    pub points: Vec<BenchPoint>,
}

#[derive(Debug, Clone, Serialize)]
pub struct BenchReport {
    pub schema: &'static str,
    pub dataset: DatasetInfo,
    pub zeta: Option<f64>,
    pub seed: u64,
    pub runs: usize,
    pub k_values: Vec<usize>,
    pub series: Vec<BenchSeries>,
}

#[derive(Debug, Clone, Serialize)]
pub struct AspectFile {
    pub schema: &'static str,
    pub dataset: DatasetInfo,
    #[serde(flatten)]
    pub aspect: AspectReport,
}

#[derive(Debug, Clone, Serialize)]
pub struct ApproxReport {
    pub schema: &'static str,
    pub dataset: DatasetInfo,
    pub k: usize,
    pub eps: f64,
    pub rho: usize,
    pub tau: usize,
    pub outer_rounds: usize,
    pub budget: u64,
    pub seed: u64,
    pub c_init_indices: Vec<usize>,
    pub candidates_evaluated: u64,
    pub round_costs: Vec<f64>,
    pub centers: Vec<Vec<f64>>,
    pub cost: f64,
    pub opt: Option<f64>,
    pub ratio: Option<f64>,
    pub total_time_s: f64,
}

pub fn mean(xs: &[f64]) -> f64 {
    xs.iter().sum::<f64>() / xs.len().max(1) as f64
}

/// Unbiased sample variance, `None` for fewer than two values.
pub fn variance(xs: &[f64]) -> Option<f64> {
    (xs.len() >= 2).then(|| {
        let m = mean(xs);
        xs.iter().map(|x| (x - m).powi(2)).sum::<f64>() / (xs.len() - 1) as f64
    })
}

/// Pretty JSON to `out`, or to stdout when `out` is `None`.
pub fn emit<T: Serialize>(report: &T, out: Option<&Path>) -> Result<()> {
    let mut text = serde_json::to_string_pretty(report)?;
    text.push('\n');
    match out {
        Some(p) => std::fs::write(p, text).with_context(|| format!("writing {}", p.display()))?,
        None => std::io::stdout().lock().write_all(text.as_bytes())?,
    }
    Ok(())
}
