use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use anyhow::{Context, Result};
use clap::{Args, Parser, Subcommand};
use qikmpp::approx_scheme::{approx_scheme, SchemeParams};
use qikmpp::data::{aspect_ratio, estimate_aspect_ratio, store_raw, write_csv};
use qikmpp::oracle::{optimal_kmeans_with_caps, BruteForceCaps};
use qikmpp::seeding::{run, Algorithm, PhiBound, SeedParams, DEFAULT_CHAIN_LEN};
use qikmpp::synthetic::MixtureSpec;
use qikmpp_cli::bench::{parse_k_list, run_bench, BenchConfig};
use qikmpp_cli::check::{run_checks, CheckOptions};
use qikmpp_cli::input::{Format, InputArgs};
use qikmpp_cli::report::{
    emit, mean, micros, variance, ApproxReport, AspectFile, DatasetInfo, SeedParamsReport, SeedReport, SeedRun,
    APPROX_SCHEMA, ASPECT_SCHEMA, SEED_SCHEMA,
};
use qikmpp_cli::{map_runs, run_seed, usage, with_threads, UsageError};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

#[derive(Parser)]
#[command(name = "qikmpp", version, about = "D²-sampling seeders on sample-query trees")]
struct Cli {
    /// Cap on worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Seed k centers and write a report.
    Seed(SeedArgs),
    /// Cumulative-runtime benchmark over several k.
    Bench(BenchArgs),
    /// Exact (or sampled) aspect ratio of a dataset.
    Aspect(AspectArgs),
    /// Run the (1+eps) approximation scheme on a small input.
    Approx(ApproxArgs),
    /// Run the statistical self-check suites.
    Check(CheckArgs),
    /// Write a Gaussian-mixture dataset.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct AlgoArgs {
    #[arg(long, default_value_t = 0.01)]
    delta: f64,
    /// Distance error for qikmpp-noisy, in (0, 1/2].
    #[arg(long)]
    eps: Option<f64>,
    /// Markov chain length for afkmc2.
    #[arg(long, default_value_t = DEFAULT_CHAIN_LEN)]
    chain_len: usize,
    /// Known bound on the oversampling factor; sizes the trial budget.
    #[arg(long)]
    phi_hat: Option<f64>,
}

impl AlgoArgs {
    fn params(&self) -> Result<SeedParams> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(usage(format!("--delta {} must be in (0, 1)", self.delta)));
        }
        if let Some(e) = self.eps {
            if !(e > 0.0 && e <= 0.5) {
                return Err(usage(format!("--eps {e} must be in (0, 1/2]")));
            }
        }
        if self.chain_len == 0 {
            return Err(usage("--chain-len must be >= 1"));
        }
        let phi_bound = match self.phi_hat {
            Some(p) if p >= 1.0 => PhiBound::Known(p),
            Some(p) => return Err(usage(format!("--phi-hat {p} must be >= 1"))),
            None => PhiBound::Unknown,
        };
        Ok(SeedParams {
            delta: self.delta,
            eps: self.eps.unwrap_or(0.1),
            chain_len: self.chain_len,
            phi_bound,
            center_data: true,
        })
    }
}

fn parse_algo(s: &str) -> Result<Algorithm, String> {
    s.parse().map_err(|e: qikmpp::Error| e.to_string())
}

#[derive(Args)]
struct SeedArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long, value_parser = parse_algo)]
    algo: Algorithm,
    #[arg(long)]
    k: usize,
    #[command(flatten)]
    algo_args: AlgoArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Report path (stdout when absent).
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct BenchArgs {
    #[command(flatten)]
    input: InputArgs,
    /// `2..10` (inclusive) or `2,3,5`.
    #[arg(long, default_value = "2..10")]
    k_list: String,
    #[arg(long, default_value_t = 1)]
    runs: usize,
    /// Comma-separated algorithm tags.
    #[arg(long, default_value = "kmpp,qikmpp")]
    algos: String,
    #[command(flatten)]
    algo_args: AlgoArgs,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Also compute the exact aspect ratio (O(N²d)).
    #[arg(long)]
    zeta: bool,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct AspectArgs {
    #[command(flatten)]
    input: InputArgs,
    /// Estimate from this many sampled rows instead of an exact scan.
    #[arg(long)]
    sample: Option<usize>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct ApproxArgs {
    #[command(flatten)]
    input: InputArgs,
    #[arg(long)]
    k: usize,
    #[arg(long, default_value_t = 0.25)]
    eps: f64,
    /// Upper limit on the candidate-list bound.
    #[arg(long, default_value_t = qikmpp::approx_scheme::DEFAULT_BUDGET)]
    budget: u64,
    /// Explicit per-round sample multiplier (overrides the eps default).
    #[arg(long)]
    rho: Option<usize>,
    /// Explicit subset size (overrides the eps default).
    #[arg(long)]
    tau: Option<usize>,
    #[arg(long)]
    rounds: Option<usize>,
    /// Also compute OPT by brute force and report cost/OPT.
    #[arg(long)]
    oracle: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CheckArgs {
    /// Run only suites whose name contains this string.
    #[arg(long)]
    filter: Option<String>,
    /// Accept every rejection trial (the TV suite should then fail).
    #[arg(long)]
    inject_fault: bool,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(long)]
    n: usize,
    #[arg(long, default_value_t = 16)]
    d: usize,
    #[arg(long, default_value_t = 10)]
    components: usize,
    #[arg(long, default_value_t = 1000.0)]
    separation: f64,
    #[arg(long, default_value_t = 1.0)]
    sigma: f64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    format: Format,
    #[arg(long)]
    out: PathBuf,
}

fn cmd_seed(a: &SeedArgs) -> Result<()> {
    let params = a.algo_args.params()?;
    if a.runs == 0 {
        return Err(usage("--runs must be >= 1"));
    }
    if a.algo_args.eps.is_some() && a.algo != Algorithm::QiKmppNoisy {
        return Err(usage("--eps applies to qikmpp-noisy only"));
    }
    let ds = a.input.load()?;
    let results = map_runs(a.runs, |r| run(a.algo, &ds, None, a.k, &params, run_seed(a.seed, r)));
    let runs = results
        .into_iter()
        .map(|r| r.map(|r| SeedRun::new(&r, &ds)))
        .collect::<qikmpp::Result<Vec<_>>>()
        .with_context(|| format!("{} failed", a.algo))?;
    let costs: Vec<f64> = runs.iter().map(|r| r.cost).collect();
    let report = SeedReport {
        schema: SEED_SCHEMA,
        dataset: DatasetInfo::new(a.input.id(), &ds),
        algorithm: a.algo.tag().into(),
        k: a.k,
        params: SeedParamsReport {
            delta: params.delta,
            eps: (a.algo == Algorithm::QiKmppNoisy).then_some(params.eps),
            chain_len: (a.algo == Algorithm::AfkMc2).then_some(params.chain_len),
            phi_hat: params.phi_bound.phi_hat(),
        },
        cost_mean: mean(&costs),
        cost_variance: variance(&costs),
        runs,
    };
    emit(&report, a.out.as_deref())
}

fn cmd_bench(a: &BenchArgs) -> Result<()> {
    let params = a.algo_args.params()?;
    let k_values = parse_k_list(&a.k_list)?;
    let algorithms = a
        .algos
        .split(',')
        .map(|s| parse_algo(s.trim()).map_err(usage))
        .collect::<Result<Vec<_>>>()?;
    if a.runs == 0 {
        return Err(usage("--runs must be >= 1"));
    }
    let ds = a.input.load()?;
    let zeta = if a.zeta { Some(aspect_ratio(&ds)?.zeta) } else { None };
    let cfg = BenchConfig {
        algorithms,
        k_values,
        runs: a.runs,
        seed: a.seed,
        params,
        zeta,
    };
    emit(&run_bench(&ds, &a.input.id(), &cfg)?, a.out.as_deref())
}

fn cmd_aspect(a: &AspectArgs) -> Result<()> {
    let ds = a.input.load()?;
    let aspect = match a.sample {
        Some(0) => return Err(usage("--sample must be >= 2")),
        Some(s) => estimate_aspect_ratio(&ds, s, &mut ChaCha8Rng::seed_from_u64(a.seed))?,
        None => aspect_ratio(&ds)?,
    };
    let report = AspectFile {
        schema: ASPECT_SCHEMA,
        dataset: DatasetInfo::new(a.input.id(), &ds),
        aspect,
    };
    emit(&report, a.out.as_deref())
}

fn cmd_approx(a: &ApproxArgs) -> Result<()> {
    let mut params = SchemeParams::new(a.k, a.eps).map_err(|e| usage(e.to_string()))?;
    params.budget = a.budget;
    if let Some(r) = a.rho {
        params.rho = r;
    }
    if let Some(t) = a.tau {
        params.tau = t;
    }
    if let Some(r) = a.rounds {
        params.outer_rounds = r;
    }
    params.validate().map_err(|e| usage(e.to_string()))?;
    let ds = a.input.load()?;
    let t = Instant::now();
    let res = approx_scheme(&ds, &params, &mut ChaCha8Rng::seed_from_u64(a.seed)).map_err(|e| match e {
        qikmpp::Error::BudgetExceeded { .. } => {
            anyhow::Error::new(e).context("candidate list too large; lower --rho/--tau or raise --budget")
        }
        e => e.into(),
    })?;
    let total_time_s = t.elapsed().as_secs_f64();
    let opt = if a.oracle {
        Some(optimal_kmeans_with_caps(&ds, a.k, BruteForceCaps::default())?.cost)
    } else {
        None
    };
    let ratio = opt.map(|o| if o > 0.0 { res.cost / o } else if res.cost == 0.0 { 1.0 } else { f64::INFINITY });
    let report = ApproxReport {
        schema: APPROX_SCHEMA,
        dataset: DatasetInfo::new(a.input.id(), &ds),
        k: a.k,
        eps: a.eps,
        rho: params.rho,
        tau: params.tau,
        outer_rounds: params.outer_rounds,
        budget: params.budget,
        seed: a.seed,
        c_init_indices: res.c_init.center_indices.clone(),
        candidates_evaluated: res.candidates_evaluated,
        round_costs: res.round_costs.clone(),
        centers: res.centers.clone(),
        cost: res.cost,
        opt,
        ratio,
        total_time_s: micros(total_time_s),
    };
    emit(&report, a.out.as_deref())
}

fn cmd_check(a: &CheckArgs) -> Result<bool> {
    let opts = CheckOptions {
        seed: a.seed,
        inject_fault: a.inject_fault,
    };
    let lines = run_checks(a.filter.as_deref(), &opts);
    if lines.is_empty() {
        return Err(usage(format!(
            "--filter {:?} matches no suite ({})",
            a.filter.as_deref().unwrap_or(""),
            qikmpp_cli::check::SUITES.join(", ")
        )));
    }
    let failed = lines.iter().filter(|l| !l.pass).count();
    for l in &lines {
        println!("{} {}: {}: {}", if l.pass { "PASS" } else { "FAIL" }, l.suite, l.name, l.detail);
    }
    println!("{} checks, {failed} failed", lines.len());
    Ok(failed == 0)
}

fn cmd_generate(a: &GenerateArgs) -> Result<()> {
    let spec = MixtureSpec {
        n_points: a.n,
        n_dims: a.d,
        n_components: a.components,
        separation: a.separation,
        sigma: a.sigma,
        seed: a.seed,
    };
    let ds = spec.generate().map_err(|e| usage(e.to_string()))?;
    match a.format {
        Format::Csv => write_csv(&ds, &a.out, b',')?,
        Format::Raw => store_raw(&ds, &a.out)?,
    }
    Ok(())
}

fn dispatch(cli: Cli) -> Result<bool> {
    with_threads(cli.threads, move || match &cli.command {
        Command::Seed(a) => cmd_seed(a).map(|_| true),
        Command::Bench(a) => cmd_bench(a).map(|_| true),
        Command::Aspect(a) => cmd_aspect(a).map(|_| true),
        Command::Approx(a) => cmd_approx(a).map(|_| true),
        Command::Check(a) => cmd_check(a),
        Command::Generate(a) => cmd_generate(a).map(|_| true),
    })?
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                ExitCode::from(2)
            } else {
                ExitCode::from(1)
            }
        }
    }
}
