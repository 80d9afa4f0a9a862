//! Fixed-seed statistical self-checks, runnable from the command line.

use qikmpp::data::sq_norm;
use qikmpp::oracle::{
    empirical_distribution, exact_d2_distribution, nearest_sq_dist, optimal_kmeans_bruteforce, tv_distance,
    DiscreteDistribution,
};
use qikmpp::osq::{scan_phi, DistanceOsq, MinOsq, OsqHandle};
use qikmpp::seeding::{kmeanspp, qi_kmeanspp_with, QiConfig, SqD2Sampler, SqIndex};
use qikmpp::DataSet;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

pub const SUITES: [&str; 4] = ["tv", "domination", "phi", "oracle"];

const TV_MAX: f64 = 0.02;
const REL_MAX: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct CheckLine {
    pub suite: &'static str,
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

#[derive(Debug, Clone, Copy, Default)]
pub struct CheckOptions {
    pub seed: u64,
    /// Accept every rejection trial, i.e. sample from `D_w̃` instead of
    /// `D_w`. The TV suite must catch this.
    pub inject_fault: bool,
}

fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

fn instance(seed: u64, m: usize) -> (DataSet, Vec<usize>) {
    let mut r = rng(seed);
    let n = r.random_range(8..=24);
    let d = r.random_range(1..=3);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| r.random_range(-10i32..=10) as f64 * 0.5).collect())
        .collect();
    let mut centers: Vec<usize> = Vec::new();
    while centers.len() < m {
        let c = r.random_range(0..n);
        if !centers.contains(&c) {
            centers.push(c);
        }
    }
    (DataSet::from_rows(&rows).expect("finite rows"), centers)
}

fn handle<'a>(ix: &'a SqIndex, centers: &[usize]) -> MinOsq<DistanceOsq<'a>> {
    let branches = centers
        .iter()
        .map(|&c| DistanceOsq::from_point(ix.matrix(), ix.data().row(c)).expect("matching dims"))
        .collect();
    MinOsq::new(branches).expect("non-empty")
}

fn line(suite: &'static str, name: String, pass: bool, detail: String) -> CheckLine {
    CheckLine {
        suite,
        name,
        pass,
        detail,
    }
}

fn tv_suite(opts: &CheckOptions) -> Vec<CheckLine> {
    (0..5)
        .map(|i| {
            let (ds, centers) = instance(opts.seed.wrapping_add(i), 1 + i as usize % 3);
            let exact = exact_d2_distribution(&ds, &ds.gather(&centers)).expect("positive cost");
            let ix = SqIndex::build(&ds, true);
            let mut s = SqD2Sampler::exact(&ix, u64::MAX);
            for &c in &centers {
                s.add_center(c).expect("valid row");
            }
            let h = s.handle().expect("has centers");
            let mut r = rng(opts.seed.wrapping_add(100 + i));
            let emp = if opts.inject_fault {
                empirical_distribution(|r| Ok(h.sample_tilde(r)), 50_000, ds.n_points(), &mut r)
            } else {
                empirical_distribution(|r| s.sample(r).map(|a| a.index), 50_000, ds.n_points(), &mut r)
            };
            let tv = emp.and_then(|e| tv_distance(&e, &exact)).unwrap_or(f64::INFINITY);
            line(
                "tv",
                format!("instance {i} (n={}, m={})", ds.n_points(), centers.len()),
                tv < TV_MAX,
                format!("TV {tv:.4} (< {TV_MAX})"),
            )
        })
        .collect()
}

fn domination_suite(opts: &CheckOptions) -> Vec<CheckLine> {
    (0..10)
        .map(|i| {
            let (ds, centers) = instance(opts.seed.wrapping_add(200 + i), 1 + i as usize % 3);
            let ix = SqIndex::build(&ds, true);
            let v = handle(&ix, &centers).branches().iter().map(|b| scan_phi(b).domination_violations).sum::<usize>()
                + scan_phi(&handle(&ix, &centers)).domination_violations;
            line("domination", format!("instance {i}"), v == 0, format!("{v} violations"))
        })
        .collect()
}

fn phi_suite(opts: &CheckOptions) -> Vec<CheckLine> {
    (0..10)
        .map(|i| {
            let (ds, centers) = instance(opts.seed.wrapping_add(300 + i), 1 + i as usize % 3);
            let ix = SqIndex::build(&ds, true);
            let v = ix.data();
            let frob: f64 = v.rows().map(sq_norm).sum();
            let n = v.n_points() as f64;
            let closed: f64 = centers
                .iter()
                .map(|&c| 2.0 * (frob + n * sq_norm(v.row(c))))
                .sum::<f64>()
                / centers.len() as f64;
            let s = scan_phi(&handle(&ix, &centers));
            let gap = ((s.norm2_tilde_reported - closed).abs()).max((s.norm2_tilde_scan - closed).abs()) / closed;
            line(
                "phi",
                format!("instance {i}"),
                gap <= REL_MAX,
                format!("phi {:.3}, relative gap {gap:.1e}", s.phi),
            )
        })
        .collect()
}

/// Marginal of the second k-means++ center: first center uniform, then D².
fn second_center_marginal(ds: &DataSet) -> DiscreteDistribution {
    let n = ds.n_points();
    let mut p = vec![0.0; n];
    for f in 0..n {
        let c = [ds.row(f)];
        let w: Vec<f64> = (0..n).map(|j| nearest_sq_dist(ds.row(j), &c)).collect();
        let total: f64 = w.iter().sum();
        for j in 0..n {
            p[j] += w[j] / total / n as f64;
        }
    }
    DiscreteDistribution::from_weights(&p).expect("positive mass")
}

fn oracle_suite(opts: &CheckOptions) -> Vec<CheckLine> {
    let mut out = Vec::new();
    let rows: Vec<[f64; 2]> = (0..10).map(|i| [(i * i % 7) as f64, (i % 3) as f64 * 2.0]).collect();
    let ds = DataSet::from_rows(&rows).expect("finite rows");
    let exact = second_center_marginal(&ds);
    let ix = SqIndex::build(&ds, true);
    let cfg = QiConfig::default();
    let runs = 40_000;
    let mut r = rng(opts.seed.wrapping_add(400));
    for (name, qi) in [("kmpp second center", false), ("qikmpp second center", true)] {
        let emp = empirical_distribution(
            |r| {
                let res = if qi {
                    qi_kmeanspp_with(&ds, &ix, 2, &cfg, r)?
                } else {
                    kmeanspp(&ds, 2, r)?
                };
                Ok(res.center_indices[1])
            },
            runs,
            ds.n_points(),
            &mut r,
        );
        let tv = emp.and_then(|e| tv_distance(&e, &exact)).unwrap_or(f64::INFINITY);
        out.push(line("oracle", name.into(), tv < TV_MAX, format!("TV {tv:.4} (< {TV_MAX})")));
    }
    let opt = optimal_kmeans_bruteforce(&ds, 3).map(|o| o.cost);
    let worst_gap = (0..200)
        .map(|s| kmeanspp(&ds, 3, &mut rng(s)).map(|x| x.cost(&ds)).unwrap_or(f64::NAN))
        .fold(f64::INFINITY, f64::min);
    let pass = matches!(opt, Ok(o) if worst_gap >= o - 1e-9 * o.max(1.0));
    out.push(line(
        "oracle",
        "brute-force optimum bounds seeding cost".into(),
        pass,
        format!("OPT {:?}, best seeding cost {worst_gap:.4}", opt.ok()),
    ));
    out
}

/// Run the suites whose names contain `filter` (all when `None`).
pub fn run_checks(filter: Option<&str>, opts: &CheckOptions) -> Vec<CheckLine> {
    let mut out = Vec::new();
    for suite in SUITES {
        if filter.is_some_and(|f| !suite.contains(f)) {
            continue;
        }
        out.extend(match suite {
            "tv" => tv_suite(opts),
            "domination" => domination_suite(opts),
            "phi" => phi_suite(opts),
            _ => oracle_suite(opts),
        });
    }
    out
}
