//! Seeders against brute-force ground truth.

mod common;

use std::collections::HashMap;

use common::{two_blobs, rng};
use qikmpp::approx_scheme::{approx_scheme, SchemeParams};
use qikmpp::data::sq_dist;
use qikmpp::oracle::{optimal_kmeans_bruteforce, subset_cost, tv_distance, DiscreteDistribution};
use qikmpp::seeding::{kmeanspp, pseudo_approx_2k, qi_kmeanspp_with, QiConfig, SqIndex};
use qikmpp::DataSet;

/// Probability of every ordered pair `(first, second)` under k-means++.
fn pair_probabilities(ds: &DataSet) -> Vec<f64> {
    let n = ds.n_points();
    let mut p = vec![0.0; n * n];
    for f in 0..n {
        let w: Vec<f64> = (0..n).map(|j| sq_dist(ds.row(j), ds.row(f))).collect();
        let total: f64 = w.iter().sum();
        for j in 0..n {
            p[f * n + j] = w[j] / total / n as f64;
        }
    }
    p
}

fn small() -> DataSet {
    DataSet::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 3.0], [4.0, 4.0], [-2.0, 1.0]]).unwrap()
}

#[test]
fn ordered_pairs_match_enumeration() {
    let ds = small();
    let n = ds.n_points();
    let exact = DiscreteDistribution::from_weights(&pair_probabilities(&ds)).unwrap();
    let ix = SqIndex::build(&ds, true);
    let cfg = QiConfig::default();
    let runs = 100_000;
    for qi in [false, true] {
        let mut counts = vec![0.0; n * n];
        let mut r = rng(if qi { 1 } else { 2 });
        for _ in 0..runs {
            let res = if qi {
                qi_kmeanspp_with(&ds, &ix, 2, &cfg, &mut r).unwrap()
            } else {
                kmeanspp(&ds, 2, &mut r).unwrap()
            };
            counts[res.center_indices[0] * n + res.center_indices[1]] += 1.0;
        }
        let emp = DiscreteDistribution::from_weights(&counts).unwrap();
        let tv = tv_distance(&emp, &exact).unwrap();
        assert!(tv < 0.02, "qi={qi}: {tv}");
    }
}

#[test]
fn three_center_sequences_match_for_both_seeders() {
    // compare the two seeders to each other on full 3-sequences
    let ds = small();
    let ix = SqIndex::build(&ds, true);
    let cfg = QiConfig::default();
    let runs = 60_000;
    let mut a: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut b: HashMap<Vec<usize>, f64> = HashMap::new();
    let mut r = rng(5);
    for _ in 0..runs {
        *a.entry(kmeanspp(&ds, 3, &mut r).unwrap().center_indices).or_default() += 1.0 / runs as f64;
        *b.entry(qi_kmeanspp_with(&ds, &ix, 3, &cfg, &mut r).unwrap().center_indices).or_default() +=
            1.0 / runs as f64;
    }
    let keys: std::collections::HashSet<&Vec<usize>> = a.keys().chain(b.keys()).collect();
    let tv: f64 = keys
        .into_iter()
        .map(|k| (a.get(k).unwrap_or(&0.0) - b.get(k).unwrap_or(&0.0)).abs())
        .sum::<f64>()
        / 2.0;
    assert!(tv < 0.03, "{tv}");
}

#[test]
fn nothing_beats_the_brute_force_optimum() {
    for seed in 0..6u64 {
        let ds = two_blobs(10, 2, 2.0, 40 + seed);
        let opt = optimal_kmeans_bruteforce(&ds, 2).unwrap();
        let by_labels: f64 = (0..2)
            .map(|c| {
                let rows: Vec<usize> = (0..10).filter(|&i| opt.labels[i] == c).collect();
                subset_cost(&ds, &rows, &[qikmpp::oracle::centroid_of(&ds, &rows)])
            })
            .sum();
        assert!((by_labels - opt.cost).abs() <= 1e-9 * opt.cost);
        let floor = opt.cost * (1.0 - 1e-9);
        assert!(kmeanspp(&ds, 2, &mut rng(seed)).unwrap().cost(&ds) >= floor);
        let params = SchemeParams {
            rho: 4,
            tau: 2,
            ..SchemeParams::new(2, 0.25).unwrap()
        };
        let res = approx_scheme(&ds, &params, &mut rng(seed)).unwrap();
        assert!(res.cost >= floor);
        let pseudo = pseudo_approx_2k(&ds, 2, None, &mut rng(seed)).unwrap();
        assert_eq!(pseudo.center_indices.len(), 4);
    }
}
