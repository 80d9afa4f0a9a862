//! Brute-force ground truth: exact D² distributions and costs, optimal
//! k-means on tiny inputs by partition enumeration, and distribution metrics.

use rand::Rng;

use crate::data::{sq_dist, DataSet};
use crate::error::{Error, Result};
use crate::par::{self, KahanSum};

#[derive(Debug, Clone, PartialEq)]
pub struct DiscreteDistribution {
    probs: Vec<f64>,
}

impl DiscreteDistribution {
    /// Normalise nonnegative weights.
    pub fn from_weights(weights: &[f64]) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(pos) = weights.iter().position(|w| !(w.is_finite() && *w >= 0.0)) {
            return Err(Error::NonFinite(pos));
        }
        let total = weights.iter().copied().collect::<KahanSum>().value();
        if total <= 0.0 {
            return Err(Error::DegenerateWeights);
        }
        Ok(Self {
            probs: weights.iter().map(|w| w / total).collect(),
        })
    }

    pub fn probs(&self) -> &[f64] {
        &self.probs
    }

    pub fn len(&self) -> usize {
        self.probs.len()
    }

    pub fn is_empty(&self) -> bool {
        self.probs.is_empty()
    }

    /// Inverse-CDF lookup: first index whose cumulative probability exceeds
    /// `u01`, skipping zero-probability entries.
    pub fn invert(&self, u01: f64) -> usize {
        let mut acc = 0.0;
        let mut last = 0;
        for (i, &p) in self.probs.iter().enumerate() {
            if p == 0.0 {
                continue;
            }
            last = i;
            acc += p;
            if u01 < acc {
                return i;
            }
        }
        last
    }
}

/// Squared distance from `point` to its nearest center.
pub fn nearest_sq_dist<C: AsRef<[f64]>>(point: &[f64], centers: &[C]) -> f64 {
    centers
        .iter()
        .map(|c| sq_dist(point, c.as_ref()))
        .fold(f64::INFINITY, f64::min)
}

/// `D²(v_i, C) / Σ_j D²(v_j, C)`.
pub fn exact_d2_distribution<C: AsRef<[f64]>>(ds: &DataSet, centers: &[C]) -> Result<DiscreteDistribution> {
    if centers.is_empty() {
        return Err(Error::Empty);
    }
    let weights: Vec<f64> = ds.rows().map(|r| nearest_sq_dist(r, centers)).collect();
    DiscreteDistribution::from_weights(&weights)
}

/// `Φ(V, C) = Σ_v min_c ‖v − c‖²`, compensated.
pub fn exact_cost<C: AsRef<[f64]> + Sync>(ds: &DataSet, centers: &[C]) -> f64 {
    assert!(!centers.is_empty(), "cost needs at least one center");
    par::sum_by(ds.n_points(), |i| nearest_sq_dist(ds.row(i), centers))
}

/// Cost restricted to a subset of rows.
pub fn subset_cost<C: AsRef<[f64]>>(ds: &DataSet, rows: &[usize], centers: &[C]) -> f64 {
    rows.iter()
        .map(|&i| nearest_sq_dist(ds.row(i), centers))
        .collect::<KahanSum>()
        .value()
}

/// Coordinate-wise mean of the given rows.
pub fn centroid_of(ds: &DataSet, rows: &[usize]) -> Vec<f64> {
    let mut acc = vec![KahanSum::new(); ds.n_dims()];
    for &i in rows {
        for (a, x) in acc.iter_mut().zip(ds.row(i)) {
            a.add(*x);
        }
    }
    acc.iter().map(|a| a.value() / rows.len() as f64).collect()
}

#[derive(Debug, Clone, Copy)]
pub struct BruteForceCaps {
    pub max_points: usize,
    pub max_k: usize,
}

impl Default for BruteForceCaps {
    fn default() -> Self {
        Self {
            max_points: 14,
            max_k: 3,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct OptimalClustering {
    /// Label of each point, canonical (labels appear in first-occurrence order).
    pub labels: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub cost: f64,
}

pub fn optimal_kmeans_bruteforce(ds: &DataSet, k: usize) -> Result<OptimalClustering> {
    optimal_kmeans_with_caps(ds, k, BruteForceCaps::default())
}

/// Enumerate every partition of the points into exactly `min(k, N)`
/// non-empty parts (restricted-growth labelings) and keep the one with the
/// smallest within-part cost. Optimal centers of a fixed part are its
/// centroid, so this is exact.
pub fn optimal_kmeans_with_caps(ds: &DataSet, k: usize, caps: BruteForceCaps) -> Result<OptimalClustering> {
    let n = ds.n_points();
    if k == 0 {
        return Err(Error::InvalidParameter("k must be >= 1".into()));
    }
    if n > caps.max_points || k > caps.max_k {
        return Err(Error::CapsExceeded(format!(
            "N={n}, k={k} exceeds N<={}, k<={}",
            caps.max_points, caps.max_k
        )));
    }
    let parts = k.min(n);
    let d = ds.n_dims();

    struct Search<'a> {
        ds: &'a DataSet,
        parts: usize,
        labels: Vec<usize>,
        sums: Vec<Vec<f64>>,
        sq: Vec<f64>,
        counts: Vec<usize>,
        best: Option<(f64, Vec<usize>)>,
    }

    impl Search<'_> {
        fn cost(&self) -> f64 {
            (0..self.parts)
                .map(|p| {
                    let c = self.counts[p] as f64;
                    let mu2: f64 = self.sums[p].iter().map(|s| s * s).sum::<f64>() / c;
                    (self.sq[p] - mu2).max(0.0)
                })
                .sum()
        }

        fn go(&mut self, i: usize, used: usize) {
            let n = self.labels.len();
            if n - i < self.parts - used {
                return;
            }
            if i == n {
                let c = self.cost();
                if self.best.as_ref().is_none_or(|(b, _)| c < *b) {
                    self.best = Some((c, self.labels.clone()));
                }
                return;
            }
            let top = (used + 1).min(self.parts);
            let row = self.ds.row(i).to_vec();
            let r2: f64 = row.iter().map(|x| x * x).sum();
            for l in 0..top {
                self.labels[i] = l;
                self.counts[l] += 1;
                self.sq[l] += r2;
                self.sums[l].iter_mut().zip(&row).for_each(|(s, x)| *s += x);
                self.go(i + 1, used.max(l + 1));
                self.counts[l] -= 1;
                self.sq[l] -= r2;
                self.sums[l].iter_mut().zip(&row).for_each(|(s, x)| *s -= x);
            }
        }
    }

    let mut s = Search {
        ds,
        parts,
        labels: vec![0; n],
        sums: vec![vec![0.0; d]; parts],
        sq: vec![0.0; parts],
        counts: vec![0; parts],
        best: None,
    };
    s.go(0, 0);
    let (_, labels) = s.best.expect("at least one partition exists");
    let centers: Vec<Vec<f64>> = (0..parts)
        .map(|p| {
            let rows: Vec<usize> = (0..n).filter(|&i| labels[i] == p).collect();
            centroid_of(ds, &rows)
        })
        .collect();
    let cost = exact_cost(ds, &centers);
    Ok(OptimalClustering {
        labels,
        centers,
        cost,
    })
}

/// `½ Σ |p_i − q_i|`.
pub fn tv_distance(p: &DiscreteDistribution, q: &DiscreteDistribution) -> Result<f64> {
    if p.len() != q.len() {
        return Err(Error::DimensionMismatch {
            expected: p.len(),
            found: q.len(),
        });
    }
    Ok(0.5
        * p.probs
            .iter()
            .zip(&q.probs)
            .map(|(a, b)| (a - b).abs())
            .sum::<f64>())
}

/// Histogram of `n_samples` draws from `sampler`, normalised.
pub fn empirical_distribution<R, F>(
    mut sampler: F,
    n_samples: usize,
    n_bins: usize,
    rng: &mut R,
) -> Result<DiscreteDistribution>
where
    R: Rng + ?Sized,
    F: FnMut(&mut R) -> Result<usize>,
{
    if n_samples == 0 {
        return Err(Error::InvalidParameter("n_samples must be >= 1".into()));
    }
    let mut counts = vec![0u64; n_bins];
    for _ in 0..n_samples {
        let i = sampler(rng)?;
        let len = counts.len();
        *counts.get_mut(i).ok_or(Error::IndexOutOfRange { index: i, len })? += 1;
    }
    let weights: Vec<f64> = counts.iter().map(|&c| c as f64).collect();
    DiscreteDistribution::from_weights(&weights)
}
