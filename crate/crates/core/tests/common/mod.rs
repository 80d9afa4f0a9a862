#![allow(dead_code)]

use qikmpp::oracle::{empirical_distribution, tv_distance, DiscreteDistribution};
use qikmpp::DataSet;
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Random instance with `n` points in `d` dims; coordinates on a coarse
/// grid so some instances contain duplicates.
pub fn random_instance(n: usize, d: usize, seed: u64) -> DataSet {
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|_| (0..d).map(|_| (r.random_range(-20i32..=20) as f64) * 0.25).collect())
        .collect();
    DataSet::from_rows(&rows).unwrap()
}

/// `m` distinct row indices.
pub fn distinct_rows(n: usize, m: usize, seed: u64) -> Vec<usize> {
    let mut r = rng(seed ^ 0x5eed);
    let mut rows: Vec<usize> = (0..n).collect();
    for i in 0..m {
        let j = r.random_range(i..n);
        rows.swap(i, j);
    }
    rows.truncate(m);
    rows
}

pub fn ring(n: usize, radius: f64) -> DataSet {
    let rows: Vec<[f64; 2]> = (0..n)
        .map(|i| {
            let t = std::f64::consts::TAU * i as f64 / n as f64;
            [radius * t.cos(), radius * t.sin()]
        })
        .collect();
    DataSet::from_rows(&rows).unwrap()
}

pub fn grid(side: usize) -> DataSet {
    let rows: Vec<[f64; 2]> = (0..side * side).map(|i| [(i % side) as f64, (i / side) as f64]).collect();
    DataSet::from_rows(&rows).unwrap()
}

/// Two Gaussian blobs of `n/2` points, `gap` apart along the first axis.
pub fn two_blobs(n: usize, d: usize, gap: f64, seed: u64) -> DataSet {
    use rand_distr::{Distribution, StandardNormal};
    let mut r = rng(seed);
    let rows: Vec<Vec<f64>> = (0..n)
        .map(|i| {
            (0..d)
                .map(|j| {
                    let z: f64 = StandardNormal.sample(&mut r);
                    z + if j == 0 && i % 2 == 1 { gap } else { 0.0 }
                })
                .collect()
        })
        .collect();
    DataSet::from_rows(&rows).unwrap()
}

pub fn tv_of<F>(sampler: F, exact: &DiscreteDistribution, n_samples: usize, r: &mut ChaCha8Rng) -> f64
where
    F: FnMut(&mut ChaCha8Rng) -> qikmpp::Result<usize>,
{
    let emp = empirical_distribution(sampler, n_samples, exact.len(), r).unwrap();
    tv_distance(&emp, exact).unwrap()
}

/// Generator whose `random::<f64>()` is always `u`.
pub struct FixedUniform(u64);

impl FixedUniform {
    pub fn new(u: f64) -> Self {
        Self(((u * (1u64 << 53) as f64) as u64) << 11)
    }
}

impl RngCore for FixedUniform {
    fn next_u32(&mut self) -> u32 {
        (self.0 >> 32) as u32
    }

    fn next_u64(&mut self) -> u64 {
        self.0
    }

    fn fill_bytes(&mut self, dst: &mut [u8]) {
        for (i, b) in dst.iter_mut().enumerate() {
            *b = (self.0 >> (8 * (i % 8))) as u8;
        }
    }
}
