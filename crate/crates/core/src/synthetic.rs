//! Gaussian-mixture test data.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use serde::Serialize;

use crate::data::DataSet;
use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MixtureSpec {
    pub n_points: usize,
    pub n_dims: usize,
    pub n_components: usize,
    /// Distance between any two component means.
    pub separation: f64,
    /// Per-coordinate standard deviation.
    pub sigma: f64,
    pub seed: u64,
}

impl MixtureSpec {
    /// `n` points in 16 dimensions from 10 components 1000σ apart.
    pub fn well_separated(n_points: usize, seed: u64) -> Self {
        Self {
            n_points,
            n_dims: 16,
            n_components: 10,
            separation: 1000.0,
            sigma: 1.0,
            seed,
        }
    }

    /// Component `j`'s mean: `(S/√2)·e_j`, so all means are `S` apart.
    pub fn mean(&self, j: usize) -> Vec<f64> {
        let mut m = vec![0.0; self.n_dims];
        m[j] = self.separation / std::f64::consts::SQRT_2;
        m
    }

    /// Point `i` belongs to component `i mod n_components`.
    pub fn generate(&self) -> Result<DataSet> {
        if self.n_points == 0 || self.n_dims == 0 || self.n_components == 0 {
            return Err(Error::Empty);
        }
        if self.n_components > self.n_dims {
            return Err(Error::InvalidParameter(format!(
                "{} components need at least as many dimensions (got {})",
                self.n_components, self.n_dims
            )));
        }
        if !(self.sigma >= 0.0 && self.sigma.is_finite() && self.separation.is_finite()) {
            return Err(Error::InvalidParameter("sigma and separation must be finite, sigma >= 0".into()));
        }
        let noise = Normal::new(0.0, self.sigma).map_err(|e| Error::InvalidParameter(e.to_string()))?;
        let mut rng = ChaCha8Rng::seed_from_u64(self.seed);
        let means: Vec<Vec<f64>> = (0..self.n_components).map(|j| self.mean(j)).collect();
        let mut values = Vec::with_capacity(self.n_points * self.n_dims);
        for i in 0..self.n_points {
            let m = &means[i % self.n_components];
            values.extend(m.iter().map(|&x| x + noise.sample(&mut rng)));
        }
        DataSet::new(self.n_points, self.n_dims, values)
    }
}
