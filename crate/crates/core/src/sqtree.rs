//! Sample-query trees.
//!
//! [`SqVector`] keeps the signed entries of a vector at the leaves of a
//! complete binary tree whose internal nodes hold sums of squared entries.
//! That gives O(1) squared-norm readout, O(log n) updates and O(log n)
//! sampling of an index with probability `v(i)² / ‖v‖²`. [`SqMatrix`] is one
//! such tree per row plus a tree over the row norms.

use rand::Rng;

use crate::data::DataSet;
use crate::error::{Error, Result};
use crate::par;

#[derive(Debug, Clone)]
pub struct SqVector {
    len: usize,
    /// Leaf count, a power of two `>= len`.
    padded: usize,
    values: Vec<f64>,
    /// Heap layout: `tree[1]` is the root, leaf `i` lives at `padded + i`.
    /// `tree[0]` is unused.
    tree: Vec<f64>,
    node_writes: u64,
}

impl SqVector {
    pub fn from_values(values: &[f64]) -> Result<Self> {
        if values.is_empty() {
            return Err(Error::Empty);
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        let mut v = Self::with_padding(values.to_vec(), values.len().next_power_of_two());
        v.rebuild();
        Ok(v)
    }

    fn with_padding(values: Vec<f64>, padded: usize) -> Self {
        Self {
            len: values.len(),
            padded,
            values,
            tree: vec![0.0; 2 * padded],
            node_writes: 0,
        }
    }

    /// Recompute every node from the leaves in O(n).
    pub fn rebuild(&mut self) {
        let p = self.padded;
        self.tree.iter_mut().for_each(|x| *x = 0.0);
        for (i, v) in self.values.iter().enumerate() {
            self.tree[p + i] = v * v;
        }
        for n in (1..p).rev() {
            self.tree[n] = self.tree[2 * n] + self.tree[2 * n + 1];
        }
    }

    #[inline]
    pub fn len(&self) -> usize {
        self.len
    }

    #[inline]
    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    pub fn padded_len(&self) -> usize {
        self.padded
    }

    /// Σ v(i)², read from the root.
    #[inline]
    pub fn norm2(&self) -> f64 {
        self.tree[1]
    }

    #[inline]
    pub fn norm(&self) -> f64 {
        self.norm2().sqrt()
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Entry `i` with its sign.
    pub fn query(&self, i: usize) -> Result<f64> {
        self.values
            .get(i)
            .copied()
            .ok_or(Error::IndexOutOfRange {
                index: i,
                len: self.len,
            })
    }

    /// Unchecked variant of [`query`](Self::query) for hot loops.
    #[inline]
    pub fn get(&self, i: usize) -> f64 {
        self.values[i]
    }

    pub fn update(&mut self, i: usize, x: f64) -> Result<()> {
        if i >= self.len {
            return Err(Error::IndexOutOfRange {
                index: i,
                len: self.len,
            });
        }
        if !x.is_finite() {
            return Err(Error::NonFinite(i));
        }
        self.values[i] = x;
        let mut node = self.padded + i;
        self.tree[node] = x * x;
        self.node_writes += 1;
        while node > 1 {
            node /= 2;
            self.tree[node] = self.tree[2 * node] + self.tree[2 * node + 1];
            self.node_writes += 1;
        }
        Ok(())
    }

    /// Append an entry, doubling the leaf capacity when full.
    pub fn push(&mut self, x: f64) -> Result<usize> {
        if !x.is_finite() {
            return Err(Error::NonFinite(self.len));
        }
        if self.len == self.padded {
            let mut values = std::mem::take(&mut self.values);
            values.push(x);
            *self = Self::with_padding(values, (self.padded * 2).max(1));
            self.rebuild();
        } else {
            self.values.push(x);
            self.len += 1;
            self.update(self.len - 1, x)?;
        }
        Ok(self.len - 1)
    }

    /// Draw `i` with probability `v(i)² / ‖v‖²`.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        self.sample_with(rng.random::<f64>())
    }

    /// Descend the tree with a uniform variate `u01 ∈ [0, 1)`.
    ///
    /// At each node the walk goes left iff the remaining mass is strictly
    /// below the left child's sum, or the right child is empty.
    pub fn sample_with(&self, u01: f64) -> Result<usize> {
        let root = self.norm2();
        if root <= 0.0 {
            return Err(Error::ZeroVector);
        }
        let mut u = u01 * root;
        let mut node = 1;
        while node < self.padded {
            let left = self.tree[2 * node];
            let right = self.tree[2 * node + 1];
            if u < left || right == 0.0 {
                node *= 2;
            } else {
                u -= left;
                node = 2 * node + 1;
            }
        }
        Ok(node - self.padded)
    }

    /// Internal node sums, heap-indexed from 1.
    pub fn node_sums(&self) -> &[f64] {
        &self.tree
    }

    /// Total node writes performed by [`update`](Self::update) so far.
    pub fn node_writes(&self) -> u64 {
        self.node_writes
    }

    /// Largest relative gap between an internal node and the sum of its
    /// children. Zero after a fresh build.
    pub fn max_relative_defect(&self) -> f64 {
        (1..self.padded)
            .map(|n| {
                let s = self.tree[2 * n] + self.tree[2 * n + 1];
                let gap = (self.tree[n] - s).abs();
                if gap == 0.0 {
                    0.0
                } else {
                    gap / s.abs().max(f64::MIN_POSITIVE)
                }
            })
            .fold(0.0, f64::max)
    }
}

/// SQ access to a matrix: a tree per row and a tree over row norms.
#[derive(Debug, Clone)]
pub struct SqMatrix {
    n_cols: usize,
    rows: Vec<SqVector>,
    row_norms: SqVector,
}

impl SqMatrix {
    pub fn from_dataset(ds: &DataSet) -> Self {
        let rows: Vec<SqVector> = par::map_indices(ds.n_points(), |i| {
            SqVector::from_values(ds.row(i)).expect("dataset rows are finite and non-empty")
        });
        let norms: Vec<f64> = rows.iter().map(SqVector::norm).collect();
        let row_norms = SqVector::from_values(&norms).expect("row norms are finite");
        Self {
            n_cols: ds.n_dims(),
            rows,
            row_norms,
        }
    }

    #[inline]
    pub fn n_rows(&self) -> usize {
        self.rows.len()
    }

    #[inline]
    pub fn n_cols(&self) -> usize {
        self.n_cols
    }

    #[inline]
    pub fn row(&self, i: usize) -> &SqVector {
        &self.rows[i]
    }

    pub fn row_norms(&self) -> &SqVector {
        &self.row_norms
    }

    pub fn entry(&self, i: usize, j: usize) -> Result<f64> {
        self.rows
            .get(i)
            .ok_or(Error::IndexOutOfRange {
                index: i,
                len: self.rows.len(),
            })?
            .query(j)
    }

    #[inline]
    pub fn row_norm2(&self, i: usize) -> f64 {
        self.rows[i].norm2()
    }

    /// ‖A‖_F², the root of the row-norm tree.
    #[inline]
    pub fn frobenius2(&self) -> f64 {
        self.row_norms.norm2()
    }

    /// Row `i` with probability `‖A(i,·)‖² / ‖A‖_F²`.
    pub fn sample_row<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<usize> {
        self.row_norms.sample(rng)
    }

    /// Column `j` with probability `A(i,j)² / ‖A(i,·)‖²`.
    pub fn sample_in_row<R: Rng + ?Sized>(&self, i: usize, rng: &mut R) -> Result<usize> {
        self.rows
            .get(i)
            .ok_or(Error::IndexOutOfRange {
                index: i,
                len: self.rows.len(),
            })?
            .sample(rng)
    }

    pub fn update_row_entry(&mut self, i: usize, j: usize, x: f64) -> Result<()> {
        let row = self.rows.get_mut(i).ok_or(Error::IndexOutOfRange {
            index: i,
            len: self.row_norms.len(),
        })?;
        row.update(j, x)?;
        let norm = row.norm();
        self.row_norms.update(i, norm)
    }

    /// Append a point; returns its row index.
    pub fn push_row(&mut self, values: &[f64]) -> Result<usize> {
        if values.len() != self.n_cols {
            return Err(Error::DimensionMismatch {
                expected: self.n_cols,
                found: values.len(),
            });
        }
        let row = SqVector::from_values(values)?;
        let norm = row.norm();
        self.rows.push(row);
        self.row_norms.push(norm)
    }

    /// Largest relative gap between `row_norms.leaf(i)²` and `rows[i].root`.
    pub fn max_row_norm_defect(&self) -> f64 {
        self.rows
            .iter()
            .zip(self.row_norms.values())
            .map(|(r, &n)| {
                let gap = (n * n - r.norm2()).abs();
                if gap == 0.0 {
                    0.0
                } else {
                    gap / r.norm2().max(f64::MIN_POSITIVE)
                }
            })
            .fold(0.0, f64::max)
    }
}
