//! Sampled inner products.
//!
//! Drawing `t ~ D_a` and returning `c(t)·‖a‖²/a(t)` gives an unbiased
//! estimate of `⟨a, c⟩` that reads a single coordinate of each vector. The
//! median of several group means concentrates it. Distances then follow from
//! `‖a − c‖² = ‖a‖² + ‖c‖² − 2⟨a, c⟩` with both norms read from SQ trees.

use rand::Rng;
use rand_distr::{Binomial, Distribution};

use crate::error::{Error, Result};
use crate::osq::median;
use crate::sqtree::SqVector;

/// Anything whose entries can be read by index.
pub trait QueryVector {
    fn len(&self) -> usize;
    fn entry(&self, i: usize) -> f64;
    fn norm2(&self) -> f64;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }
}

impl QueryVector for SqVector {
    fn len(&self) -> usize {
        SqVector::len(self)
    }
    fn entry(&self, i: usize) -> f64 {
        self.get(i)
    }
    fn norm2(&self) -> f64 {
        SqVector::norm2(self)
    }
}

impl QueryVector for [f64] {
    fn len(&self) -> usize {
        <[f64]>::len(self)
    }
    fn entry(&self, i: usize) -> f64 {
        self[i]
    }
    fn norm2(&self) -> f64 {
        self.iter().map(|x| x * x).sum()
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IpEstimatorConfig {
    pub eps: f64,
    pub delta: f64,
    pub group_size: usize,
    pub n_groups: usize,
}

/// Upper limit on the draws per group; keeps pathological ratios finite.
pub const MAX_GROUP_SIZE: usize = 1 << 24;

impl IpEstimatorConfig {
    pub fn new(eps: f64, delta: f64, group_size: usize, n_groups: usize) -> Result<Self> {
        if group_size == 0 {
            return Err(Error::InvalidParameter("group_size must be >= 1".into()));
        }
        if n_groups == 0 || n_groups.is_multiple_of(2) {
            return Err(Error::InvalidParameter(format!(
                "n_groups must be odd and >= 1, got {n_groups}"
            )));
        }
        Ok(Self {
            eps,
            delta,
            group_size,
            n_groups,
        })
    }

    /// Sizes from a relative-error target. `variance_ratio` bounds
    /// `‖a‖²‖c‖²` over the squared squared-distance floor; the group size is
    /// `⌈9·ratio/ε²⌉` and the group count `2⌈3 ln(1/δ)⌉ + 1`.
    pub fn from_target(eps: f64, delta: f64, variance_ratio: f64) -> Self {
        let g = (9.0 * variance_ratio.max(0.0) / (eps * eps)).ceil();
        let group_size = if g.is_finite() {
            (g as usize).clamp(1, MAX_GROUP_SIZE)
        } else {
            MAX_GROUP_SIZE
        };
        let n_groups = 2 * ((3.0 * (1.0 / delta).ln()).ceil().max(0.0) as usize) + 1;
        Self {
            eps,
            delta,
            group_size,
            n_groups,
        }
    }

    pub fn total_draws(&self) -> usize {
        self.group_size * self.n_groups
    }
}

/// One draw of the estimator. `a` must have positive norm.
#[inline]
pub fn inner_draw<C, R>(a: &SqVector, c: &C, rng: &mut R) -> f64
where
    C: QueryVector + ?Sized,
    R: Rng + ?Sized,
{
    let t = a.sample(rng).expect("caller checked ‖a‖ > 0");
    c.entry(t) * a.norm2() / a.get(t)
}

/// Mean of `n` draws. When `a` has few coordinates compared with `n`, the
/// outcome counts are drawn as one multinomial vector instead, which has the
/// same distribution and costs O(len) rather than O(n).
pub fn group_mean<C, R>(a: &SqVector, c: &C, n: usize, rng: &mut R) -> f64
where
    C: QueryVector + ?Sized,
    R: Rng + ?Sized,
{
    if n < MULTINOMIAL_FACTOR * a.len() {
        return (0..n).map(|_| inner_draw(a, c, rng)).sum::<f64>() / n as f64;
    }
    let norm2 = a.norm2();
    let last = a.values().iter().rposition(|&x| x != 0.0);
    let mut left = n as u64;
    let mut mass = 1.0;
    let mut acc = 0.0;
    for t in 0..a.len() {
        if left == 0 {
            break;
        }
        let x = a.get(t);
        if x == 0.0 {
            continue;
        }
        let p = x * x / norm2;
        let q = (p / mass).clamp(0.0, 1.0);
        // the last outcome with mass takes whatever is left
        let count = if q >= 1.0 || Some(t) == last {
            left
        } else {
            Binomial::new(left, q).expect("q in [0, 1]").sample(rng)
        };
        acc += count as f64 * (c.entry(t) * norm2 / x);
        left -= count;
        mass -= p;
    }
    acc / n as f64
}

/// Group sizes at least this multiple of the dimension use multinomial counts.
const MULTINOMIAL_FACTOR: usize = 8;

pub fn estimate_inner<C, R>(a: &SqVector, c: &C, cfg: &IpEstimatorConfig, rng: &mut R) -> Result<f64>
where
    C: QueryVector + ?Sized,
    R: Rng + ?Sized,
{
    if a.len() != c.len() {
        return Err(Error::DimensionMismatch {
            expected: a.len(),
            found: c.len(),
        });
    }
    if a.norm2() <= 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut means: Vec<f64> = (0..cfg.n_groups)
        .map(|_| group_mean(a, c, cfg.group_size, rng))
        .collect();
    Ok(median(&mut means))
}

/// `√max(0, ‖a‖² + ‖c‖² − 2·⟨a,c⟩_est)`. A zero `a` makes the inner
/// product exactly zero.
pub fn approx_distance<C, R>(a: &SqVector, c: &C, cfg: &IpEstimatorConfig, rng: &mut R) -> Result<f64>
where
    C: QueryVector + ?Sized,
    R: Rng + ?Sized,
{
    let inner = if a.norm2() == 0.0 {
        if a.len() != c.len() {
            return Err(Error::DimensionMismatch {
                expected: a.len(),
                found: c.len(),
            });
        }
        0.0
    } else {
        estimate_inner(a, c, cfg, rng)?
    };
    Ok((a.norm2() + c.norm2() - 2.0 * inner).max(0.0).sqrt())
}
