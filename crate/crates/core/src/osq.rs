//! Oversampling-and-query handles and rejection sampling.
//!
//! A handle exposes exact queries of a nonnegative vector `w` together with
//! SQ access to a dominating vector `w̃` (`w̃(i)² ≥ w(i)²`). Drawing `i` from
//! `D_w̃` and accepting with probability `w(i)²/w̃(i)²` yields an exact sample
//! from `D_w`; the expected number of trials is `φ = ‖w̃‖²/‖w‖²`.

use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::approx_ip::{self, IpEstimatorConfig};
use crate::data::sq_dist;
use crate::error::{Error, Result};
use crate::par;
use crate::sqtree::{SqMatrix, SqVector};

pub trait OsqHandle: Sync {
    fn len(&self) -> usize;

    fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// The entry `w(i)`.
    fn query_true(&self, i: usize) -> f64;

    /// The value the rejection step compares against `w̃(i)`. Exact handles
    /// return [`query_true`](Self::query_true); noisy handles return an
    /// estimate.
    fn query_estimate(&self, i: usize, _rng: &mut dyn RngCore) -> f64 {
        self.query_true(i)
    }

    /// The dominating entry `w̃(i)`.
    fn query_tilde(&self, i: usize) -> f64;

    /// `‖w̃‖²`.
    fn norm2_tilde(&self) -> f64;

    /// Draw from `D_w̃`. Only called when `norm2_tilde() > 0`.
    fn sample_tilde(&self, rng: &mut dyn RngCore) -> usize;

    /// Rough coordinate reads per `query_true` call.
    fn query_cost(&self) -> usize;
}

impl<T: OsqHandle + ?Sized> OsqHandle for &T {
    fn len(&self) -> usize {
        (**self).len()
    }
    fn query_true(&self, i: usize) -> f64 {
        (**self).query_true(i)
    }
    fn query_estimate(&self, i: usize, rng: &mut dyn RngCore) -> f64 {
        (**self).query_estimate(i, rng)
    }
    fn query_tilde(&self, i: usize) -> f64 {
        (**self).query_tilde(i)
    }
    fn norm2_tilde(&self) -> f64 {
        (**self).norm2_tilde()
    }
    fn sample_tilde(&self, rng: &mut dyn RngCore) -> usize {
        (**self).sample_tilde(rng)
    }
    fn query_cost(&self) -> usize {
        (**self).query_cost()
    }
}

/// Plain SQ access viewed as a 1-oversampling handle on `|v|`.
#[derive(Debug, Clone)]
pub struct TightOsq {
    v: SqVector,
}

impl TightOsq {
    pub fn new(v: SqVector) -> Self {
        Self { v }
    }
}

impl OsqHandle for TightOsq {
    fn len(&self) -> usize {
        self.v.len()
    }
    fn query_true(&self, i: usize) -> f64 {
        self.v.get(i).abs()
    }
    fn query_tilde(&self, i: usize) -> f64 {
        self.v.get(i).abs()
    }
    fn norm2_tilde(&self) -> f64 {
        self.v.norm2()
    }
    fn sample_tilde(&self, rng: &mut dyn RngCore) -> usize {
        self.v.sample(rng).expect("caller checked norm2_tilde > 0")
    }
    fn query_cost(&self) -> usize {
        1
    }
}

/// Access to `w(i) = ‖V(i,·) − c‖` for a single center `c`, dominated by
/// `w̃(i) = √(2(‖V(i,·)‖² + ‖c‖²))`.
#[derive(Debug, Clone)]
pub struct DistanceOsq<'a> {
    matrix: &'a SqMatrix,
    center: SqVector,
    center_norm2: f64,
    frobenius2: f64,
    n_center2: f64,
    p_matrix: f64,
}

pub fn distance_osq(matrix: &SqMatrix, center: SqVector) -> Result<DistanceOsq<'_>> {
    DistanceOsq::new(matrix, center)
}

impl<'a> DistanceOsq<'a> {
    pub fn new(matrix: &'a SqMatrix, center: SqVector) -> Result<Self> {
        if center.len() != matrix.n_cols() {
            return Err(Error::DimensionMismatch {
                expected: matrix.n_cols(),
                found: center.len(),
            });
        }
        let center_norm2 = center.norm2();
        let frobenius2 = matrix.frobenius2();
        let n_center2 = matrix.n_rows() as f64 * center_norm2;
        let total = frobenius2 + n_center2;
        let p_matrix = if total > 0.0 { frobenius2 / total } else { 0.0 };
        Ok(Self {
            matrix,
            center,
            center_norm2,
            frobenius2,
            n_center2,
            p_matrix,
        })
    }

    pub fn from_point(matrix: &'a SqMatrix, point: &[f64]) -> Result<Self> {
        Self::new(matrix, SqVector::from_values(point)?)
    }

    pub fn center(&self) -> &SqVector {
        &self.center
    }

    pub fn matrix(&self) -> &'a SqMatrix {
        self.matrix
    }

    /// Probability of drawing from the row-norm tree rather than uniformly.
    pub fn matrix_branch_probability(&self) -> f64 {
        self.p_matrix
    }

    #[inline]
    fn tilde2(&self, i: usize) -> f64 {
        2.0 * (self.matrix.row_norm2(i) + self.center_norm2)
    }
}

impl OsqHandle for DistanceOsq<'_> {
    fn len(&self) -> usize {
        self.matrix.n_rows()
    }

    #[inline]
    fn query_true(&self, i: usize) -> f64 {
        sq_dist(self.matrix.row(i).values(), self.center.values()).sqrt()
    }

    #[inline]
    fn query_tilde(&self, i: usize) -> f64 {
        self.tilde2(i).sqrt()
    }

    fn norm2_tilde(&self) -> f64 {
        2.0 * (self.frobenius2 + self.n_center2)
    }

    fn sample_tilde(&self, rng: &mut dyn RngCore) -> usize {
        if rng.random::<f64>() < self.p_matrix {
            self.matrix
                .sample_row(rng)
                .expect("matrix branch has positive mass")
        } else {
            rng.random_range(0..self.matrix.n_rows())
        }
    }

    fn query_cost(&self) -> usize {
        self.matrix.n_cols()
    }
}

/// Distance handle whose queries use the sampled inner-product estimate.
/// The dominating vector is inflated by `1 + ε` so that overestimated
/// distances stay (mostly) dominated.
#[derive(Debug, Clone)]
pub struct NoisyDistanceOsq<'a> {
    exact: DistanceOsq<'a>,
    eps: f64,
    query_delta: f64,
    floor2: f64,
}

impl<'a> NoisyDistanceOsq<'a> {
    /// `min_dist` lower-bounds the distance between distinct points; it sets
    /// the per-query sample count through the variance ratio
    /// `‖a‖²‖c‖² / min_dist⁴`.
    pub fn new(exact: DistanceOsq<'a>, eps: f64, query_delta: f64, min_dist: f64) -> Result<Self> {
        if !(eps > 0.0 && eps <= 1.0) {
            return Err(Error::InvalidParameter(format!("eps {eps} not in (0, 1]")));
        }
        if !(query_delta > 0.0 && query_delta < 1.0) {
            return Err(Error::InvalidParameter(format!(
                "query delta {query_delta} not in (0, 1)"
            )));
        }
        if !(min_dist > 0.0 && min_dist.is_finite()) {
            return Err(Error::InvalidParameter(format!(
                "minimum distance {min_dist} must be positive"
            )));
        }
        Ok(Self {
            exact,
            eps,
            query_delta,
            floor2: min_dist * min_dist,
        })
    }

    pub fn config_for_row(&self, i: usize) -> IpEstimatorConfig {
        let a2 = self.exact.matrix.row_norm2(i);
        let ratio = a2 * self.exact.center_norm2 / (self.floor2 * self.floor2);
        IpEstimatorConfig::from_target(self.eps, self.query_delta, ratio)
    }

    fn inflation(&self) -> f64 {
        1.0 + self.eps
    }
}

impl OsqHandle for NoisyDistanceOsq<'_> {
    fn len(&self) -> usize {
        self.exact.len()
    }

    fn query_true(&self, i: usize) -> f64 {
        self.exact.query_true(i)
    }

    fn query_estimate(&self, i: usize, rng: &mut dyn RngCore) -> f64 {
        let cfg = self.config_for_row(i);
        approx_ip::approx_distance(self.exact.matrix.row(i), &self.exact.center, &cfg, rng)
            .unwrap_or_else(|_| self.exact.query_true(i))
    }

    fn query_tilde(&self, i: usize) -> f64 {
        self.inflation() * self.exact.query_tilde(i)
    }

    fn norm2_tilde(&self) -> f64 {
        self.inflation().powi(2) * self.exact.norm2_tilde()
    }

    fn sample_tilde(&self, rng: &mut dyn RngCore) -> usize {
        self.exact.sample_tilde(rng)
    }

    fn query_cost(&self) -> usize {
        // one config per query; use a unit-ratio config as the typical size
        let cfg = IpEstimatorConfig::from_target(self.eps, self.query_delta, 1.0);
        cfg.group_size * cfg.n_groups
    }
}

/// Access to `w(i) = min_j u_j(i)` over several branch handles, dominated by
/// `w̃(i) = √((1/m) Σ_j ũ_j(i)²)`.
#[derive(Debug, Clone)]
pub struct MinOsq<H> {
    branches: Vec<H>,
    /// Running sums of the branch weights `‖ũ_j‖²`.
    cumulative: Vec<f64>,
    total: f64,
}

pub fn min_osq<H: OsqHandle>(branches: Vec<H>) -> Result<MinOsq<H>> {
    MinOsq::new(branches)
}

impl<H: OsqHandle> MinOsq<H> {
    pub fn new(branches: Vec<H>) -> Result<Self> {
        let n = branches.first().ok_or(Error::Empty)?.len();
        if let Some(b) = branches.iter().find(|b| b.len() != n) {
            return Err(Error::DimensionMismatch {
                expected: n,
                found: b.len(),
            });
        }
        let mut acc = 0.0;
        let cumulative = branches
            .iter()
            .map(|b| {
                acc += b.norm2_tilde();
                acc
            })
            .collect();
        Ok(Self {
            branches,
            cumulative,
            total: acc,
        })
    }

    pub fn branches(&self) -> &[H] {
        &self.branches
    }

    /// Add a branch. The cached branch distribution is extended in O(1).
    pub fn push(&mut self, branch: H) -> Result<()> {
        if branch.len() != self.len() {
            return Err(Error::DimensionMismatch {
                expected: self.len(),
                found: branch.len(),
            });
        }
        self.total += branch.norm2_tilde();
        self.cumulative.push(self.total);
        self.branches.push(branch);
        Ok(())
    }

    fn m(&self) -> f64 {
        self.branches.len() as f64
    }
}

impl<H: OsqHandle> OsqHandle for MinOsq<H> {
    fn len(&self) -> usize {
        self.branches[0].len()
    }

    fn query_true(&self, i: usize) -> f64 {
        self.branches
            .iter()
            .map(|b| b.query_true(i))
            .fold(f64::INFINITY, f64::min)
    }

    fn query_estimate(&self, i: usize, rng: &mut dyn RngCore) -> f64 {
        let mut best = f64::INFINITY;
        for b in &self.branches {
            best = best.min(b.query_estimate(i, rng));
        }
        best
    }

    fn query_tilde(&self, i: usize) -> f64 {
        let s: f64 = self.branches.iter().map(|b| b.query_tilde(i).powi(2)).sum();
        (s / self.m()).sqrt()
    }

    fn norm2_tilde(&self) -> f64 {
        self.total / self.m()
    }

    fn sample_tilde(&self, rng: &mut dyn RngCore) -> usize {
        if self.branches.len() == 1 {
            return self.branches[0].sample_tilde(rng);
        }
        let u = rng.random::<f64>() * self.total;
        let j = self
            .cumulative
            .partition_point(|&c| c <= u)
            .min(self.branches.len() - 1);
        self.branches[j].sample_tilde(rng)
    }

    fn query_cost(&self) -> usize {
        self.branches.iter().map(OsqHandle::query_cost).sum()
    }
}

/// Outcome of a successful rejection-sampling run.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Accepted {
    pub index: usize,
    /// Trials used, including the accepted one.
    pub trials: u64,
    /// Trials whose acceptance ratio exceeded 1 and was clamped. Always zero
    /// for exact handles.
    pub clamped: u64,
}

/// `⌈16 φ̂ ln(1/δ)⌉`, at least one trial.
pub fn trial_budget(phi_hat: f64, delta: f64) -> u64 {
    let b = (16.0 * phi_hat.max(1.0) * (1.0 / delta).ln().max(1.0)).ceil();
    if b.is_finite() && b < u64::MAX as f64 {
        (b as u64).max(1)
    } else {
        u64::MAX
    }
}

#[inline]
fn trial<H: OsqHandle + ?Sized>(h: &H, rng: &mut dyn RngCore, clamped: &mut u64) -> Option<usize> {
    let i = h.sample_tilde(rng);
    let tilde = h.query_tilde(i);
    if tilde == 0.0 {
        return None;
    }
    let w = h.query_estimate(i, rng);
    let mut ratio = (w * w) / (tilde * tilde);
    if ratio > 1.0 {
        *clamped += 1;
        ratio = 1.0;
    }
    (rng.random::<f64>() < ratio).then_some(i)
}

/// Sample from `D_w` by rejection against `D_w̃`, giving up after `budget`
/// trials.
pub fn rejection_sample<H, R>(h: &H, rng: &mut R, budget: u64) -> Result<Accepted>
where
    H: OsqHandle + ?Sized,
    R: Rng,
{
    if h.norm2_tilde() <= 0.0 {
        return Err(Error::ZeroVector);
    }
    let mut clamped = 0;
    for t in 1..=budget {
        if let Some(index) = trial(h, rng, &mut clamped) {
            return Ok(Accepted {
                index,
                trials: t,
                clamped,
            });
        }
    }
    Err(Error::SamplingExhausted { budget })
}

struct Lane {
    rng: ChaCha8Rng,
    /// First accepting `(position, index)` in the current batch.
    hit: Option<(usize, usize)>,
    clamped: u64,
}

/// Rejection sampling spread over `workers` independent streams.
///
/// Trials are laid out in a fixed order `(batch, position, worker)` and the
/// first accepted trial in that order wins. The order does not depend on the
/// outcomes, so the winner is exactly `D_w`-distributed, and the result does
/// not depend on how many threads actually run the workers.
pub fn rejection_sample_parallel<H>(
    h: &H,
    seed: u64,
    workers: usize,
    batch: usize,
    budget: u64,
) -> Result<Accepted>
where
    H: OsqHandle + ?Sized,
{
    if h.norm2_tilde() <= 0.0 {
        return Err(Error::ZeroVector);
    }
    let workers = workers.max(1);
    let batch = batch.max(1);
    let mut lanes: Vec<Lane> = (0..workers)
        .map(|w| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(w as u64);
            Lane {
                rng,
                hit: None,
                clamped: 0,
            }
        })
        .collect();
    let per_batch = (workers * batch) as u64;
    let mut used = 0u64;
    let mut clamped = 0u64;
    while used < budget {
        par::for_each_indexed(&mut lanes, |_, lane| {
            lane.hit = None;
            lane.clamped = 0;
            for pos in 0..batch {
                if let Some(i) = trial(h, &mut lane.rng, &mut lane.clamped) {
                    lane.hit = Some((pos, i));
                    break;
                }
            }
        });
        let winner = lanes
            .iter()
            .enumerate()
            .filter_map(|(w, lane)| lane.hit.map(|(pos, i)| (pos, w, i)))
            .min();
        if let Some((pos, w, index)) = winner {
            let trials = used + (pos * workers + w + 1) as u64;
            clamped += lanes.iter().map(|l| l.clamped).sum::<u64>();
            if trials <= budget {
                return Ok(Accepted {
                    index,
                    trials,
                    clamped,
                });
            }
            break;
        }
        clamped += lanes.iter().map(|l| l.clamped).sum::<u64>();
        used += per_batch;
    }
    Err(Error::SamplingExhausted { budget })
}

/// One draw of the unbiased estimator `X = (w(i)²/w̃(i)²) ‖w̃‖²`, `i ~ D_w̃`.
pub fn norm2_draw<H, R>(h: &H, rng: &mut R) -> f64
where
    H: OsqHandle + ?Sized,
    R: Rng,
{
    let i = h.sample_tilde(rng);
    let tilde = h.query_tilde(i);
    if tilde == 0.0 {
        return 0.0;
    }
    let w = h.query_estimate(i, rng);
    (w * w) / (tilde * tilde) * h.norm2_tilde()
}

pub(crate) fn median(values: &mut [f64]) -> f64 {
    values.sort_by(f64::total_cmp);
    let n = values.len();
    if n % 2 == 1 {
        values[n / 2]
    } else {
        0.5 * (values[n / 2 - 1] + values[n / 2])
    }
}

/// Median-of-means estimate of `‖w‖²`: `6⌈ln(1/δ)⌉` groups of
/// `⌈3 φ̂ / ε²⌉` draws each, where `phi_hat` bounds `‖w̃‖²/‖w‖²`.
pub fn estimate_norm2<H, R>(h: &H, eps: f64, delta: f64, phi_hat: f64, rng: &mut R) -> Result<f64>
where
    H: OsqHandle + ?Sized,
    R: Rng,
{
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::InvalidParameter(format!("eps {eps} not in (0, 1]")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(Error::InvalidParameter(format!("delta {delta} not in (0, 1)")));
    }
    if h.norm2_tilde() <= 0.0 {
        return Err(Error::ZeroVector);
    }
    let groups = 6 * ((1.0 / delta).ln().ceil() as usize).max(1);
    let size = ((3.0 * phi_hat.max(1.0) / (eps * eps)).ceil() as usize).max(1);
    let mut means: Vec<f64> = (0..groups)
        .map(|_| (0..size).map(|_| norm2_draw(h, rng)).sum::<f64>() / size as f64)
        .collect();
    Ok(median(&mut means))
}

/// Full-scan diagnostics for a handle; O(n · query cost).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PhiScan {
    pub norm2_true: f64,
    pub norm2_tilde_scan: f64,
    pub norm2_tilde_reported: f64,
    /// `‖w̃‖² / ‖w‖²`; infinite when `w = 0`.
    pub phi: f64,
    /// Number of indices with `w̃(i)² < w(i)²`.
    pub domination_violations: usize,
}

pub fn scan_phi<H: OsqHandle + ?Sized>(h: &H) -> PhiScan {
    let mut t = par::KahanSum::new();
    let mut s = par::KahanSum::new();
    let mut violations = 0;
    for i in 0..h.len() {
        let w = h.query_true(i);
        let wt = h.query_tilde(i);
        t.add(w * w);
        s.add(wt * wt);
        if wt * wt < w * w {
            violations += 1;
        }
    }
    let norm2_true = t.value();
    PhiScan {
        norm2_true,
        norm2_tilde_scan: s.value(),
        norm2_tilde_reported: h.norm2_tilde(),
        phi: h.norm2_tilde() / norm2_true,
        domination_violations: violations,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::data::DataSet;
    use approx::assert_relative_eq;

    fn three_points() -> SqMatrix {
        SqMatrix::from_dataset(&DataSet::from_rows(&[[0.0, 0.0], [1.0, 0.0], [0.0, 2.0]]).unwrap())
    }

    fn rng(seed: u64) -> ChaCha8Rng {
        ChaCha8Rng::seed_from_u64(seed)
    }

    #[test]
    fn distance_handle_formulas() {
        let m = three_points();
        let h = DistanceOsq::from_point(&m, &[0.0, 0.0]).unwrap();
        let w: Vec<f64> = (0..3).map(|i| h.query_true(i)).collect();
        assert_eq!(w, vec![0.0, 1.0, 2.0]);
        assert_relative_eq!(h.query_tilde(1), 2f64.sqrt());
        assert_relative_eq!(h.query_tilde(2), 8f64.sqrt());
        assert_eq!(h.norm2_tilde(), 10.0);
        let scan = scan_phi(&h);
        assert_eq!(scan.norm2_true, 5.0);
        assert_eq!(scan.phi, 2.0);
        assert_eq!(scan.domination_violations, 0);
    }

    #[test]
    fn distance_handle_branch_probability() {
        let m = three_points();
        let h = DistanceOsq::from_point(&m, &[1.0, 0.0]).unwrap();
        assert_relative_eq!(h.matrix_branch_probability(), 5.0 / 8.0);
        assert_eq!(h.query_true(1), 0.0);
    }

    #[test]
    fn distance_handle_dimension_check() {
        let m = three_points();
        assert!(matches!(
            DistanceOsq::from_point(&m, &[0.0, 0.0, 0.0]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn min_handle_point_mass() {
        let m = three_points();
        let hs = vec![
            DistanceOsq::from_point(&m, &[0.0, 0.0]).unwrap(),
            DistanceOsq::from_point(&m, &[0.0, 2.0]).unwrap(),
        ];
        let min = MinOsq::new(hs).unwrap();
        let w: Vec<f64> = (0..3).map(|i| min.query_true(i)).collect();
        assert_eq!(w, vec![0.0, 1.0, 0.0]);
        for i in 0..3 {
            assert!(min.query_tilde(i) >= min.query_true(i));
        }
        let mut r = rng(4);
        for _ in 0..200 {
            assert_eq!(rejection_sample(&min, &mut r, 10_000).unwrap().index, 1);
        }
    }

    #[test]
    fn min_of_one_matches_branch() {
        let m = three_points();
        let h = DistanceOsq::from_point(&m, &[1.0, 0.0]).unwrap();
        let min = MinOsq::new(vec![&h]).unwrap();
        assert_eq!(min.norm2_tilde(), h.norm2_tilde());
        let (mut a, mut b) = (rng(9), rng(9));
        for _ in 0..100 {
            assert_eq!(min.sample_tilde(&mut a), h.sample_tilde(&mut b));
        }
        for i in 0..3 {
            assert_relative_eq!(min.query_tilde(i), h.query_tilde(i));
        }
    }

    #[test]
    fn min_handle_validation() {
        let empty: Vec<TightOsq> = vec![];
        assert!(matches!(MinOsq::new(empty), Err(Error::Empty)));
        let a = TightOsq::new(SqVector::from_values(&[1.0, 2.0]).unwrap());
        let b = TightOsq::new(SqVector::from_values(&[1.0]).unwrap());
        assert!(matches!(
            MinOsq::new(vec![a, b]),
            Err(Error::DimensionMismatch { .. })
        ));
    }

    #[test]
    fn tight_handle_accepts_every_trial() {
        let h = TightOsq::new(SqVector::from_values(&[3.0, 4.0]).unwrap());
        let mut r = rng(1);
        for _ in 0..100 {
            assert_eq!(rejection_sample(&h, &mut r, 1).unwrap().trials, 1);
        }
    }

    #[test]
    fn zero_tilde_is_an_error() {
        let m = SqMatrix::from_dataset(&DataSet::from_rows(&[[0.0], [0.0]]).unwrap());
        let h = DistanceOsq::from_point(&m, &[0.0]).unwrap();
        assert!(matches!(
            rejection_sample(&h, &mut rng(0), 10),
            Err(Error::ZeroVector)
        ));
    }

    #[test]
    fn all_zero_true_vector_exhausts() {
        let m = SqMatrix::from_dataset(&DataSet::from_rows(&[[1.0], [1.0]]).unwrap());
        let h = DistanceOsq::from_point(&m, &[1.0]).unwrap();
        assert!(matches!(
            rejection_sample(&h, &mut rng(0), 50),
            Err(Error::SamplingExhausted { budget: 50 })
        ));
    }

    #[test]
    fn budget_formula() {
        assert_eq!(trial_budget(2.0, (-1.0f64).exp()), 32);
        assert_eq!(trial_budget(1.0, 0.01), (16.0 * 0.01f64.recip().ln()).ceil() as u64);
    }

    #[test]
    fn parallel_sampler_is_thread_independent_and_exact() {
        let m = three_points();
        let h = DistanceOsq::from_point(&m, &[0.0, 0.0]).unwrap();
        let a = rejection_sample_parallel(&h, 7, 4, 3, 1000).unwrap();
        let b = rejection_sample_parallel(&h, 7, 4, 3, 1000).unwrap();
        assert_eq!(a, b);
        let n = 40_000;
        let hits = (0..n)
            .filter(|&s| rejection_sample_parallel(&h, s, 3, 2, 10_000).unwrap().index == 2)
            .count();
        assert!((hits as f64 / n as f64 - 0.8).abs() < 0.01);
    }

    #[test]
    fn norm_estimate_exact_for_tight_handle() {
        let h = TightOsq::new(SqVector::from_values(&[3.0, 4.0]).unwrap());
        let est = estimate_norm2(&h, 0.5, 0.1, 1.0, &mut rng(2)).unwrap();
        assert_eq!(est, 25.0);
    }

    #[test]
    fn norm_estimate_parameter_checks() {
        let h = TightOsq::new(SqVector::from_values(&[3.0, 4.0]).unwrap());
        assert!(estimate_norm2(&h, 0.0, 0.1, 1.0, &mut rng(0)).is_err());
        assert!(estimate_norm2(&h, 0.1, 1.0, 1.0, &mut rng(0)).is_err());
    }

    #[test]
    fn median_handles_even_and_odd() {
        assert_eq!(median(&mut [3.0, 1.0, 2.0]), 2.0);
        assert_eq!(median(&mut [4.0, 1.0, 2.0, 3.0]), 2.5);
    }
}
