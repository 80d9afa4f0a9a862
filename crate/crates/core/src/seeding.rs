//! Seeding algorithms.
//!
//! * [`kmeanspp`]: exact D²-sampling with a maintained nearest-distance array,
//!   O(Nd) per round.
//! * [`qi_kmeanspp`]: the same distribution obtained from SQ trees by
//!   rejection sampling; after an O(Nd) setup each round costs
//!   O(φ · m · d · log N) with `m` the current number of centers.
//! * [`qi_noisy_kmeanspp`]: distance queries replaced by sampled
//!   inner-product estimates.
//! * [`pseudo_approx_2k`]: 2k rounds of D²-sampling.
//! * [`afk_mc2`]: Metropolis-Hastings baseline with a proposal fixed after
//!   the first center.

use std::fmt;
use std::str::FromStr;
use std::time::Instant;

use rand::Rng;
use serde::Serialize;

use crate::data::{aspect_ratio, sq_dist, DataSet};
use crate::error::{Error, Result};
use crate::oracle::{self, nearest_sq_dist};
use crate::osq::{rejection_sample, trial_budget, Accepted, DistanceOsq, MinOsq, NoisyDistanceOsq, OsqHandle};
use crate::par;
use crate::sqtree::SqMatrix;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub enum Algorithm {
    #[serde(rename = "kmpp")]
    Kmpp,
    #[serde(rename = "qikmpp")]
    QiKmpp,
    #[serde(rename = "qikmpp-noisy")]
    QiKmppNoisy,
    #[serde(rename = "afkmc2")]
    AfkMc2,
    #[serde(rename = "pseudo2k")]
    Pseudo2k,
}

impl Algorithm {
    pub const ALL: [Algorithm; 5] = [
        Algorithm::Kmpp,
        Algorithm::QiKmpp,
        Algorithm::QiKmppNoisy,
        Algorithm::AfkMc2,
        Algorithm::Pseudo2k,
    ];

    pub fn tag(self) -> &'static str {
        match self {
            Algorithm::Kmpp => "kmpp",
            Algorithm::QiKmpp => "qikmpp",
            Algorithm::QiKmppNoisy => "qikmpp-noisy",
            Algorithm::AfkMc2 => "afkmc2",
            Algorithm::Pseudo2k => "pseudo2k",
        }
    }

    /// Whether the algorithm runs on SQ trees built once per dataset.
    pub fn uses_sq_index(self) -> bool {
        matches!(self, Algorithm::QiKmpp | Algorithm::QiKmppNoisy)
    }
}

impl fmt::Display for Algorithm {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.tag())
    }
}

impl FromStr for Algorithm {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Algorithm::ALL
            .into_iter()
            .find(|a| a.tag() == s)
            .ok_or_else(|| Error::InvalidParameter(format!("unknown algorithm {s:?}")))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RoundStat {
    /// 1-based round number.
    pub round: usize,
    /// Draws spent: rejection trials, chain proposals, or 1 for a direct draw.
    pub trials: u64,
    pub wall_time_s: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SeedingResult {
    pub algorithm: Algorithm,
    pub center_indices: Vec<usize>,
    pub centers: Vec<Vec<f64>>,
    pub per_round: Vec<RoundStat>,
    pub rng_seed: Option<u64>,
    /// Time spent building the SQ index (zero for the other algorithms or
    /// when a prebuilt index was passed in).
    pub setup_time_s: f64,
    pub sample_time_s: f64,
}

impl SeedingResult {
    fn new(algorithm: Algorithm, ds: &DataSet, center_indices: Vec<usize>, per_round: Vec<RoundStat>) -> Self {
        let sample_time_s = per_round.iter().map(|r| r.wall_time_s).sum();
        Self {
            algorithm,
            centers: ds.gather(&center_indices),
            center_indices,
            per_round,
            rng_seed: None,
            setup_time_s: 0.0,
            sample_time_s,
        }
    }

    pub fn cost(&self, ds: &DataSet) -> f64 {
        oracle::exact_cost(ds, &self.centers)
    }

    /// `Φ(V, {c_1..c_i})` for every prefix of the center list.
    pub fn prefix_costs(&self, ds: &DataSet) -> Vec<f64> {
        (1..=self.centers.len())
            .map(|i| oracle::exact_cost(ds, &self.centers[..i]))
            .collect()
    }

    pub fn total_trials(&self) -> u64 {
        self.per_round.iter().map(|r| r.trials).sum()
    }
}

/// Map a uniform variate in `[0, 1)` to an index in `0..n`.
#[inline]
pub fn uniform_index(u01: f64, n: usize) -> usize {
    ((u01 * n as f64) as usize).min(n - 1)
}

fn check_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || k > n {
        return Err(Error::InvalidParameter(format!("k={k} must be in 1..={n}")));
    }
    Ok(())
}

fn check_pseudo_k(k: usize, n: usize) -> Result<()> {
    if k == 0 || 2 * k > n {
        return Err(Error::InvalidParameter(format!("2k={} must be in 2..={n}", 2 * k)));
    }
    Ok(())
}

/// Uniform choice among rows not yet chosen (all rows if every row is).
/// Used only when every D² weight is zero.
fn uniform_unchosen<R: Rng + ?Sized>(n: usize, chosen: &[usize], rng: &mut R) -> usize {
    let mut taken = vec![false; n];
    chosen.iter().for_each(|&i| taken[i] = true);
    let free: Vec<usize> = (0..n).filter(|&i| !taken[i]).collect();
    if free.is_empty() {
        rng.random_range(0..n)
    } else {
        free[rng.random_range(0..free.len())]
    }
}

/// Classical k-means++: uniform first center, then exact D²-sampling.
pub fn kmeanspp<R: Rng + ?Sized>(ds: &DataSet, k: usize, rng: &mut R) -> Result<SeedingResult> {
    let mut r = kmeanspp_rounds(ds, k, rng)?;
    r.algorithm = Algorithm::Kmpp;
    Ok(r)
}

fn kmeanspp_rounds<R: Rng + ?Sized>(ds: &DataSet, k: usize, rng: &mut R) -> Result<SeedingResult> {
    let n = ds.n_points();
    check_k(k, n)?;
    let mut d2 = vec![f64::INFINITY; n];
    let mut chosen = Vec::with_capacity(k);
    let mut rounds = Vec::with_capacity(k);

    let t = Instant::now();
    chosen.push(uniform_index(rng.random::<f64>(), n));
    rounds.push(RoundStat {
        round: 1,
        trials: 1,
        wall_time_s: t.elapsed().as_secs_f64(),
    });

    for round in 2..=k {
        let t = Instant::now();
        let c = ds.row(*chosen.last().expect("non-empty"));
        par::for_each_indexed(&mut d2, |i, x| *x = x.min(sq_dist(ds.row(i), c)));
        let total = par::sum_by(n, |i| d2[i]);
        let u = rng.random::<f64>();
        let next = if total > 0.0 {
            let target = u * total;
            let mut acc = 0.0;
            let mut pick = None;
            let mut last = 0;
            for (i, &w) in d2.iter().enumerate() {
                if w > 0.0 {
                    last = i;
                    acc += w;
                    if target < acc {
                        pick = Some(i);
                        break;
                    }
                }
            }
            pick.unwrap_or(last)
        } else {
            uniform_unchosen(n, &chosen, rng)
        };
        chosen.push(next);
        rounds.push(RoundStat {
            round,
            trials: 1,
            wall_time_s: t.elapsed().as_secs_f64(),
        });
    }
    Ok(SeedingResult::new(Algorithm::Kmpp, ds, chosen, rounds))
}

/// How the per-round trial budget bounds φ.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum PhiBound {
    /// A known bound on φ.
    Known(f64),
    /// Use `8ζ²` with the given aspect ratio.
    AspectRatio(f64),
    /// No information; use [`DEFAULT_PHI_HAT`].
    Unknown,
}

/// φ̂ used when nothing better is known. Exhausting the resulting budget is
/// followed by a full-scan check before an error is raised.
pub const DEFAULT_PHI_HAT: f64 = 1.0e4;

impl PhiBound {
    pub fn phi_hat(self) -> f64 {
        match self {
            PhiBound::Known(p) => p,
            PhiBound::AspectRatio(z) => 8.0 * z * z,
            PhiBound::Unknown => DEFAULT_PHI_HAT,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct QiConfig {
    /// Overall failure probability, split evenly across rounds.
    pub delta: f64,
    pub phi_bound: PhiBound,
    /// Translate the data so its centroid is the origin before building the
    /// trees. D² probabilities are translation invariant; φ is not.
    pub center_data: bool,
}

impl QiConfig {
    pub fn new(delta: f64) -> Self {
        Self {
            delta,
            phi_bound: PhiBound::Unknown,
            center_data: true,
        }
    }

    fn validate(&self) -> Result<()> {
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta {} not in (0, 1)", self.delta)));
        }
        Ok(())
    }

    /// Trials allowed per round when `rounds` rounds share `delta`.
    pub fn round_budget(&self, rounds: usize, inflation: f64) -> u64 {
        trial_budget(self.phi_bound.phi_hat() * inflation, self.delta / rounds.max(1) as f64)
    }
}

impl Default for QiConfig {
    fn default() -> Self {
        Self::new(0.01)
    }
}

/// SQ access to a dataset: the O(Nd) setup shared by every SQ-backed run.
#[derive(Debug, Clone)]
pub struct SqIndex {
    data: DataSet,
    matrix: SqMatrix,
    offset: Vec<f64>,
    setup_time_s: f64,
}

impl SqIndex {
    pub fn build(ds: &DataSet, center_data: bool) -> Self {
        let t = Instant::now();
        let offset = if center_data {
            ds.centroid()
        } else {
            vec![0.0; ds.n_dims()]
        };
        let data = if center_data { ds.translated(&offset) } else { ds.clone() };
        let matrix = SqMatrix::from_dataset(&data);
        Self {
            data,
            matrix,
            offset,
            setup_time_s: t.elapsed().as_secs_f64(),
        }
    }

    pub fn matrix(&self) -> &SqMatrix {
        &self.matrix
    }

    /// The (possibly translated) coordinates the trees were built from.
    pub fn data(&self) -> &DataSet {
        &self.data
    }

    pub fn offset(&self) -> &[f64] {
        &self.offset
    }

    pub fn n_points(&self) -> usize {
        self.data.n_points()
    }

    pub fn setup_time_s(&self) -> f64 {
        self.setup_time_s
    }
}

type MakeHandle<'a, H> = Box<dyn Fn(&'a SqMatrix, &[f64]) -> Result<H> + 'a>;

/// D²-sampler over an [`SqIndex`] with a growing center set.
pub struct SqD2Sampler<'a, H> {
    index: &'a SqIndex,
    min: Option<MinOsq<H>>,
    make: MakeHandle<'a, H>,
    centers: Vec<usize>,
    budget: u64,
}

impl<'a> SqD2Sampler<'a, DistanceOsq<'a>> {
    pub fn exact(index: &'a SqIndex, budget: u64) -> Self {
        Self {
            index,
            min: None,
            make: Box::new(DistanceOsq::from_point),
            centers: Vec::new(),
            budget,
        }
    }
}

impl<'a> SqD2Sampler<'a, NoisyDistanceOsq<'a>> {
    pub fn noisy(index: &'a SqIndex, eps: f64, query_delta: f64, min_dist: f64, budget: u64) -> Result<Self> {
        // validate once up front
        NoisyDistanceOsq::new(
            DistanceOsq::from_point(index.matrix(), index.data().row(0))?,
            eps,
            query_delta,
            min_dist,
        )?;
        Ok(Self {
            index,
            min: None,
            make: Box::new(move |m, p| NoisyDistanceOsq::new(DistanceOsq::from_point(m, p)?, eps, query_delta, min_dist)),
            centers: Vec::new(),
            budget,
        })
    }
}

impl<'a, H: OsqHandle> SqD2Sampler<'a, H> {
    pub fn add_center(&mut self, row: usize) -> Result<()> {
        let h = (self.make)(self.index.matrix(), self.index.data().row(row))?;
        match &mut self.min {
            None => self.min = Some(MinOsq::new(vec![h])?),
            Some(m) => m.push(h)?,
        }
        self.centers.push(row);
        Ok(())
    }

    pub fn centers(&self) -> &[usize] {
        &self.centers
    }

    pub fn handle(&self) -> Option<&MinOsq<H>> {
        self.min.as_ref()
    }

    pub fn set_budget(&mut self, budget: u64) {
        self.budget = budget;
    }

    pub fn sample<R: Rng>(&self, rng: &mut R) -> Result<Accepted> {
        let h = self.min.as_ref().ok_or(Error::Empty)?;
        rejection_sample(h, rng, self.budget)
    }

    /// Full scan: is every exact D² weight zero?
    pub fn all_weights_zero(&self) -> bool {
        match &self.min {
            None => false,
            Some(h) => (0..h.len()).all(|i| h.query_true(i) == 0.0),
        }
    }
}

fn sq_rounds<'a, H, R>(
    algorithm: Algorithm,
    ds: &DataSet,
    mut sampler: SqD2Sampler<'a, H>,
    k: usize,
    rng: &mut R,
) -> Result<SeedingResult>
where
    H: OsqHandle,
    R: Rng,
{
    let n = ds.n_points();
    let mut rounds = Vec::with_capacity(k);
    let t = Instant::now();
    sampler.add_center(uniform_index(rng.random::<f64>(), n))?;
    rounds.push(RoundStat {
        round: 1,
        trials: 1,
        wall_time_s: t.elapsed().as_secs_f64(),
    });
    for round in 2..=k {
        let t = Instant::now();
        let (next, trials) = match sampler.sample(rng) {
            Ok(a) => (a.index, a.trials),
            Err(Error::SamplingExhausted { budget }) if sampler.all_weights_zero() => {
                (uniform_unchosen(n, sampler.centers(), rng), budget)
            }
            Err(e) => return Err(e.in_round(round)),
        };
        sampler.add_center(next).map_err(|e| e.in_round(round))?;
        rounds.push(RoundStat {
            round,
            trials,
            wall_time_s: t.elapsed().as_secs_f64(),
        });
    }
    Ok(SeedingResult::new(algorithm, ds, sampler.centers().to_vec(), rounds))
}

/// k-means++ on SQ trees. Builds the index; see [`qi_kmeanspp_with`] to
/// reuse one.
pub fn qi_kmeanspp<R: Rng>(ds: &DataSet, k: usize, cfg: &QiConfig, rng: &mut R) -> Result<SeedingResult> {
    let index = SqIndex::build(ds, cfg.center_data);
    let mut r = qi_kmeanspp_with(ds, &index, k, cfg, rng)?;
    r.setup_time_s = index.setup_time_s();
    Ok(r)
}

/// k-means++ on a prebuilt index over `ds`.
pub fn qi_kmeanspp_with<R: Rng>(
    ds: &DataSet,
    index: &SqIndex,
    k: usize,
    cfg: &QiConfig,
    rng: &mut R,
) -> Result<SeedingResult> {
    cfg.validate()?;
    check_k(k, ds.n_points())?;
    let sampler = SqD2Sampler::exact(index, cfg.round_budget(k, 1.0));
    sq_rounds(Algorithm::QiKmpp, ds, sampler, k, rng)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoisyConfig {
    pub qi: QiConfig,
    /// Relative distance error target, `0 < eps <= 1/2`.
    pub eps: f64,
    /// Failure probability of a single distance estimate.
    pub query_delta: f64,
    /// Lower bound on distinct-point distances; computed exactly when absent.
    pub min_dist: Option<f64>,
}

impl NoisyConfig {
    pub fn new(eps: f64, delta: f64) -> Self {
        Self {
            qi: QiConfig::new(delta),
            eps,
            query_delta: 0.1,
            min_dist: None,
        }
    }
}

pub fn qi_noisy_kmeanspp<R: Rng>(ds: &DataSet, k: usize, cfg: &NoisyConfig, rng: &mut R) -> Result<SeedingResult> {
    let index = SqIndex::build(ds, cfg.qi.center_data);
    let mut r = qi_noisy_kmeanspp_with(ds, &index, k, cfg, rng)?;
    r.setup_time_s = index.setup_time_s();
    Ok(r)
}

pub fn qi_noisy_kmeanspp_with<R: Rng>(
    ds: &DataSet,
    index: &SqIndex,
    k: usize,
    cfg: &NoisyConfig,
    rng: &mut R,
) -> Result<SeedingResult> {
    cfg.qi.validate()?;
    if !(cfg.eps > 0.0 && cfg.eps <= 0.5) {
        return Err(Error::InvalidParameter(format!("eps {} not in (0, 1/2]", cfg.eps)));
    }
    check_k(k, ds.n_points())?;
    let min_dist = match cfg.min_dist {
        Some(d) => d,
        None => aspect_ratio(ds)?.d_min,
    };
    let inflation = (1.0 + cfg.eps).powi(2);
    let sampler = SqD2Sampler::noisy(index, cfg.eps, cfg.query_delta, min_dist, cfg.qi.round_budget(k, inflation))?;
    sq_rounds(Algorithm::QiKmppNoisy, ds, sampler, k, rng)
}

/// 2k rounds of D²-sampling, on SQ trees when `use_sq` is set.
pub fn pseudo_approx_2k<R: Rng>(
    ds: &DataSet,
    k: usize,
    use_sq: Option<&QiConfig>,
    rng: &mut R,
) -> Result<SeedingResult> {
    check_pseudo_k(k, ds.n_points())?;
    let mut r = match use_sq {
        Some(cfg) => qi_kmeanspp(ds, 2 * k, cfg, rng)?,
        None => kmeanspp_rounds(ds, 2 * k, rng)?,
    };
    r.algorithm = Algorithm::Pseudo2k;
    Ok(r)
}

/// [`pseudo_approx_2k`] on a prebuilt index.
pub fn pseudo_approx_2k_with<R: Rng>(
    ds: &DataSet,
    index: &SqIndex,
    k: usize,
    cfg: &QiConfig,
    rng: &mut R,
) -> Result<SeedingResult> {
    check_pseudo_k(k, ds.n_points())?;
    let mut r = qi_kmeanspp_with(ds, index, 2 * k, cfg, rng)?;
    r.algorithm = Algorithm::Pseudo2k;
    Ok(r)
}

/// The AFK-MC² proposal `q(x) = ½·D²(x, c₁)/Φ(V, {c₁}) + 1/(2N)`.
#[derive(Debug, Clone)]
pub struct AfkProposal {
    q: Vec<f64>,
    cumulative: Vec<f64>,
}

impl AfkProposal {
    pub fn new(ds: &DataSet, first: usize) -> Self {
        let n = ds.n_points();
        let c = ds.row(first);
        let d2 = par::map_indices(n, |i| sq_dist(ds.row(i), c));
        let total = par::sum_by(n, |i| d2[i]);
        let uniform = 1.0 / n as f64;
        let q: Vec<f64> = d2
            .iter()
            .map(|&d| if total > 0.0 { 0.5 * d / total + 0.5 * uniform } else { uniform })
            .collect();
        let mut acc = 0.0;
        let cumulative = q
            .iter()
            .map(|p| {
                acc += p;
                acc
            })
            .collect();
        Self { q, cumulative }
    }

    pub fn prob(&self, i: usize) -> f64 {
        self.q[i]
    }

    pub fn probs(&self) -> &[f64] {
        &self.q
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> usize {
        let total = *self.cumulative.last().expect("non-empty");
        let u = rng.random::<f64>() * total;
        self.cumulative.partition_point(|&c| c <= u).min(self.q.len() - 1)
    }
}

/// One Metropolis-Hastings chain of `chain_len` proposals against the
/// current centers. When the current state has zero weight the proposal is
/// always accepted (this covers the 0/0 case too).
pub fn afk_chain<C, R>(ds: &DataSet, proposal: &AfkProposal, centers: &[C], chain_len: usize, rng: &mut R) -> usize
where
    C: AsRef<[f64]>,
    R: Rng + ?Sized,
{
    let mut x = proposal.sample(rng);
    let mut dx = nearest_sq_dist(ds.row(x), centers);
    for _ in 1..chain_len {
        let y = proposal.sample(rng);
        let dy = nearest_sq_dist(ds.row(y), centers);
        let u = rng.random::<f64>();
        if dx == 0.0 || u * dx * proposal.prob(y) < dy * proposal.prob(x) {
            x = y;
            dx = dy;
        }
    }
    x
}

pub fn afk_mc2<R: Rng + ?Sized>(ds: &DataSet, k: usize, chain_len: usize, rng: &mut R) -> Result<SeedingResult> {
    let n = ds.n_points();
    check_k(k, n)?;
    if chain_len == 0 {
        return Err(Error::InvalidParameter("chain length must be >= 1".into()));
    }
    let t = Instant::now();
    let first = uniform_index(rng.random::<f64>(), n);
    let proposal = AfkProposal::new(ds, first);
    let mut chosen = vec![first];
    let mut centers = vec![ds.row(first).to_vec()];
    let mut rounds = vec![RoundStat {
        round: 1,
        trials: 1,
        wall_time_s: t.elapsed().as_secs_f64(),
    }];
    for round in 2..=k {
        let t = Instant::now();
        let x = afk_chain(ds, &proposal, &centers, chain_len, rng);
        chosen.push(x);
        centers.push(ds.row(x).to_vec());
        rounds.push(RoundStat {
            round,
            trials: chain_len as u64,
            wall_time_s: t.elapsed().as_secs_f64(),
        });
    }
    Ok(SeedingResult::new(Algorithm::AfkMc2, ds, chosen, rounds))
}

/// Parameters for [`run`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SeedParams {
    pub delta: f64,
    pub eps: f64,
    pub chain_len: usize,
    pub phi_bound: PhiBound,
    pub center_data: bool,
}

pub const DEFAULT_CHAIN_LEN: usize = 200;

impl Default for SeedParams {
    fn default() -> Self {
        Self {
            delta: 0.01,
            eps: 0.1,
            chain_len: DEFAULT_CHAIN_LEN,
            phi_bound: PhiBound::Unknown,
            center_data: true,
        }
    }
}

impl SeedParams {
    pub fn qi(&self) -> QiConfig {
        QiConfig {
            delta: self.delta,
            phi_bound: self.phi_bound,
            center_data: self.center_data,
        }
    }

    pub fn noisy(&self) -> NoisyConfig {
        NoisyConfig {
            qi: self.qi(),
            ..NoisyConfig::new(self.eps, self.delta)
        }
    }
}

/// Run one algorithm with a ChaCha8 stream seeded from `seed`. For `pseudo2k`
/// `k` is the target cluster count and `2k` centers are returned. An index
/// passed in is reused by SQ-backed algorithms and its setup is not charged.
pub fn run(
    algorithm: Algorithm,
    ds: &DataSet,
    index: Option<&SqIndex>,
    k: usize,
    params: &SeedParams,
    seed: u64,
) -> Result<SeedingResult> {
    use rand::SeedableRng;
    let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(seed);
    let local;
    let mut result = match algorithm {
        Algorithm::Kmpp => kmeanspp(ds, k, &mut rng)?,
        Algorithm::AfkMc2 => afk_mc2(ds, k, params.chain_len, &mut rng)?,
        Algorithm::Pseudo2k => pseudo_approx_2k(ds, k, None, &mut rng)?,
        Algorithm::QiKmpp | Algorithm::QiKmppNoisy => {
            let (ix, setup) = match index {
                Some(ix) => (ix, 0.0),
                None => {
                    local = SqIndex::build(ds, params.center_data);
                    let s = local.setup_time_s();
                    (&local, s)
                }
            };
            let mut r = if algorithm == Algorithm::QiKmpp {
                qi_kmeanspp_with(ds, ix, k, &params.qi(), &mut rng)?
            } else {
                qi_noisy_kmeanspp_with(ds, ix, k, &params.noisy(), &mut rng)?
            };
            r.setup_time_s = setup;
            r
        }
    };
    result.rng_seed = Some(seed);
    Ok(result)
}
