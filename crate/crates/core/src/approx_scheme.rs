//! A D²-sampling (1+ε)-approximation scheme for k-means, run classically.
//!
//! Each outer round samples a multiset `M` of `ρk` points by D²-sampling
//! with respect to a 2k-center pseudo-approximation `C_init`, adds `τk`
//! copies of every `C_init` element, and enumerates all unordered k-tuples of
//! disjoint τ-subsets of `M`. The tuple of subset centroids with the least
//! exact cost wins.

use std::collections::HashSet;

use rand::Rng;

use crate::data::DataSet;
use crate::error::{Error, Result};
use crate::oracle::exact_cost;
use crate::par;
use crate::seeding::{pseudo_approx_2k_with, QiConfig, SeedingResult, SqD2Sampler, SqIndex};

/// Default candidate budget.
pub const DEFAULT_BUDGET: u64 = 10_000_000;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SchemeParams {
    pub k: usize,
    pub eps: f64,
    /// Per-round sample multiplier: `ρk` points are drawn per round.
    pub rho: usize,
    /// Subset size.
    pub tau: usize,
    pub outer_rounds: usize,
    /// Maximum allowed value of the list-size bound `C(|M|, τ)^k`.
    pub budget: u64,
    /// Sampling failure probability; split over all D² draws.
    pub delta: f64,
}

impl SchemeParams {
    /// `ρ = ⌈k/ε⁴⌉`, `τ = ⌈4/ε⌉`, `min(2^k, 8)` outer rounds.
    ///
    /// These are well below what the analysis needs and already make the
    /// enumeration infeasible for most inputs; see [`SchemeParams::scaled`].
    pub fn new(k: usize, eps: f64) -> Result<Self> {
        Self::scaled(k, eps, 1.0, 4.0)
    }

    /// `ρ = ⌈c_ρ·k/ε⁴⌉` and `τ = ⌈c_τ/ε⌉`.
    pub fn scaled(k: usize, eps: f64, c_rho: f64, c_tau: f64) -> Result<Self> {
        check_eps(eps)?;
        if !(c_rho > 0.0 && c_tau > 0.0) {
            return Err(Error::InvalidParameter("scale factors must be positive".into()));
        }
        let p = Self {
            k,
            eps,
            rho: (c_rho * k as f64 / eps.powi(4)).ceil() as usize,
            tau: (c_tau / eps).ceil() as usize,
            outer_rounds: 1usize.checked_shl(k as u32).unwrap_or(usize::MAX).min(8),
            budget: DEFAULT_BUDGET,
            delta: 0.01,
        };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        check_eps(self.eps)?;
        if self.k == 0 {
            return Err(Error::InvalidParameter("k must be >= 1".into()));
        }
        if self.tau == 0 || self.outer_rounds == 0 {
            return Err(Error::InvalidParameter("tau and outer_rounds must be >= 1".into()));
        }
        if !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(Error::InvalidParameter(format!("delta {} not in (0, 1)", self.delta)));
        }
        Ok(())
    }

    /// `|M|` for a given `C_init` size.
    pub fn multiset_len(&self, n_init: usize) -> usize {
        self.rho * self.k + n_init * self.tau * self.k
    }

    /// `C(m, τ)^k` as a float.
    pub fn list_bound(&self, m: usize) -> f64 {
        binomial(m, self.tau).powi(self.k as i32)
    }

    fn check_budget(&self, m: usize) -> Result<()> {
        let bound = self.list_bound(m);
        if bound > self.budget as f64 {
            return Err(Error::BudgetExceeded {
                bound,
                budget: self.budget,
            });
        }
        Ok(())
    }
}

fn check_eps(eps: f64) -> Result<()> {
    if !(eps > 0.0 && eps <= 0.5) {
        return Err(Error::InvalidParameter(format!("eps {eps} not in (0, 1/2]")));
    }
    Ok(())
}

/// `C(n, r)` in floating point.
pub fn binomial(n: usize, r: usize) -> f64 {
    if r > n {
        return 0.0;
    }
    let r = r.min(n - r);
    (0..r).fold(1.0, |acc, i| acc * (n - i) as f64 / (i + 1) as f64)
}

/// Number of unordered k-tuples of disjoint τ-subsets of an m-set.
pub fn tuple_count(m: usize, tau: usize, k: usize) -> f64 {
    let mut ways = 1.0;
    let mut left = m;
    for _ in 0..k {
        ways *= binomial(left, tau);
        left = left.saturating_sub(tau);
    }
    (1..=k).fold(ways, |acc, j| acc / j as f64)
}

/// Candidate center sets with the data rows behind each centroid.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct CandidateList {
    pub center_sets: Vec<Vec<Vec<f64>>>,
    /// `provenance[c][j]` lists the data rows averaged into center `j` of
    /// candidate `c`, in ascending order.
    pub provenance: Vec<Vec<Vec<usize>>>,
    /// Tuples enumerated before deduplication.
    pub enumerated: u64,
}

impl CandidateList {
    pub fn len(&self) -> usize {
        self.center_sets.len()
    }

    pub fn is_empty(&self) -> bool {
        self.center_sets.is_empty()
    }
}

/// One round's multiset `M` as data rows: `ρk` D²-samples w.r.t. `C_init`
/// followed by `τk` copies of each `C_init` element.
pub fn bgjk_sample_round<R: Rng>(
    index: &SqIndex,
    params: &SchemeParams,
    c_init: &SeedingResult,
    rng: &mut R,
) -> Result<Vec<usize>> {
    if c_init.center_indices.is_empty() {
        return Err(Error::Empty);
    }
    let draws = params.rho * params.k;
    let mut m = Vec::with_capacity(params.multiset_len(c_init.center_indices.len()));
    if draws > 0 {
        let cfg = QiConfig {
            delta: params.delta / (draws * params.outer_rounds) as f64,
            ..QiConfig::default()
        };
        let mut sampler = SqD2Sampler::exact(index, cfg.round_budget(1, 1.0));
        for &c in &c_init.center_indices {
            sampler.add_center(c)?;
        }
        // Φ(V, C_init) = 0: nothing to sample, the copies already cover V
        if !sampler.all_weights_zero() {
            for _ in 0..draws {
                m.push(sampler.sample(rng)?.index);
            }
        }
    }
    for &c in &c_init.center_indices {
        m.extend(std::iter::repeat_n(c, params.tau * params.k));
    }
    Ok(m)
}

fn centroid(ds: &DataSet, rows: &mut [usize]) -> Vec<f64> {
    rows.sort_unstable();
    let mut acc = vec![0.0; ds.n_dims()];
    for &r in rows.iter() {
        acc.iter_mut().zip(ds.row(r)).for_each(|(a, x)| *a += x);
    }
    let n = rows.len() as f64;
    acc.iter_mut().for_each(|a| *a /= n);
    acc
}

struct Enumerator<'a> {
    ds: &'a DataSet,
    m: &'a [usize],
    tau: usize,
    k: usize,
    used: Vec<bool>,
    blocks: Vec<Vec<usize>>,
    seen: HashSet<Vec<u64>>,
    out: CandidateList,
}

impl Enumerator<'_> {
    // blocks are kept in increasing order of their smallest position
    fn blocks_from(&mut self, min_start: usize) {
        if self.blocks.len() == self.k {
            self.emit();
            return;
        }
        let remaining_blocks = self.k - self.blocks.len();
        for first in min_start..self.m.len() {
            if self.used[first] {
                continue;
            }
            let free_after = (first..self.m.len()).filter(|&p| !self.used[p]).count();
            if free_after < remaining_blocks * self.tau {
                break;
            }
            self.used[first] = true;
            self.blocks.push(vec![first]);
            self.fill_block(first + 1, first);
            self.blocks.pop();
            self.used[first] = false;
        }
    }

    fn fill_block(&mut self, from: usize, first: usize) {
        let len = self.blocks.last().map_or(0, Vec::len);
        if len == self.tau {
            self.blocks_from(first + 1);
            return;
        }
        for p in from..self.m.len() {
            if self.used[p] {
                continue;
            }
            self.used[p] = true;
            self.blocks.last_mut().expect("open block").push(p);
            self.fill_block(p + 1, first);
            self.blocks.last_mut().expect("open block").pop();
            self.used[p] = false;
        }
    }

    fn emit(&mut self) {
        self.out.enumerated += 1;
        let mut members: Vec<(Vec<f64>, Vec<usize>)> = self
            .blocks
            .iter()
            .map(|b| {
                let mut rows: Vec<usize> = b.iter().map(|&p| self.m[p]).collect();
                let c = centroid(self.ds, &mut rows);
                (c, rows)
            })
            .collect();
        members.sort_by(|a, b| {
            a.0.iter()
                .zip(&b.0)
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
        });
        let key: Vec<u64> = members.iter().flat_map(|(c, _)| c.iter().map(|x| x.to_bits())).collect();
        if self.seen.insert(key) {
            let (centers, rows) = members.into_iter().unzip();
            self.out.center_sets.push(centers);
            self.out.provenance.push(rows);
        }
    }
}

/// All unordered k-tuples of disjoint τ-subsets of `m` (positions, so
/// repeated rows count separately), mapped to centroid tuples and
/// deduplicated by exact coordinate equality.
pub fn enumerate_candidates(ds: &DataSet, m: &[usize], params: &SchemeParams) -> Result<CandidateList> {
    params.validate()?;
    if m.len() < params.tau * params.k {
        return Err(Error::InvalidParameter(format!(
            "|M|={} is smaller than tau*k={}",
            m.len(),
            params.tau * params.k
        )));
    }
    if let Some(&bad) = m.iter().find(|&&r| r >= ds.n_points()) {
        return Err(Error::IndexOutOfRange {
            index: bad,
            len: ds.n_points(),
        });
    }
    params.check_budget(m.len())?;
    let mut e = Enumerator {
        ds,
        m,
        tau: params.tau,
        k: params.k,
        used: vec![false; m.len()],
        blocks: Vec::with_capacity(params.k),
        seen: HashSet::new(),
        out: CandidateList::default(),
    };
    e.blocks_from(0);
    Ok(e.out)
}

/// Exact cost of every candidate; the first minimum in list order wins.
pub fn best_center_set(ds: &DataSet, list: &CandidateList) -> Result<(Vec<Vec<f64>>, f64)> {
    if list.is_empty() {
        return Err(Error::Empty);
    }
    let costs = par::map_indices(list.len(), |c| exact_cost(ds, &list.center_sets[c]));
    let mut best = 0;
    for (i, &c) in costs.iter().enumerate() {
        if c < costs[best] {
            best = i;
        }
    }
    Ok((list.center_sets[best].clone(), costs[best]))
}

#[derive(Debug, Clone, PartialEq)]
pub struct SchemeResult {
    pub centers: Vec<Vec<f64>>,
    pub cost: f64,
    pub c_init: SeedingResult,
    /// Best cost after each outer round.
    pub round_costs: Vec<f64>,
    pub candidates_evaluated: u64,
}

pub fn approx_scheme<R: Rng>(ds: &DataSet, params: &SchemeParams, rng: &mut R) -> Result<SchemeResult> {
    params.validate()?;
    let index = SqIndex::build(ds, true);
    let qi = QiConfig {
        delta: params.delta,
        ..QiConfig::default()
    };
    let c_init = pseudo_approx_2k_with(ds, &index, params.k, &qi, rng)?;
    params.check_budget(params.multiset_len(c_init.center_indices.len()))?;

    let mut best: Option<(Vec<Vec<f64>>, f64)> = None;
    let mut round_costs = Vec::with_capacity(params.outer_rounds);
    let mut evaluated = 0;
    for round in 1..=params.outer_rounds {
        let m = bgjk_sample_round(&index, params, &c_init, rng).map_err(|e| e.in_round(round))?;
        let list = enumerate_candidates(ds, &m, params)?;
        evaluated += list.len() as u64;
        let (centers, cost) = best_center_set(ds, &list)?;
        if best.as_ref().is_none_or(|b| cost < b.1) {
            best = Some((centers, cost));
        }
        round_costs.push(best.as_ref().expect("set above").1);
    }
    let (centers, cost) = best.expect("outer_rounds >= 1");
    Ok(SchemeResult {
        centers,
        cost,
        c_init,
        round_costs,
        candidates_evaluated: evaluated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::oracle::optimal_kmeans_bruteforce;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(k: usize, tau: usize, rho: usize) -> SchemeParams {
        SchemeParams {
            k,
            eps: 0.25,
            rho,
            tau,
            outer_rounds: 1,
            budget: DEFAULT_BUDGET,
            delta: 0.01,
        }
    }

    fn line(n: usize) -> DataSet {
        let rows: Vec<[f64; 1]> = (0..n).map(|i| [(i * i) as f64]).collect();
        DataSet::from_rows(&rows).unwrap()
    }

    #[test]
    fn default_constants() {
        let p = SchemeParams::new(2, 0.25).unwrap();
        assert_eq!((p.rho, p.tau, p.outer_rounds), (512, 16, 4));
        assert_eq!(SchemeParams::new(5, 0.5).unwrap().outer_rounds, 8);
        assert!(SchemeParams::new(2, 0.6).is_err());
        assert!(SchemeParams::new(0, 0.25).is_err());
    }

    #[test]
    fn k1_tau2_three_points() {
        let ds = line(3);
        let list = enumerate_candidates(&ds, &[0, 1, 2], &params(1, 2, 0)).unwrap();
        let got: Vec<f64> = list.center_sets.iter().map(|c| c[0][0]).collect();
        assert_eq!(got, vec![0.5, 2.0, 2.5]);
        assert_eq!(list.provenance[1], vec![vec![0, 2]]);
    }

    #[test]
    fn exact_cover_count_matches_multinomial() {
        // distinct squares on a line: no two subset-centroid tuples coincide
        let ds = line(9);
        for (tau, k) in [(1, 3), (2, 2), (3, 3), (2, 4), (4, 2)] {
            let m: Vec<usize> = (0..tau * k).collect();
            let list = enumerate_candidates(&ds, &m, &params(k, tau, 0)).unwrap();
            let fact = |n: usize| (1..=n).map(|x| x as f64).product::<f64>();
            let expected = fact(tau * k) / (fact(tau).powi(k as i32) * fact(k));
            assert_eq!(list.enumerated as f64, expected, "tau={tau} k={k}");
            assert_eq!(tuple_count(tau * k, tau, k), expected);
        }
    }

    #[test]
    fn non_covering_count_matches_closed_form() {
        let ds = line(9);
        let m: Vec<usize> = (0..7).collect();
        let list = enumerate_candidates(&ds, &m, &params(2, 2, 0)).unwrap();
        assert_eq!(list.enumerated as f64, tuple_count(7, 2, 2));
        assert_eq!(list.enumerated, 105);
    }

    #[test]
    fn coincident_multiset_dedups_to_one() {
        let ds = line(4);
        let list = enumerate_candidates(&ds, &[2; 6], &params(2, 2, 0)).unwrap();
        assert_eq!(list.len(), 1);
        assert_eq!(list.enumerated, 45);
    }

    #[test]
    fn budget_and_size_checks() {
        let ds = line(4);
        let mut p = params(2, 2, 0);
        assert!(enumerate_candidates(&ds, &[0, 1, 2], &p).is_err());
        assert!(enumerate_candidates(&ds, &[0, 1, 2, 9], &p).is_err());
        p.budget = 10;
        match enumerate_candidates(&ds, &[0, 1, 2, 3], &p) {
            Err(Error::BudgetExceeded { bound, budget }) => {
                assert_eq!(bound, 36.0);
                assert_eq!(budget, 10);
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn best_of_one_and_ties() {
        let ds = line(3);
        let list = CandidateList {
            center_sets: vec![vec![vec![1.0]]],
            provenance: vec![vec![vec![1]]],
            enumerated: 1,
        };
        assert_eq!(best_center_set(&ds, &list).unwrap().0, vec![vec![1.0]]);
        let tie = CandidateList {
            center_sets: vec![vec![vec![-1.0]], vec![vec![3.0]], vec![vec![3.0]]],
            provenance: vec![vec![vec![0]]; 3],
            enumerated: 3,
        };
        let (c, cost) = best_center_set(&ds, &tie).unwrap();
        assert_eq!(c, vec![vec![3.0]]);
        assert_eq!(cost, 9.0 + 4.0 + 1.0);
        assert!(best_center_set(&ds, &CandidateList::default()).is_err());
    }

    #[test]
    fn duplicate_groups_reach_zero() {
        let ds = DataSet::from_rows(&[[0.0, 0.0], [0.0, 0.0], [0.0, 0.0], [5.0, 1.0], [5.0, 1.0], [5.0, 1.0]]).unwrap();
        for seed in 0..5 {
            let p = params(2, 2, 2);
            let r = approx_scheme(&ds, &p, &mut ChaCha8Rng::seed_from_u64(seed)).unwrap();
            assert_eq!(r.cost, 0.0);
        }
    }

    #[test]
    fn sample_round_rows_and_copies() {
        let ds = DataSet::from_rows(&[[0.0], [0.0], [4.0], [4.0], [9.0], [9.5]]).unwrap();
        let ix = SqIndex::build(&ds, true);
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let c_init = crate::seeding::pseudo_approx_2k(&ds, 1, None, &mut rng).unwrap();
        let p = params(1, 2, 5);
        let m = bgjk_sample_round(&ix, &p, &c_init, &mut rng).unwrap();
        assert_eq!(m.len(), p.multiset_len(2));
        for &c in &c_init.center_indices {
            assert!(m[5..].iter().filter(|&&r| r == c).count() >= 2);
        }
        let zero = bgjk_sample_round(&ix, &params(1, 2, 0), &c_init, &mut rng).unwrap();
        assert_eq!(zero.len(), 4);
    }

    #[test]
    fn never_worse_than_init_pairs_and_at_least_opt() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        for trial in 0..5u64 {
            let rows: Vec<[f64; 2]> = (0..8).map(|_| [rng.random::<f64>() * 10.0, rng.random::<f64>() * 10.0]).collect();
            let ds = DataSet::from_rows(&rows).unwrap();
            let mut p = params(2, 2, 2);
            p.outer_rounds = 2;
            let r = approx_scheme(&ds, &p, &mut ChaCha8Rng::seed_from_u64(trial)).unwrap();
            let init = &r.c_init.centers;
            for a in 0..init.len() {
                for b in a + 1..init.len() {
                    let pair = [init[a].clone(), init[b].clone()];
                    assert!(r.cost <= exact_cost(&ds, &pair) + 1e-9);
                }
            }
            let opt = optimal_kmeans_bruteforce(&ds, 2).unwrap().cost;
            assert!(r.cost >= opt - 1e-9 * opt.max(1.0));
            assert!(r.round_costs.windows(2).all(|w| w[1] <= w[0]));
        }
    }

    #[test]
    fn more_rounds_never_hurt() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let rows: Vec<[f64; 2]> = (0..10).map(|_| [rng.random::<f64>(), rng.random::<f64>()]).collect();
        let ds = DataSet::from_rows(&rows).unwrap();
        let mut last = f64::INFINITY;
        for rounds in 1..=4 {
            let mut p = params(2, 2, 2);
            p.outer_rounds = rounds;
            let r = approx_scheme(&ds, &p, &mut ChaCha8Rng::seed_from_u64(99)).unwrap();
            assert!(r.cost <= last);
            last = r.cost;
        }
    }
}
