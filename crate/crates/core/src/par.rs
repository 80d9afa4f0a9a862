//! Data-parallel helpers.
//!
//! With the `parallel` feature every helper fans out over rayon's pool;
//! without it the same chunking is walked sequentially. Work is always
//! split into fixed-size chunks and partial results are combined in chunk
//! order, so the output does not depend on thread count or on the feature.

use std::ops::Range;

#[cfg(feature = "parallel")]
use rayon::prelude::*;

/// Chunk length used by the reductions in this module.
pub const CHUNK: usize = 2048;

/// Whether the crate was compiled with rayon support.
pub const fn is_parallel() -> bool {
    cfg!(feature = "parallel")
}

fn ranges(len: usize, chunk: usize) -> impl Iterator<Item = Range<usize>> {
    let chunk = chunk.max(1);
    (0..len.div_ceil(chunk)).map(move |c| c * chunk..((c + 1) * chunk).min(len))
}

/// Apply `f` to consecutive index ranges of `0..len` and collect the results
/// in range order.
pub fn map_ranges<T, F>(len: usize, chunk: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(Range<usize>) -> T + Sync + Send,
{
    let parts: Vec<Range<usize>> = ranges(len, chunk).collect();
    #[cfg(feature = "parallel")]
    {
        parts.into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        parts.into_iter().map(f).collect()
    }
}

/// `(0..n).map(f).collect()`, possibly in parallel.
pub fn map_indices<T, F>(n: usize, f: F) -> Vec<T>
where
    T: Send,
    F: Fn(usize) -> T + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        (0..n).into_par_iter().map(f).collect()
    }
    #[cfg(not(feature = "parallel"))]
    {
        (0..n).map(f).collect()
    }
}

/// Mutate every element of `items` with access to its index.
pub fn for_each_indexed<T, F>(items: &mut [T], f: F)
where
    T: Send,
    F: Fn(usize, &mut T) + Sync + Send,
{
    #[cfg(feature = "parallel")]
    {
        items.par_iter_mut().enumerate().for_each(|(i, x)| f(i, x));
    }
    #[cfg(not(feature = "parallel"))]
    {
        items.iter_mut().enumerate().for_each(|(i, x)| f(i, x));
    }
}

/// Compensated (Neumaier) running sum.
#[derive(Debug, Clone, Copy, Default)]
pub struct KahanSum {
    sum: f64,
    comp: f64,
}

impl KahanSum {
    pub fn new() -> Self {
        Self::default()
    }

    #[inline]
    pub fn add(&mut self, x: f64) {
        let t = self.sum + x;
        if self.sum.abs() >= x.abs() {
            self.comp += (self.sum - t) + x;
        } else {
            self.comp += (x - t) + self.sum;
        }
        self.sum = t;
    }

    #[inline]
    pub fn value(&self) -> f64 {
        self.sum + self.comp
    }
}

impl FromIterator<f64> for KahanSum {
    fn from_iter<I: IntoIterator<Item = f64>>(iter: I) -> Self {
        let mut acc = KahanSum::new();
        iter.into_iter().for_each(|x| acc.add(x));
        acc
    }
}

/// Compensated sum of `f(i)` over `0..n`, chunked for determinism.
pub fn sum_by<F>(n: usize, f: F) -> f64
where
    F: Fn(usize) -> f64 + Sync + Send,
{
    map_ranges(n, CHUNK, |r| r.map(&f).collect::<KahanSum>().value())
        .into_iter()
        .collect::<KahanSum>()
        .value()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranges_cover_everything_once() {
        let parts: Vec<_> = ranges(10, 3).collect();
        assert_eq!(parts, vec![0..3, 3..6, 6..9, 9..10]);
        assert_eq!(ranges(0, 3).count(), 0);
    }

    #[test]
    fn compensated_sum_beats_naive() {
        let xs: Vec<f64> = std::iter::once(1.0)
            .chain(std::iter::repeat_n(1e-16, 10_000))
            .collect();
        let naive: f64 = xs.iter().sum();
        let comp = xs.iter().copied().collect::<KahanSum>().value();
        assert_eq!(naive, 1.0);
        assert!((comp - (1.0 + 1e-12)).abs() < 1e-15);
    }

    #[test]
    fn sum_by_matches_sequential_kahan() {
        let n = 10 * CHUNK + 17;
        let f = |i: usize| ((i as f64) * 0.37).sin();
        let expect: f64 = map_ranges(n, CHUNK, |r| r.map(f).collect::<KahanSum>().value())
            .into_iter()
            .collect::<KahanSum>()
            .value();
        assert_eq!(sum_by(n, f), expect);
    }
}
