//! Dense point sets, file ingestion, and aspect-ratio computation.

use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;

use rand::Rng;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::par;

/// Squared Euclidean distance between two equally long slices.
#[inline]
pub fn sq_dist(a: &[f64], b: &[f64]) -> f64 {
    debug_assert_eq!(a.len(), b.len());
    a.iter()
        .zip(b)
        .map(|(x, y)| {
            let t = x - y;
            t * t
        })
        .sum()
}

#[inline]
pub fn sq_norm(a: &[f64]) -> f64 {
    a.iter().map(|x| x * x).sum()
}

/// An N×d matrix of finite reals, one point per row.
#[derive(Debug, Clone, PartialEq)]
pub struct DataSet {
    n_points: usize,
    n_dims: usize,
    values: Vec<f64>,
}

impl DataSet {
    pub fn new(n_points: usize, n_dims: usize, values: Vec<f64>) -> Result<Self> {
        if n_points == 0 || n_dims == 0 {
            return Err(Error::Empty);
        }
        if values.len() != n_points * n_dims {
            return Err(Error::DimensionMismatch {
                expected: n_points * n_dims,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFinite(pos));
        }
        Ok(Self {
            n_points,
            n_dims,
            values,
        })
    }

    pub fn from_rows<R: AsRef<[f64]>>(rows: &[R]) -> Result<Self> {
        let d = rows.first().ok_or(Error::Empty)?.as_ref().len();
        let mut values = Vec::with_capacity(rows.len() * d);
        for r in rows {
            let r = r.as_ref();
            if r.len() != d {
                return Err(Error::DimensionMismatch {
                    expected: d,
                    found: r.len(),
                });
            }
            values.extend_from_slice(r);
        }
        Self::new(rows.len(), d, values)
    }

    #[inline]
    pub fn n_points(&self) -> usize {
        self.n_points
    }

    #[inline]
    pub fn n_dims(&self) -> usize {
        self.n_dims
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[f64] {
        &self.values[i * self.n_dims..(i + 1) * self.n_dims]
    }

    pub fn rows(&self) -> impl ExactSizeIterator<Item = &[f64]> + '_ {
        self.values.chunks_exact(self.n_dims)
    }

    /// Coordinates of the given rows, in order.
    pub fn gather(&self, indices: &[usize]) -> Vec<Vec<f64>> {
        indices.iter().map(|&i| self.row(i).to_vec()).collect()
    }

    pub fn centroid(&self) -> Vec<f64> {
        let mut acc = vec![par::KahanSum::new(); self.n_dims];
        for r in self.rows() {
            for (a, x) in acc.iter_mut().zip(r) {
                a.add(*x);
            }
        }
        let n = self.n_points as f64;
        acc.iter().map(|a| a.value() / n).collect()
    }

    /// Every row minus `offset`. Pairwise distances are unchanged.
    pub fn translated(&self, offset: &[f64]) -> DataSet {
        assert_eq!(offset.len(), self.n_dims, "offset dimension");
        let values = self
            .rows()
            .flat_map(|r| r.iter().zip(offset).map(|(x, o)| x - o))
            .collect();
        DataSet {
            n_points: self.n_points,
            n_dims: self.n_dims,
            values,
        }
    }

    fn map_values(&self, f: impl Fn(f64) -> f64) -> DataSet {
        DataSet {
            n_points: self.n_points,
            n_dims: self.n_dims,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }
}

fn open(path: &Path) -> Result<File> {
    File::open(path).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Read a delimited text file. A first line in which no field parses as a
/// number is treated as a header and skipped.
pub fn load_csv(path: impl AsRef<Path>, delimiter: u8) -> Result<DataSet> {
    let path = path.as_ref();
    parse_csv(BufReader::new(open(path)?), delimiter)
}

pub fn parse_csv<R: Read>(reader: R, delimiter: u8) -> Result<DataSet> {
    let mut rdr = csv::ReaderBuilder::new()
        .has_headers(false)
        .delimiter(delimiter)
        .flexible(true)
        .trim(csv::Trim::All)
        .from_reader(reader);

    let mut values = Vec::new();
    let mut n_dims: Option<usize> = None;
    let mut n_points = 0usize;
    let mut first = true;
    for record in rdr.records() {
        let record = record.map_err(|e| Error::Parse {
            line: e.position().map_or(0, |p| p.line()),
            message: e.to_string(),
        })?;
        let line = record.position().map_or(0, |p| p.line());
        if record.iter().all(str::is_empty) {
            continue;
        }
        if first {
            first = false;
            if record.iter().all(|f| f.parse::<f64>().is_err()) {
                continue;
            }
        }
        match n_dims {
            None => n_dims = Some(record.len()),
            Some(d) if d != record.len() => {
                return Err(Error::RaggedRow {
                    line,
                    expected: d,
                    found: record.len(),
                })
            }
            Some(_) => {}
        }
        for field in record.iter() {
            let v: f64 = field.parse().map_err(|_| Error::Parse {
                line,
                message: format!("non-numeric field {field:?}"),
            })?;
            if !v.is_finite() {
                return Err(Error::Parse {
                    line,
                    message: format!("non-finite field {field:?}"),
                });
            }
            values.push(v);
        }
        n_points += 1;
    }
    DataSet::new(n_points, n_dims.ok_or(Error::Empty)?, values)
}

pub fn write_csv(ds: &DataSet, path: impl AsRef<Path>, delimiter: u8) -> Result<()> {
    let path = path.as_ref();
    let io = |source| Error::Io {
        path: path.to_path_buf(),
        source,
    };
    let mut out = BufWriter::new(File::create(path).map_err(io)?);
    let sep = (delimiter as char).to_string();
    for r in ds.rows() {
        let line: Vec<String> = r.iter().map(|v| v.to_string()).collect();
        writeln!(out, "{}", line.join(&sep)).map_err(io)?;
    }
    out.flush().map_err(io)
}

/// Read `n·d` little-endian f64 values, row-major, no header.
pub fn load_raw(path: impl AsRef<Path>, n: usize, d: usize) -> Result<DataSet> {
    let path = path.as_ref();
    let mut bytes = Vec::new();
    open(path)?
        .read_to_end(&mut bytes)
        .map_err(|source| Error::Io {
            path: path.to_path_buf(),
            source,
        })?;
    decode_raw(&bytes, n, d)
}

pub fn decode_raw(bytes: &[u8], n: usize, d: usize) -> Result<DataSet> {
    let expected = (n * d * 8) as u64;
    if bytes.len() as u64 != expected {
        return Err(Error::SizeMismatch {
            expected,
            actual: bytes.len() as u64,
        });
    }
    let values = bytes
        .chunks_exact(8)
        .map(|c| f64::from_le_bytes(c.try_into().expect("8-byte chunk")))
        .collect();
    DataSet::new(n, d, values)
}

pub fn encode_raw(ds: &DataSet) -> Vec<u8> {
    ds.values.iter().flat_map(|v| v.to_le_bytes()).collect()
}

pub fn store_raw(ds: &DataSet, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    std::fs::write(path, encode_raw(ds)).map_err(|source| Error::Io {
        path: path.to_path_buf(),
        source,
    })
}

/// Minimum and maximum interpoint distance and their ratio ζ.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct AspectReport {
    pub d_min: f64,
    pub d_max: f64,
    pub zeta: f64,
    /// Pairs at distance exactly zero, excluded from `d_min`.
    pub duplicate_pairs: u64,
    /// False when computed on a uniform subsample.
    pub exact: bool,
}

#[derive(Clone, Copy)]
struct PairStats {
    min2: f64,
    max2: f64,
    dups: u64,
}

impl PairStats {
    const EMPTY: PairStats = PairStats {
        min2: f64::INFINITY,
        max2: 0.0,
        dups: 0,
    };

    fn merge(self, o: PairStats) -> PairStats {
        PairStats {
            min2: self.min2.min(o.min2),
            max2: self.max2.max(o.max2),
            dups: self.dups + o.dups,
        }
    }
}

fn pair_scan(ds: &DataSet, rows: &[usize]) -> PairStats {
    par::map_indices(rows.len(), |a| {
        let ra = ds.row(rows[a]);
        let mut s = PairStats::EMPTY;
        for &b in &rows[a + 1..] {
            let d2 = sq_dist(ra, ds.row(b));
            if d2 == 0.0 {
                s.dups += 1;
            } else {
                s.min2 = s.min2.min(d2);
            }
            s.max2 = s.max2.max(d2);
        }
        s
    })
    .into_iter()
    .fold(PairStats::EMPTY, PairStats::merge)
}

fn report(s: PairStats, exact: bool) -> Result<AspectReport> {
    if !s.min2.is_finite() {
        return Err(Error::AllIdentical);
    }
    let d_min = s.min2.sqrt();
    let d_max = s.max2.sqrt();
    Ok(AspectReport {
        d_min,
        d_max,
        zeta: d_max / d_min,
        duplicate_pairs: s.dups,
        exact,
    })
}

/// Exact aspect ratio by an O(N²d) scan over all pairs.
///
/// Faster closest-pair algorithms exist; the exhaustive scan is kept for
/// exactness at the sizes this crate targets.
pub fn aspect_ratio(ds: &DataSet) -> Result<AspectReport> {
    if ds.n_points() < 2 {
        return Err(Error::AllIdentical);
    }
    let all: Vec<usize> = (0..ds.n_points()).collect();
    report(pair_scan(ds, &all), true)
}

/// Aspect ratio over a uniform subsample of `sample` rows. The result
/// overestimates `d_min` and underestimates `d_max`; use it for reporting only.
pub fn estimate_aspect_ratio<R: Rng + ?Sized>(
    ds: &DataSet,
    sample: usize,
    rng: &mut R,
) -> Result<AspectReport> {
    if sample >= ds.n_points() {
        return aspect_ratio(ds);
    }
    if sample < 2 {
        return Err(Error::InvalidParameter("subsample needs at least 2 rows".into()));
    }
    let mut rows = rand::seq::index::sample(rng, ds.n_points(), sample).into_vec();
    rows.sort_unstable();
    report(pair_scan(ds, &rows), false)
}

/// Divide every coordinate by the minimum interpoint distance.
pub fn scale_to_unit_min_distance(ds: &DataSet) -> Result<DataSet> {
    let r = aspect_ratio(ds)?;
    Ok(ds.map_values(|v| v / r.d_min))
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;

    fn ds(rows: &[&[f64]]) -> DataSet {
        DataSet::from_rows(rows).unwrap()
    }

    #[test]
    fn rejects_bad_shapes() {
        assert!(matches!(DataSet::new(0, 2, vec![]), Err(Error::Empty)));
        assert!(DataSet::new(1, 2, vec![1.0]).is_err());
        assert!(matches!(
            DataSet::new(1, 2, vec![1.0, f64::NAN]),
            Err(Error::NonFinite(1))
        ));
    }

    #[test]
    fn csv_parses_rows() {
        let d = parse_csv("0,0\n1,0\n".as_bytes(), b',').unwrap();
        assert_eq!(d.n_points(), 2);
        assert_eq!(d.row(1), &[1.0, 0.0]);
    }

    #[test]
    fn csv_skips_header_and_honours_delimiter() {
        let d = parse_csv("x;y\n1;2\n3;4\n".as_bytes(), b';').unwrap();
        assert_eq!(d.n_points(), 2);
        assert_eq!(d.row(0), &[1.0, 2.0]);
    }

    #[test]
    fn csv_reports_line_of_bad_field() {
        match parse_csv("1,x\n".as_bytes(), b',') {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 1),
            other => panic!("unexpected {other:?}"),
        }
        match parse_csv("1,2\n3,4\n5,y\n".as_bytes(), b',') {
            Err(Error::Parse { line, .. }) => assert_eq!(line, 3),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn csv_reports_ragged_rows() {
        match parse_csv("1,2\n3\n".as_bytes(), b',') {
            Err(Error::RaggedRow {
                line,
                expected,
                found,
            }) => assert_eq!((line, expected, found), (2, 2, 1)),
            other => panic!("unexpected {other:?}"),
        }
    }

    #[test]
    fn raw_decodes_and_checks_size() {
        let bytes: Vec<u8> = [1.0f64, 2.0].iter().flat_map(|v| v.to_le_bytes()).collect();
        let d = decode_raw(&bytes, 1, 2).unwrap();
        assert_eq!(d.row(0), &[1.0, 2.0]);
        assert!(matches!(
            decode_raw(&bytes, 2, 2),
            Err(Error::SizeMismatch {
                expected: 32,
                actual: 16
            })
        ));
    }

    #[test]
    fn raw_file_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("x.bin");
        let d = ds(&[&[1.5, -2.0], &[1e-300, 7.0]]);
        store_raw(&d, &p).unwrap();
        assert_eq!(load_raw(&p, 2, 2).unwrap(), d);
    }

    #[test]
    fn aspect_three_points() {
        let r = aspect_ratio(&ds(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 2.0]])).unwrap();
        assert_eq!(r.d_min, 1.0);
        assert_relative_eq!(r.d_max, 5f64.sqrt());
        assert_relative_eq!(r.zeta, 5f64.sqrt());
    }

    #[test]
    fn aspect_single_pair() {
        let r = aspect_ratio(&ds(&[&[0.0, 0.0], &[3.0, 4.0]])).unwrap();
        assert_eq!((r.d_min, r.d_max, r.zeta), (5.0, 5.0, 1.0));
    }

    #[test]
    fn aspect_edge_incidence_rows() {
        // rows e_i + e_j for the edges of a 4-cycle
        let edges = [(0, 1), (1, 2), (2, 3), (3, 0), (0, 2)];
        let rows: Vec<Vec<f64>> = edges
            .iter()
            .map(|&(i, j)| {
                let mut r = vec![0.0; 4];
                r[i] = 1.0;
                r[j] = 1.0;
                r
            })
            .collect();
        let r = aspect_ratio(&DataSet::from_rows(&rows).unwrap()).unwrap();
        assert_relative_eq!(r.zeta, 2f64.sqrt(), max_relative = 1e-15);
    }

    #[test]
    fn aspect_excludes_duplicates() {
        let r = aspect_ratio(&ds(&[&[0.0], &[0.0], &[2.0]])).unwrap();
        assert_eq!(r.d_min, 2.0);
        assert_eq!(r.duplicate_pairs, 1);
        assert!(matches!(
            aspect_ratio(&ds(&[&[1.0], &[1.0]])),
            Err(Error::AllIdentical)
        ));
    }

    #[test]
    fn scaling_examples() {
        let s = scale_to_unit_min_distance(&ds(&[&[0.0, 0.0], &[2.0, 0.0], &[0.0, 6.0]])).unwrap();
        assert_eq!(s, ds(&[&[0.0, 0.0], &[1.0, 0.0], &[0.0, 3.0]]));
        let s = scale_to_unit_min_distance(&ds(&[&[0.0, 0.0], &[2.0, 0.0]])).unwrap();
        assert_eq!(s, ds(&[&[0.0, 0.0], &[1.0, 0.0]]));
    }

    #[test]
    fn subsample_estimate_is_flagged() {
        use rand::SeedableRng;
        let rows: Vec<Vec<f64>> = (0..50).map(|i| vec![i as f64]).collect();
        let d = DataSet::from_rows(&rows).unwrap();
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(1);
        let r = estimate_aspect_ratio(&d, 10, &mut rng).unwrap();
        assert!(!r.exact);
        assert!(r.d_min >= 1.0 && r.d_max <= 49.0);
    }

    fn small_sets() -> impl Strategy<Value = DataSet> {
        (2usize..12, 1usize..4).prop_flat_map(|(n, d)| {
            proptest::collection::vec(-50i32..50, n * d).prop_map(move |v| {
                DataSet::new(n, d, v.into_iter().map(f64::from).collect()).unwrap()
            })
        })
    }

    proptest! {
        #[test]
        fn scaled_min_distance_is_one(d in small_sets()) {
            if let Ok(s) = scale_to_unit_min_distance(&d) {
                let r = aspect_ratio(&s).unwrap();
                prop_assert!((r.d_min - 1.0).abs() <= 1e-12);
                let twice = scale_to_unit_min_distance(&s).unwrap();
                for (a, b) in twice.values().iter().zip(s.values()) {
                    prop_assert!((a - b).abs() <= 1e-12 * b.abs().max(1.0));
                }
            }
        }

        #[test]
        fn aspect_is_permutation_invariant(d in small_sets(), seed in any::<u64>()) {
            use rand::{seq::SliceRandom, SeedableRng};
            let mut order: Vec<usize> = (0..d.n_points()).collect();
            order.shuffle(&mut rand_chacha::ChaCha8Rng::seed_from_u64(seed));
            let shuffled = DataSet::from_rows(&d.gather(&order)).unwrap();
            match (aspect_ratio(&d), aspect_ratio(&shuffled)) {
                (Ok(a), Ok(b)) => prop_assert_eq!(a, b),
                (Err(_), Err(_)) => {}
                _ => prop_assert!(false, "inconsistent outcomes"),
            }
        }

        #[test]
        fn raw_round_trip_is_bit_exact(v in proptest::collection::vec(-1e300f64..1e300, 1..40)) {
            let d = DataSet::new(v.len(), 1, v).unwrap();
            let back = decode_raw(&encode_raw(&d), d.n_points(), 1).unwrap();
            prop_assert_eq!(back.values().iter().map(|x| x.to_bits()).collect::<Vec<_>>(),
                            d.values().iter().map(|x| x.to_bits()).collect::<Vec<_>>());
        }
    }
}
