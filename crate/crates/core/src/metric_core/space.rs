use std::fs::File;
use std::io::{BufReader, BufWriter, Read, Write};
use std::path::Path;
use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};

/// Distance oracle behind a [`FiniteMetricSpace`].
///
/// Implementations must be symmetric with zero diagonal; the triangle
/// inequality is spot-checked when the space is constructed.
pub trait DistanceOracle: Send + Sync {
    fn len(&self) -> usize;
    fn dist(&self, i: usize, j: usize) -> f64;
    fn label(&self, i: usize) -> String {
        i.to_string()
    }
    /// Real coordinates when the space is a subset of the line with `|x - y|`.
    fn line(&self) -> Option<&[f64]> {
        None
    }
    /// Exact diameter if known without a pair scan.
    fn diameter_hint(&self) -> Option<f64> {
        None
    }
}

/// Indexed point set with a distance oracle and cached diameter.
#[derive(Clone)]
pub struct FiniteMetricSpace {
    oracle: Arc<dyn DistanceOracle>,
    diameter: f64,
}

impl std::fmt::Debug for FiniteMetricSpace {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("FiniteMetricSpace")
            .field("size", &self.size())
            .field("diameter", &self.diameter)
            .finish()
    }
}

const TRIANGLE_SAMPLES: usize = 256;
const TRIANGLE_SLACK: f64 = 1e-12;

impl FiniteMetricSpace {
    pub fn new<O: DistanceOracle + 'static>(oracle: O) -> Result<Self> {
        Self::from_arc(Arc::new(oracle))
    }

    pub fn from_arc(oracle: Arc<dyn DistanceOracle>) -> Result<Self> {
        let n = oracle.len();
        if n == 0 {
            return Err(Error::Shape("empty metric space".into()));
        }
        spot_check(oracle.as_ref())?;
        let diameter = match (oracle.diameter_hint(), oracle.line()) {
            (Some(d), _) => d,
            (None, Some(xs)) => {
                let lo = xs.iter().cloned().fold(f64::INFINITY, f64::min);
                let hi = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
                hi - lo
            }
            (None, None) => scan_diameter(oracle.as_ref()),
        };
        Ok(FiniteMetricSpace { oracle, diameter })
    }

    /// Dense space from a full symmetric matrix.
    pub fn from_matrix(rows: &[Vec<f64>]) -> Result<Self> {
        Self::new(DenseMetric::from_rows(rows)?)
    }

    /// Points on the real line with the usual distance.
    pub fn from_line(xs: Vec<f64>) -> Result<Self> {
        Self::new(LineMetric::new(xs)?)
    }

    /// `n` points, all pairwise at distance 1.
    pub fn discrete(n: usize) -> Result<Self> {
        let rows: Vec<Vec<f64>> = (0..n)
            .map(|i| (0..n).map(|j| if i == j { 0.0 } else { 1.0 }).collect())
            .collect();
        Self::from_matrix(&rows)
    }

    pub fn size(&self) -> usize {
        self.oracle.len()
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        self.oracle.dist(i, j)
    }

    pub fn try_dist(&self, i: usize, j: usize) -> Result<f64> {
        self.check(i)?;
        self.check(j)?;
        Ok(self.oracle.dist(i, j))
    }

    pub fn check(&self, i: usize) -> Result<()> {
        if i < self.size() {
            Ok(())
        } else {
            Err(Error::Index { index: i, size: self.size() })
        }
    }

    pub fn label(&self, i: usize) -> String {
        self.oracle.label(i)
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    pub fn line(&self) -> Option<&[f64]> {
        self.oracle.line()
    }

    pub fn oracle(&self) -> &Arc<dyn DistanceOracle> {
        &self.oracle
    }

    /// Materialize all distances (strict lower triangle).
    pub fn to_dense(&self) -> DenseMetric {
        let n = self.size();
        let mut tri = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in 0..i {
                tri.push(self.dist(i, j));
            }
        }
        DenseMetric { n, tri, labels: None }
    }

    /// Subspace on the given indices, materialized.
    pub fn restrict(&self, idx: &[usize]) -> Result<FiniteMetricSpace> {
        for &i in idx {
            self.check(i)?;
        }
        let rows: Vec<Vec<f64>> = idx
            .iter()
            .map(|&i| idx.iter().map(|&j| self.dist(i, j)).collect())
            .collect();
        let mut d = DenseMetric::from_rows(&rows)?;
        d.labels = Some(idx.iter().map(|&i| self.label(i)).collect());
        FiniteMetricSpace::new(d)
    }

    /// Write the distance cache: `DYNO`, u16 version, u64 count, then the
    /// strict lower triangle row by row (`d(1,0), d(2,0), d(2,1), ...`) as
    /// little-endian f64.
    pub fn write_cache(&self, path: &Path) -> Result<()> {
        let mut w = BufWriter::new(File::create(path)?);
        w.write_all(CACHE_MAGIC)?;
        w.write_all(&CACHE_VERSION.to_le_bytes())?;
        w.write_all(&(self.size() as u64).to_le_bytes())?;
        let n = self.size();
        for i in 0..n {
            for j in 0..i {
                w.write_all(&self.dist(i, j).to_le_bytes())?;
            }
        }
        w.flush()?;
        Ok(())
    }

    pub fn read_cache(path: &Path) -> Result<FiniteMetricSpace> {
        let mut r = BufReader::new(File::open(path)?);
        let mut magic = [0u8; 4];
        r.read_exact(&mut magic)?;
        if &magic != CACHE_MAGIC {
            return Err(Error::Format("bad magic in distance cache".into()));
        }
        let mut v = [0u8; 2];
        r.read_exact(&mut v)?;
        let version = u16::from_le_bytes(v);
        if version != CACHE_VERSION {
            return Err(Error::Format(format!("unsupported cache version {version}")));
        }
        let mut c = [0u8; 8];
        r.read_exact(&mut c)?;
        let n = u64::from_le_bytes(c) as usize;
        let m = n * n.saturating_sub(1) / 2;
        let mut tri = Vec::with_capacity(m);
        let mut b = [0u8; 8];
        for _ in 0..m {
            r.read_exact(&mut b)?;
            tri.push(f64::from_le_bytes(b));
        }
        if r.read(&mut b)? != 0 {
            return Err(Error::Format("trailing bytes in distance cache".into()));
        }
        FiniteMetricSpace::new(DenseMetric { n, tri, labels: None })
    }
}

pub const CACHE_MAGIC: &[u8; 4] = b"DYNO";
pub const CACHE_VERSION: u16 = 1;

fn scan_diameter(o: &dyn DistanceOracle) -> f64 {
    let n = o.len();
    let mut d = 0.0f64;
    for i in 0..n {
        for j in 0..i {
            d = d.max(o.dist(i, j));
        }
    }
    d
}

fn spot_check(o: &dyn DistanceOracle) -> Result<()> {
    let n = o.len();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    for _ in 0..TRIANGLE_SAMPLES.min(n * n * n) {
        let i = rng.gen_range(0..n);
        let j = rng.gen_range(0..n);
        let k = rng.gen_range(0..n);
        let dij = o.dist(i, j);
        if !(dij >= 0.0) || dij != o.dist(j, i) {
            return Err(Error::Representation(format!(
                "distance between {i} and {j} is negative or asymmetric"
            )));
        }
        if o.dist(i, i) != 0.0 {
            return Err(Error::Representation(format!("nonzero self-distance at {i}")));
        }
        let bound = o.dist(i, k) + o.dist(k, j);
        if dij > bound + TRIANGLE_SLACK * bound.max(1.0) {
            return Err(Error::Representation(format!(
                "triangle inequality fails on ({i}, {j}, {k})"
            )));
        }
    }
    Ok(())
}

/// Materialized distances, strict lower triangle.
#[derive(Clone, Debug)]
pub struct DenseMetric {
    n: usize,
    tri: Vec<f64>,
    labels: Option<Vec<String>>,
}

impl DenseMetric {
    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        for (i, r) in rows.iter().enumerate() {
            if r.len() != n {
                return Err(Error::Shape(format!("row {i} has {} entries, expected {n}", r.len())));
            }
            if r[i] != 0.0 {
                return Err(Error::Representation(format!("nonzero diagonal at {i}")));
            }
        }
        let mut tri = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in 0..i {
                let (a, b) = (rows[i][j], rows[j][i]);
                if a != b || !(a >= 0.0) || !a.is_finite() {
                    return Err(Error::Representation(format!(
                        "entries ({i},{j}) must be equal, finite and nonnegative"
                    )));
                }
                tri.push(a);
            }
        }
        Ok(DenseMetric { n, tri, labels: None })
    }

    pub fn from_fn(n: usize, f: impl Fn(usize, usize) -> f64) -> Self {
        let mut tri = Vec::with_capacity(n * n.saturating_sub(1) / 2);
        for i in 0..n {
            for j in 0..i {
                tri.push(f(i, j));
            }
        }
        DenseMetric { n, tri, labels: None }
    }

    pub fn with_labels(mut self, labels: Vec<String>) -> Self {
        self.labels = Some(labels);
        self
    }
}

impl DistanceOracle for DenseMetric {
    fn len(&self) -> usize {
        self.n
    }
    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        if i == j {
            0.0
        } else if i > j {
            self.tri[i * (i - 1) / 2 + j]
        } else {
            self.tri[j * (j - 1) / 2 + i]
        }
    }
    fn label(&self, i: usize) -> String {
        match &self.labels {
            Some(l) => l[i].clone(),
            None => i.to_string(),
        }
    }
}

/// Points of the real line.
#[derive(Clone, Debug)]
pub struct LineMetric {
    xs: Vec<f64>,
}

impl LineMetric {
    pub fn new(xs: Vec<f64>) -> Result<Self> {
        if xs.iter().any(|x| !x.is_finite()) {
            return Err(Error::Representation("non-finite coordinate".into()));
        }
        Ok(LineMetric { xs })
    }
}

impl DistanceOracle for LineMetric {
    fn len(&self) -> usize {
        self.xs.len()
    }
    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        (self.xs[i] - self.xs[j]).abs()
    }
    fn label(&self, i: usize) -> String {
        self.xs[i].to_string()
    }
    fn line(&self) -> Option<&[f64]> {
        Some(&self.xs)
    }
}
