use serde::{Deserialize, Serialize};

use super::system::DynamicalSystem;
use crate::error::{Error, Result};
use crate::metric_core::{DistanceOracle, FiniteMetricSpace};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum ShiftMetric {
    /// `Σ_k 2^{-k} d(x_k, y_k)`, `k = 1..L`.
    ProductRho,
    /// `e^{-k}` with `k` the first differing coordinate, counted from 0.
    ExpBinary,
}

/// One-sided shift over a finite metric alphabet, represented by prefixes
/// of length `depth`; coordinates past the prefix hold `tail`.
#[derive(Clone, Debug)]
pub struct ShiftSpace {
    alphabet: FiniteMetricSpace,
    depth: usize,
    tail: usize,
    kind: ShiftMetric,
}

/// Largest prefix net we are willing to enumerate.
pub const MAX_SHIFT_NET: usize = 1 << 22;

impl ShiftSpace {
    pub fn new(alphabet: FiniteMetricSpace, depth: usize, tail: usize, kind: ShiftMetric) -> Result<Self> {
        if depth == 0 {
            return Err(Error::Parameter("shift depth must be at least 1".into()));
        }
        alphabet.check(tail)?;
        if kind == ShiftMetric::ExpBinary && alphabet.size() != 2 {
            return Err(Error::Parameter("the exponential metric needs a two-letter alphabet".into()));
        }
        if alphabet.size() > 255 {
            return Err(Error::SizeLimit("alphabets above 255 letters".into()));
        }
        Ok(ShiftSpace { alphabet, depth, tail, kind })
    }

    /// Full shift on `m` letters with the discrete alphabet metric.
    pub fn full(m: usize, depth: usize) -> Result<Self> {
        Self::new(FiniteMetricSpace::discrete(m)?, depth, 0, ShiftMetric::ProductRho)
    }

    /// Binary shift with the `e^{-k}` metric.
    pub fn exp_binary(depth: usize) -> Result<Self> {
        Self::new(FiniteMetricSpace::discrete(2)?, depth, 0, ShiftMetric::ExpBinary)
    }

    /// Depth giving truncation error below `eps_min / 8`.
    pub fn default_depth(alphabet_diam: f64, eps_min: f64) -> usize {
        ((8.0 * alphabet_diam / eps_min).log2().ceil().max(1.0)) as usize
    }

    pub fn alphabet(&self) -> &FiniteMetricSpace {
        &self.alphabet
    }

    pub fn depth(&self) -> usize {
        self.depth
    }

    pub fn kind(&self) -> ShiftMetric {
        self.kind
    }

    /// `2^{-L} · diam(alphabet)` for the product metric; for the exponential
    /// metric the unseen coordinates contribute at most `e^{-L}`.
    pub fn truncation_bound(&self) -> f64 {
        match self.kind {
            ShiftMetric::ProductRho => 0.5f64.powi(self.depth as i32) * self.alphabet.diameter(),
            ShiftMetric::ExpBinary => (-(self.depth as f64)).exp(),
        }
    }

    /// Distance between two prefixes with the truncation bound.
    pub fn rho_distance(&self, x: &[usize], y: &[usize]) -> Result<(f64, f64)> {
        if x.len() != self.depth || y.len() != self.depth {
            return Err(Error::Shape(format!(
                "prefixes of length {} and {} for depth {}",
                x.len(),
                y.len(),
                self.depth
            )));
        }
        for &a in x.iter().chain(y) {
            self.alphabet.check(a)?;
        }
        let v = match self.kind {
            ShiftMetric::ProductRho => {
                let mut w = 0.5;
                let mut s = 0.0;
                for (&a, &b) in x.iter().zip(y) {
                    s += w * self.alphabet.dist(a, b);
                    w *= 0.5;
                }
                s
            }
            ShiftMetric::ExpBinary => match x.iter().zip(y).position(|(a, b)| a != b) {
                Some(k) => (-(k as f64)).exp(),
                None => 0.0,
            },
        };
        Ok((v, self.truncation_bound()))
    }

    pub fn net_size(&self) -> Result<usize> {
        let a = self.alphabet.size();
        let mut n: usize = 1;
        for _ in 0..self.depth {
            n = n
                .checked_mul(a)
                .filter(|&n| n <= MAX_SHIFT_NET)
                .ok_or_else(|| Error::SizeLimit(format!("{a}^{} prefixes", self.depth)))?;
        }
        Ok(n)
    }

    /// Prefix of the point with this index (coordinate 1 most significant).
    pub fn word(&self, mut index: usize) -> Vec<usize> {
        let a = self.alphabet.size();
        let mut w = vec![0; self.depth];
        for k in (0..self.depth).rev() {
            w[k] = index % a;
            index /= a;
        }
        w
    }

    pub fn index(&self, word: &[usize]) -> usize {
        let a = self.alphabet.size();
        word.iter().fold(0, |acc, &s| acc * a + s)
    }

    /// Every prefix of length `depth`, with σ.
    pub fn system(&self) -> Result<DynamicalSystem> {
        let n = self.net_size()?;
        let a = self.alphabet.size();
        let l = self.depth;
        let mut words = vec![0u8; n * l];
        for i in 0..n {
            for (k, s) in self.word(i).into_iter().enumerate() {
                words[i * l + k] = s as u8;
            }
        }
        let table: Vec<f64> = (0..a * a).map(|p| self.alphabet.dist(p / a, p % a)).collect();
        let weights: Vec<f64> = (1..=l).map(|k| 0.5f64.powi(k as i32)).collect();
        let exp_table: Vec<f64> = (0..=l).map(|k| (-(k as f64)).exp()).collect();
        let diameter = match self.kind {
            ShiftMetric::ProductRho => None,
            ShiftMetric::ExpBinary => Some(1.0),
        };
        let oracle = ShiftOracle { n, l, a, words, table, weights, exp_table, kind: self.kind, diameter };
        let space = FiniteMetricSpace::new(oracle)?;
        let block = n / a;
        let map = (0..n).map(|i| (i % block) * a + self.tail).collect();
        let name = match self.kind {
            ShiftMetric::ProductRho => format!("shift{a}x{l}"),
            ShiftMetric::ExpBinary => format!("expbinary{l}"),
        };
        DynamicalSystem::new(name, space, map)
    }
}

struct ShiftOracle {
    n: usize,
    l: usize,
    a: usize,
    words: Vec<u8>,
    table: Vec<f64>,
    weights: Vec<f64>,
    exp_table: Vec<f64>,
    kind: ShiftMetric,
    diameter: Option<f64>,
}

impl DistanceOracle for ShiftOracle {
    fn len(&self) -> usize {
        self.n
    }

    #[inline]
    fn dist(&self, i: usize, j: usize) -> f64 {
        let x = &self.words[i * self.l..(i + 1) * self.l];
        let y = &self.words[j * self.l..(j + 1) * self.l];
        match self.kind {
            ShiftMetric::ProductRho => {
                let mut s = 0.0;
                for k in 0..self.l {
                    s += self.weights[k] * self.table[x[k] as usize * self.a + y[k] as usize];
                }
                s
            }
            ShiftMetric::ExpBinary => match x.iter().zip(y).position(|(a, b)| a != b) {
                Some(k) => self.exp_table[k],
                None => 0.0,
            },
        }
    }

    fn label(&self, i: usize) -> String {
        self.words[i * self.l..(i + 1) * self.l].iter().map(|s| s.to_string()).collect::<Vec<_>>().join(".")
    }

    fn diameter_hint(&self) -> Option<f64> {
        self.diameter
    }
}
