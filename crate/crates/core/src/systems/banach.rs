use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{Error, Result};
use crate::metric_core::{DenseMetric, FiniteMetricSpace};

/// The cube `K = {x : |x_n| ≤ 1}` with `‖x‖ = sup_n |x_n| / n`, and its
/// lattice `L(ε)`: the first `n₀ = ⌊2/ε⌋` coordinates range over the `K`
/// cell midpoints `−1 + (2i+1)/K`, `K = ⌊2/ε⌋`, and later ones equal 1.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BanachCube {
    eps: f64,
    n0: usize,
    levels: usize,
}

/// The result of checking a spanning claim on sampled points of `K`.
#[derive(Clone, Debug, PartialEq)]
pub struct SpanningAudit {
    pub samples: usize,
    /// Largest distance from a sample to `L`, tail bound included.
    pub worst: f64,
    pub eps: f64,
}

impl SpanningAudit {
    pub fn passed(&self) -> bool {
        self.worst < self.eps
    }
}

pub fn banach_distance(x: &[f64], y: &[f64]) -> f64 {
    x.iter()
        .zip(y)
        .enumerate()
        .map(|(k, (a, b))| (a - b).abs() / (k + 1) as f64)
        .fold(0.0, f64::max)
}

impl BanachCube {
    pub fn new(eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps < 1.0) {
            return Err(Error::Parameter(format!("scale must lie in (0, 1), got {eps}")));
        }
        let n0 = (2.0 / eps).floor() as usize;
        Ok(BanachCube { eps, n0, levels: n0 })
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn coord_count(&self) -> usize {
        self.n0
    }

    pub fn levels(&self) -> usize {
        self.levels
    }

    pub fn grid_value(&self, i: usize) -> f64 {
        -1.0 + (2 * i + 1) as f64 / self.levels as f64
    }

    /// `|L| = ⌊2/ε⌋^{n₀}`, if it fits.
    pub fn cardinality(&self) -> Option<u128> {
        (self.levels as u128).checked_pow(self.n0 as u32)
    }

    pub fn ln_cardinality(&self) -> f64 {
        self.n0 as f64 * (self.levels as f64).ln()
    }

    /// Coordinates `1..=n₀` of the lattice point with this index.
    pub fn point(&self, mut index: u128) -> Vec<f64> {
        let k = self.levels as u128;
        let mut x = vec![0.0; self.n0];
        for c in (0..self.n0).rev() {
            x[c] = self.grid_value((index % k) as usize);
            index /= k;
        }
        x
    }

    /// Nearest lattice point, coordinate by coordinate.
    pub fn nearest(&self, y: &[f64]) -> Vec<f64> {
        let k = self.levels as f64;
        let mut x: Vec<f64> = y
            .iter()
            .take(self.n0)
            .map(|&v| {
                let i = (((v + 1.0) * k / 2.0).floor() as isize).clamp(0, self.levels as isize - 1);
                self.grid_value(i as usize)
            })
            .collect();
        x.extend(std::iter::repeat(1.0).take(y.len().saturating_sub(self.n0)));
        x
    }

    /// Uniform samples of `K` with `stored` coordinates each; the distance to
    /// `L` adds the bound `2/(stored+1)` for the coordinates not stored.
    pub fn spanning_audit(&self, samples: usize, stored: usize, seed: u64) -> Result<SpanningAudit> {
        if stored < self.n0 {
            return Err(Error::Parameter("samples must store at least n0 coordinates".into()));
        }
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let tail = 2.0 / (stored + 1) as f64;
        let mut worst: f64 = 0.0;
        for _ in 0..samples {
            let y: Vec<f64> = (0..stored).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let x = self.nearest(&y);
            worst = worst.max(banach_distance(&x, &y).max(tail));
        }
        Ok(SpanningAudit { samples, worst, eps: self.eps })
    }

    /// Smallest distance between distinct lattice points. The norm depends
    /// only on the difference vector, which ranges over a product, so this
    /// scans each coordinate's differences and takes the smallest nonzero
    /// one with all other coordinates equal.
    pub fn min_separation(&self) -> f64 {
        let mut best = f64::INFINITY;
        for n in 1..=self.n0 {
            for i in 0..self.levels {
                for j in 0..self.levels {
                    if i != j {
                        let d = (self.grid_value(i) - self.grid_value(j)).abs() / n as f64;
                        best = best.min(d);
                    }
                }
            }
        }
        best
    }

    /// Smallest distance over all pairs, by direct enumeration.
    pub fn min_separation_pairs(&self, cap: u128) -> Result<f64> {
        let space = self.space(cap)?;
        let n = space.size();
        let mut best = f64::INFINITY;
        for i in 0..n {
            for j in 0..i {
                best = best.min(space.dist(i, j));
            }
        }
        Ok(best)
    }

    /// The lattice as a metric space, if it has at most `cap` points.
    pub fn space(&self, cap: u128) -> Result<FiniteMetricSpace> {
        let card = self
            .cardinality()
            .filter(|&c| c <= cap)
            .ok_or_else(|| Error::SizeLimit(format!("|L| = {}^{}", self.levels, self.n0)))?;
        let pts: Vec<Vec<f64>> = (0..card).map(|i| self.point(i)).collect();
        let dense = DenseMetric::from_fn(pts.len(), |i, j| banach_distance(&pts[i], &pts[j]));
        FiniteMetricSpace::new(dense)
    }

    /// `ln S(K, ε)` lies in `[ln |L(2√ε)|, ln |L(ε/2)|]`: `L(2√ε)` is
    /// `2ε`-separated and `L(ε/2)` is `ε/2`-spanning.
    pub fn ln_separated_bracket(eps: f64) -> Result<(f64, f64)> {
        if !(eps > 0.0 && eps < 0.25) {
            return Err(Error::Parameter("bracket needs 0 < ε < 1/4".into()));
        }
        let lo = BanachCube::new(2.0 * eps.sqrt())?.ln_cardinality();
        let hi = BanachCube::new(eps / 2.0)?.ln_cardinality();
        Ok((lo, hi))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn half_lattice() {
        let c = BanachCube::new(0.5).unwrap();
        assert_eq!(c.coord_count(), 4);
        assert_eq!(c.cardinality(), Some(256));
        assert_eq!(c.point(0), vec![-0.75; 4]);
        let pairs = c.min_separation_pairs(1 << 10).unwrap();
        assert_eq!(pairs, c.min_separation());
        assert!(pairs >= 0.5f64.powi(2) / 4.0);
        assert!(BanachCube::new(1.0).is_err());
    }

    #[test]
    fn nearest_matches_scan() {
        let c = BanachCube::new(0.5).unwrap();
        let space_pts: Vec<Vec<f64>> = (0..256).map(|i| c.point(i)).collect();
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for _ in 0..50 {
            let y: Vec<f64> = (0..4).map(|_| rng.gen_range(-1.0..=1.0)).collect();
            let fast = banach_distance(&c.nearest(&y), &y);
            let scan = space_pts.iter().map(|p| banach_distance(p, &y)).fold(f64::INFINITY, f64::min);
            assert!((fast - scan).abs() < 1e-15);
        }
    }

    #[test]
    fn bracket_orders() {
        let (lo, hi) = BanachCube::ln_separated_bracket(0.01).unwrap();
        assert!(lo < hi);
    }
}
