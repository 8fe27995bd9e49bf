use std::sync::Arc;

use super::space::{DistanceOracle, FiniteMetricSpace};
use crate::error::{Error, Result};

/// The dynamical metric `d_n(x, y) = max_{j<n} d(f^j x, f^j y)` on a sampled
/// space with a certified index map.
#[derive(Clone, Debug)]
pub struct BowenMetric {
    base: FiniteMetricSpace,
    /// `orbits[k][i] = f^k(i)` for `k < horizon`.
    orbits: Arc<Vec<Vec<u32>>>,
    horizon: usize,
    stationary: bool,
}

impl BowenMetric {
    pub fn new(base: FiniteMetricSpace, map: &[usize], horizon: usize) -> Result<Self> {
        if horizon == 0 {
            return Err(Error::Parameter("horizon must be at least 1".into()));
        }
        let n = base.size();
        if map.len() != n {
            return Err(Error::Shape(format!(
                "map has {} entries for a space of {n} points",
                map.len()
            )));
        }
        if n > u32::MAX as usize {
            return Err(Error::SizeLimit("more than 2^32 points".into()));
        }
        if let Some((i, &fi)) = map.iter().enumerate().find(|(_, &fi)| fi >= n) {
            return Err(Error::Representation(format!(
                "image of point {i} is index {fi}, outside the space"
            )));
        }
        let identity = map.iter().enumerate().all(|(i, &fi)| i == fi);
        let mut orbits: Vec<Vec<u32>> = Vec::with_capacity(horizon);
        orbits.push((0..n as u32).collect());
        if !identity {
            for k in 1..horizon {
                let prev = &orbits[k - 1];
                let next: Vec<u32> = prev.iter().map(|&p| map[p as usize] as u32).collect();
                orbits.push(next);
            }
        }
        Ok(BowenMetric {
            base,
            orbits: Arc::new(orbits),
            horizon,
            stationary: identity || horizon == 1,
        })
    }

    /// `d_1 = d`.
    pub fn stationary(base: FiniteMetricSpace) -> Self {
        let n = base.size();
        BowenMetric {
            base,
            orbits: Arc::new(vec![(0..n as u32).collect()]),
            horizon: 1,
            stationary: true,
        }
    }

    pub fn base(&self) -> &FiniteMetricSpace {
        &self.base
    }

    pub fn size(&self) -> usize {
        self.base.size()
    }

    pub fn horizon(&self) -> usize {
        self.horizon
    }

    /// True when `d_n = d` (horizon 1 or identity map).
    pub fn is_stationary(&self) -> bool {
        self.stationary
    }

    /// `f^k(i)` for `k < horizon`.
    pub fn image(&self, k: usize, i: usize) -> usize {
        if self.stationary {
            i
        } else {
            self.orbits[k][i] as usize
        }
    }

    #[inline]
    pub fn dist(&self, i: usize, j: usize) -> f64 {
        if self.stationary {
            return self.base.dist(i, j);
        }
        let mut m = 0.0f64;
        for o in self.orbits.iter() {
            m = m.max(self.base.dist(o[i] as usize, o[j] as usize));
        }
        m
    }

    /// `d_n(i, j) > eps`, with early exit.
    #[inline]
    pub fn separated(&self, i: usize, j: usize, eps: f64) -> bool {
        if self.stationary {
            return self.base.dist(i, j) > eps;
        }
        self.orbits
            .iter()
            .any(|o| self.base.dist(o[i] as usize, o[j] as usize) > eps)
    }

    /// `d_n(i, j) < eps`, with early exit.
    #[inline]
    pub fn within(&self, i: usize, j: usize, eps: f64) -> bool {
        if self.stationary {
            return self.base.dist(i, j) < eps;
        }
        self.orbits
            .iter()
            .all(|o| self.base.dist(o[i] as usize, o[j] as usize) < eps)
    }

    /// `d_n` viewed as a metric space of its own.
    pub fn as_space(&self) -> Result<FiniteMetricSpace> {
        if self.stationary {
            return Ok(self.base.clone());
        }
        FiniteMetricSpace::new(BowenOracle { metric: self.clone() })
    }

    /// True if some pair sits at distance exactly `eps`.
    pub fn has_tie(&self, eps: f64) -> bool {
        let n = self.size();
        (0..n).any(|i| (0..i).any(|j| self.dist(i, j) == eps))
    }
}

struct BowenOracle {
    metric: BowenMetric,
}

impl DistanceOracle for BowenOracle {
    fn len(&self) -> usize {
        self.metric.size()
    }
    fn dist(&self, i: usize, j: usize) -> f64 {
        self.metric.dist(i, j)
    }
    fn label(&self, i: usize) -> String {
        self.metric.base.label(i)
    }
}

/// `d_n(i, j)` for a map given as an index table.
pub fn bowen_distance(
    space: &FiniteMetricSpace,
    map: &[usize],
    i: usize,
    j: usize,
    n: usize,
) -> Result<f64> {
    space.check(i)?;
    space.check(j)?;
    if n == 0 {
        return Err(Error::Parameter("horizon must be at least 1".into()));
    }
    if map.len() != space.size() {
        return Err(Error::Shape("map length differs from space size".into()));
    }
    let (mut a, mut b) = (i, j);
    let mut m = 0.0f64;
    for k in 0..n {
        m = m.max(space.dist(a, b));
        if k + 1 < n {
            a = *map
                .get(a)
                .filter(|&&x| x < space.size())
                .ok_or_else(|| Error::Representation(format!("image of {a} outside space")))?;
            b = *map
                .get(b)
                .filter(|&&x| x < space.size())
                .ok_or_else(|| Error::Representation(format!("image of {b} outside space")))?;
        }
    }
    Ok(m)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn doubling(den: usize) -> (FiniteMetricSpace, Vec<usize>) {
        let xs = (0..den).map(|k| k as f64 / den as f64).collect();
        let map = (0..den).map(|k| (2 * k) % den).collect();
        (FiniteMetricSpace::from_line(xs).unwrap(), map)
    }

    #[test]
    fn doubling_grid_example() {
        let (s, f) = doubling(64);
        // 1/64 and 2/64: distances 1/64, 2/64, 4/64 along the orbit.
        assert_eq!(bowen_distance(&s, &f, 1, 2, 3).unwrap(), 4.0 / 64.0);
        let b = BowenMetric::new(s.clone(), &f, 3).unwrap();
        assert_eq!(b.dist(1, 2), 4.0 / 64.0);
    }

    #[test]
    fn horizon_one_and_identity_agree_with_base() {
        let (s, f) = doubling(16);
        let id: Vec<usize> = (0..16).collect();
        let b1 = BowenMetric::new(s.clone(), &f, 1).unwrap();
        let bi = BowenMetric::new(s.clone(), &id, 7).unwrap();
        for i in 0..16 {
            for j in 0..16 {
                assert_eq!(b1.dist(i, j), s.dist(i, j));
                assert_eq!(bi.dist(i, j), s.dist(i, j));
            }
        }
    }

    #[test]
    fn monotone_in_horizon() {
        let (s, f) = doubling(32);
        let ms: Vec<BowenMetric> =
            (1..6).map(|n| BowenMetric::new(s.clone(), &f, n).unwrap()).collect();
        for i in 0..32 {
            for j in 0..32 {
                for w in ms.windows(2) {
                    assert!(w[1].dist(i, j) >= w[0].dist(i, j));
                }
            }
        }
    }

    #[test]
    fn rejects_bad_maps() {
        let (s, _) = doubling(4);
        assert!(matches!(
            BowenMetric::new(s.clone(), &[0, 1, 2, 4], 2),
            Err(Error::Representation(_))
        ));
        assert!(matches!(BowenMetric::new(s.clone(), &[0, 1], 2), Err(Error::Shape(_))));
        assert!(bowen_distance(&s, &[0, 1, 2, 3], 0, 9, 2).is_err());
        assert!(matches!(
            bowen_distance(&s, &[0, 9, 2, 3], 0, 1, 2),
            Err(Error::Representation(_))
        ));
    }

    #[test]
    fn bowen_space_is_metric() {
        let (s, f) = doubling(16);
        let b = BowenMetric::new(s, &f, 3).unwrap();
        let sp = b.as_space().unwrap();
        for i in 0..16 {
            for j in 0..16 {
                for k in 0..16 {
                    assert!(sp.dist(i, j) <= sp.dist(i, k) + sp.dist(k, j));
                }
            }
        }
    }
}
