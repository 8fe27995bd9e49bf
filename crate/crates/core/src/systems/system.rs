use std::sync::Arc;

use crate::error::{Error, Result};
use crate::metric_core::{BowenMetric, DistanceOracle, FiniteMetricSpace};

/// A map on a sampled space with exact image indices.
#[derive(Clone, Debug)]
pub struct DynamicalSystem {
    name: String,
    space: FiniteMetricSpace,
    map: Arc<Vec<usize>>,
}

impl DynamicalSystem {
    pub fn new(name: impl Into<String>, space: FiniteMetricSpace, map: Vec<usize>) -> Result<Self> {
        let n = space.size();
        if map.len() != n {
            return Err(Error::Shape(format!("map has {} entries for {n} points", map.len())));
        }
        if let Some(i) = map.iter().position(|&f| f >= n) {
            return Err(Error::Representation(format!("image of point {i} leaves the net")));
        }
        Ok(DynamicalSystem { name: name.into(), space, map: Arc::new(map) })
    }

    pub fn identity(name: impl Into<String>, space: FiniteMetricSpace) -> Self {
        let map = (0..space.size()).collect();
        DynamicalSystem { name: name.into(), space, map: Arc::new(map) }
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn space(&self) -> &FiniteMetricSpace {
        &self.space
    }

    pub fn map(&self) -> &[usize] {
        &self.map
    }

    pub fn size(&self) -> usize {
        self.space.size()
    }

    pub fn image(&self, i: usize) -> usize {
        self.map[i]
    }

    pub fn iterate(&self, mut i: usize, k: usize) -> usize {
        for _ in 0..k {
            i = self.map[i];
        }
        i
    }

    pub fn bowen(&self, n: usize) -> Result<BowenMetric> {
        BowenMetric::new(self.space.clone(), &self.map, n)
    }

    /// `f^ℓ` on the same space.
    pub fn power(&self, l: usize) -> Result<DynamicalSystem> {
        if l == 0 {
            return Err(Error::Parameter("power exponent must be at least 1".into()));
        }
        let map = (0..self.size()).map(|i| self.iterate(i, l)).collect();
        DynamicalSystem::new(format!("{}^{l}", self.name), self.space.clone(), map)
    }

    /// `f × g` with the max metric; the pair `(i, j)` has index `i·|Y| + j`.
    pub fn product(a: &DynamicalSystem, b: &DynamicalSystem) -> Result<DynamicalSystem> {
        let (na, nb) = (a.size(), b.size());
        let total = na
            .checked_mul(nb)
            .filter(|&t| t <= u32::MAX as usize)
            .ok_or_else(|| Error::SizeLimit("product net too large".into()))?;
        let space = FiniteMetricSpace::new(ProductMetric {
            a: a.space.clone(),
            b: b.space.clone(),
        })?;
        let map = (0..total).map(|p| a.map[p / nb] * nb + b.map[p % nb]).collect();
        DynamicalSystem::new(format!("{}x{}", a.name, b.name), space, map)
    }

    /// Restriction to a forward-invariant subset.
    pub fn restrict(&self, subset: &[usize]) -> Result<DynamicalSystem> {
        let mut pos = vec![usize::MAX; self.size()];
        for (k, &i) in subset.iter().enumerate() {
            self.space.check(i)?;
            pos[i] = k;
        }
        let map = subset
            .iter()
            .map(|&i| {
                let p = pos[self.map[i]];
                if p == usize::MAX {
                    Err(Error::Representation(format!("subset not invariant at point {i}")))
                } else {
                    Ok(p)
                }
            })
            .collect::<Result<Vec<_>>>()?;
        let space = self.space.restrict(subset)?;
        DynamicalSystem::new(format!("{}|sub", self.name), space, map)
    }
}

struct ProductMetric {
    a: FiniteMetricSpace,
    b: FiniteMetricSpace,
}

impl DistanceOracle for ProductMetric {
    fn len(&self) -> usize {
        self.a.size() * self.b.size()
    }
    fn dist(&self, p: usize, q: usize) -> f64 {
        let nb = self.b.size();
        self.a.dist(p / nb, q / nb).max(self.b.dist(p % nb, q % nb))
    }
    fn label(&self, p: usize) -> String {
        let nb = self.b.size();
        format!("({},{})", self.a.label(p / nb), self.b.label(p % nb))
    }
    fn diameter_hint(&self) -> Option<f64> {
        Some(self.a.diameter().max(self.b.diameter()))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn cycle(n: usize) -> DynamicalSystem {
        let xs = (0..n).map(|k| k as f64).collect();
        let map = (0..n).map(|k| (k + 1) % n).collect();
        DynamicalSystem::new("cycle", FiniteMetricSpace::from_line(xs).unwrap(), map).unwrap()
    }

    #[test]
    fn power_and_product() {
        let c = cycle(5);
        assert_eq!(c.power(2).unwrap().map(), &[2, 3, 4, 0, 1]);
        assert!(c.power(0).is_err());
        let p = DynamicalSystem::product(&c, &cycle(3)).unwrap();
        assert_eq!(p.size(), 15);
        // (4, 2) -> (0, 0)
        assert_eq!(p.image(4 * 3 + 2), 0);
        assert_eq!(p.space().dist(0, 4 * 3 + 1), 4.0);
        assert_eq!(p.space().diameter(), 4.0);
    }

    #[test]
    fn rejects_maps_leaving_the_net() {
        let s = FiniteMetricSpace::discrete(2).unwrap();
        assert!(DynamicalSystem::new("x", s.clone(), vec![0, 2]).is_err());
        let c = cycle(4);
        assert!(c.restrict(&[0, 1]).is_err());
        assert_eq!(c.restrict(&[0, 1, 2, 3]).unwrap().map(), &[1, 2, 3, 0]);
    }
}
