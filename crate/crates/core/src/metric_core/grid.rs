use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Multiply grid starts by this to keep scales off rational distances.
pub const TIE_OFFSET: f64 = 1.0 - 1.0 / (100.0 * std::f64::consts::PI);

/// Geometric grid `ε_i = start · ratio^i`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScaleGrid {
    pub start: f64,
    pub ratio: f64,
    pub count: usize,
}

impl ScaleGrid {
    pub fn new(start: f64, ratio: f64, count: usize) -> Result<Self> {
        if !(start > 0.0 && start.is_finite()) {
            return Err(Error::Parameter(format!("grid start must be positive, got {start}")));
        }
        if !(ratio > 0.0 && ratio < 1.0) {
            return Err(Error::Parameter(format!("grid ratio must lie in (0, 1), got {ratio}")));
        }
        if count == 0 {
            return Err(Error::Parameter("grid needs at least one scale".into()));
        }
        let g = ScaleGrid { start, ratio, count };
        if g.values().last().map_or(true, |&e| !(e > 0.0)) {
            return Err(Error::Parameter("grid underflows to zero".into()));
        }
        Ok(g)
    }

    /// Same grid with the start nudged by [`TIE_OFFSET`].
    pub fn tie_free(start: f64, ratio: f64, count: usize) -> Result<Self> {
        Self::new(start * TIE_OFFSET, ratio, count)
    }

    /// Grid from `hi` down to `lo` (both included) with `count` points.
    pub fn spanning(hi: f64, lo: f64, count: usize) -> Result<Self> {
        if !(lo > 0.0 && lo < hi) || count < 2 {
            return Err(Error::Parameter("need 0 < lo < hi and at least two points".into()));
        }
        Self::new(hi, (lo / hi).powf(1.0 / (count - 1) as f64), count)
    }

    pub fn values(&self) -> Vec<f64> {
        (0..self.count).map(|i| self.start * self.ratio.powi(i as i32)).collect()
    }

    /// Every other scale, starting with the first.
    pub fn every_other(&self) -> ScaleGrid {
        ScaleGrid {
            start: self.start,
            ratio: self.ratio * self.ratio,
            count: self.count.div_ceil(2),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn strictly_decreasing() {
        let g = ScaleGrid::new(0.5, 0.7, 20).unwrap();
        let v = g.values();
        assert!(v.windows(2).all(|w| w[1] < w[0] && w[1] > 0.0));
        assert!(ScaleGrid::new(0.5, 1.0, 3).is_err());
        assert!(ScaleGrid::new(-1.0, 0.5, 3).is_err());
        assert!(ScaleGrid::new(1.0, 0.5, 0).is_err());
        let s = ScaleGrid::spanning(1.0, 1e-3, 4).unwrap().values();
        assert!((s[3] - 1e-3).abs() < 1e-15);
    }
}
