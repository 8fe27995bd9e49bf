use serde::{Deserialize, Serialize};

use super::system::DynamicalSystem;
use crate::error::{Error, Result};
use crate::metric_core::FiniteMetricSpace;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum IntervalMap {
    /// `x ↦ 2x mod 1` on `{k/D : 0 ≤ k < D}`.
    Doubling,
    /// `x ↦ 1 − |2x − 1|` on `{k/D : 0 ≤ k ≤ D}`, `D` even.
    Tent,
    /// Identity on `{k/D : 0 ≤ k ≤ D}`.
    Identity,
    /// Identity on `{0} ∪ {1/k : 1 ≤ k ≤ D}`.
    Harmonic,
}

/// Lattice map on `[0, 1]` with denominator `den`.
pub fn interval_grid(kind: IntervalMap, den: usize) -> Result<DynamicalSystem> {
    if den == 0 {
        return Err(Error::Parameter("denominator must be positive".into()));
    }
    let (count, map): (usize, Vec<usize>) = match kind {
        IntervalMap::Doubling => (den, (0..den).map(|k| (2 * k) % den).collect()),
        IntervalMap::Tent => {
            if den % 2 != 0 {
                return Err(Error::Parameter("the tent lattice needs an even denominator".into()));
            }
            (den + 1, (0..=den).map(|k| 2 * k.min(den - k)).collect())
        }
        IntervalMap::Identity => (den + 1, (0..=den).collect()),
        IntervalMap::Harmonic => {
            return Ok(DynamicalSystem::identity(format!("harmonic/{den}"), harmonic_set(den)?));
        }
    };
    let xs = (0..count).map(|k| k as f64 / den as f64).collect();
    let name = format!("{kind:?}/{den}").to_lowercase();
    DynamicalSystem::new(name, FiniteMetricSpace::from_line(xs)?, map)
}

/// Smallest power of two `D` with `1/D ≤ eps_min / 8`.
pub fn lattice_denominator_for(eps_min: f64) -> usize {
    let need = (8.0 / eps_min).ceil().max(1.0) as usize;
    need.next_power_of_two()
}

/// `{0} ∪ {1/k : 1 ≤ k ≤ k_max}` on the line.
pub fn harmonic_set(k_max: usize) -> Result<FiniteMetricSpace> {
    let mut xs = vec![0.0];
    xs.extend((1..=k_max).map(|k| 1.0 / k as f64));
    FiniteMetricSpace::from_line(xs)
}

/// `{k/m : 0 ≤ k ≤ m}`.
pub fn unit_lattice(m: usize) -> Result<FiniteMetricSpace> {
    if m == 0 {
        return Err(Error::Parameter("lattice needs m ≥ 1".into()));
    }
    FiniteMetricSpace::from_line((0..=m).map(|k| k as f64 / m as f64).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lattice_maps_are_closed() {
        let d = interval_grid(IntervalMap::Doubling, 64).unwrap();
        assert_eq!(d.size(), 64);
        assert_eq!(d.image(40), 16);
        let t = interval_grid(IntervalMap::Tent, 8).unwrap();
        assert_eq!(t.map(), &[0, 2, 4, 6, 8, 6, 4, 2, 0]);
        assert!(interval_grid(IntervalMap::Tent, 7).is_err());
        assert_eq!(lattice_denominator_for(0.1), 128);
        assert_eq!(harmonic_set(3).unwrap().size(), 4);
    }
}
