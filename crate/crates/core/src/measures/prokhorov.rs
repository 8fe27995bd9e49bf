use super::atomic::AtomicMeasure;
use super::transport::w1;
use crate::error::{Error, Result};
use crate::metric_core::BowenMetric;

/// Combined support size up to which the subset scan is run.
pub const MAX_LP_SUPPORT: usize = 15;

/// Largest excess `μ(E) − ν(N(E))` over subsets `E` of `supp μ`, where
/// `N(E)` collects the atoms of `ν` adjacent to `E` (`adj[i]` bitmask).
fn excess(mu: &[f64], nu: &[f64], adj: &[u32]) -> f64 {
    let k = mu.len();
    let mut nb = vec![0u32; 1 << k];
    let mut mass = vec![0.0; 1 << k];
    let mut best: f64 = 0.0;
    for e in 1usize..(1 << k) {
        let low = e.trailing_zeros() as usize;
        let rest = e & (e - 1);
        nb[e] = nb[rest] | adj[low];
        mass[e] = mass[rest] + mu[low];
        let mut covered = 0.0;
        let mut bits = nb[e];
        while bits != 0 {
            covered += nu[bits.trailing_zeros() as usize];
            bits &= bits - 1;
        }
        best = best.max(mass[e] - covered);
    }
    best
}

/// Exact `LP_n(μ, ν)`.
///
/// On each interval `(δ_i, δ_{i+1}]` between consecutive distinct cross
/// distances the open `ε`-neighbourhoods of support subsets are constant, so
/// the two-sided condition reduces to `ε ≥ G_i` for the largest excess `G_i`
/// over both directions. The infimum over the interval is `max(G_i, δ_i)`
/// when `G_i ≤ δ_{i+1}`.
pub fn levy_prokhorov(m: &BowenMetric, mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<f64> {
    let (a, b) = (mu.len(), nu.len());
    if a + b > MAX_LP_SUPPORT {
        let bound = levy_prokhorov_upper(m, mu, nu)?;
        return Err(Error::SizeLimit(format!(
            "combined support {} exceeds {MAX_LP_SUPPORT}; LP ≤ sqrt(W_1) = {bound}",
            a + b
        )));
    }
    for &x in mu.atoms().iter().chain(nu.atoms()) {
        m.base().check(x)?;
    }
    let d: Vec<Vec<f64>> = mu.atoms().iter().map(|&x| nu.atoms().iter().map(|&y| m.dist(x, y)).collect()).collect();
    let mut deltas: Vec<f64> = d.iter().flatten().cloned().collect();
    deltas.push(0.0);
    deltas.sort_by(|x, y| x.partial_cmp(y).unwrap());
    deltas.dedup();
    let mut best: f64 = 1.0;
    for (i, &lo) in deltas.iter().enumerate() {
        if lo >= best {
            break;
        }
        let hi = deltas.get(i + 1).copied().unwrap_or(f64::INFINITY);
        let adj_mu: Vec<u32> = (0..a)
            .map(|x| (0..b).filter(|&y| d[x][y] <= lo).fold(0, |s, y| s | (1 << y)))
            .collect();
        let adj_nu: Vec<u32> = (0..b)
            .map(|y| (0..a).filter(|&x| d[x][y] <= lo).fold(0, |s, x| s | (1 << x)))
            .collect();
        let g = excess(mu.weights(), nu.weights(), &adj_mu).max(excess(nu.weights(), mu.weights(), &adj_nu));
        if g <= hi {
            best = best.min(g.max(lo));
        }
    }
    Ok(best)
}

/// `LP ≤ min(1, sqrt(W_1))` for probability measures.
pub fn levy_prokhorov_upper(m: &BowenMetric, mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<f64> {
    Ok(w1(m, mu, nu)?.sqrt().min(1.0))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_core::FiniteMetricSpace;

    #[test]
    fn diracs() {
        let m = BowenMetric::stationary(FiniteMetricSpace::from_line(vec![0.0, 0.25, 3.0]).unwrap());
        let (x, y, z) = (AtomicMeasure::dirac(0), AtomicMeasure::dirac(1), AtomicMeasure::dirac(2));
        assert_eq!(levy_prokhorov(&m, &x, &y).unwrap(), 0.25);
        assert_eq!(levy_prokhorov(&m, &x, &z).unwrap(), 1.0);
        assert_eq!(levy_prokhorov(&m, &x, &x).unwrap(), 0.0);
    }

    #[test]
    fn split_mass() {
        // Half the mass moves by 2: the excess 1/2 decides.
        let m = BowenMetric::stationary(FiniteMetricSpace::from_line(vec![0.0, 1.0, 3.0]).unwrap());
        let mu = AtomicMeasure::uniform(&[0, 1]).unwrap();
        let nu = AtomicMeasure::uniform(&[0, 2]).unwrap();
        assert_eq!(levy_prokhorov(&m, &mu, &nu).unwrap(), 0.5);
    }

    #[test]
    fn refuses_large_supports() {
        let m = BowenMetric::stationary(FiniteMetricSpace::discrete(20).unwrap());
        let mu = AtomicMeasure::uniform(&(0..8).collect::<Vec<_>>()).unwrap();
        let nu = AtomicMeasure::uniform(&(8..16).collect::<Vec<_>>()).unwrap();
        assert!(matches!(levy_prokhorov(&m, &mu, &nu), Err(Error::SizeLimit(_))));
    }
}
