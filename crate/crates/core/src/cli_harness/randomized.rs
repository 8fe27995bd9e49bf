//! Solvers against the exhaustive oracles on seeded random instances.

use num_bigint::BigInt;
use num_rational::BigRational;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::oracle::{oracle_count, oracle_levy_prokhorov, oracle_quantization, oracle_wasserstein};
use crate::measures::{levy_prokhorov, quantization_number, wasserstein, AtomicMeasure, MetricKind, QuantBudget};
use crate::metric_core::{count, BowenMetric, Budget, FiniteMetricSpace, Mode, Quantity};

const INSTANCES: usize = 240;

/// Points of the plane under the sup norm. With `coarse`, coordinates are
/// quarters, so distances hit the tested scales exactly.
fn random_bowen(rng: &mut ChaCha8Rng, max_points: usize, coarse: bool) -> BowenMetric {
    let n = rng.gen_range(3..=max_points);
    let pts: Vec<(f64, f64)> = (0..n)
        .map(|_| {
            if coarse {
                (rng.gen_range(0..5) as f64 / 4.0, rng.gen_range(0..5) as f64 / 4.0)
            } else {
                (rng.gen::<f64>(), rng.gen::<f64>())
            }
        })
        .collect();
    let rows: Vec<Vec<f64>> =
        pts.iter().map(|a| pts.iter().map(|b| (a.0 - b.0).abs().max((a.1 - b.1).abs())).collect()).collect();
    let space = FiniteMetricSpace::from_matrix(&rows).unwrap();
    let map: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    BowenMetric::new(space, &map, rng.gen_range(1..=3)).unwrap()
}

fn random_scale(rng: &mut ChaCha8Rng, coarse: bool) -> f64 {
    if coarse {
        [0.25, 0.5, 0.75][rng.gen_range(0..3)]
    } else {
        rng.gen_range(0.05..0.9)
    }
}

fn random_measure(rng: &mut ChaCha8Rng, points: usize, max_atoms: usize) -> AtomicMeasure {
    let k = rng.gen_range(1..=max_atoms.min(points));
    let mut atoms: Vec<usize> = (0..points).collect();
    for i in 0..k {
        let j = rng.gen_range(i..points);
        atoms.swap(i, j);
    }
    atoms.truncate(k);
    let raw: Vec<u32> = (0..k).map(|_| rng.gen_range(1..=6)).collect();
    let total: u32 = raw.iter().sum();
    let w = raw.iter().map(|&r| BigRational::new(BigInt::from(r), BigInt::from(total))).collect();
    AtomicMeasure::from_rationals(atoms, w).unwrap()
}

#[test]
fn counts_match_subset_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(20240611);
    let budget = Budget::default();
    for q in [Quantity::S, Quantity::R, Quantity::N, Quantity::Cov] {
        for i in 0..INSTANCES {
            let coarse = i % 2 == 1;
            let m = random_bowen(&mut rng, 10, coarse);
            let e = random_scale(&mut rng, coarse);
            let got = count(&m, q, e, &budget);
            let (want, _) = oracle_count(&m, q, e).unwrap();
            assert_eq!(got.value(), Some(want), "{} instance {i} at {e}", q.tag());
        }
    }
}

#[test]
fn transport_matches_coupling_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    for i in 0..INSTANCES {
        let m = random_bowen(&mut rng, 8, i % 3 == 0);
        let mu = random_measure(&mut rng, m.size(), 4);
        let nu = random_measure(&mut rng, m.size(), 4);
        let p = if i % 2 == 0 { 1.0 } else { 2.0 };
        let got = wasserstein(&m, &mu, &nu, p).unwrap();
        let (want, _) = oracle_wasserstein(&m, &mu, &nu, p).unwrap();
        assert!((got.value - want).abs() <= 1e-9, "instance {i}: {} vs {want}", got.value);
        assert!(got.plan.violation(&mu, &nu) <= 1e-9);
    }
}

#[test]
fn levy_prokhorov_matches_scan() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    for i in 0..INSTANCES {
        let m = random_bowen(&mut rng, 8, i % 3 == 0);
        let mu = random_measure(&mut rng, m.size(), 4);
        let nu = random_measure(&mut rng, m.size(), 4);
        let got = levy_prokhorov(&m, &mu, &nu).unwrap();
        let want = oracle_levy_prokhorov(&m, &mu, &nu).unwrap();
        assert!((got - want).abs() <= 1e-9, "instance {i}: {got} vs {want}");
    }
}

#[test]
fn quantization_matches_site_enumeration() {
    let mut rng = ChaCha8Rng::seed_from_u64(13);
    let budget = QuantBudget::default();
    for i in 0..INSTANCES {
        let coarse = i % 2 == 1;
        let m = random_bowen(&mut rng, 9, coarse);
        let mu = random_measure(&mut rng, m.size(), 6);
        let kind = if i % 4 < 2 { MetricKind::Lp } else { MetricKind::Wp { p: 1.0 } };
        let e = random_scale(&mut rng, coarse) * 0.5;
        let got = quantization_number(&m, &mu, kind, e, None, &budget).unwrap();
        let (want, _) = oracle_quantization(&m, &mu, kind, e).unwrap();
        assert_eq!(got.mode, Mode::Exact, "instance {i}");
        assert_eq!(got.count, want, "instance {i} {} at {e}", kind.tag());
    }
}
