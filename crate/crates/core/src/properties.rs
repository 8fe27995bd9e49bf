//! Invariants checked with proptest under a fixed seed.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Zero};
use proptest::prelude::*;
use proptest::test_runner::{Config, RngSeed};

use crate::estimators::{envelope, fit_slope, log_plus, FitConfig};
use crate::measures::{levy_prokhorov, levy_prokhorov_upper, w1, AtomicMeasure};
use crate::metric_core::{count, verify_chain, BowenMetric, Budget, FiniteMetricSpace, Quantity, Status};
use crate::systems::{DynamicalSystem, Zigzag};

fn config() -> Config {
    Config { cases: 96, rng_seed: RngSeed::Fixed(0x6d64696d), failure_persistence: None, ..Config::default() }
}

fn line_system(xs: &[f64], map: &[usize]) -> DynamicalSystem {
    let n = xs.len();
    let map = map.iter().map(|&m| m % n).collect();
    DynamicalSystem::new("line", FiniteMetricSpace::from_line(xs.to_vec()).unwrap(), map).unwrap()
}

fn measure(points: usize, picks: &[(usize, u32)]) -> AtomicMeasure {
    let mut acc = std::collections::BTreeMap::new();
    for &(a, w) in picks {
        *acc.entry(a % points).or_insert(0u32) += w;
    }
    let total: u32 = acc.values().sum();
    let (atoms, w): (Vec<_>, Vec<_>) =
        acc.into_iter().map(|(a, w)| (a, BigRational::new(BigInt::from(w), BigInt::from(total)))).unzip();
    AtomicMeasure::from_rationals(atoms, w).unwrap()
}

proptest! {
    #![proptest_config(config())]

    #[test]
    fn fitted_slope_lies_between_proxies(ys in prop::collection::vec(-5.0f64..5.0, 3..12), tail in 2usize..8) {
        let pts: Vec<(f64, f64)> = ys.iter().enumerate().map(|(i, &y)| (i as f64, y)).collect();
        let cfg = FitConfig { tail: Some(tail), ..FitConfig::default() };
        let e = fit_slope(&pts, &cfg).unwrap();
        prop_assert!(e.liminf_proxy <= e.value + 1e-12 && e.value <= e.limsup_proxy + 1e-12);
        let lo = fit_slope(&pts, &cfg).unwrap();
        let hi_pts: Vec<(f64, f64)> = pts.iter().map(|&(x, y)| (x, y + x)).collect();
        let env = envelope(lo, fit_slope(&hi_pts, &cfg).unwrap());
        prop_assert!(env.liminf_proxy <= env.value && env.value <= env.limsup_proxy);
    }

    #[test]
    fn log_plus_rate_is_below_rate(h in 0.0f64..50.0, eps in 1e-6f64..0.9) {
        let x = eps.ln().abs();
        prop_assert!(log_plus(h) / x <= h / x);
        prop_assert!(log_plus(h) >= 0.0);
    }

    #[test]
    fn pushforward_keeps_mass_and_composes(
        map in prop::collection::vec(0usize..9, 9),
        other in prop::collection::vec(0usize..9, 9),
        picks in prop::collection::vec((0usize..9, 1u32..5), 1..6),
    ) {
        let mu = measure(9, &picks);
        let once = mu.pushforward(&other).unwrap().pushforward(&map).unwrap();
        let composed: Vec<usize> = other.iter().map(|&x| map[x]).collect();
        prop_assert_eq!(&once, &mu.pushforward(&composed).unwrap());
        prop_assert!(once.exact_total().unwrap().is_one());
        let hit: BigRational = mu
            .atoms()
            .iter()
            .zip(mu.exact_weights().unwrap())
            .filter(|(&a, _)| composed[a] == composed[mu.atoms()[0]])
            .map(|(_, w)| w.clone())
            .fold(BigRational::zero(), |s, w| s + w);
        let at = once.atoms().binary_search(&composed[mu.atoms()[0]]).unwrap();
        prop_assert_eq!(&once.exact_weights().unwrap()[at], &hit);
    }

    #[test]
    fn zigzag_brackets_are_monotone(b in (1u64..5).prop_map(|k| 2 * k + 1), eps in 0.02f64..0.6) {
        let z = Zigzag { b };
        let coarse = z.bracket(eps, 5).unwrap();
        let fine = z.bracket(eps / 2.0, 5).unwrap();
        for n in 0..5 {
            prop_assert!(coarse[n].0 <= coarse[n].1 && fine[n].0 <= fine[n].1);
            // Counts grow with n and as ε shrinks.
            if n + 1 < 5 {
                prop_assert!(coarse[n].0 <= coarse[n + 1].1);
            }
            prop_assert!(coarse[n].0 <= fine[n].1);
        }
    }

    #[test]
    fn chain_holds_on_random_line_systems(
        xs in prop::collection::vec(0.0f64..1.0, 3..10),
        map in prop::collection::vec(0usize..10, 10),
        n in 1usize..4,
        eps in 0.03f64..0.7,
    ) {
        let sys = line_system(&xs, &map[..xs.len()]);
        let m = sys.bowen(n).unwrap();
        for c in verify_chain(&m, eps, &Budget::default()) {
            prop_assert!(c.status != Status::Fail, "{:?}", c);
        }
        let s_n = count(&m, Quantity::S, eps, &Budget::default()).value().unwrap();
        let s_next = count(&sys.bowen(n + 1).unwrap(), Quantity::S, eps, &Budget::default()).value().unwrap();
        prop_assert!(s_n <= s_next);
    }

    #[test]
    fn transport_metrics_are_consistent(
        xs in prop::collection::vec(0.0f64..1.0, 4..8),
        a in prop::collection::vec((0usize..8, 1u32..5), 1..4),
        b in prop::collection::vec((0usize..8, 1u32..5), 1..4),
        c in prop::collection::vec((0usize..8, 1u32..5), 1..4),
    ) {
        let k = xs.len();
        let m = BowenMetric::stationary(FiniteMetricSpace::from_line(xs).unwrap());
        let (mu, nu, eta) = (measure(k, &a), measure(k, &b), measure(k, &c));
        let (ab, bc, ac) = (w1(&m, &mu, &nu).unwrap(), w1(&m, &nu, &eta).unwrap(), w1(&m, &mu, &eta).unwrap());
        prop_assert!(ac <= ab + bc + 1e-12);
        prop_assert!((ab - w1(&m, &nu, &mu).unwrap()).abs() <= 1e-12);
        let lp = levy_prokhorov(&m, &mu, &nu).unwrap();
        prop_assert!(lp <= levy_prokhorov_upper(&m, &mu, &nu).unwrap() + 1e-12);
        prop_assert!((lp - levy_prokhorov(&m, &nu, &mu).unwrap()).abs() <= 1e-12);
    }
}
