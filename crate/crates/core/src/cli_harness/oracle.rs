//! Exhaustive reference computations for small instances. These share no
//! code with the solvers they are checked against.

use serde::{Deserialize, Serialize};
use serde_json::json;

use crate::error::{config_error, Error, Result};
use crate::measures::{levy_prokhorov, quantization_number, wasserstein, AtomicMeasure, MetricKind, QuantBudget};
use crate::metric_core::{count, BowenMetric, Budget, Quantity};
use crate::systems::{AlphabetSpec, DynamicalSystem};

/// Points for the subset oracles.
pub const MAX_SUBSET_POINTS: usize = 15;
/// Atoms per side for coupling enumeration.
pub const MAX_COUPLING_ATOMS: usize = 4;
/// Combined atoms for the Lévy-Prokhorov scan.
pub const MAX_LP_ATOMS: usize = 15;

fn too_big(what: &str, n: usize, limit: usize) -> Error {
    Error::SizeLimit(format!("{what}: {n} exceeds the exhaustive limit {limit}"))
}

fn subsets_by_size(n: usize) -> Vec<u32> {
    let mut all: Vec<u32> = (0..1u32 << n).collect();
    all.sort_by_key(|m| (m.count_ones(), *m));
    all
}

fn members(mask: u32) -> Vec<usize> {
    (0..32).filter(|i| mask >> i & 1 == 1).collect()
}

/// Exact count by subset enumeration, with a certificate: the separated
/// set for `S`, the centers for `R` and `N`, the cover's sets for `Cov`.
pub fn oracle_count(m: &BowenMetric, q: Quantity, eps: f64) -> Result<(u128, Vec<Vec<usize>>)> {
    let n = m.size();
    if n > MAX_SUBSET_POINTS {
        return Err(too_big("points", n, MAX_SUBSET_POINTS));
    }
    let d: Vec<Vec<f64>> = (0..n).map(|i| (0..n).map(|j| m.dist(i, j)).collect()).collect();
    match q {
        Quantity::S => {
            let mut best = 0u32;
            for mask in 0..1u32 << n {
                if mask.count_ones() <= best.count_ones() {
                    continue;
                }
                let pts = members(mask);
                let ok = pts.iter().enumerate().all(|(a, &i)| pts[a + 1..].iter().all(|&j| d[i][j] > eps));
                if ok {
                    best = mask;
                }
            }
            Ok((best.count_ones() as u128, vec![members(best)]))
        }
        Quantity::R | Quantity::N => {
            let full = (1u32 << n) - 1;
            let ball: Vec<u32> =
                (0..n).map(|c| (0..n).filter(|&x| d[c][x] < eps).fold(0, |s, x| s | 1 << x)).collect();
            for mask in subsets_by_size(n) {
                let covered = members(mask).iter().fold(0, |s, &c| s | ball[c]);
                if covered == full {
                    return Ok((mask.count_ones() as u128, vec![members(mask)]));
                }
            }
            unreachable!("the whole space covers itself")
        }
        Quantity::Cov => {
            let size = 1usize << n;
            let mut small = vec![false; size];
            small[0] = true;
            for mask in 1..size {
                let low = mask.trailing_zeros() as usize;
                let rest = mask & (mask - 1);
                small[mask] = small[rest] && members(rest as u32).iter().all(|&j| d[low][j] < eps);
            }
            // best[mask]: fewest small sets covering mask; some optimal cover
            // puts the lowest point in a small set, which may be taken maximal
            // inside mask.
            let mut best = vec![u32::MAX; size];
            let mut choice = vec![0usize; size];
            best[0] = 0;
            for mask in 1..size {
                let low = mask & mask.wrapping_neg();
                let rest = mask ^ low;
                let mut sub = rest;
                loop {
                    let part = sub | low;
                    if small[part] && best[mask ^ part] != u32::MAX && best[mask ^ part] + 1 < best[mask] {
                        best[mask] = best[mask ^ part] + 1;
                        choice[mask] = part;
                    }
                    if sub == 0 {
                        break;
                    }
                    sub = (sub - 1) & rest;
                }
            }
            let mut sets = Vec::new();
            let mut mask = size - 1;
            while mask != 0 {
                sets.push(members(choice[mask] as u32));
                mask ^= choice[mask];
            }
            Ok((best[size - 1] as u128, sets))
        }
    }
}

/// `W_p` by enumerating the vertices of the transportation polytope: every
/// vertex is the unique solution supported on a spanning tree of the
/// `a + b` bipartite graph.
pub fn oracle_wasserstein(m: &BowenMetric, mu: &AtomicMeasure, nu: &AtomicMeasure, p: f64) -> Result<(f64, Vec<Vec<f64>>)> {
    let (a, b) = (mu.len(), nu.len());
    if a > MAX_COUPLING_ATOMS || b > MAX_COUPLING_ATOMS {
        return Err(too_big("atoms per side", a.max(b), MAX_COUPLING_ATOMS));
    }
    let cost: Vec<Vec<f64>> =
        mu.atoms().iter().map(|&x| nu.atoms().iter().map(|&y| m.dist(x, y).powf(p)).collect()).collect();
    let cells = a * b;
    let basis = a + b - 1;
    let mut best = f64::INFINITY;
    let mut plan = Vec::new();
    for mask in 0..1u32 << cells {
        if mask.count_ones() as usize != basis {
            continue;
        }
        if let Some(x) = tree_solution(mask, a, b, mu.weights(), nu.weights()) {
            let c: f64 = (0..cells).map(|k| x[k / b][k % b] * cost[k / b][k % b]).sum();
            if c < best {
                best = c;
                plan = x;
            }
        }
    }
    Ok((best.max(0.0).powf(1.0 / p), plan))
}

fn tree_solution(mask: u32, a: usize, b: usize, mu: &[f64], nu: &[f64]) -> Option<Vec<Vec<f64>>> {
    let mut open: Vec<(usize, usize)> = members(mask).into_iter().map(|k| (k / b, k % b)).collect();
    let mut row = mu.to_vec();
    let mut col = nu.to_vec();
    let mut x = vec![vec![0.0; b]; a];
    while !open.is_empty() {
        let mut progressed = false;
        for r in 0..a {
            let mine: Vec<usize> = (0..open.len()).filter(|&k| open[k].0 == r).collect();
            if mine.len() == 1 {
                let (_, c) = open.remove(mine[0]);
                x[r][c] = row[r];
                col[c] -= row[r];
                row[r] = 0.0;
                progressed = true;
            }
        }
        for c in 0..b {
            let mine: Vec<usize> = (0..open.len()).filter(|&k| open[k].1 == c).collect();
            if mine.len() == 1 {
                let (r, _) = open.remove(mine[0]);
                x[r][c] = col[c];
                row[r] -= col[c];
                col[c] = 0.0;
                progressed = true;
            }
        }
        if !progressed {
            return None;
        }
    }
    let tol = 1e-12;
    let feasible = x.iter().flatten().all(|&v| v >= -tol)
        && row.iter().chain(&col).all(|v| v.abs() <= tol);
    feasible.then_some(x)
}

/// `LP(μ, ν)` from its definition. The value is one of the finitely many
/// numbers `d(x, y)` or `μ(E) − ν(F)`, and the two-sided condition is
/// monotone in `ε`, so it is the smallest candidate above which the
/// condition holds.
pub fn oracle_levy_prokhorov(m: &BowenMetric, mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<f64> {
    let (a, b) = (mu.len(), nu.len());
    if a + b > MAX_LP_ATOMS {
        return Err(too_big("combined atoms", a + b, MAX_LP_ATOMS));
    }
    let d: Vec<Vec<f64>> = mu.atoms().iter().map(|&x| nu.atoms().iter().map(|&y| m.dist(x, y)).collect()).collect();
    let subset_mass = |w: &[f64]| -> Vec<f64> {
        (0..1u32 << w.len()).map(|s| members(s).iter().map(|&i| w[i]).sum()).collect()
    };
    let (sm, sn) = (subset_mass(mu.weights()), subset_mass(nu.weights()));
    let mut cand = vec![0.0, 1.0];
    cand.extend(d.iter().flatten().cloned());
    for &x in &sm {
        for &y in &sn {
            for v in [x - y, y - x] {
                if v > 0.0 && v < 1.0 {
                    cand.push(v);
                }
            }
        }
    }
    cand.sort_by(|x, y| x.partial_cmp(y).unwrap());
    cand.dedup();
    // Both directions over every subset of each support, with open
    // neighbourhoods `d < ε`.
    let holds = |eps: f64| {
        let mu_side = (1..1u32 << a).all(|e| {
            let near = (0..b).filter(|&y| members(e).iter().any(|&x| d[x][y] < eps)).fold(0u32, |s, y| s | 1 << y);
            sm[e as usize] <= sn[near as usize] + eps + 1e-12
        });
        let nu_side = (1..1u32 << b).all(|f| {
            let near = (0..a).filter(|&x| members(f).iter().any(|&y| d[x][y] < eps)).fold(0u32, |s, x| s | 1 << x);
            sn[f as usize] <= sm[near as usize] + eps + 1e-12
        });
        mu_side && nu_side
    };
    let probe = |i: usize| {
        let next = cand.get(i + 1).copied().unwrap_or(cand[i] + 1.0);
        holds(0.5 * (cand[i] + next))
    };
    let (mut lo, mut hi) = (0usize, cand.len() - 1);
    while lo < hi {
        let mid = (lo + hi) / 2;
        if probe(mid) {
            hi = mid;
        } else {
            lo = mid + 1;
        }
    }
    Ok(cand[lo].min(1.0))
}

/// `Q_{μ,D}(ε)` over every point of the space by enumerating site sets in
/// order of size: closed-ball partial covers for LP, the `p`-th moment of
/// the distance to the sites for `W_p`.
pub fn oracle_quantization(m: &BowenMetric, mu: &AtomicMeasure, kind: MetricKind, eps: f64) -> Result<(usize, Vec<usize>)> {
    let n = m.size();
    if n > MAX_SUBSET_POINTS {
        return Err(too_big("points", n, MAX_SUBSET_POINTS));
    }
    let slack = crate::measures::CONSTRAINT_SLACK;
    for mask in subsets_by_size(n).into_iter().skip(1) {
        let sites = members(mask);
        let near = |x: usize| sites.iter().map(|&f| m.dist(x, f)).fold(f64::INFINITY, f64::min);
        let ok = match kind {
            MetricKind::Lp => {
                let covered: f64 = mu.atoms().iter().zip(mu.weights()).filter(|(&x, _)| near(x) <= eps).map(|(_, w)| w).sum();
                covered >= 1.0 - eps - slack
            }
            MetricKind::Wp { p } => {
                let moment: f64 = mu.atoms().iter().zip(mu.weights()).map(|(&x, w)| w * near(x).powf(p)).sum();
                moment <= eps.powf(p) + slack
            }
        };
        if ok {
            return Ok((sites.len(), sites));
        }
    }
    unreachable!("every atom is a site")
}

/// An oracle instance file.
#[derive(Clone, Debug, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum OracleInstance {
    Count {
        points: AlphabetSpec,
        #[serde(default)]
        map: Option<Vec<usize>>,
        #[serde(default = "one")]
        horizon: usize,
        quantity: String,
        eps: f64,
    },
    Coupling {
        points: AlphabetSpec,
        #[serde(default)]
        map: Option<Vec<usize>>,
        #[serde(default = "one")]
        horizon: usize,
        mu: serde_json::Value,
        nu: serde_json::Value,
        #[serde(default = "unit")]
        p: f64,
    },
    Prokhorov {
        points: AlphabetSpec,
        #[serde(default)]
        map: Option<Vec<usize>>,
        #[serde(default = "one")]
        horizon: usize,
        mu: serde_json::Value,
        nu: serde_json::Value,
    },
    Quantize {
        points: AlphabetSpec,
        #[serde(default)]
        map: Option<Vec<usize>>,
        #[serde(default = "one")]
        horizon: usize,
        mu: serde_json::Value,
        metric: MetricKind,
        eps: f64,
    },
}

fn one() -> usize {
    1
}

fn unit() -> f64 {
    1.0
}

#[derive(Clone, Debug, Serialize)]
pub struct OracleReport {
    pub kind: &'static str,
    pub oracle: f64,
    pub solver: f64,
    pub agree: bool,
    pub certificate: serde_json::Value,
}

const AGREEMENT: f64 = 1e-9;

fn bowen(points: &AlphabetSpec, map: &Option<Vec<usize>>, horizon: usize) -> Result<BowenMetric> {
    let space = points.build()?;
    let sys = match map {
        Some(f) => DynamicalSystem::new("oracle", space, f.clone())?,
        None => DynamicalSystem::identity("oracle", space),
    };
    sys.bowen(horizon)
}

fn measure(v: &serde_json::Value) -> Result<AtomicMeasure> {
    AtomicMeasure::from_json(&v.to_string())
}

impl OracleInstance {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_error("oracle instance", text, &e))
    }

    /// Oracle value next to the solver's.
    pub fn run(&self, count_budget: &Budget, quant_budget: &QuantBudget) -> Result<OracleReport> {
        let report = |kind, oracle: f64, solver: f64, certificate| OracleReport {
            kind,
            oracle,
            solver,
            agree: (oracle - solver).abs() <= AGREEMENT,
            certificate,
        };
        Ok(match self {
            OracleInstance::Count { points, map, horizon, quantity, eps } => {
                let m = bowen(points, map, *horizon)?;
                let q = Quantity::parse(quantity)?;
                let (v, cert) = oracle_count(&m, q, *eps)?;
                let b = count(&m, q, *eps, count_budget);
                let solver = if b.is_exact() { b.lower as f64 } else { f64::NAN };
                report("count", v as f64, solver, json!({ "sets": cert, "solverBracket": [b.lower, b.upper] }))
            }
            OracleInstance::Coupling { points, map, horizon, mu, nu, p } => {
                let m = bowen(points, map, *horizon)?;
                let (mu, nu) = (measure(mu)?, measure(nu)?);
                let (v, plan) = oracle_wasserstein(&m, &mu, &nu, *p)?;
                let t = wasserstein(&m, &mu, &nu, *p)?;
                report("coupling", v, t.value, json!({ "plan": plan }))
            }
            OracleInstance::Prokhorov { points, map, horizon, mu, nu } => {
                let m = bowen(points, map, *horizon)?;
                let (mu, nu) = (measure(mu)?, measure(nu)?);
                let v = oracle_levy_prokhorov(&m, &mu, &nu)?;
                report("prokhorov", v, levy_prokhorov(&m, &mu, &nu)?, json!(null))
            }
            OracleInstance::Quantize { points, map, horizon, mu, metric, eps } => {
                let m = bowen(points, map, *horizon)?;
                let mu = measure(mu)?;
                let (v, sites) = oracle_quantization(&m, &mu, *metric, *eps)?;
                let r = quantization_number(&m, &mu, *metric, *eps, None, quant_budget)?;
                report("quantize", v as f64, r.count as f64, json!({ "sites": sites, "solverSites": r.sites }))
            }
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_core::FiniteMetricSpace;

    fn line(xs: &[f64]) -> BowenMetric {
        BowenMetric::stationary(FiniteMetricSpace::from_line(xs.to_vec()).unwrap())
    }

    #[test]
    fn counts_on_a_line() {
        let m = line(&[0.0, 0.1, 0.25, 0.6, 1.0]);
        assert_eq!(oracle_count(&m, Quantity::S, 0.2).unwrap().0, 4);
        assert_eq!(oracle_count(&m, Quantity::R, 0.2).unwrap().0, 3);
        let (c, sets) = oracle_count(&m, Quantity::Cov, 0.2).unwrap();
        assert_eq!(c, 4);
        assert_eq!(sets.iter().map(|s| s.len()).sum::<usize>(), 5);
    }

    #[test]
    fn two_point_coupling_and_lp() {
        let m = line(&[0.0, 0.3, 1.0]);
        let mu = AtomicMeasure::new(vec![0, 1], vec![0.5, 0.5]).unwrap();
        let nu = AtomicMeasure::dirac(2);
        let (w, plan) = oracle_wasserstein(&m, &mu, &nu, 1.0).unwrap();
        assert!((w - 0.85).abs() < 1e-12);
        assert_eq!(plan.len(), 2);
        assert!((oracle_levy_prokhorov(&m, &AtomicMeasure::dirac(0), &AtomicMeasure::dirac(1)).unwrap() - 0.3).abs() < 1e-12);
        assert_eq!(oracle_levy_prokhorov(&m, &mu, &mu).unwrap(), 0.0);
    }

    #[test]
    fn instance_round_trip() {
        let inst = OracleInstance::from_json(
            r#"{"kind":"count","points":{"line":[0,0.1,0.25,0.6,1]},"quantity":"S","eps":0.2}"#,
        )
        .unwrap();
        let r = inst.run(&Budget::default(), &QuantBudget::default()).unwrap();
        assert!(r.agree && r.oracle == 4.0);
    }
}
