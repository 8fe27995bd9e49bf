use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::atomic::AtomicMeasure;
use super::transport::MetricKind;
use crate::error::{Error, Result};
use crate::metric_core::{BowenMetric, Mode};

/// Slack on the mass and integral constraints.
pub const CONSTRAINT_SLACK: f64 = 1e-12;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct QuantBudget {
    /// Search nodes per value of `k`.
    pub nodes: u64,
    /// Local-search restarts when the exact tier does not apply.
    pub restarts: usize,
    pub seed: u64,
}

impl Default for QuantBudget {
    fn default() -> Self {
        QuantBudget { nodes: 2_000_000, restarts: 8, seed: 0 }
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct QuantizationReport {
    pub eps: f64,
    pub horizon: usize,
    pub kind: MetricKind,
    /// Smallest size found for a feasible site set.
    pub count: usize,
    /// Every size below this was shown infeasible.
    pub lower: usize,
    pub sites: Vec<usize>,
    pub mode: Mode,
}

/// `Q_{μ,D_n}(ε)` over the candidate sites (default: every point).
///
/// For Lévy-Prokhorov this is the least number of closed `ε`-balls of `d_n`
/// covering mass at least `1 − ε`; for `W_p` the least `|F|` with
/// `∫ d_n(x, F)^p dμ ≤ ε^p`. Restricting the sites can only raise the count.
pub fn quantization_number(
    m: &BowenMetric,
    mu: &AtomicMeasure,
    kind: MetricKind,
    eps: f64,
    sites: Option<&[usize]>,
    budget: &QuantBudget,
) -> Result<QuantizationReport> {
    kind.validate()?;
    if !(eps > 0.0) {
        return Err(Error::Parameter("scale must be positive".into()));
    }
    let all: Vec<usize>;
    let sites = match sites {
        Some(s) => s,
        None => {
            all = (0..m.size()).collect();
            &all
        }
    };
    for &s in sites.iter().chain(mu.atoms()) {
        m.base().check(s)?;
    }
    if let Some(a) = mu.atoms().iter().find(|a| !sites.contains(a)) {
        return Err(Error::Parameter(format!("candidate sites miss atom {a}")));
    }
    let report = |count, lower, sites: Vec<usize>, mode| QuantizationReport {
        eps,
        horizon: m.horizon(),
        kind,
        count,
        lower,
        sites,
        mode,
    };
    match kind {
        MetricKind::Lp => {
            let (k, lower, chosen, mode) = lp_quantize(m, mu, eps, sites, budget);
            Ok(report(k, lower, chosen, mode))
        }
        MetricKind::Wp { p } => {
            let (k, lower, chosen, mode) = wp_quantize(m, mu, p, eps, sites, budget);
            Ok(report(k, lower, chosen, mode))
        }
    }
}

type Found = (usize, usize, Vec<usize>, Mode);

fn lp_quantize(m: &BowenMetric, mu: &AtomicMeasure, eps: f64, sites: &[usize], budget: &QuantBudget) -> Found {
    let target = 1.0 - eps - CONSTRAINT_SLACK;
    let w = mu.weights();
    // Atoms in each closed ball, as sorted index lists; drop duplicates and
    // balls contained in another ball.
    let mut balls: Vec<(usize, Vec<usize>)> = sites
        .iter()
        .map(|&s| (s, (0..mu.len()).filter(|&a| m.dist(s, mu.atoms()[a]) <= eps).collect()))
        .collect();
    balls.sort_by(|x, y| y.1.len().cmp(&x.1.len()).then(x.0.cmp(&y.0)));
    let mut kept: Vec<(usize, Vec<usize>)> = Vec::new();
    for (s, b) in balls {
        if !kept.iter().any(|(_, k)| b.iter().all(|a| k.binary_search(a).is_ok())) {
            kept.push((s, b));
        }
    }
    let mass = |b: &[usize]| -> f64 { b.iter().map(|&a| w[a]).sum() };
    kept.sort_by(|x, y| mass(&y.1).partial_cmp(&mass(&x.1)).unwrap().then(x.0.cmp(&y.0)));
    if target <= 0.0 {
        return (1, 1, vec![kept[0].0], Mode::Exact);
    }

    // Greedy upper bound.
    let mut covered = vec![false; mu.len()];
    let mut greedy = Vec::new();
    let mut got = 0.0;
    while got < target {
        let (best, _) = kept
            .iter()
            .enumerate()
            .map(|(i, (_, b))| (i, b.iter().filter(|&&a| !covered[a]).map(|&a| w[a]).sum::<f64>()))
            .fold((0, -1.0), |acc, x| if x.1 > acc.1 { x } else { acc });
        for &a in &kept[best].1 {
            if !covered[a] {
                covered[a] = true;
                got += w[a];
            }
        }
        greedy.push(kept[best].0);
    }

    let masses: Vec<f64> = kept.iter().map(|(_, b)| mass(b)).collect();
    for k in 1..greedy.len() {
        let mut state = CoverSearch {
            kept: &kept,
            masses: &masses,
            w,
            target,
            nodes: budget.nodes,
            covered: vec![0u32; mu.len()],
            chosen: Vec::new(),
        };
        match state.search(0, k, 0.0) {
            Some(true) => {
                let sites = state.chosen.iter().map(|&i| kept[i].0).collect();
                return (k, k, sites, Mode::Exact);
            }
            Some(false) => {}
            None => return (greedy.len(), k, greedy, Mode::Heuristic),
        }
    }
    let n = greedy.len();
    (n, n, greedy, Mode::Exact)
}

struct CoverSearch<'a> {
    kept: &'a [(usize, Vec<usize>)],
    masses: &'a [f64],
    w: &'a [f64],
    target: f64,
    nodes: u64,
    covered: Vec<u32>,
    chosen: Vec<usize>,
}

impl CoverSearch<'_> {
    /// `Some(found)`, or `None` when the node budget runs out.
    fn search(&mut self, from: usize, left: usize, got: f64) -> Option<bool> {
        if got >= self.target {
            return Some(true);
        }
        if left == 0 || from >= self.kept.len() {
            return Some(false);
        }
        // Balls are sorted by mass, so the next `left` bound what remains.
        let bound: f64 = self.masses[from..].iter().take(left).sum();
        if got + bound < self.target {
            return Some(false);
        }
        for i in from..self.kept.len() {
            if self.nodes == 0 {
                return None;
            }
            self.nodes -= 1;
            let bound: f64 = self.masses[i..].iter().take(left).sum();
            if got + bound < self.target {
                break;
            }
            let mut gain = 0.0;
            for &a in &self.kept[i].1 {
                if self.covered[a] == 0 {
                    gain += self.w[a];
                }
                self.covered[a] += 1;
            }
            self.chosen.push(i);
            let r = self.search(i + 1, left - 1, got + gain);
            if r != Some(false) {
                return r;
            }
            self.chosen.pop();
            for &a in &self.kept[i].1 {
                self.covered[a] -= 1;
            }
        }
        Some(false)
    }
}

/// Weighted cost each atom pays unless a site sits on it, sorted
/// ascending: with `k` sites at least `|supp μ| − k` atoms pay it.
fn unsited_costs(cost: &[Vec<f64>], sites: &[usize], atoms: &[usize], w: &[f64]) -> Vec<f64> {
    let mut c: Vec<f64> = (0..atoms.len())
        .map(|a| {
            let d = (0..sites.len()).filter(|&s| sites[s] != atoms[a]).map(|s| cost[s][a]).fold(f64::INFINITY, f64::min);
            w[a] * if d.is_finite() { d } else { 0.0 }
        })
        .collect();
    c.sort_by(|x, y| x.partial_cmp(y).unwrap());
    c
}

fn wp_quantize(
    m: &BowenMetric,
    mu: &AtomicMeasure,
    p: f64,
    eps: f64,
    sites: &[usize],
    budget: &QuantBudget,
) -> Found {
    let target = eps.powf(p) * (1.0 + CONSTRAINT_SLACK);
    let cost: Vec<Vec<f64>> = sites
        .iter()
        .map(|&s| mu.atoms().iter().map(|&a| m.dist(s, a).powf(p)).collect())
        .collect();
    let w = mu.weights();
    let total = |chosen: &[usize]| -> f64 {
        (0..mu.len())
            .map(|a| w[a] * chosen.iter().map(|&s| cost[s][a]).fold(f64::INFINITY, f64::min))
            .sum()
    };
    let n = mu.len();
    let unsited = unsited_costs(&cost, sites, mu.atoms(), w);
    let mut lower = (1..=n).find(|&k| unsited[..n - k].iter().sum::<f64>() <= target).unwrap_or(n);
    let at_atom: Vec<Option<usize>> = sites.iter().map(|s| mu.atoms().binary_search(s).ok()).collect();
    let mut exact_so_far = true;
    for k in lower..=n {
        let mut search = MedianSearch::new(&cost, &at_atom, w, target, budget.nodes);
        match search.run(k) {
            Some(true) => {
                let f = search.best.unwrap().iter().map(|&i| sites[i]).collect();
                let mode = if exact_so_far { Mode::Exact } else { Mode::Heuristic };
                return (k, if exact_so_far { k } else { lower }, f, mode);
            }
            Some(false) => {
                if exact_so_far {
                    lower = k + 1;
                }
                continue;
            }
            None => {}
        }
        // Sizes below `k` are settled only while every search finished.
        let settled = exact_so_far && lower == k;
        exact_so_far = false;
        if let Some(f) = local_search(&total, sites.len(), k, target, budget) {
            let mode = if settled { Mode::Exact } else { Mode::Heuristic };
            return (k, lower, f.iter().map(|&i| sites[i]).collect(), mode);
        }
    }
    // F = supp μ always meets the bound.
    (n, lower.min(n), mu.atoms().to_vec(), if exact_so_far { Mode::Exact } else { Mode::Heuristic })
}

/// Depth-first search over site sets in index order. A partial set is cut
/// when even the best completion misses the target: every atom costs at
/// least its current distance or its distance to a later site not on it,
/// and each remaining site can bring at most one atom to zero.
struct MedianSearch<'a> {
    cost: &'a [Vec<f64>],
    /// The site on each atom, if any.
    owner: Vec<Option<usize>>,
    w: &'a [f64],
    target: f64,
    nodes: u64,
    /// `later[i][a]`: least cost to atom `a` from sites `i..` not on `a`.
    later: Vec<Vec<f64>>,
    best: Option<Vec<usize>>,
}

impl<'a> MedianSearch<'a> {
    fn new(cost: &'a [Vec<f64>], at_atom: &'a [Option<usize>], w: &'a [f64], target: f64, nodes: u64) -> Self {
        let (s, a) = (cost.len(), w.len());
        let mut later = vec![vec![f64::INFINITY; a]; s + 1];
        for i in (0..s).rev() {
            for x in 0..a {
                let own = if at_atom[i] == Some(x) { f64::INFINITY } else { cost[i][x] };
                later[i][x] = later[i + 1][x].min(own);
            }
        }
        let mut owner = vec![None; a];
        for (i, x) in at_atom.iter().enumerate() {
            if let Some(x) = x {
                owner[*x] = Some(i);
            }
        }
        MedianSearch { cost, owner, w, target, nodes, later, best: None }
    }

    /// Looks for `k` sites meeting the target; `None` when out of budget.
    fn run(&mut self, k: usize) -> Option<bool> {
        let mut chosen = Vec::with_capacity(k);
        let mut nearest = vec![f64::INFINITY; self.w.len()];
        let mut scratch = Vec::with_capacity(self.w.len());
        self.step(0, k, &mut chosen, &mut nearest, &mut scratch)
    }

    fn bound(&self, from: usize, left: usize, nearest: &[f64], scratch: &mut Vec<f64>) -> f64 {
        scratch.clear();
        let mut sum = 0.0;
        for (a, &d) in nearest.iter().enumerate() {
            let c = self.w[a] * d.min(self.later[from][a]);
            sum += c;
            // Only atoms with a later site on them can drop to zero.
            if self.owner[a].is_some_and(|s| s >= from) {
                scratch.push(c);
            }
        }
        if left > 0 && !scratch.is_empty() {
            let cut = scratch.len().saturating_sub(left);
            scratch.select_nth_unstable_by(cut, |x, y| x.partial_cmp(y).unwrap());
            sum -= scratch[cut..].iter().sum::<f64>();
        }
        sum
    }

    fn step(
        &mut self,
        from: usize,
        left: usize,
        chosen: &mut Vec<usize>,
        nearest: &mut [f64],
        scratch: &mut Vec<f64>,
    ) -> Option<bool> {
        if left == 0 {
            let v: f64 = nearest.iter().zip(self.w).map(|(d, w)| d * w).sum();
            if v <= self.target {
                self.best = Some(chosen.clone());
                return Some(true);
            }
            return Some(false);
        }
        for i in from..=self.cost.len().saturating_sub(left) {
            if self.nodes == 0 {
                return None;
            }
            self.nodes -= 1;
            let saved: Vec<f64> = nearest.to_vec();
            for (a, d) in nearest.iter_mut().enumerate() {
                *d = d.min(self.cost[i][a]);
            }
            if self.bound(i + 1, left - 1, nearest, scratch) <= self.target {
                chosen.push(i);
                let r = self.step(i + 1, left - 1, chosen, nearest, scratch);
                chosen.pop();
                if r != Some(false) {
                    nearest.copy_from_slice(&saved);
                    return r;
                }
            }
            nearest.copy_from_slice(&saved);
        }
        Some(false)
    }
}

/// Swap-based local search from seeded random starts.
fn local_search(
    total: &dyn Fn(&[usize]) -> f64,
    n_sites: usize,
    k: usize,
    target: f64,
    budget: &QuantBudget,
) -> Option<Vec<usize>> {
    if k > n_sites {
        return None;
    }
    let mut rng = ChaCha8Rng::seed_from_u64(budget.seed ^ (k as u64).wrapping_mul(0x9e37_79b9_7f4a_7c15));
    let all: Vec<usize> = (0..n_sites).collect();
    for _ in 0..budget.restarts.max(1) {
        let mut f: Vec<usize> = all.choose_multiple(&mut rng, k).cloned().collect();
        let mut cur = total(&f);
        let mut improved = true;
        while improved && cur > target {
            improved = false;
            'swap: for slot in 0..k {
                for s in 0..n_sites {
                    if f.contains(&s) {
                        continue;
                    }
                    let old = f[slot];
                    f[slot] = s;
                    let v = total(&f);
                    if v < cur - 1e-15 {
                        cur = v;
                        improved = true;
                        break 'swap;
                    }
                    f[slot] = old;
                }
            }
        }
        if cur <= target {
            f.sort_unstable();
            return Some(f);
        }
    }
    None
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_core::FiniteMetricSpace;

    fn line(xs: Vec<f64>) -> BowenMetric {
        BowenMetric::stationary(FiniteMetricSpace::from_line(xs).unwrap())
    }

    #[test]
    fn dirac_is_one() {
        let m = line(vec![0.0, 1.0, 2.0]);
        for kind in [MetricKind::Lp, MetricKind::Wp { p: 1.0 }, MetricKind::Wp { p: 2.0 }] {
            for eps in [0.01, 0.5, 3.0] {
                let r = quantization_number(&m, &AtomicMeasure::dirac(1), kind, eps, None, &QuantBudget::default())
                    .unwrap();
                assert_eq!((r.count, r.mode), (1, Mode::Exact));
            }
        }
    }

    #[test]
    fn spread_points_need_all_sites() {
        let m = line(vec![0.0, 1.0, 2.0, 3.0]);
        let mu = AtomicMeasure::uniform(&[0, 1, 2, 3]).unwrap();
        let r = quantization_number(&m, &mu, MetricKind::Wp { p: 1.0 }, 0.1, None, &QuantBudget::default()).unwrap();
        assert_eq!(r.count, 4);
        // Mass 1 − ε = 0.7 needs three of the four unit-spaced atoms.
        let r = quantization_number(&m, &mu, MetricKind::Lp, 0.3, None, &QuantBudget::default()).unwrap();
        assert_eq!((r.count, r.mode), (3, Mode::Exact));
        assert!(quantization_number(&m, &mu, MetricKind::Lp, 0.3, Some(&[0, 1]), &QuantBudget::default()).is_err());
    }
}
