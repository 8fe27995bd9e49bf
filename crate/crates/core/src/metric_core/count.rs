use fixedbitset::FixedBitSet;
use serde::{Deserialize, Serialize};

use super::bowen::BowenMetric;
use super::graph::{CoverProblem, Graph};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Quantity {
    /// Maximal `(n, ε)`-separated set.
    S,
    /// Minimal `(n, ε)`-spanning set.
    R,
    /// Minimal number of open ε-balls.
    N,
    /// Minimal number of sets of `d_n`-diameter below ε.
    #[serde(rename = "Cov")]
    Cov,
}

impl Quantity {
    pub fn tag(self) -> &'static str {
        match self {
            Quantity::S => "S",
            Quantity::R => "R",
            Quantity::N => "N",
            Quantity::Cov => "Cov",
        }
    }

    pub fn parse(s: &str) -> Result<Quantity> {
        match s {
            "S" => Ok(Quantity::S),
            "R" => Ok(Quantity::R),
            "N" => Ok(Quantity::N),
            "Cov" => Ok(Quantity::Cov),
            _ => Err(Error::Config(format!("unknown quantity {s:?}"))),
        }
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Exact,
    Heuristic,
}

impl Mode {
    pub fn tag(self) -> &'static str {
        match self {
            Mode::Exact => "exact",
            Mode::Heuristic => "heuristic",
        }
    }
}

/// Lower/upper bracket on one count at a given `(n, ε)`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct CountBracket {
    pub quantity: Quantity,
    pub horizon: usize,
    pub scale: f64,
    pub lower: u128,
    pub upper: u128,
    pub mode: Mode,
}

impl CountBracket {
    pub fn new(quantity: Quantity, horizon: usize, scale: f64, lower: u128, upper: u128) -> Self {
        debug_assert!(1 <= lower && lower <= upper);
        let mode = if lower == upper { Mode::Exact } else { Mode::Heuristic };
        CountBracket { quantity, horizon, scale, lower, upper, mode }
    }

    pub fn exact(quantity: Quantity, horizon: usize, scale: f64, value: u128) -> Self {
        Self::new(quantity, horizon, scale, value, value)
    }

    pub fn is_exact(&self) -> bool {
        self.mode == Mode::Exact
    }

    /// The value of an exact bracket.
    pub fn value(&self) -> Option<u128> {
        self.is_exact().then_some(self.lower)
    }
}

/// Effort limits for the exact solvers.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct Budget {
    /// Branch-and-bound node expansions per count.
    pub nodes: u64,
    /// Largest component handed to branch and bound.
    pub max_component: usize,
    /// Maximal cliques enumerated per component for the diameter cover.
    pub max_cliques: usize,
    /// Largest space for which a pair graph is materialized.
    pub max_graph: usize,
}

impl Default for Budget {
    fn default() -> Self {
        Budget { nodes: 10_000_000, max_component: 2000, max_cliques: 200_000, max_graph: 40_000 }
    }
}

/// A count together with the point sets realizing its bounds.
#[derive(Clone, Debug)]
pub struct Counted {
    pub bracket: CountBracket,
    /// For S: a separated set of size `lower`. For covers: centers (R, N)
    /// or the cover's sets (Cov, flattened per set) of size `upper`.
    pub witness: Vec<Vec<usize>>,
}

fn all_points(n: usize) -> Vec<usize> {
    (0..n).collect()
}

/// Maximal `(n, ε)`-separated set (strict: `d_n > ε`).
pub fn max_separated(m: &BowenMetric, eps: f64, budget: &Budget) -> CountBracket {
    max_separated_set(m, eps, budget).bracket
}

pub fn max_separated_set(m: &BowenMetric, eps: f64, budget: &Budget) -> Counted {
    let h = m.horizon();
    let n = m.size();
    if eps >= m.base().diameter() {
        return Counted {
            bracket: CountBracket::exact(Quantity::S, h, eps, 1),
            witness: vec![vec![0]],
        };
    }
    if m.is_stationary() {
        if let Some(xs) = m.base().line() {
            let pts = line::separated(xs, eps);
            return Counted {
                bracket: CountBracket::exact(Quantity::S, h, eps, pts.len() as u128),
                witness: vec![pts],
            };
        }
    }
    if n > budget.max_graph {
        let pts = greedy_separated(m, eps);
        let upper = n as u128;
        return Counted {
            bracket: CountBracket::new(Quantity::S, h, eps, pts.len() as u128, upper),
            witness: vec![pts],
        };
    }
    let conflict = Graph::from_predicate(n, |i, j| !m.separated(i, j, eps));
    let mut nodes = budget.nodes;
    let mut lower = 0u128;
    let mut upper = 0u128;
    let mut set = Vec::new();
    for comp in conflict.components() {
        let (best, ub) = mis_component(&conflict, &comp, budget, &mut nodes);
        lower += best.len() as u128;
        upper += ub as u128;
        set.extend(best);
    }
    set.sort_unstable();
    Counted { bracket: CountBracket::new(Quantity::S, h, eps, lower, upper), witness: vec![set] }
}

/// Maximum independent set of one component: (best set, certified upper bound).
fn mis_component(
    g: &Graph,
    comp: &[usize],
    budget: &Budget,
    nodes: &mut u64,
) -> (Vec<usize>, usize) {
    if comp.len() == 1 {
        return (comp.to_vec(), 1);
    }
    let sub = g.induced(comp);
    if sub.is_complete() {
        return (vec![comp[0]], 1);
    }
    let local: Vec<usize> = (0..comp.len()).collect();
    let greedy = sub.greedy_independent(&local);
    let mut upper = clique_cover_bound(&sub);
    let mut best = greedy;
    if best.len() < upper && comp.len() <= budget.max_component {
        let comple = sub.complement();
        let (clique, done) = comple.max_clique(&best, nodes);
        if clique.len() > best.len() {
            best = clique;
        }
        if done {
            upper = best.len();
        }
    }
    (best.into_iter().map(|v| comp[v]).collect(), upper)
}

/// Smallest of a few first-fit clique partitions: an upper bound on the
/// independence number.
fn clique_cover_bound(g: &Graph) -> usize {
    let n = g.len();
    let fwd: Vec<usize> = (0..n).collect();
    let rev: Vec<usize> = (0..n).rev().collect();
    let mut deg: Vec<usize> = (0..n).collect();
    deg.sort_by_key(|&v| (std::cmp::Reverse(g.degree(v)), v));
    [fwd, rev, deg]
        .iter()
        .map(|o| g.greedy_clique_partition(o).len())
        .min()
        .unwrap()
}

/// Greedy maximal separated set in index order, without a pair graph.
pub fn greedy_separated(m: &BowenMetric, eps: f64) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    for i in 0..m.size() {
        if chosen.iter().all(|&c| m.separated(i, c, eps)) {
            chosen.push(i);
        }
    }
    chosen
}

/// Minimal `(n, ε)`-spanning set (open balls: `d_n < ε`).
pub fn min_spanning(m: &BowenMetric, eps: f64, budget: &Budget) -> CountBracket {
    ball_cover(m, eps, budget, Quantity::R).bracket
}

pub fn min_spanning_set(m: &BowenMetric, eps: f64, budget: &Budget) -> Counted {
    ball_cover(m, eps, budget, Quantity::R)
}

/// Minimal number of open ε-balls centered in the space.
pub fn min_ball_cover(m: &BowenMetric, eps: f64, budget: &Budget) -> CountBracket {
    ball_cover(m, eps, budget, Quantity::N).bracket
}

fn ball_cover(m: &BowenMetric, eps: f64, budget: &Budget, q: Quantity) -> Counted {
    let h = m.horizon();
    let n = m.size();
    if eps > m.base().diameter() {
        return Counted { bracket: CountBracket::exact(q, h, eps, 1), witness: vec![vec![0]] };
    }
    if m.is_stationary() {
        if let Some(xs) = m.base().line() {
            let c = line::ball_cover(xs, eps);
            return Counted {
                bracket: CountBracket::exact(q, h, eps, c.len() as u128),
                witness: vec![c],
            };
        }
    }
    if n > budget.max_graph {
        // Points more than 2ε apart never share a ball.
        let c = greedy_net(m, eps);
        let lower = (greedy_separated(m, 2.0 * eps).len() as u128).min(c.len() as u128);
        return Counted {
            bracket: CountBracket::new(q, h, eps, lower, c.len() as u128),
            witness: vec![c],
        };
    }
    let close = Graph::from_predicate(n, |i, j| m.within(i, j, eps));
    let mut nodes = budget.nodes;
    let (mut lower, mut upper) = (0u128, 0u128);
    let mut centers = Vec::new();
    for comp in close.components() {
        let k = comp.len();
        let sub = close.induced(&comp);
        let sets: Vec<FixedBitSet> = (0..k)
            .map(|c| {
                let mut b = sub.neighbors(c).clone();
                b.insert(c);
                b
            })
            .collect();
        let (chosen, lo) = solve_cover(k, sets, budget, &mut nodes);
        lower += lo as u128;
        upper += chosen.len() as u128;
        centers.extend(chosen.into_iter().map(|c| comp[c]));
    }
    centers.sort_unstable();
    Counted { bracket: CountBracket::new(q, h, eps, lower, upper), witness: vec![centers] }
}

fn solve_cover(
    k: usize,
    sets: Vec<FixedBitSet>,
    budget: &Budget,
    nodes: &mut u64,
) -> (Vec<usize>, usize) {
    let p = CoverProblem::new(k, sets);
    if k > budget.max_component {
        let g = p.greedy();
        let mut zero = 0;
        let lo = p.solve(&mut zero).lower;
        return (g, lo);
    }
    let sol = p.solve(nodes);
    (sol.chosen, sol.lower)
}

/// Greedy ε-net in index order: every point lies within ε of a chosen one.
fn greedy_net(m: &BowenMetric, eps: f64) -> Vec<usize> {
    let mut chosen: Vec<usize> = Vec::new();
    for i in 0..m.size() {
        if !chosen.iter().any(|&c| m.within(i, c, eps)) {
            chosen.push(i);
        }
    }
    chosen
}

/// Minimal cover by sets of `d_n`-diameter below ε.
pub fn min_diameter_cover(m: &BowenMetric, eps: f64, budget: &Budget) -> CountBracket {
    min_diameter_cover_sets(m, eps, budget).bracket
}

pub fn min_diameter_cover_sets(m: &BowenMetric, eps: f64, budget: &Budget) -> Counted {
    let h = m.horizon();
    let n = m.size();
    let q = Quantity::Cov;
    if eps > m.base().diameter() {
        return Counted { bracket: CountBracket::exact(q, h, eps, 1), witness: vec![all_points(n)] };
    }
    if m.is_stationary() {
        if let Some(xs) = m.base().line() {
            let parts = line::diameter_cover(xs, eps);
            return Counted {
                bracket: CountBracket::exact(q, h, eps, parts.len() as u128),
                witness: parts,
            };
        }
    }
    if n > budget.max_graph {
        // Greedy clusters of points within ε/2 of a seed have diameter < ε.
        let mut seeds: Vec<usize> = Vec::new();
        let mut parts: Vec<Vec<usize>> = Vec::new();
        for i in 0..n {
            match seeds.iter().position(|&c| m.within(i, c, eps / 2.0)) {
                Some(p) => parts[p].push(i),
                None => {
                    seeds.push(i);
                    parts.push(vec![i]);
                }
            }
        }
        let lower = greedy_separated(m, eps).len() as u128;
        return Counted {
            bracket: CountBracket::new(q, h, eps, lower, (parts.len() as u128).max(lower)),
            witness: parts,
        };
    }
    let close = Graph::from_predicate(n, |i, j| m.within(i, j, eps));
    let mut nodes = budget.nodes;
    let (mut lower, mut upper) = (0u128, 0u128);
    let mut parts = Vec::new();
    for comp in close.components() {
        let sub = close.induced(&comp);
        let k = comp.len();
        if sub.is_complete() {
            lower += 1;
            upper += 1;
            parts.push(comp);
            continue;
        }
        let local: Vec<usize> = (0..k).collect();
        // Pairwise non-adjacent points never share a covering set.
        let packing = sub.greedy_independent(&local).len();
        let greedy = sub.greedy_clique_partition(&local);
        if packing == greedy.len() {
            lower += packing as u128;
            upper += packing as u128;
            parts.extend(greedy.into_iter().map(|c| c.into_iter().map(|v| comp[v]).collect()));
            continue;
        }
        let cliques = if k <= budget.max_component {
            sub.maximal_cliques(budget.max_cliques)
        } else {
            None
        };
        match cliques {
            Some(cl) => {
                let (chosen, lo) = solve_cover(k, cl.clone(), budget, &mut nodes);
                lower += lo.max(packing) as u128;
                upper += chosen.len() as u128;
                // Turn the chosen cliques into a partition.
                let mut seen = FixedBitSet::with_capacity(k);
                for c in chosen {
                    let mut part = Vec::new();
                    for v in cl[c].ones() {
                        if !seen.contains(v) {
                            seen.insert(v);
                            part.push(comp[v]);
                        }
                    }
                    if !part.is_empty() {
                        parts.push(part);
                    }
                }
            }
            None => {
                lower += packing as u128;
                upper += greedy.len() as u128;
                parts.extend(greedy.into_iter().map(|c| c.into_iter().map(|v| comp[v]).collect()));
            }
        }
    }
    Counted { bracket: CountBracket::new(q, h, eps, lower, upper), witness: parts }
}

/// Dispatch by quantity.
pub fn count(m: &BowenMetric, q: Quantity, eps: f64, budget: &Budget) -> CountBracket {
    match q {
        Quantity::S => max_separated(m, eps, budget),
        Quantity::R => min_spanning(m, eps, budget),
        Quantity::N => min_ball_cover(m, eps, budget),
        Quantity::Cov => min_diameter_cover(m, eps, budget),
    }
}

/// Exact one-dimensional counts for subsets of the line.
pub mod line {
    fn sorted(xs: &[f64]) -> Vec<usize> {
        let mut idx: Vec<usize> = (0..xs.len()).collect();
        idx.sort_by(|&a, &b| xs[a].total_cmp(&xs[b]).then(a.cmp(&b)));
        idx
    }

    /// Leftmost-first greedy; optimal by the usual exchange argument.
    pub fn separated(xs: &[f64], eps: f64) -> Vec<usize> {
        let idx = sorted(xs);
        let mut out = vec![idx[0]];
        let mut last = xs[idx[0]];
        for &i in &idx[1..] {
            if xs[i] - last > eps {
                out.push(i);
                last = xs[i];
            }
        }
        out
    }

    /// Open balls centered at points: cover the leftmost uncovered point with
    /// the rightmost center that still reaches it.
    pub fn ball_cover(xs: &[f64], eps: f64) -> Vec<usize> {
        let idx = sorted(xs);
        let mut centers = Vec::new();
        let mut a = 0;
        while a < idx.len() {
            let p = xs[idx[a]];
            let mut c = a;
            while c + 1 < idx.len() && xs[idx[c + 1]] - p < eps {
                c += 1;
            }
            let reach = xs[idx[c]];
            centers.push(idx[c]);
            a = c + 1;
            while a < idx.len() && xs[idx[a]] - reach < eps {
                a += 1;
            }
        }
        centers.sort_unstable();
        centers
    }

    /// Sets of diameter below ε: greedy runs starting at the leftmost point.
    pub fn diameter_cover(xs: &[f64], eps: f64) -> Vec<Vec<usize>> {
        let idx = sorted(xs);
        let mut parts = Vec::new();
        let mut a = 0;
        while a < idx.len() {
            let p = xs[idx[a]];
            let mut part = vec![idx[a]];
            a += 1;
            while a < idx.len() && xs[idx[a]] - p < eps {
                part.push(idx[a]);
                a += 1;
            }
            parts.push(part);
        }
        parts
    }
}
