use minilp::{ComparisonOp, OptimizationDirection, Problem};
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Serialize};

use super::atomic::AtomicMeasure;
use crate::error::{Error, Result};
use crate::metric_core::BowenMetric;

/// Marginal violations tolerated in a floating-point plan.
pub const PLAN_TOLERANCE: f64 = 1e-9;

/// `W_p` or Lévy-Prokhorov, on `d_n` for horizon `n`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub enum MetricKind {
    Wp { p: f64 },
    Lp,
}

impl MetricKind {
    pub fn validate(&self) -> Result<()> {
        match self {
            MetricKind::Wp { p } if !(*p >= 1.0) || !p.is_finite() => {
                Err(Error::Parameter(format!("W_p needs p ≥ 1, got {p}")))
            }
            _ => Ok(()),
        }
    }

    pub fn tag(&self) -> String {
        match self {
            MetricKind::Wp { p } => format!("W{p}"),
            MetricKind::Lp => "LP".into(),
        }
    }
}

/// A coupling of two atomic measures: `matrix[i][j]` is the mass moved from
/// the `i`-th atom of the first measure to the `j`-th atom of the second.
#[derive(Clone, Debug, PartialEq)]
pub struct CouplingPlan {
    pub rows: Vec<usize>,
    pub cols: Vec<usize>,
    pub matrix: Vec<Vec<f64>>,
}

impl CouplingPlan {
    /// Largest marginal or sign violation against the two measures.
    pub fn violation(&self, mu: &AtomicMeasure, nu: &AtomicMeasure) -> f64 {
        let mut worst: f64 = 0.0;
        for (i, row) in self.matrix.iter().enumerate() {
            worst = worst.max((row.iter().sum::<f64>() - mu.weights()[i]).abs());
            for &x in row {
                worst = worst.max(-x);
            }
        }
        for j in 0..self.cols.len() {
            let s: f64 = self.matrix.iter().map(|r| r[j]).sum();
            worst = worst.max((s - nu.weights()[j]).abs());
        }
        worst
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct Transport {
    /// `(∫ d_n^p dπ)^{1/p}` at the optimum.
    pub value: f64,
    pub plan: CouplingPlan,
}

fn cost_matrix(m: &BowenMetric, mu: &AtomicMeasure, nu: &AtomicMeasure, p: f64) -> Vec<Vec<f64>> {
    mu.atoms()
        .iter()
        .map(|&x| nu.atoms().iter().map(|&y| m.dist(x, y).powf(p)).collect())
        .collect()
}

fn check_atoms(m: &BowenMetric, mu: &AtomicMeasure) -> Result<()> {
    for &a in mu.atoms() {
        m.base().check(a)?;
    }
    Ok(())
}

/// Exact `W_{p,n}(μ, ν)` with an optimal coupling.
pub fn wasserstein(m: &BowenMetric, mu: &AtomicMeasure, nu: &AtomicMeasure, p: f64) -> Result<Transport> {
    MetricKind::Wp { p }.validate()?;
    check_atoms(m, mu)?;
    check_atoms(m, nu)?;
    let cost = cost_matrix(m, mu, nu, p);
    let matrix = optimal_plan(&cost, mu, nu)?;
    let total: f64 = cost.iter().zip(&matrix).flat_map(|(c, r)| c.iter().zip(r)).map(|(c, x)| c * x).sum();
    let value = total.max(0.0).powf(1.0 / p);
    Ok(Transport {
        value,
        plan: CouplingPlan { rows: mu.atoms().to_vec(), cols: nu.atoms().to_vec(), matrix },
    })
}

pub fn w1(m: &BowenMetric, mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<f64> {
    Ok(wasserstein(m, mu, nu, 1.0)?.value)
}

fn optimal_plan(cost: &[Vec<f64>], mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<Vec<Vec<f64>>> {
    let (a, b) = (mu.weights(), nu.weights());
    let (r, c) = (a.len(), b.len());
    if r == 1 || c == 1 {
        return Ok((0..r).map(|i| (0..c).map(|j| if r == 1 { b[j] } else { a[i] }).collect()).collect());
    }
    if r == 2 && c == 2 {
        // π_00 = t on [max(0, a0 − b1), min(a0, b0)]; cost is affine in t.
        let (lo, hi) = ((a[0] - b[1]).max(0.0), a[0].min(b[0]));
        let plan = |t: f64| vec![vec![t, a[0] - t], vec![b[0] - t, a[1] - b[0] + t]];
        let value = |p: &Vec<Vec<f64>>| -> f64 {
            (0..2).flat_map(|i| (0..2).map(move |j| (i, j))).map(|(i, j)| cost[i][j] * p[i][j]).sum()
        };
        let (pl, ph) = (plan(lo), plan(hi));
        return Ok(if value(&pl) <= value(&ph) { pl } else { ph });
    }
    if let Some(plan) = lp_plan(cost, a, b) {
        let candidate = CouplingPlan { rows: vec![], cols: vec![0; c], matrix: plan };
        if candidate.violation(mu, nu) <= PLAN_TOLERANCE {
            return Ok(candidate.matrix);
        }
    }
    rational_plan(cost, mu, nu)
}

fn lp_plan(cost: &[Vec<f64>], a: &[f64], b: &[f64]) -> Option<Vec<Vec<f64>>> {
    let (r, c) = (a.len(), b.len());
    let mut pb = Problem::new(OptimizationDirection::Minimize);
    let vars: Vec<Vec<_>> = (0..r)
        .map(|i| (0..c).map(|j| pb.add_var(cost[i][j], (0.0, f64::INFINITY))).collect())
        .collect();
    for i in 0..r {
        let row: Vec<_> = (0..c).map(|j| (vars[i][j], 1.0)).collect();
        pb.add_constraint(row.as_slice(), ComparisonOp::Eq, a[i]);
    }
    // One column constraint is implied by the others.
    for j in 0..c - 1 {
        let col: Vec<_> = (0..r).map(|i| (vars[i][j], 1.0)).collect();
        pb.add_constraint(col.as_slice(), ComparisonOp::Eq, b[j]);
    }
    let sol = pb.solve().ok()?;
    Some(
        (0..r)
            .map(|i| (0..c).map(|j| sol.var_value(vars[i][j]).max(0.0)).collect())
            .collect(),
    )
}

/// Transportation simplex in exact arithmetic, started from the northwest
/// corner basis. Float weights are converted exactly and the column
/// marginal is closed up to the row total.
fn rational_plan(cost: &[Vec<f64>], mu: &AtomicMeasure, nu: &AtomicMeasure) -> Result<Vec<Vec<f64>>> {
    let exact = |m: &AtomicMeasure| -> Vec<BigRational> {
        match m.exact_weights() {
            Some(w) => w.to_vec(),
            None => m.weights().iter().map(|&x| BigRational::from_float(x).unwrap()).collect(),
        }
    };
    let a = exact(mu);
    let mut b = exact(nu);
    let (r, c) = (a.len(), b.len());
    let diff: BigRational = a.iter().sum::<BigRational>() - b.iter().sum::<BigRational>();
    b[c - 1] += diff;
    if b[c - 1].is_negative() {
        return Err(Error::Solver("marginals differ beyond rounding".into()));
    }
    let cq: Vec<Vec<BigRational>> = cost
        .iter()
        .map(|row| row.iter().map(|&x| BigRational::from_float(x).unwrap()).collect())
        .collect();

    let mut flow = vec![vec![BigRational::zero(); c]; r];
    let mut basic = vec![vec![false; c]; r];
    let (mut i, mut j) = (0, 0);
    let (mut ra, mut rb) = (a.clone(), b.clone());
    while i < r && j < c {
        let t = if ra[i] < rb[j] { ra[i].clone() } else { rb[j].clone() };
        flow[i][j] = t.clone();
        basic[i][j] = true;
        ra[i] -= &t;
        rb[j] -= &t;
        if i + 1 == r {
            j += 1;
        } else if j + 1 == c || ra[i].is_zero() {
            i += 1;
        } else {
            j += 1;
        }
    }

    for _ in 0..100_000 {
        let (u, v) = potentials(&basic, &cq);
        let mut enter = None;
        let mut best = BigRational::zero();
        for (i, row) in cq.iter().enumerate() {
            for (j, cij) in row.iter().enumerate() {
                if !basic[i][j] {
                    let red = cij - &u[i] - &v[j];
                    if red < best {
                        best = red;
                        enter = Some((i, j));
                    }
                }
            }
        }
        let Some((ei, ej)) = enter else {
            return Ok(flow.iter().map(|row| row.iter().map(|x| x.to_f64().unwrap_or(0.0)).collect()).collect());
        };
        let cycle = basis_path(&basic, ei, ej);
        // cycle alternates: (ei, ej) is +, then −, +, ...
        let mut theta: Option<BigRational> = None;
        let mut leave = None;
        for (k, &(i, j)) in cycle.iter().enumerate() {
            if k % 2 == 1 && theta.as_ref().map_or(true, |t| flow[i][j] < *t) {
                theta = Some(flow[i][j].clone());
                leave = Some((i, j));
            }
        }
        let theta = theta.ok_or_else(|| Error::Solver("degenerate transportation cycle".into()))?;
        for (k, &(i, j)) in cycle.iter().enumerate() {
            if k % 2 == 0 {
                flow[i][j] += &theta;
            } else {
                flow[i][j] -= &theta;
            }
        }
        let (li, lj) = leave.unwrap();
        basic[ei][ej] = true;
        basic[li][lj] = false;
    }
    Err(Error::Solver("transportation simplex did not converge".into()))
}

fn potentials(basic: &[Vec<bool>], cost: &[Vec<BigRational>]) -> (Vec<BigRational>, Vec<BigRational>) {
    let (r, c) = (basic.len(), basic[0].len());
    let mut u: Vec<Option<BigRational>> = vec![None; r];
    let mut v: Vec<Option<BigRational>> = vec![None; c];
    u[0] = Some(BigRational::zero());
    let mut changed = true;
    while changed {
        changed = false;
        for i in 0..r {
            for j in 0..c {
                if !basic[i][j] {
                    continue;
                }
                match (&u[i], &v[j]) {
                    (Some(ui), None) => {
                        v[j] = Some(&cost[i][j] - ui);
                        changed = true;
                    }
                    (None, Some(vj)) => {
                        u[i] = Some(&cost[i][j] - vj);
                        changed = true;
                    }
                    _ => {}
                }
            }
        }
    }
    let fill = |x: Vec<Option<BigRational>>| x.into_iter().map(|p| p.unwrap_or_else(BigRational::zero)).collect();
    (fill(u), fill(v))
}

/// Cells of the cycle closed by adding `(ei, ej)` to the basis tree,
/// starting with `(ei, ej)` and alternating row and column moves.
fn basis_path(basic: &[Vec<bool>], ei: usize, ej: usize) -> Vec<(usize, usize)> {
    let (r, c) = (basic.len(), basic[0].len());
    // Nodes: rows 0..r, columns r..r+c. Search from column ej to row ei.
    let mut prev = vec![usize::MAX; r + c];
    let mut queue = std::collections::VecDeque::new();
    prev[r + ej] = r + ej;
    queue.push_back(r + ej);
    while let Some(node) = queue.pop_front() {
        if node == ei {
            break;
        }
        if node < r {
            for j in 0..c {
                if basic[node][j] && prev[r + j] == usize::MAX {
                    prev[r + j] = node;
                    queue.push_back(r + j);
                }
            }
        } else {
            for i in 0..r {
                if basic[i][node - r] && prev[i] == usize::MAX {
                    prev[i] = node;
                    queue.push_back(i);
                }
            }
        }
    }
    let mut cells = vec![(ei, ej)];
    let mut node = ei;
    while node != r + ej {
        let p = prev[node];
        cells.push(if node < r { (node, p - r) } else { (p, node - r) });
        node = p;
    }
    cells
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::metric_core::FiniteMetricSpace;

    fn line(xs: Vec<f64>) -> BowenMetric {
        BowenMetric::stationary(FiniteMetricSpace::from_line(xs).unwrap())
    }

    #[test]
    fn diracs_and_identity() {
        let m = line(vec![0.0, 0.3, 1.0]);
        let d = wasserstein(&m, &AtomicMeasure::dirac(0), &AtomicMeasure::dirac(2), 2.0).unwrap();
        assert!((d.value - 1.0).abs() < 1e-15);
        let mu = AtomicMeasure::uniform(&[0, 1, 2]).unwrap();
        assert!(wasserstein(&m, &mu, &mu, 1.0).unwrap().value < 1e-12);
        assert!(wasserstein(&m, &mu, &mu, 0.5).is_err());
    }

    #[test]
    fn rational_fallback_matches_lp() {
        let m = line((0..7).map(|k| (k * k) as f64 / 10.0).collect());
        let mu = AtomicMeasure::new(vec![0, 2, 4, 6], vec![0.1, 0.2, 0.3, 0.4]).unwrap();
        let nu = AtomicMeasure::new(vec![1, 3, 5], vec![0.5, 0.25, 0.25]).unwrap();
        let cost = cost_matrix(&m, &mu, &nu, 1.0);
        let total = |p: &Vec<Vec<f64>>| -> f64 {
            cost.iter().zip(p).flat_map(|(c, r)| c.iter().zip(r)).map(|(c, x)| c * x).sum()
        };
        let lp = lp_plan(&cost, mu.weights(), nu.weights()).unwrap();
        let exact = rational_plan(&cost, &mu, &nu).unwrap();
        assert!((total(&lp) - total(&exact)).abs() < 1e-12);
        // On the line, W_1 is the area between the two distribution functions.
        let xs: Vec<f64> = (0..7).map(|k| (k * k) as f64 / 10.0).collect();
        let mut area = 0.0;
        let (mut fm, mut fn_) = (0.0, 0.0);
        for k in 0..6 {
            fm += mu.mass_of(k);
            fn_ += nu.mass_of(k);
            area += (fm - fn_ as f64).abs() * (xs[k + 1] - xs[k]);
        }
        assert!((total(&exact) - area).abs() < 1e-12);
    }
}
