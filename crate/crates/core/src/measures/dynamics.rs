use std::collections::HashMap;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::One;
use rayon::prelude::*;

use super::atomic::AtomicMeasure;
use super::quantize::{quantization_number, QuantBudget, QuantizationReport};
use super::transport::{w1, MetricKind};
use crate::error::{Error, Result};
use crate::metric_core::{count, max_separated_set, BowenMetric, Budget, DenseMetric, FiniteMetricSpace, Mode, Quantity};
use crate::systems::DynamicalSystem;

/// `Q_{μ,D_n}(ε)` over a window of horizons and scales, row-major in `n`.
pub fn quantization_table(
    sys: &DynamicalSystem,
    mu: &AtomicMeasure,
    kind: MetricKind,
    horizons: &[usize],
    eps: &[f64],
    budget: &QuantBudget,
) -> Result<Vec<QuantizationReport>> {
    let mut out = Vec::with_capacity(horizons.len() * eps.len());
    for &n in horizons {
        let m = sys.bowen(n)?;
        for &e in eps {
            out.push(quantization_number(&m, mu, kind, e, None, budget)?);
        }
    }
    Ok(out)
}

/// One term `μ_j` of the construction.
#[derive(Clone, Debug)]
pub struct Thm4Part {
    pub j: usize,
    /// `ε_j = 2^{−j²}`.
    pub eps: f64,
    pub coefficient: BigRational,
    pub measure: AtomicMeasure,
    /// Whether the support is a maximum `(n, 4ε_j)`-separated set.
    pub exact: bool,
}

#[derive(Clone, Debug)]
pub struct Thm4Measure {
    pub horizon: usize,
    pub mu: AtomicMeasure,
    pub parts: Vec<Thm4Part>,
}

/// Largest `j` with `2^{−j²}` a normal double.
pub const MAX_THM4_J: usize = 31;

/// `μ₀ = Σ_{j<J} 2^{−j} μ_j + 2^{−(J−1)} μ_J`, where `μ_j` is equidistributed
/// on maximum `(n, 4ε_j)`-separated set, `ε_j = 2^{−j²}`. The tail mass of
/// the infinite series goes to the last term.
pub fn thm4_construction(sys: &DynamicalSystem, n: usize, j_max: usize, budget: &Budget) -> Result<Thm4Measure> {
    if j_max == 0 || j_max > MAX_THM4_J {
        return Err(Error::Parameter(format!("j_max must lie in 1..={MAX_THM4_J}")));
    }
    let m = sys.bowen(n)?;
    let mut parts = Vec::with_capacity(j_max);
    for j in 1..=j_max {
        let eps = 0.5f64.powi((j * j) as i32);
        let found = max_separated_set(&m, 4.0 * eps, budget);
        let mut support = found.witness.into_iter().next().unwrap_or_default();
        support.sort_unstable();
        let exp = if j < j_max { j } else { j_max - 1 };
        let coefficient = BigRational::new(BigInt::one(), BigInt::from(2u32).pow(exp as u32));
        parts.push(Thm4Part {
            j,
            eps,
            coefficient,
            measure: AtomicMeasure::uniform(&support)?,
            exact: found.bracket.is_exact(),
        });
    }
    let terms: Vec<(BigRational, &AtomicMeasure)> = parts.iter().map(|p| (p.coefficient.clone(), &p.measure)).collect();
    let mu = AtomicMeasure::mixture(&terms)?;
    Ok(Thm4Measure { horizon: n, mu, parts })
}

/// `(C − C_ν + 1)/C · ε/2`: lower bound on `W_1(μ, ν)` for `μ` uniform on `C`
/// points pairwise more than `ε` apart and `ν` with `C_ν < C` atoms.
pub fn bb_w1_lower_bound(c: usize, c_nu: usize, eps: f64) -> f64 {
    (c as f64 - c_nu as f64 + 1.0) / c as f64 * eps / 2.0
}

#[derive(Clone, Debug, PartialEq)]
pub struct ApartCount {
    pub count: usize,
    /// Indices into the candidate list.
    pub chosen: Vec<usize>,
    pub mode: Mode,
}

/// Largest family of candidates whose supports are pairwise at `d_n`
/// distance at least `ε`.
pub fn apart_count(m: &BowenMetric, candidates: &[AtomicMeasure], eps: f64, nodes: u64) -> Result<ApartCount> {
    for c in candidates {
        for &a in c.atoms() {
            m.base().check(a)?;
        }
    }
    // Candidates sharing a support are never apart and have the same
    // conflicts, so one representative per support suffices.
    let mut rep: HashMap<&[usize], usize> = HashMap::new();
    let mut reps = Vec::new();
    for (i, c) in candidates.iter().enumerate() {
        rep.entry(c.atoms()).or_insert_with(|| {
            reps.push(i);
            i
        });
    }
    let apart = |a: &AtomicMeasure, b: &AtomicMeasure| {
        a.atoms().iter().all(|&x| b.atoms().iter().all(|&y| m.dist(x, y) >= eps))
    };
    let g = crate::metric_core::graph::Graph::from_predicate(reps.len(), |i, j| {
        apart(&candidates[reps[i]], &candidates[reps[j]])
    });
    let order: Vec<usize> = (0..reps.len()).collect();
    let greedy = g.complement().greedy_independent(&order);
    let mut budget = nodes;
    let (clique, done) = g.max_clique(&greedy, &mut budget);
    let chosen: Vec<usize> = clique.iter().map(|&i| reps[i]).collect();
    Ok(ApartCount {
        count: chosen.len(),
        chosen,
        mode: if done { Mode::Exact } else { Mode::Heuristic },
    })
}

/// Probability measures on a net with at most `k` atoms and weights in `{i/q}`.
#[derive(Clone, Debug)]
pub struct MeasureLattice {
    base: DynamicalSystem,
    q: u32,
    measures: Vec<AtomicMeasure>,
    numerators: Vec<Vec<u32>>,
    index: HashMap<(Vec<usize>, Vec<u32>), usize>,
}

fn binomial(n: usize, k: usize) -> u128 {
    if k > n {
        return 0;
    }
    (0..k).fold(1u128, |acc, i| acc.saturating_mul((n - i) as u128) / (i as u128 + 1))
}

fn compositions(q: u32, parts: usize, out: &mut Vec<Vec<u32>>, cur: &mut Vec<u32>) {
    if parts == 1 {
        cur.push(q);
        out.push(cur.clone());
        cur.pop();
        return;
    }
    for first in 1..=q.saturating_sub(parts as u32 - 1) {
        cur.push(first);
        compositions(q - first, parts - 1, out, cur);
        cur.pop();
    }
}

fn subsets(n: usize, k: usize, from: usize, cur: &mut Vec<usize>, out: &mut Vec<Vec<usize>>) {
    if cur.len() == k {
        out.push(cur.clone());
        return;
    }
    for i in from..n {
        if n - i < k - cur.len() {
            break;
        }
        cur.push(i);
        subsets(n, k, i + 1, cur, out);
        cur.pop();
    }
}

impl MeasureLattice {
    pub fn cell_count(points: usize, k: usize, q: u32) -> u128 {
        (1..=k.min(q as usize)).map(|j| binomial(points, j).saturating_mul(binomial(q as usize - 1, j - 1))).sum()
    }

    pub fn new(base: &DynamicalSystem, k: usize, q: u32, cap: usize) -> Result<Self> {
        if k == 0 || q == 0 {
            return Err(Error::Parameter("lattice needs k ≥ 1 and q ≥ 1".into()));
        }
        let n = base.size();
        let cells = Self::cell_count(n, k, q);
        if cells > cap as u128 {
            return Err(Error::SizeLimit(format!("{cells} lattice measures exceed the cap {cap}")));
        }
        let mut measures = Vec::new();
        let mut numerators = Vec::new();
        let mut index = HashMap::new();
        for j in 1..=k.min(q as usize) {
            let mut comps = Vec::new();
            compositions(q, j, &mut comps, &mut Vec::new());
            let mut subs = Vec::new();
            subsets(n, j, 0, &mut Vec::new(), &mut subs);
            for s in &subs {
                for c in &comps {
                    let w = c.iter().map(|&x| BigRational::new(BigInt::from(x), BigInt::from(q))).collect();
                    index.insert((s.clone(), c.clone()), measures.len());
                    measures.push(AtomicMeasure::from_rationals(s.clone(), w)?);
                    numerators.push(c.clone());
                }
            }
        }
        Ok(MeasureLattice { base: base.clone(), q, measures, numerators, index })
    }

    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    pub fn measures(&self) -> &[AtomicMeasure] {
        &self.measures
    }

    pub fn dirac_index(&self, x: usize) -> Option<usize> {
        self.index.get(&(vec![x], vec![self.q])).copied()
    }

    /// `f_*` as a map on lattice indices.
    pub fn pushforward_map(&self) -> Result<Vec<usize>> {
        let map = self.base.map();
        self.measures
            .iter()
            .zip(&self.numerators)
            .map(|(mu, num)| {
                let mut acc: std::collections::BTreeMap<usize, u32> = Default::default();
                for (&a, &w) in mu.atoms().iter().zip(num) {
                    *acc.entry(map[a]).or_insert(0) += w;
                }
                let key: (Vec<usize>, Vec<u32>) = acc.into_iter().unzip();
                self.index
                    .get(&key)
                    .copied()
                    .ok_or_else(|| Error::Representation("pushforward leaves the lattice".into()))
            })
            .collect()
    }

    /// The lattice under `W_{1,n}` as a static metric space.
    pub fn w1_space(&self, n: usize) -> Result<FiniteMetricSpace> {
        let m = self.base.bowen(n)?;
        let rows: Vec<Vec<f64>> = (0..self.len())
            .into_par_iter()
            .map(|i| (0..i).map(|j| w1(&m, &self.measures[i], &self.measures[j])).collect::<Result<Vec<_>>>())
            .collect::<Result<Vec<_>>>()?;
        let dense = DenseMetric::from_fn(self.len(), |i, j| rows[i][j]);
        FiniteMetricSpace::new(dense)
    }

    /// `(𝒫-net, W_1, f_*)`.
    pub fn induced_system(&self) -> Result<DynamicalSystem> {
        DynamicalSystem::new(format!("P({})", self.base.name()), self.w1_space(1)?, self.pushforward_map()?)
    }
}

/// One cell of the induced sweep.
#[derive(Clone, Debug, PartialEq)]
pub struct InducedRow {
    pub horizon: usize,
    pub eps: f64,
    /// `S(X, d_n, ε)`.
    pub separated: crate::metric_core::CountBracket,
    /// `A(𝒫-net, d_n, ε)`.
    pub apart: ApartCount,
    /// `𝒩(𝒫-net, W_{1,n}, ε)`.
    pub lattice_cover: crate::metric_core::CountBracket,
    /// `𝒩(X, d_n, ε/2)`.
    pub half_cover: crate::metric_core::CountBracket,
    /// `S(𝒫-net, n, ε)` for `f_*` on `(𝒫-net, W_1)`.
    pub induced_separated: crate::metric_core::CountBracket,
    /// `log log 𝒩(𝒫, W_{1,n}, ε) ≤ log 𝒩(X, d_n, ε/2) + log log(C/ε)`, `C = 2 diam X`.
    pub covering_bound_holds: bool,
}

/// `ln ln x`, taken as 0 when `ln x ≤ 0`.
pub fn log_log(x: f64) -> f64 {
    let l = x.ln();
    if l > 0.0 {
        l.ln()
    } else {
        0.0
    }
}

pub fn induced_sweep(
    sys: &DynamicalSystem,
    lattice: &MeasureLattice,
    horizons: &[usize],
    eps: &[f64],
    budget: &Budget,
) -> Result<Vec<InducedRow>> {
    let induced = lattice.induced_system()?;
    let c = 2.0 * sys.space().diameter();
    let mut rows = Vec::new();
    for &n in horizons {
        let m = sys.bowen(n)?;
        let wn = BowenMetric::stationary(lattice.w1_space(n)?);
        let im = induced.bowen(n)?;
        for &e in eps {
            let separated = count(&m, Quantity::S, e, budget);
            let apart = apart_count(&m, lattice.measures(), e, budget.nodes)?;
            let lattice_cover = count(&wn, Quantity::N, e, budget);
            let half_cover = count(&m, Quantity::N, e / 2.0, budget);
            let induced_separated = count(&im, Quantity::S, e, budget);
            let lhs = log_log(lattice_cover.lower as f64);
            let rhs = (half_cover.upper as f64).ln() + log_log(c / e);
            rows.push(InducedRow {
                horizon: n,
                eps: e,
                separated,
                apart,
                lattice_cover,
                half_cover,
                induced_separated,
                covering_bound_holds: lhs <= rhs + 1e-12,
            });
        }
    }
    Ok(rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::systems::ShiftSpace;

    #[test]
    fn lattice_counts_and_pushforward() {
        let sys = ShiftSpace::full(2, 4).unwrap().system().unwrap();
        let lat = MeasureLattice::new(&sys, 2, 4, 10_000).unwrap();
        assert_eq!(lat.len(), 16 + 120 * 3);
        assert_eq!(MeasureLattice::cell_count(16, 2, 4), 376);
        let f = lat.pushforward_map().unwrap();
        let d = lat.dirac_index(5).unwrap();
        assert_eq!(f[d], lat.dirac_index(sys.image(5)).unwrap());
        assert!(MeasureLattice::new(&sys, 3, 8, 100).is_err());
    }

    #[test]
    fn thm4_single_term() {
        let sys = ShiftSpace::full(2, 4).unwrap().system().unwrap();
        let t = thm4_construction(&sys, 2, 1, &Budget::default()).unwrap();
        assert_eq!(t.mu, t.parts[0].measure);
        let t3 = thm4_construction(&sys, 2, 3, &Budget::default()).unwrap();
        assert_eq!(t3.mu.exact_total(), Some(BigRational::one()));
        for p in &t3.parts {
            assert!(t3.mu.dominates(&p.measure, &p.coefficient));
        }
        assert!(thm4_construction(&sys, 2, 40, &Budget::default()).is_err());
    }

    #[test]
    fn apart_diracs_on_separated_set() {
        let sys = ShiftSpace::full(2, 4).unwrap().system().unwrap();
        let m = sys.bowen(2).unwrap();
        let found = max_separated_set(&m, 0.3, &Budget::default());
        let pts = &found.witness[0];
        let diracs: Vec<AtomicMeasure> = pts.iter().map(|&x| AtomicMeasure::dirac(x)).collect();
        let a = apart_count(&m, &diracs, 0.3, 1_000_000).unwrap();
        assert_eq!(a.count, pts.len());
        let overlap = [AtomicMeasure::uniform(&[0, 1]).unwrap(), AtomicMeasure::dirac(1)];
        assert_eq!(apart_count(&m, &overlap, 0.01, 100).unwrap().count, 1);
    }
}
