use serde::{Deserialize, Serialize};

use super::system::DynamicalSystem;
use crate::error::{Error, Result};
use crate::metric_core::FiniteMetricSpace;

/// Parameter families for the accumulating-horseshoe interval maps.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub enum Family {
    /// `a_k = Σ_{n≤k} 6/(π² n²)`, `b_k = 3^k`.
    F1,
    /// `a_k = Σ_{n≤k} C(β) 3^{n(1−1/β)}` normalized to converge to 1, `b_k = 3^k`.
    F2 { beta: f64 },
    /// `a_k = 1 − 2^{−k}`, `b_k = 2k + 1`.
    F3,
    /// Explicit `a_1..a_K` and odd `b_1..b_K`.
    Custom { a: Vec<f64>, b: Vec<u64> },
}

/// `(a_k, b_k, ε_k)` for `k ≥ 1`, with `ε_k = (a_k − a_{k−1}) / b_k`.
pub fn family_sequences(family: &Family, k: usize) -> Result<(f64, u64, f64)> {
    if k == 0 {
        return Err(Error::Parameter("k starts at 1".into()));
    }
    let a = |j: usize| -> Result<f64> {
        if j == 0 {
            return Ok(0.0);
        }
        Ok(match family {
            Family::F1 => {
                let c = 6.0 / (std::f64::consts::PI * std::f64::consts::PI);
                (1..=j).map(|n| c / (n * n) as f64).sum()
            }
            Family::F2 { beta } => {
                if !(*beta > 0.0 && *beta < 1.0) {
                    return Err(Error::Parameter(format!("beta must lie in (0, 1), got {beta}")));
                }
                let r = 3f64.powf(1.0 - 1.0 / beta);
                let c = (1.0 - r) / r;
                (1..=j).map(|n| c * r.powi(n as i32)).sum()
            }
            Family::F3 => 1.0 - 0.5f64.powi(j as i32),
            Family::Custom { a, .. } => *a
                .get(j - 1)
                .ok_or_else(|| Error::Parameter(format!("custom family has no a_{j}")))?,
        })
    };
    let b = match family {
        Family::F1 | Family::F2 { .. } => 3u64
            .checked_pow(k as u32)
            .ok_or_else(|| Error::Parameter(format!("3^{k} overflows")))?,
        Family::F3 => 2 * k as u64 + 1,
        Family::Custom { b, .. } => *b
            .get(k - 1)
            .ok_or_else(|| Error::Parameter(format!("custom family has no b_{k}")))?,
    };
    let (ak, ak1) = (a(k)?, a(k - 1)?);
    Ok((ak, b, (ak - ak1) / b as f64))
}

/// Triangle wave `Φ` of period 2 on integer units of `1/q`.
#[inline]
pub fn fold_units(t: i128, q: i128) -> i128 {
    let s = t.rem_euclid(2 * q);
    if s <= q {
        s
    } else {
        2 * q - s
    }
}

/// The full `b`-branch piecewise-affine map `f_b(x) = Φ(b x)` on `[0, 1]`,
/// increasing on its first branch; `b` odd gives `f_b(1) = 1`.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Zigzag {
    pub b: u64,
}

/// Cell cap for the symbolic count models.
pub const MAX_CELLS: usize = 1 << 22;

impl Zigzag {
    pub fn eval(&self, x: f64) -> f64 {
        let t = (self.b as f64 * x).rem_euclid(2.0);
        if t <= 1.0 {
            t
        } else {
            2.0 - t
        }
    }

    /// `f_b(p/q)` as a numerator over the same `q`.
    pub fn eval_units(&self, p: i128, q: i128) -> i128 {
        fold_units(self.b as i128 * p, q)
    }

    /// Number of maximal intervals on which `f_b^n` is monotone and onto
    /// `[0, 1]`, found by exact evaluation on the lattice `{i/b^n}`.
    pub fn full_branches(&self, n: u32) -> usize {
        let q = (self.b as i128).pow(n);
        let image = |p: i128| -> i128 {
            let mut v = p;
            for _ in 0..n {
                v = self.eval_units(v, q);
            }
            v
        };
        (0..q)
            .filter(|&i| {
                let (l, r) = (image(i), image(i + 1));
                (l == 0 && r == q) || (l == q && r == 0)
            })
            .count()
    }

    /// Certified bounds `lower ≤ S(f_b, n, ε) ≤ Cov(f_b, n, ε) ≤ upper` for
    /// `n = 1..=n_max`, at scale `eps` of the unit interval.
    ///
    /// Lower bounds come from two explicit separated families: orbits that
    /// only visit branches spaced more than ε apart, and orbits through the
    /// cells of a fine Markov partition that avoid cells touching a fold,
    /// ending in every other cell. Upper bounds count closed Markov cells of
    /// diameter below ε along orbits.
    pub fn bracket(&self, eps: f64, n_max: usize) -> Result<Vec<(u128, u128)>> {
        if !(eps > 0.0) {
            return Err(Error::Parameter("scale must be positive".into()));
        }
        let b = self.b as u128;
        let bu = self.b as usize;
        let mut out = Vec::with_capacity(n_max);

        // Sub-cylinders of d_n-diameter 1/(b r) < ε.
        let r = (1.0 / (self.b as f64 * eps)).floor() as u128 + 1;
        let mut upper = Vec::with_capacity(n_max);
        let mut pw: u128 = b;
        for _ in 0..n_max {
            upper.push(if eps > 1.0 { 1 } else { pw.checked_mul(r).ok_or_else(ovf)? });
            pw = pw.checked_mul(b).ok_or_else(ovf)?;
        }
        let mu = (1.0 / eps).floor() as usize + 1;
        if eps <= 1.0 && mu <= 4096 {
            for (u, t) in upper.iter_mut().zip(self.touching_paths(mu, n_max)?) {
                *u = (*u).min(t);
            }
        }

        let g = (self.b as f64 * eps).floor() as u64 + 2;
        let spaced = self.b.div_ceil(g) as u128;
        let mut lower = Vec::with_capacity(n_max);
        let mut pw: u128 = 1;
        for _ in 0..n_max {
            pw = pw.checked_mul(spaced).ok_or_else(ovf)?;
            lower.push(pw);
        }
        let m_f = (1.0 / (self.b as f64 * eps)).ceil() - 1.0;
        if m_f >= 2.0 {
            let m = (m_f as usize).min(MAX_CELLS / bu).max(2);
            for (l, w) in lower.iter_mut().zip(self.fold_free_paths(m, n_max)?) {
                *l = (*l).max(w);
            }
        }
        for (l, u) in lower.into_iter().zip(upper) {
            out.push((l.max(1), u.max(l)));
        }
        Ok(out)
    }

    /// Paths through the closed uniform `M`-cell partition (cells may touch).
    fn touching_paths(&self, m: usize, n_max: usize) -> Result<Vec<u128>> {
        let (mi, bi) = (m as i128, self.b as i128);
        let mut lo = Vec::with_capacity(m);
        let mut hi = Vec::with_capacity(m);
        for c in 0..mi {
            let (s0, s1) = (bi * c, bi * c + bi);
            let mut vals = vec![fold_units(s0, mi), fold_units(s1, mi)];
            let mut k = s0.div_euclid(mi) + 1;
            while k * mi < s1 {
                vals.push(fold_units(k * mi, mi));
                k += 1;
            }
            let (l, h) = (*vals.iter().min().unwrap(), *vals.iter().max().unwrap());
            lo.push((l - 1).max(0) as usize);
            hi.push(h.min(mi - 1) as usize);
        }
        let mut v = vec![1u128; m];
        let mut out = Vec::with_capacity(n_max);
        for step in 0..n_max {
            if step > 0 {
                v = ranges_to_values(&lo, &hi, &v, m)?;
            }
            out.push(v.iter().try_fold(0u128, |a, &x| a.checked_add(x)).ok_or_else(ovf)?);
        }
        Ok(out)
    }

    /// Orbits through the `b·m`-cell partition avoiding cells that touch an
    /// interior fold, ending in an even-indexed cell.
    fn fold_free_paths(&self, m: usize, n_max: usize) -> Result<Vec<u128>> {
        let b = self.b as usize;
        let total = b * m;
        let mut allowed = vec![true; total];
        for beta in 0..b {
            if beta > 0 {
                allowed[beta * m] = false;
            }
            if beta + 1 < b {
                allowed[beta * m + m - 1] = false;
            }
        }
        let mut v: Vec<u128> = allowed.iter().map(|&a| a as u128).collect();
        let mut out = Vec::with_capacity(n_max);
        for step in 0..n_max {
            if step > 0 {
                let mut add = vec![0u128; total + 1];
                let mut sub = vec![0u128; total + 1];
                for (c, &x) in v.iter().enumerate() {
                    if x == 0 {
                        continue;
                    }
                    let (beta, l) = (c / m, c % m);
                    let start = if beta % 2 == 0 { l * b } else { (m - 1 - l) * b };
                    add[start] = add[start].checked_add(x).ok_or_else(ovf)?;
                    sub[start + b] = sub[start + b].checked_add(x).ok_or_else(ovf)?;
                }
                let mut run: u128 = 0;
                for d in 0..total {
                    run = run.checked_add(add[d]).ok_or_else(ovf)? - sub[d];
                    v[d] = if allowed[d] { run } else { 0 };
                }
            }
            let s = v
                .iter()
                .enumerate()
                .filter(|(c, _)| c % 2 == 0)
                .try_fold(0u128, |a, (_, &x)| a.checked_add(x))
                .ok_or_else(ovf)?;
            out.push(s);
        }
        Ok(out)
    }
}

fn ovf() -> Error {
    Error::SizeLimit("symbolic count overflows u128".into())
}

/// `v'[d] = Σ_{c : lo[c] ≤ d ≤ hi[c]} v[c]`.
fn ranges_to_values(lo: &[usize], hi: &[usize], v: &[u128], m: usize) -> Result<Vec<u128>> {
    let mut add = vec![0u128; m + 1];
    let mut sub = vec![0u128; m + 1];
    for c in 0..lo.len() {
        add[lo[c]] = add[lo[c]].checked_add(v[c]).ok_or_else(ovf)?;
        sub[hi[c] + 1] = sub[hi[c] + 1].checked_add(v[c]).ok_or_else(ovf)?;
    }
    let mut run: u128 = 0;
    let mut out = vec![0u128; m];
    for d in 0..m {
        run = run.checked_add(add[d]).ok_or_else(ovf)? - sub[d];
        out[d] = run;
    }
    Ok(out)
}

/// The interval map built from `b_k`-branch horseshoes on the blocks
/// `J_k = [a_{k−1}, a_k]`, realized for `k ≤ k_max`; `T(1) = 1`.
#[derive(Clone, Debug)]
pub struct KolyadaSnohaMap {
    family: Family,
    a: Vec<f64>,
    b: Vec<u64>,
}

impl KolyadaSnohaMap {
    pub fn new(family: Family, k_max: usize) -> Result<Self> {
        if k_max == 0 {
            return Err(Error::Parameter("k_max must be at least 1".into()));
        }
        let mut a = vec![0.0];
        let mut b = Vec::new();
        for k in 1..=k_max {
            let (ak, bk, _) = family_sequences(&family, k)?;
            a.push(ak);
            b.push(bk);
        }
        for k in 1..=k_max {
            if !(a[k] > a[k - 1]) || !(a[k] < 1.0) {
                return Err(Error::Parameter(format!("a_k must increase strictly inside [0, 1) (k = {k})")));
            }
            if k >= 2 && !(a[k] - a[k - 1] < a[k - 1] - a[k - 2]) {
                return Err(Error::Parameter(format!("block lengths must decrease (k = {k})")));
            }
            if b[k - 1] % 2 == 0 || (k >= 2 && b[k - 1] <= b[k - 2]) {
                return Err(Error::Parameter(format!("b_k must be odd and strictly increasing (k = {k})")));
            }
        }
        Ok(KolyadaSnohaMap { family, a, b })
    }

    pub fn family(&self) -> &Family {
        &self.family
    }

    pub fn k_max(&self) -> usize {
        self.b.len()
    }

    /// `a_k` for `0 ≤ k ≤ k_max`.
    pub fn a(&self, k: usize) -> f64 {
        self.a[k]
    }

    pub fn b(&self, k: usize) -> u64 {
        self.b[k - 1]
    }

    pub fn block_len(&self, k: usize) -> f64 {
        self.a[k] - self.a[k - 1]
    }

    /// Injectivity-domain length `|J_k| / b_k`.
    pub fn eps(&self, k: usize) -> f64 {
        self.block_len(k) / self.b(k) as f64
    }

    pub fn block(&self, k: usize) -> Zigzag {
        Zigzag { b: self.b(k) }
    }

    /// `T(x)`, with `T = T_k^{-1} ∘ f_{b_k} ∘ T_k` on `J_k`.
    pub fn tab_eval(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Parameter(format!("{x} is outside [0, 1]")));
        }
        if x == 1.0 {
            return Ok(1.0);
        }
        let k = (1..=self.k_max())
            .find(|&k| x <= self.a[k])
            .ok_or(Error::OutOfRealization(x))?;
        let len = self.block_len(k);
        let u = ((x - self.a[k - 1]) / len).clamp(0.0, 1.0);
        Ok(self.a[k - 1] + self.block(k).eval(u) * len)
    }

    /// Invariant net: on each block the lattice `a_{k−1} + (i/D_k)|J_k|`,
    /// plus the fixed point 1.
    pub fn net(&self, dens: &[usize]) -> Result<DynamicalSystem> {
        let kk = self.k_max();
        if dens.len() != kk || dens.contains(&0) {
            return Err(Error::Parameter(format!("need {kk} positive block denominators")));
        }
        let mut offset = vec![0usize; kk + 1];
        for k in 1..=kk {
            offset[k] = offset[k - 1] + dens[k - 1];
        }
        // Global index of lattice point i of block k (1-based k).
        let index = |k: usize, i: usize| -> usize {
            if i == 0 {
                if k == 1 {
                    0
                } else {
                    offset[k - 1]
                }
            } else {
                offset[k - 1] + i
            }
        };
        let total = offset[kk] + 2;
        let mut xs = vec![0.0; total];
        let mut map = vec![0usize; total];
        for k in 1..=kk {
            let d = dens[k - 1];
            let z = self.block(k);
            for i in 1..=d {
                let g = index(k, i);
                xs[g] = self.a[k - 1] + (i as f64 / d as f64) * self.block_len(k);
                let j = z.eval_units(i as i128, d as i128) as usize;
                map[g] = index(k, j);
            }
        }
        xs[total - 1] = 1.0;
        map[total - 1] = total - 1;
        let space = FiniteMetricSpace::from_line(xs)?;
        DynamicalSystem::new(format!("kolyada{}", self.k_max()), space, map)
    }

    /// Bounds on `S(T, n, ε)` over the realized blocks and the point 1:
    /// `max_k lower_k ≤ S ≤ Cov ≤ 1 + Σ_k upper_k`.
    pub fn bracket(&self, eps: f64, n_max: usize) -> Result<Vec<(u128, u128)>> {
        let mut lower = vec![1u128; n_max];
        let mut upper = vec![1u128; n_max];
        for k in 1..=self.k_max() {
            let bk = self.block(k).bracket(eps / self.block_len(k), n_max)?;
            for (n, (l, u)) in bk.into_iter().enumerate() {
                lower[n] = lower[n].max(l);
                upper[n] = upper[n].checked_add(u).ok_or_else(ovf)?;
            }
        }
        Ok(lower.into_iter().zip(upper).collect())
    }

    /// Per-scale bounds on block `J_k` alone.
    pub fn horseshoe_entropy_probe(
        &self,
        k: usize,
        eps_grid: &[f64],
        n_max: usize,
    ) -> Result<Vec<(f64, Vec<(u128, u128)>)>> {
        if k == 0 || k > self.k_max() {
            return Err(Error::Parameter(format!("block {k} is not realized")));
        }
        eps_grid
            .iter()
            .map(|&e| Ok((e, self.block(k).bracket(e / self.block_len(k), n_max)?)))
            .collect()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_values() {
        let (a1, b1, e1) = family_sequences(&Family::F1, 1).unwrap();
        let pi2 = std::f64::consts::PI.powi(2);
        assert!((a1 - 6.0 / pi2).abs() < 1e-15);
        assert_eq!(b1, 3);
        assert!((e1 - a1 / 3.0).abs() < 1e-15);
        let (a2, _, _) = family_sequences(&Family::F2 { beta: 0.5 }, 2).unwrap();
        assert!((a2 - (1.0 - 1.0 / 9.0)).abs() < 1e-15);
        assert!(family_sequences(&Family::F2 { beta: 1.5 }, 1).is_err());
        assert_eq!(family_sequences(&Family::F3, 3).unwrap().1, 7);
    }

    #[test]
    fn ratio_trends() {
        // log b_k / log(1/ε_k) approaches β for F2 and 1 for F1.
        let ratio = |f: &Family, k: usize| {
            let (_, b, e) = family_sequences(f, k).unwrap();
            (b as f64).ln() / (1.0 / e).ln()
        };
        let f2 = Family::F2 { beta: 0.5 };
        assert!((ratio(&f2, 30) - 0.5).abs() < 0.02);
        assert!(ratio(&Family::F1, 30) > ratio(&Family::F1, 10));
        assert!(ratio(&Family::F1, 40) > 0.8);
    }

    #[test]
    fn tab_eval_examples() {
        let t = KolyadaSnohaMap::new(Family::F1, 3).unwrap();
        assert_eq!(t.tab_eval(1.0).unwrap(), 1.0);
        for k in 1..=3 {
            let x = t.a(k - 1);
            assert!((t.tab_eval(x).unwrap() - x).abs() < 1e-15);
        }
        let x = t.a(0) + t.block_len(1) / 6.0;
        let want = t.a(0) + 0.5 * t.block_len(1);
        assert!((t.tab_eval(x).unwrap() - want).abs() < 1e-15);
        assert!(matches!(t.tab_eval(0.999), Err(Error::OutOfRealization(_))));
    }

    #[test]
    fn standing_conditions_checked() {
        let bad = Family::Custom { a: vec![0.3, 0.9], b: vec![3, 5] };
        assert!(KolyadaSnohaMap::new(bad, 2).is_err());
        let even = Family::Custom { a: vec![0.5, 0.7], b: vec![3, 4] };
        assert!(KolyadaSnohaMap::new(even, 2).is_err());
        assert!(KolyadaSnohaMap::new(Family::F3, 5).is_ok());
    }

    #[test]
    fn full_branches_count() {
        for b in [3u64, 5, 7, 9] {
            let z = Zigzag { b };
            let top = if b <= 5 { 6 } else { 5 };
            for n in 1..=top {
                assert_eq!(z.full_branches(n) as u64, b.pow(n));
            }
        }
    }

    #[test]
    fn net_is_invariant_and_matches_tab_eval() {
        let t = KolyadaSnohaMap::new(Family::F3, 3).unwrap();
        let sys = t.net(&[30, 25, 21]).unwrap();
        let xs = sys.space().line().unwrap().to_vec();
        for i in 0..sys.size() {
            let want = t.tab_eval(xs[i]).unwrap();
            assert!((xs[sys.image(i)] - want).abs() < 1e-12, "point {i}");
        }
    }

    #[test]
    fn bracket_contains_lattice_counts() {
        use crate::metric_core::{count, Budget, Quantity};
        // On a fine invariant lattice the net counts satisfy S_net ≤ S ≤ upper;
        // the explicit lower families live on the lattice when it refines them.
        for (b, eps) in [(3u64, 0.07), (5, 0.03), (3, 0.3)] {
            let den = 2 * 3 * 5 * 7 * 11 * 3;
            let xs: Vec<f64> = (0..=den).map(|i| i as f64 / den as f64).collect();
            let z = Zigzag { b };
            let map = (0..=den).map(|i| z.eval_units(i as i128, den as i128) as usize).collect();
            let net = DynamicalSystem::new("zz", FiniteMetricSpace::from_line(xs).unwrap(), map).unwrap();
            let br = z.bracket(eps, 3).unwrap();
            for n in 1..=3 {
                let s = count(&net.bowen(n).unwrap(), Quantity::S, eps, &Budget::default());
                let (lo, hi) = br[n - 1];
                assert!(s.upper <= hi, "b={b} eps={eps} n={n}: S_net {} > upper {hi}", s.upper);
                assert!(lo <= s.upper, "b={b} eps={eps} n={n}: lower {lo} > S_net {}", s.upper);
            }
        }
    }
}
