use std::fmt::Write as _;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::metric_core::{count, Budget, CountBracket, Mode, Quantity};
use crate::systems::{DynamicalSystem, KolyadaSnohaMap};

/// One `(n, ε)` cell. Counts are kept as logarithms so that brackets far
/// beyond `u128` (the Banach lattice) fit in the same table.
#[derive(Clone, Debug, PartialEq)]
pub struct SweepRow {
    pub horizon: usize,
    pub eps: f64,
    pub ln_lower: f64,
    pub ln_upper: f64,
    pub lower: Option<u128>,
    pub upper: Option<u128>,
    pub mode: Mode,
}

impl SweepRow {
    pub fn from_bracket(b: &CountBracket) -> Self {
        SweepRow {
            horizon: b.horizon,
            eps: b.scale,
            ln_lower: (b.lower as f64).ln(),
            ln_upper: (b.upper as f64).ln(),
            lower: Some(b.lower),
            upper: Some(b.upper),
            mode: b.mode,
        }
    }

    pub fn from_ln(horizon: usize, eps: f64, ln_lower: f64, ln_upper: f64) -> Self {
        SweepRow { horizon, eps, ln_lower, ln_upper, lower: None, upper: None, mode: Mode::Heuristic }
    }

    /// Exact cells: the bracket closes.
    pub fn is_exact(&self) -> bool {
        match (self.lower, self.upper) {
            (Some(l), Some(u)) => l == u,
            _ => false,
        }
    }
}

/// A full `(n, ε)` grid of one count for one system.
#[derive(Clone, Debug, PartialEq)]
pub struct ScaleSweep {
    pub system: String,
    pub quantity: Quantity,
    /// Distance used, e.g. `"d_n"` or `"W1,n"`.
    pub metric: String,
    pub horizons: Vec<usize>,
    pub scales: Vec<f64>,
    /// Row-major: horizons outer, scales inner.
    pub rows: Vec<SweepRow>,
}

impl ScaleSweep {
    pub fn new(
        system: impl Into<String>,
        quantity: Quantity,
        metric: impl Into<String>,
        horizons: Vec<usize>,
        scales: Vec<f64>,
        rows: Vec<SweepRow>,
    ) -> Result<Self> {
        if horizons.is_empty() || scales.is_empty() {
            return Err(Error::Parameter("a sweep needs horizons and scales".into()));
        }
        if rows.len() != horizons.len() * scales.len() {
            return Err(Error::Shape(format!(
                "{} rows for a {}×{} grid",
                rows.len(),
                horizons.len(),
                scales.len()
            )));
        }
        for (k, r) in rows.iter().enumerate() {
            if r.horizon != horizons[k / scales.len()] || r.eps != scales[k % scales.len()] {
                return Err(Error::Shape(format!("row {k} is out of grid order")));
            }
        }
        Ok(ScaleSweep {
            system: system.into(),
            quantity,
            metric: metric.into(),
            horizons,
            scales,
            rows,
        })
    }

    /// Counts from `metric_core` on every cell; cells run in parallel and
    /// are collected in grid order.
    pub fn compute(
        sys: &DynamicalSystem,
        quantity: Quantity,
        horizons: &[usize],
        scales: &[f64],
        budget: &Budget,
    ) -> Result<Self> {
        let metrics = horizons.iter().map(|&n| sys.bowen(n)).collect::<Result<Vec<_>>>()?;
        let cells: Vec<(usize, usize)> =
            (0..horizons.len()).flat_map(|h| (0..scales.len()).map(move |s| (h, s))).collect();
        let rows = cells
            .par_iter()
            .map(|&(h, s)| SweepRow::from_bracket(&count(&metrics[h], quantity, scales[s], budget)))
            .collect();
        Self::new(sys.name(), quantity, "d_n", horizons.to_vec(), scales.to_vec(), rows)
    }

    /// Certified symbolic bracket on `S` for an accumulating-horseshoe map.
    pub fn kolyada(t: &KolyadaSnohaMap, n_max: usize, scales: &[f64]) -> Result<Self> {
        let per_scale = scales.iter().map(|&e| t.bracket(e, n_max)).collect::<Result<Vec<_>>>()?;
        let mut rows = Vec::with_capacity(n_max * scales.len());
        for n in 1..=n_max {
            for (s, &e) in scales.iter().enumerate() {
                let (lo, hi) = per_scale[s][n - 1];
                rows.push(SweepRow::from_bracket(&CountBracket {
                    quantity: Quantity::S,
                    horizon: n,
                    scale: e,
                    lower: lo,
                    upper: hi,
                    mode: if lo == hi { Mode::Exact } else { Mode::Heuristic },
                }));
            }
        }
        let name = format!("kolyada/{:?}/k{}", t.family(), t.k_max());
        Self::new(name, Quantity::S, "d_n", (1..=n_max).collect(), scales.to_vec(), rows)
    }

    pub fn row(&self, h: usize, s: usize) -> &SweepRow {
        &self.rows[h * self.scales.len() + s]
    }

    /// Rows at one horizon, in scale order.
    pub fn at_horizon(&self, n: usize) -> Option<&[SweepRow]> {
        let h = self.horizons.iter().position(|&x| x == n)?;
        let w = self.scales.len();
        Some(&self.rows[h * w..(h + 1) * w])
    }

    /// Rows at one scale, in horizon order.
    pub fn at_scale(&self, s: usize) -> Vec<&SweepRow> {
        (0..self.horizons.len()).map(|h| self.row(h, s)).collect()
    }

    /// Brackets must allow a count nondecreasing in `n` and nonincreasing
    /// in `ε`; returns the offending cells.
    pub fn monotonicity_violations(&self) -> Vec<(usize, f64)> {
        let mut bad = Vec::new();
        let slack = 1e-12;
        for h in 0..self.horizons.len() {
            for s in 0..self.scales.len() {
                let r = self.row(h, s);
                if h + 1 < self.horizons.len() && self.horizons[h + 1] > self.horizons[h] {
                    let next = self.row(h + 1, s);
                    if r.ln_lower > next.ln_upper + slack {
                        bad.push((r.horizon, r.eps));
                    }
                }
                if s + 1 < self.scales.len() {
                    let other = self.row(h, s + 1);
                    let (small, large) = if self.scales[s + 1] < self.scales[s] { (other, r) } else { (r, other) };
                    if large.ln_lower > small.ln_upper + slack {
                        bad.push((r.horizon, r.eps));
                    }
                }
            }
        }
        bad
    }

    /// CSV with columns `system,quantity,metric,n,eps,lower,upper,ln_lower,ln_upper,mode`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("system,quantity,metric,n,eps,lower,upper,ln_lower,ln_upper,mode\n");
        let opt = |x: Option<u128>| x.map_or(String::new(), |v| v.to_string());
        for r in &self.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{},{},{}",
                csv_field(&self.system),
                self.quantity.tag(),
                self.metric,
                r.horizon,
                r.eps,
                opt(r.lower),
                opt(r.upper),
                r.ln_lower,
                r.ln_upper,
                r.mode.tag()
            );
        }
        out
    }
}

/// Quotes fields holding commas or quotes.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
