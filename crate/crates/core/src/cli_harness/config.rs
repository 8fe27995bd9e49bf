use std::path::{Path, PathBuf};

use serde::Deserialize;

use crate::error::{config_error, Error, Result};
use crate::estimators::FitConfig;
use crate::measures::{AtomicMeasure, MetricKind, QuantBudget};
use crate::metric_core::{Budget, Quantity, ScaleGrid};
use crate::systems::SystemDescriptor;

/// Scale grid of an experiment.
#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub enum GridSpec {
    /// `start · ratio^i`, `i < count`; `tieFree` multiplies by the tie offset.
    #[serde(rename_all = "camelCase")]
    Geometric {
        start: f64,
        ratio: f64,
        count: usize,
        #[serde(default)]
        tie_free: bool,
    },
    /// Geometric from `hi` down to `lo`.
    Spanning { hi: f64, lo: f64, count: usize },
    Values(Vec<f64>),
}

impl GridSpec {
    pub fn values(&self) -> Result<Vec<f64>> {
        let v = match self {
            GridSpec::Geometric { start, ratio, count, tie_free: false } => ScaleGrid::new(*start, *ratio, *count)?.values(),
            GridSpec::Geometric { start, ratio, count, tie_free: true } => {
                ScaleGrid::tie_free(*start, *ratio, *count)?.values()
            }
            GridSpec::Spanning { hi, lo, count } => ScaleGrid::spanning(*hi, *lo, *count)?.values(),
            GridSpec::Values(v) => v.clone(),
        };
        if v.is_empty() || v.iter().any(|e| !(*e > 0.0) || !e.is_finite()) {
            return Err(Error::Config("grid must hold positive finite scales".into()));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub enum HorizonSpec {
    /// `from..=to`.
    Range { from: usize, to: usize },
    List(Vec<usize>),
}

impl HorizonSpec {
    pub fn values(&self) -> Result<Vec<usize>> {
        let v: Vec<usize> = match self {
            HorizonSpec::Range { from, to } => (*from..=*to).collect(),
            HorizonSpec::List(v) => v.clone(),
        };
        if v.is_empty() || v.contains(&0) {
            return Err(Error::Config("horizons must be a nonempty list of positive integers".into()));
        }
        Ok(v)
    }
}

#[derive(Clone, Debug, Default, PartialEq, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields, default)]
pub struct Budgets {
    pub counts: Budget,
    pub quantization: QuantBudget,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct Outputs {
    #[serde(default = "default_out")]
    pub dir: PathBuf,
    /// Store the distance matrix of the resolved net and reuse it on rerun.
    #[serde(default = "yes")]
    pub cache: bool,
}

impl Default for Outputs {
    fn default() -> Self {
        Outputs { dir: default_out(), cache: true }
    }
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

fn yes() -> bool {
    true
}

/// How counts of an accumulating-horseshoe map are obtained.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Method {
    /// Exact counts on the resolved net.
    #[default]
    Net,
    /// Certified symbolic bracket on `S` (Kolyada systems only).
    Symbolic,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct QuantizeSpec {
    pub kind: MetricKind,
    /// `{"atoms": [...], "weights": [...]}`; weights given as strings are
    /// kept exact.
    pub measure: serde_json::Value,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ExperimentConfig {
    pub system: SystemDescriptor,
    pub quantities: Vec<String>,
    pub grid: GridSpec,
    pub horizons: HorizonSpec,
    #[serde(default)]
    pub budgets: Budgets,
    #[serde(default)]
    pub outputs: Outputs,
    pub seed: u64,
    #[serde(default)]
    pub method: Method,
    /// Regression settings for `h_ε` in `n`.
    #[serde(default)]
    pub rate_fit: FitConfig,
    /// Regression settings across scales.
    #[serde(default = "FitConfig::full")]
    pub scale_fit: FitConfig,
    #[serde(default)]
    pub quantize: Option<QuantizeSpec>,
    /// Grid for `verify`, when it should differ from the sweep grid.
    #[serde(default)]
    pub verify: Option<VerifySpec>,
}

#[derive(Clone, Debug, PartialEq, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct VerifySpec {
    #[serde(default)]
    pub horizons: Option<HorizonSpec>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let cfg: ExperimentConfig =
            serde_json::from_str(text).map_err(|e| config_error("experiment config", text, &e))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    fn validate(&self) -> Result<()> {
        if self.quantities.is_empty() {
            return Err(Error::Config("quantities must not be empty".into()));
        }
        self.quantity_list()?;
        self.grid.values()?;
        self.horizons.values()?;
        let b = &self.budgets.counts;
        if b.nodes == 0 || b.max_component == 0 || b.max_cliques == 0 || b.max_graph == 0 {
            return Err(Error::Config("count budgets must be positive".into()));
        }
        if self.budgets.quantization.nodes == 0 || self.budgets.quantization.restarts == 0 {
            return Err(Error::Config("quantization budgets must be positive".into()));
        }
        if self.method == Method::Symbolic && !matches!(self.system, SystemDescriptor::Kolyada { .. }) {
            return Err(Error::Config("method \"symbolic\" needs a kolyada system".into()));
        }
        if let Some(v) = &self.verify {
            if let Some(h) = &v.horizons {
                h.values()?;
            }
            if let Some(g) = &v.grid {
                g.values()?;
            }
        }
        if let Some(q) = &self.quantize {
            q.kind.validate().map_err(|e| Error::Config(e.to_string()))?;
            self.measure()?;
        }
        Ok(())
    }

    pub fn quantity_list(&self) -> Result<Vec<Quantity>> {
        self.quantities
            .iter()
            .map(|q| Quantity::parse(q).map_err(|e| Error::Config(e.to_string())))
            .collect()
    }

    pub fn measure(&self) -> Result<Option<AtomicMeasure>> {
        match &self.quantize {
            None => Ok(None),
            Some(q) => AtomicMeasure::from_json(&q.measure.to_string())
                .map(Some)
                .map_err(|e| Error::Config(format!("quantize.measure: {e}"))),
        }
    }

    /// Horizons and scales for the verification suites.
    pub fn verify_grid(&self) -> Result<(Vec<usize>, Vec<f64>)> {
        let v = self.verify.as_ref();
        let h = match v.and_then(|v| v.horizons.as_ref()) {
            Some(h) => h.values()?,
            None => self.horizons.values()?,
        };
        let g = match v.and_then(|v| v.grid.as_ref()) {
            Some(g) => g.values()?,
            None => self.grid.values()?,
        };
        Ok((h, g))
    }

    /// Applies `--budget` and `--seed`.
    pub fn override_with(&mut self, budget: Option<u64>, seed: Option<u64>) {
        if let Some(n) = budget {
            self.budgets.counts.nodes = n;
            self.budgets.quantization.nodes = n;
        }
        if let Some(s) = seed {
            self.seed = s;
        }
        self.budgets.quantization.seed = self.seed;
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const BASE: &str = r#"{
  "system": {"kind": "shift", "alphabet": {"discrete": 2}, "depth": 6},
  "quantities": ["S"],
  "grid": {"values": [0.3, 0.2]},
  "horizons": {"range": {"from": 1, "to": 3}},
  "seed": 7
}"#;

    #[test]
    fn parses_minimal() {
        let c = ExperimentConfig::from_json(BASE).unwrap();
        assert_eq!(c.horizons.values().unwrap(), vec![1, 2, 3]);
        assert_eq!(c.quantity_list().unwrap(), vec![Quantity::S]);
        assert!(c.outputs.cache);
    }

    #[test]
    fn empty_quantities_is_config_error() {
        let bad = BASE.replace(r#"["S"]"#, "[]");
        assert!(matches!(ExperimentConfig::from_json(&bad), Err(Error::Config(_))));
    }

    #[test]
    fn unknown_key_has_line() {
        let bad = BASE.replace("\"seed\": 7", "\"seed\": 7,\n  \"sead\": 8");
        let err = ExperimentConfig::from_json(&bad).unwrap_err().to_string();
        assert!(err.contains("line 7"), "{err}");
    }
}
