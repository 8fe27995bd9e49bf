use serde::{Deserialize, Serialize};

use super::banach::BanachCube;
use super::interval::{harmonic_set, interval_grid, unit_lattice, IntervalMap};
use super::kolyada::{Family, KolyadaSnohaMap};
use super::shift::{ShiftMetric, ShiftSpace};
use super::system::DynamicalSystem;
use crate::error::{config_error, Result};
use crate::metric_core::FiniteMetricSpace;

/// Largest Banach lattice the descriptor will materialize.
pub const MAX_BANACH_POINTS: u128 = 1 << 12;

/// Alphabet of a shift.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub enum AlphabetSpec {
    /// `m` letters at mutual distance 1.
    Discrete(usize),
    /// Points on the line.
    Line(Vec<f64>),
    /// `{k/m : 0 ≤ k ≤ m}`.
    Lattice(usize),
    /// `{0} ∪ {1/k : k ≤ m}`.
    Harmonic(usize),
    /// Full symmetric distance matrix.
    Matrix(Vec<Vec<f64>>),
}

impl AlphabetSpec {
    pub fn build(&self) -> Result<FiniteMetricSpace> {
        match self {
            AlphabetSpec::Discrete(m) => FiniteMetricSpace::discrete(*m),
            AlphabetSpec::Line(xs) => FiniteMetricSpace::from_line(xs.clone()),
            AlphabetSpec::Lattice(m) => unit_lattice(*m),
            AlphabetSpec::Harmonic(m) => harmonic_set(*m),
            AlphabetSpec::Matrix(rows) => FiniteMetricSpace::from_matrix(rows),
        }
    }
}

fn default_metric() -> ShiftMetric {
    ShiftMetric::ProductRho
}

/// JSON system description, tagged by `kind`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "camelCase", deny_unknown_fields)]
pub enum SystemDescriptor {
    Shift {
        alphabet: AlphabetSpec,
        depth: usize,
        #[serde(default)]
        tail: usize,
        #[serde(default = "default_metric")]
        metric: ShiftMetric,
    },
    #[serde(rename_all = "camelCase")]
    Kolyada {
        family: Family,
        k_max: usize,
        /// Per-block lattice denominators for the invariant net; defaults to
        /// `4·b_k` on block `k`.
        #[serde(default)]
        denominators: Option<Vec<usize>>,
    },
    Banach {
        eps: f64,
    },
    Product {
        left: Box<SystemDescriptor>,
        right: Box<SystemDescriptor>,
    },
    Power {
        base: Box<SystemDescriptor>,
        exponent: usize,
    },
    Interval {
        map: IntervalMap,
        den: usize,
    },
}

/// A resolved description: the net with its map, plus what the CLI needs to
/// know about where it came from.
#[derive(Clone, Debug)]
pub struct ResolvedSystem {
    pub system: DynamicalSystem,
    pub kolyada: Option<KolyadaSnohaMap>,
    pub banach: Option<BanachCube>,
    /// The alphabet when the system is a plain shift.
    pub alphabet: Option<FiniteMetricSpace>,
    /// Whether the non-wandering set is known to be the whole space.
    pub omega_is_whole: bool,
}

impl SystemDescriptor {
    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| config_error("system descriptor", text, &e))
    }

    pub fn resolve(&self) -> Result<ResolvedSystem> {
        let plain = |system| ResolvedSystem {
            system,
            kolyada: None,
            banach: None,
            alphabet: None,
            omega_is_whole: false,
        };
        Ok(match self {
            SystemDescriptor::Shift { alphabet, depth, tail, metric } => {
                let alph = alphabet.build()?;
                let shift = ShiftSpace::new(alph.clone(), *depth, *tail, *metric)?;
                ResolvedSystem {
                    omega_is_whole: true,
                    alphabet: Some(alph),
                    ..plain(shift.system()?)
                }
            }
            SystemDescriptor::Kolyada { family, k_max, denominators } => {
                let t = KolyadaSnohaMap::new(family.clone(), *k_max)?;
                let dens = match denominators {
                    Some(d) => d.clone(),
                    None => (1..=*k_max).map(|k| 4 * t.b(k) as usize).collect(),
                };
                ResolvedSystem { kolyada: Some(t.clone()), ..plain(t.net(&dens)?) }
            }
            SystemDescriptor::Banach { eps } => {
                let cube = BanachCube::new(*eps)?;
                let space = cube.space(MAX_BANACH_POINTS)?;
                ResolvedSystem {
                    banach: Some(cube),
                    omega_is_whole: true,
                    ..plain(DynamicalSystem::identity(format!("banach/{eps}"), space))
                }
            }
            SystemDescriptor::Product { left, right } => {
                let (a, b) = (left.resolve()?, right.resolve()?);
                ResolvedSystem {
                    omega_is_whole: a.omega_is_whole && b.omega_is_whole,
                    ..plain(DynamicalSystem::product(&a.system, &b.system)?)
                }
            }
            SystemDescriptor::Power { base, exponent } => {
                let a = base.resolve()?;
                ResolvedSystem {
                    omega_is_whole: a.omega_is_whole,
                    ..plain(a.system.power(*exponent)?)
                }
            }
            SystemDescriptor::Interval { map, den } => ResolvedSystem {
                omega_is_whole: matches!(map, IntervalMap::Identity | IntervalMap::Harmonic),
                ..plain(interval_grid(*map, *den)?)
            },
        })
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::error::Error;

    #[test]
    fn parses_each_kind() {
        let docs = [
            r#"{"kind":"shift","alphabet":{"discrete":2},"depth":4}"#,
            r#"{"kind":"shift","alphabet":{"discrete":2},"depth":6,"metric":"expBinary"}"#,
            r#"{"kind":"kolyada","family":"F3","kMax":2,"denominators":[6,10]}"#,
            r#"{"kind":"kolyada","family":{"F2":{"beta":0.5}},"kMax":2}"#,
            r#"{"kind":"banach","eps":0.5}"#,
            r#"{"kind":"interval","map":"tent","den":16}"#,
            r#"{"kind":"power","exponent":2,"base":{"kind":"interval","map":"doubling","den":8}}"#,
            r#"{"kind":"product","left":{"kind":"interval","map":"identity","den":2},
                "right":{"kind":"shift","alphabet":{"lattice":2},"depth":2}}"#,
        ];
        let sizes = [16, 64, 18, 4 * 3 + 4 * 9 + 2, 256, 17, 8, 27];
        for (doc, size) in docs.iter().zip(sizes) {
            let r = SystemDescriptor::from_json(doc).unwrap().resolve().unwrap();
            assert_eq!(r.system.size(), size, "{doc}");
        }
    }

    #[test]
    fn rejects_unknown_keys_with_position() {
        let err = SystemDescriptor::from_json("{\"kind\":\"banach\",\n\"eps\":0.5,\"extra\":1}").unwrap_err();
        assert!(matches!(&err, Error::Config(m) if m.contains("line 2")), "{err}");
        assert!(SystemDescriptor::from_json(r#"{"kind":"torus"}"#).is_err());
    }
}
