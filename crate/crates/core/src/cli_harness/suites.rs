use serde::Serialize;

use crate::error::{Error, Result};
use crate::metric_core::{
    count, max_separated, min_spanning, verify_chain, verify_subadditivity, BowenMetric, Budget, Check, CountBracket,
    Quantity, Status,
};
use crate::systems::{DynamicalSystem, ResolvedSystem, ShiftMetric, SystemDescriptor};

/// Product systems larger than this are not formed for the product suite.
pub const MAX_PRODUCT_POINTS: usize = 4096;

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Suite {
    Chain,
    Subadditivity,
    Power,
    Product,
    ShiftConstruction,
    NonWandering,
}

impl Suite {
    pub const ALL: [Suite; 6] =
        [Suite::Chain, Suite::Subadditivity, Suite::Power, Suite::Product, Suite::ShiftConstruction, Suite::NonWandering];

    pub fn name(self) -> &'static str {
        match self {
            Suite::Chain => "chain",
            Suite::Subadditivity => "subadditivity",
            Suite::Power => "power",
            Suite::Product => "product",
            Suite::ShiftConstruction => "shiftConstruction",
            Suite::NonWandering => "nonWandering",
        }
    }

    /// A suite name, or `all`.
    pub fn parse_selector(s: &str) -> Result<Vec<Suite>> {
        if s == "all" {
            return Ok(Suite::ALL.to_vec());
        }
        Suite::ALL
            .iter()
            .find(|x| x.name().eq_ignore_ascii_case(s))
            .map(|x| vec![*x])
            .ok_or_else(|| {
                let names: Vec<&str> = Suite::ALL.iter().map(|x| x.name()).collect();
                Error::Config(format!("unknown suite {s:?}; expected all or one of {}", names.join(", ")))
            })
    }
}

/// What is needed to replay a failed check.
#[derive(Clone, Debug, Serialize)]
pub struct Replay {
    pub system: serde_json::Value,
    pub horizon: usize,
    pub eps: f64,
    pub inputs: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct ReportEntry {
    #[serde(flatten)]
    pub check: Check,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub counterexample: Option<Replay>,
}

#[derive(Clone, Debug, Serialize)]
pub struct VerificationReport {
    pub suite: &'static str,
    pub system: String,
    /// Set when the suite does not apply to the system.
    #[serde(skip_serializing_if = "Option::is_none")]
    pub skipped: Option<String>,
    pub entries: Vec<ReportEntry>,
}

impl VerificationReport {
    pub fn tally(&self) -> (usize, usize, usize) {
        let n = |s| self.entries.iter().filter(|e| e.check.status == s).count();
        (n(Status::Pass), n(Status::Fail), n(Status::Inconclusive))
    }

    pub fn failed(&self) -> bool {
        self.tally().1 > 0
    }
}

/// The grid and system a suite runs on.
pub struct VerifyInput<'a> {
    pub descriptor: &'a SystemDescriptor,
    pub resolved: &'a ResolvedSystem,
    pub horizons: &'a [usize],
    pub scales: &'a [f64],
    pub budget: &'a Budget,
}

pub fn run_verify(input: &VerifyInput, suites: &[Suite]) -> Result<Vec<VerificationReport>> {
    suites.iter().map(|&s| run_suite(input, s)).collect()
}

fn leq_value(name: &str, n: usize, eps: f64, lhs: &CountBracket, rhs: Option<u128>, rhs_text: &str) -> Check {
    match (lhs.value(), rhs) {
        (Some(a), Some(b)) => Check::from_bool(name, n, eps, a <= b, format!("{a} <= {rhs_text} = {b}")),
        _ => Check {
            name: name.into(),
            horizon: n,
            scale: eps,
            status: Status::Inconclusive,
            detail: format!("[{}, {}] vs {rhs_text}", lhs.lower, lhs.upper),
        },
    }
}

fn geq_value(name: &str, n: usize, eps: f64, lhs: &CountBracket, rhs: Option<u128>, rhs_text: &str) -> Check {
    match (lhs.value(), rhs) {
        (Some(a), Some(b)) => Check::from_bool(name, n, eps, a >= b, format!("{a} >= {rhs_text} = {b}")),
        (None, Some(b)) if lhs.lower >= b => {
            Check::from_bool(name, n, eps, true, format!("lower {} >= {rhs_text} = {b}", lhs.lower))
        }
        _ => Check {
            name: name.into(),
            horizon: n,
            scale: eps,
            status: Status::Inconclusive,
            detail: format!("[{}, {}] vs {rhs_text}", lhs.lower, lhs.upper),
        },
    }
}

/// `N(ε) = ⌈log₂ ⌊4/ε⌋⌉`, the least integer with `Σ_{k > N} 2^{-k} < ε/2`
/// for `ε ≤ 2`.
pub fn tail_length(eps: f64) -> u32 {
    let q = (4.0 / eps).floor().max(1.0);
    q.log2().ceil() as u32
}

fn run_suite(input: &VerifyInput, suite: Suite) -> Result<VerificationReport> {
    let sys = &input.resolved.system;
    let descriptor = serde_json::to_value(input.descriptor).map_err(|e| Error::Format(e.to_string()))?;
    let mut skipped = None;
    let mut checks: Vec<Check> = Vec::new();
    let budget = input.budget;
    match suite {
        Suite::Chain => {
            for (k, &n) in input.horizons.iter().enumerate() {
                let m = sys.bowen(n)?;
                for &e in input.scales {
                    let cell = verify_chain(&m, e, budget);
                    // The base-metric links do not depend on n.
                    checks.extend(cell.into_iter().filter(|c| k == 0 || c.horizon == n));
                }
            }
        }
        Suite::Subadditivity => {
            let top = *input.horizons.iter().max().unwrap();
            for a in 1..top {
                for b in a..=top - a {
                    for &e in input.scales {
                        checks.push(verify_subadditivity(sys.space(), sys.map(), a, b, e, budget)?);
                    }
                }
            }
            if top < 2 {
                skipped = Some("needs a horizon of at least 2".into());
            }
        }
        Suite::Power => {
            for l in [2usize, 3] {
                let g = sys.power(l)?;
                for &n in input.horizons {
                    let (mg, mf) = (g.bowen(n)?, sys.bowen(l * n)?);
                    for &e in input.scales {
                        let lhs = max_separated(&mg, e, budget);
                        let rhs = max_separated(&mf, e, budget);
                        let name = format!("S(f^{l},n) <= S(f,{l}n)");
                        checks.push(Check::leq(&name, n, e, &lhs, &rhs));
                    }
                }
            }
        }
        Suite::Product => match product_factors(input)? {
            None => skipped = Some(format!("product would exceed {MAX_PRODUCT_POINTS} points")),
            Some((x, y, z)) => {
                for &n in input.horizons {
                    let (mx, my, mz) = (x.bowen(n)?, y.bowen(n)?, z.bowen(n)?);
                    for &e in input.scales {
                        let rz = min_spanning(&mz, e, budget);
                        let rx = min_spanning(&mx, e, budget).value();
                        let ry = min_spanning(&my, e, budget).value();
                        let rhs = rx.zip(ry).map(|(a, b)| a * b);
                        let text = format!("R(X)*R(Y) = {}*{}", opt(rx), opt(ry));
                        checks.push(leq_value("R(Z) <= R(X)*R(Y)", n, e, &rz, rhs, &text));
                    }
                }
            }
        },
        Suite::ShiftConstruction => match (&input.resolved.alphabet, input.descriptor) {
            (Some(alph), SystemDescriptor::Shift { metric: ShiftMetric::ProductRho, depth, .. }) => {
                let ma = BowenMetric::stationary(alph.clone());
                for &e in input.scales {
                    let sa = max_separated(&ma, e, budget).value();
                    let ra = min_spanning(&ma, e, budget).value();
                    let tail = tail_length(e);
                    for &n in input.horizons {
                        // Both constructions fix n + N(ε) coordinates; a
                        // shallower net does not represent them.
                        if n + tail as usize > *depth {
                            for name in ["S(shift,n) >= S(alph)^n", "R(shift,n) <= R(alph)^(n+N)"] {
                                checks.push(Check {
                                    name: name.into(),
                                    horizon: n,
                                    scale: e,
                                    status: Status::Inconclusive,
                                    detail: format!("net depth {depth} < n + N = {}", n + tail as usize),
                                });
                            }
                            continue;
                        }
                        let m = sys.bowen(n)?;
                        let s = max_separated(&m, e, budget);
                        let lower = sa.and_then(|v| v.checked_pow(n as u32));
                        let text = format!("S(alph)^n = {}^{n}", opt(sa));
                        checks.push(geq_value("S(shift,n) >= S(alph)^n", n, e, &s, lower, &text));
                        let r = min_spanning(&m, e, budget);
                        let upper = ra.map(|v| v.checked_pow(n as u32 + tail).unwrap_or(u128::MAX));
                        let text = format!("R(alph)^(n+N) = {}^({n}+{tail})", opt(ra));
                        checks.push(leq_value("R(shift,n) <= R(alph)^(n+N)", n, e, &r, upper, &text));
                    }
                }
            }
            _ => skipped = Some("needs a shift with the product metric".into()),
        },
        Suite::NonWandering => {
            if input.resolved.omega_is_whole {
                for &n in input.horizons {
                    let m = sys.bowen(n)?;
                    for &e in input.scales {
                        let wide = count(&m, Quantity::S, 2.0 * e, budget);
                        let narrow = count(&m, Quantity::S, e, budget);
                        checks.push(Check::leq("S(n,2e) <= S(n,e) on Omega", n, e, &wide, &narrow));
                    }
                }
            } else {
                skipped = Some("non-wandering set not declared".into());
            }
        }
    }
    let entries = checks
        .into_iter()
        .map(|check| {
            let counterexample = (check.status == Status::Fail).then(|| Replay {
                system: descriptor.clone(),
                horizon: check.horizon,
                eps: check.scale,
                inputs: check.detail.clone(),
            });
            ReportEntry { check, counterexample }
        })
        .collect();
    Ok(VerificationReport { suite: suite.name(), system: sys.name().to_string(), skipped, entries })
}

fn opt(v: Option<u128>) -> String {
    v.map_or("?".into(), |x| x.to_string())
}

/// `(X, Y, X × Y)`: the two factors of a product descriptor, or the system
/// with itself.
fn product_factors(input: &VerifyInput) -> Result<Option<(DynamicalSystem, DynamicalSystem, DynamicalSystem)>> {
    if let SystemDescriptor::Product { left, right } = input.descriptor {
        let (x, y) = (left.resolve()?.system, right.resolve()?.system);
        return Ok(Some((x, y, input.resolved.system.clone())));
    }
    let x = &input.resolved.system;
    if x.size().saturating_mul(x.size()) > MAX_PRODUCT_POINTS {
        return Ok(None);
    }
    Ok(Some((x.clone(), x.clone(), DynamicalSystem::product(x, x)?)))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn tail_length_sums() {
        for e in [0.9, 0.5, 0.3, 0.1, 0.01] {
            let n = tail_length(e) as i32;
            assert!(0.5f64.powi(n) < e / 2.0, "{e}");
        }
        assert_eq!(tail_length(0.5), 3);
    }

    #[test]
    fn suites_pass_on_small_shift() {
        let d = SystemDescriptor::from_json(r#"{"kind":"shift","alphabet":{"discrete":2},"depth":5}"#).unwrap();
        let r = d.resolve().unwrap();
        let input = VerifyInput {
            descriptor: &d,
            resolved: &r,
            horizons: &[1, 2],
            scales: &[0.3, 0.2],
            budget: &Budget::default(),
        };
        for rep in run_verify(&input, &Suite::ALL).unwrap() {
            assert!(!rep.failed(), "{}", serde_json::to_string(&rep).unwrap());
        }
        assert!(Suite::parse_selector("bogus").is_err());
    }
}
