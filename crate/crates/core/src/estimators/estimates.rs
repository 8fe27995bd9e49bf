use super::slope::{envelope, fit_slope, FitConfig, SlopeEstimate};
use super::sweep::{csv_field, ScaleSweep, SweepRow};
use crate::error::{Error, Result};
use crate::measures::{log_log, QuantizationReport};
use crate::metric_core::Mode;

/// `log⁺ t = max(0, ln t)`.
pub fn log_plus(t: f64) -> f64 {
    if t > 1.0 {
        t.ln()
    } else {
        0.0
    }
}

/// Lower and upper fits of `ln count` against `n` at scale index `s`.
/// Exact cells are used alone when there are at least four of them.
fn rate_fits(sw: &ScaleSweep, s: usize, cfg: &FitConfig) -> Result<(SlopeEstimate, SlopeEstimate, bool)> {
    let rows = sw.at_scale(s);
    let exact: Vec<&&SweepRow> = rows.iter().filter(|r| r.is_exact()).collect();
    if exact.len() >= 4 {
        let pts: Vec<(f64, f64)> = exact.iter().map(|r| (r.horizon as f64, r.ln_lower)).collect();
        let mut est = fit_slope(&pts, cfg)?;
        if exact.len() < rows.len() {
            est.flagged = true;
            est.note = format!("{} non-exact horizons left out", rows.len() - exact.len());
        }
        return Ok((est.clone(), est, true));
    }
    if rows.len() < 4 {
        return Err(Error::Parameter(format!("entropy at scale needs four horizons, got {}", rows.len())));
    }
    let lo: Vec<(f64, f64)> = rows.iter().map(|r| (r.horizon as f64, r.ln_lower)).collect();
    let hi: Vec<(f64, f64)> = rows.iter().map(|r| (r.horizon as f64, r.ln_upper)).collect();
    Ok((fit_slope(&lo, cfg)?, fit_slope(&hi, cfg)?, false))
}

/// `h_ε`: growth rate of `ln S(n, ε)` in `n` at scale index `s`.
pub fn entropy_at_scale(sw: &ScaleSweep, s: usize, cfg: &FitConfig) -> Result<SlopeEstimate> {
    let (lo, hi, exact) = rate_fits(sw, s, cfg)?;
    Ok(if exact { lo } else { envelope(lo, hi) })
}

fn scale_fit(lo: Vec<(f64, f64)>, hi: Vec<(f64, f64)>, exact: bool, cfg: &FitConfig) -> Result<SlopeEstimate> {
    if exact {
        fit_slope(&lo, cfg)
    } else {
        Ok(envelope(fit_slope(&lo, cfg)?, fit_slope(&hi, cfg)?))
    }
}

/// Regression of `h_ε` against `|ln ε|`.
pub fn mdim_estimate(sw: &ScaleSweep, rate_cfg: &FitConfig, cfg: &FitConfig) -> Result<SlopeEstimate> {
    per_scale_rates(sw, rate_cfg, cfg, |h| h)
}

/// Regression of `log⁺ h_ε` against `|ln ε|`.
pub fn mdim_mo_estimate(sw: &ScaleSweep, rate_cfg: &FitConfig, cfg: &FitConfig) -> Result<SlopeEstimate> {
    let mut est = per_scale_rates(sw, rate_cfg, cfg, log_plus)?;
    let all_small = (0..sw.scales.len())
        .all(|s| rate_fits(sw, s, rate_cfg).map(|(_, hi, _)| hi.value <= 1.0).unwrap_or(false));
    if all_small {
        est.note = "every h_eps ≤ 1, log⁺ clamps to 0".into();
    }
    Ok(est)
}

fn per_scale_rates(
    sw: &ScaleSweep,
    rate_cfg: &FitConfig,
    cfg: &FitConfig,
    f: impl Fn(f64) -> f64,
) -> Result<SlopeEstimate> {
    let mut lo = Vec::new();
    let mut hi = Vec::new();
    let mut exact = true;
    let mut flagged = false;
    for (s, &e) in sw.scales.iter().enumerate() {
        let (l, h, ex) = rate_fits(sw, s, rate_cfg)?;
        exact &= ex;
        flagged |= l.flagged || h.flagged;
        let x = e.ln().abs();
        lo.push((x, f(l.value)));
        hi.push((x, f(h.value)));
    }
    let mut est = scale_fit(lo, hi, exact, cfg)?;
    if flagged && exact {
        est.flagged = true;
        est.note = "some h_eps fits were flagged".into();
    }
    Ok(est)
}

fn horizon_rows(sw: &ScaleSweep, n: usize) -> Result<&[SweepRow]> {
    sw.at_horizon(n).ok_or_else(|| Error::Parameter(format!("sweep has no horizon {n}")))
}

/// Regression of `ln N(X, d_n, ε)` against `|ln ε|`.
pub fn box_dimension_estimate(sw: &ScaleSweep, n: usize, cfg: &FitConfig) -> Result<SlopeEstimate> {
    let rows = horizon_rows(sw, n)?;
    if rows.len() < 5 {
        return Err(Error::Parameter("box dimension needs five scales".into()));
    }
    let exact = rows.iter().all(|r| r.is_exact());
    let lo = rows.iter().map(|r| (r.eps.ln().abs(), r.ln_lower)).collect();
    let hi = rows.iter().map(|r| (r.eps.ln().abs(), r.ln_upper)).collect();
    scale_fit(lo, hi, exact, cfg)
}

/// Regression of `ln ln S(X, d_n, ε)` against `|ln ε|`; cells with `S = 1`
/// are left out.
pub fn metric_order_estimate(sw: &ScaleSweep, n: usize, cfg: &FitConfig) -> Result<SlopeEstimate> {
    let rows = horizon_rows(sw, n)?;
    let kept: Vec<&SweepRow> = rows.iter().filter(|r| r.ln_lower > 0.0).collect();
    let dropped = rows.len() - kept.len();
    let exact = kept.iter().all(|r| r.is_exact());
    let lo = kept.iter().map(|r| (r.eps.ln().abs(), r.ln_lower.ln())).collect();
    let hi = kept.iter().map(|r| (r.eps.ln().abs(), r.ln_upper.ln())).collect();
    let mut est = scale_fit(lo, hi, exact, cfg)?;
    if dropped > 0 {
        let msg = format!("{dropped} cells with S = 1 left out");
        est.note = if est.note.is_empty() { msg } else { format!("{}; {msg}", est.note) };
    }
    Ok(est)
}

/// Per-horizon box dimensions and the slope of `dim_B(X, d_n)` in `n`.
pub fn mean_box_dimension_estimate(sw: &ScaleSweep, cfg: &FitConfig) -> Result<(SlopeEstimate, Vec<(usize, SlopeEstimate)>)> {
    let per_n = sw
        .horizons
        .iter()
        .map(|&n| Ok((n, box_dimension_estimate(sw, n, cfg)?)))
        .collect::<Result<Vec<_>>>()?;
    let pts: Vec<(f64, f64)> = per_n.iter().map(|(n, e)| (*n as f64, e.value)).collect();
    let mut est = fit_slope(&pts, &FitConfig::full())?;
    if per_n.iter().any(|(_, e)| e.flagged) {
        est.flagged = true;
        est.note = "some per-horizon dimensions were flagged".into();
    }
    Ok((est, per_n))
}

/// Regression of `ln ln Q_μ(ε)` against `|ln ε|`, with `ln ln 1 = 0`.
pub fn quantization_order(reports: &[QuantizationReport], cfg: &FitConfig) -> Result<SlopeEstimate> {
    let pts: Vec<(f64, f64)> = reports.iter().map(|r| (r.eps.ln().abs(), log_log(r.count as f64))).collect();
    let mut est = fit_slope(&pts, cfg)?;
    if reports.iter().any(|r| r.mode != Mode::Exact) {
        est.flagged = true;
        est.note = "heuristic quantization counts".into();
    }
    Ok(est)
}

/// Per-scale rate of `(1/n) ln Q_{μ,D_n}(ε)` in `n`, then `log⁺` of that
/// rate against `|ln ε|`. Returns the estimate and the per-scale rates.
pub fn dynamical_quantization_order(
    reports: &[QuantizationReport],
    rate_cfg: &FitConfig,
    cfg: &FitConfig,
) -> Result<(SlopeEstimate, Vec<(f64, f64)>)> {
    let mut scales: Vec<f64> = reports.iter().map(|r| r.eps).collect();
    scales.sort_by(|a, b| b.partial_cmp(a).unwrap());
    scales.dedup();
    let mut rates = Vec::new();
    let mut flagged = false;
    for &e in &scales {
        let pts: Vec<(f64, f64)> = reports
            .iter()
            .filter(|r| r.eps == e)
            .map(|r| (r.horizon as f64, (r.count as f64).ln()))
            .collect();
        flagged |= reports.iter().any(|r| r.eps == e && r.mode != Mode::Exact);
        rates.push((e, fit_slope(&pts, rate_cfg)?.value));
    }
    let pts: Vec<(f64, f64)> = rates.iter().map(|&(e, h)| (e.ln().abs(), log_plus(h))).collect();
    let mut est = fit_slope(&pts, cfg)?;
    if flagged {
        est.flagged = true;
        est.note = "heuristic quantization counts".into();
    }
    Ok((est, rates))
}

pub const ESTIMATE_CSV_HEADER: &str = "quantity,system,at,estimate,liminfProxy,limsupProxy,residual,flag\n";

/// One row of the estimate CSV; `at` is the scale or horizon label.
pub fn estimate_csv_row(quantity: &str, system: &str, at: &str, e: &SlopeEstimate) -> String {
    format!(
        "{},{},{},{},{},{},{},{}\n",
        quantity,
        csv_field(system),
        at,
        e.value,
        e.liminf_proxy,
        e.limsup_proxy,
        e.residual,
        if e.flagged { "flagged" } else { "ok" }
    )
}
