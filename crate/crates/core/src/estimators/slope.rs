use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Regression window and residual threshold.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields, rename_all = "camelCase")]
pub struct FitConfig {
    /// Points used by the regression, counted from the fine end; `None`
    /// uses every point.
    pub tail: Option<usize>,
    pub residual_threshold: f64,
}

impl Default for FitConfig {
    fn default() -> Self {
        FitConfig { tail: Some(6), residual_threshold: 0.05 }
    }
}

impl FitConfig {
    pub fn full() -> Self {
        FitConfig { tail: None, ..Default::default() }
    }
}

/// A finite-scale slope with envelope proxies for the limsup and liminf.
#[derive(Clone, Debug, PartialEq, Serialize)]
#[serde(rename_all = "camelCase")]
pub struct SlopeEstimate {
    pub value: f64,
    pub tail_window: usize,
    /// Largest absolute regression residual.
    pub residual: f64,
    pub limsup_proxy: f64,
    pub liminf_proxy: f64,
    /// Set when the estimate rests on non-exact cells or the residual is
    /// above threshold.
    pub flagged: bool,
    pub note: String,
}

/// Least squares `y = a + b x`; returns `(b, a)`.
pub fn least_squares(xs: &[f64], ys: &[f64]) -> Result<(f64, f64)> {
    let n = xs.len();
    if n < 2 || ys.len() != n {
        return Err(Error::Parameter(format!("regression needs two or more points, got {n}")));
    }
    let mx = xs.iter().sum::<f64>() / n as f64;
    let my = ys.iter().sum::<f64>() / n as f64;
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    if sxx == 0.0 {
        return Err(Error::Parameter("regression abscissae coincide".into()));
    }
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let b = sxy / sxx;
    Ok((b, my - b * mx))
}

/// Slope of `points` (sorted by increasing `x`) over the last `tail`
/// points. Proxies are the extreme consecutive slopes over the last
/// `max(tail, ⌈len/2⌉)` points; since that window contains the regression
/// window, the fitted slope lies between them.
pub fn fit_slope(points: &[(f64, f64)], cfg: &FitConfig) -> Result<SlopeEstimate> {
    let mut pts = points.to_vec();
    pts.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    let len = pts.len();
    let tail = cfg.tail.unwrap_or(len).min(len);
    if tail < 2 {
        return Err(Error::Parameter(format!("regression needs two or more points, got {tail}")));
    }
    let win = &pts[len - tail..];
    let xs: Vec<f64> = win.iter().map(|p| p.0).collect();
    let ys: Vec<f64> = win.iter().map(|p| p.1).collect();
    let (b, a) = least_squares(&xs, &ys)?;
    let residual = xs.iter().zip(&ys).map(|(x, y)| (y - a - b * x).abs()).fold(0.0, f64::max);
    let proxy_len = tail.max(len.div_ceil(2));
    let pw = &pts[len - proxy_len..];
    let steps: Vec<f64> = pw.windows(2).filter(|w| w[1].0 > w[0].0).map(|w| (w[1].1 - w[0].1) / (w[1].0 - w[0].0)).collect();
    let limsup = steps.iter().cloned().fold(f64::NEG_INFINITY, f64::max).max(b);
    let liminf = steps.iter().cloned().fold(f64::INFINITY, f64::min).min(b);
    let flagged = residual > cfg.residual_threshold;
    Ok(SlopeEstimate {
        value: b,
        tail_window: tail,
        residual,
        limsup_proxy: limsup,
        liminf_proxy: liminf,
        flagged,
        note: if flagged { format!("residual {residual:.3e} above threshold") } else { String::new() },
    })
}

/// Combines fits of a lower and an upper envelope: the value is their mean
/// and the proxies span both.
pub fn envelope(lower: SlopeEstimate, upper: SlopeEstimate) -> SlopeEstimate {
    let value = 0.5 * (lower.value + upper.value);
    SlopeEstimate {
        value,
        tail_window: lower.tail_window.min(upper.tail_window),
        residual: lower.residual.max(upper.residual),
        limsup_proxy: lower.limsup_proxy.max(upper.limsup_proxy).max(value),
        liminf_proxy: lower.liminf_proxy.min(upper.liminf_proxy).min(value),
        flagged: true,
        note: format!("bracketed: lower envelope {}, upper envelope {}", lower.value, upper.value),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exact_line() {
        let pts: Vec<(f64, f64)> = (0..10).map(|k| (k as f64, 2.0 + 0.5 * k as f64)).collect();
        let s = fit_slope(&pts, &FitConfig::default()).unwrap();
        assert!((s.value - 0.5).abs() < 1e-12);
        assert!(s.residual < 1e-12);
        assert_eq!(s.tail_window, 6);
        assert!(fit_slope(&pts[..1], &FitConfig::default()).is_err());
    }

    #[test]
    fn proxies_bracket_value() {
        let pts: Vec<(f64, f64)> = (0..12).map(|k| (k as f64, (k as f64).sqrt() + 0.1 * (k % 3) as f64)).collect();
        let s = fit_slope(&pts, &FitConfig { tail: Some(4), residual_threshold: 0.05 }).unwrap();
        assert!(s.liminf_proxy <= s.value && s.value <= s.limsup_proxy);
    }
}
