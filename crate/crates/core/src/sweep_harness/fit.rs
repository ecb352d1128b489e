use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Least-squares slope of `log err` against `log eps`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateFit {
    pub slope: f64,
    pub intercept: f64,
    /// Standard error of the slope (zero for an exact fit or two points).
    pub stderr: f64,
    pub rows_used: usize,
}

impl RateFit {
    /// Two-sided band `slope +- 2 stderr`.
    pub fn band(&self) -> (f64, f64) {
        (self.slope - 2.0 * self.stderr, self.slope + 2.0 * self.stderr)
    }
}

/// Fit `err ~ C eps^slope` over the `(eps, err, is_floor)` rows that are
/// not flagged as numerical floor. Needs at least three usable rows.
pub fn fit_rate(rows: &[(f64, f64, bool)]) -> Result<RateFit> {
    let pts: Vec<(f64, f64)> = rows
        .iter()
        .filter(|(e, r, floor)| !floor && *e > 0.0 && *r > 0.0 && r.is_finite())
        .map(|(e, r, _)| (e.ln(), r.ln()))
        .collect();
    let n = pts.len();
    if n < 3 {
        return Err(Error::InsufficientData(format!("{n} usable rows, need at least 3")));
    }
    let nf = n as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / nf;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / nf;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    if sxx == 0.0 {
        return Err(Error::InsufficientData("all usable rows share one eps".into()));
    }
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mx;
    let sse: f64 = pts.iter().map(|p| (p.1 - intercept - slope * p.0).powi(2)).sum();
    let stderr = if n > 2 { (sse / (nf - 2.0) / sxx).sqrt() } else { 0.0 };
    Ok(RateFit { slope, intercept, stderr, rows_used: n })
}
