//! Least-squares log-log slope fits: the measurable form of the O(eps^p)
//! statements.

use kummer::{KummerError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlopeFit {
    /// (log eps, log value) points of the fit.
    pub points: Vec<(f64, f64)>,
    pub slope: f64,
    pub intercept: f64,
    /// Max absolute log-residual of the fit.
    pub residual: f64,
    /// Set when the residual exceeds the per-experiment threshold.
    pub flagged: bool,
}

/// Least squares in log-log coordinates over (x, y) pairs with positive
/// entries. Needs at least 3 points.
pub fn fit_slope(points: &[(f64, f64)], residual_threshold: f64) -> Result<SlopeFit> {
    if points.len() < 3 {
        return Err(KummerError::config(format!("slope fit needs >= 3 points, got {}", points.len())));
    }
    let mut logs = Vec::with_capacity(points.len());
    for &(x, y) in points {
        if !(x > 0.0 && y > 0.0) {
            return Err(KummerError::FitRejected { msg: format!("non-positive fit point ({x}, {y})") });
        }
        logs.push((x.ln(), y.ln()));
    }
    let n = logs.len() as f64;
    let (mut sx, mut sy, mut sxx, mut sxy) = (0.0, 0.0, 0.0, 0.0);
    for &(lx, ly) in &logs {
        sx += lx;
        sy += ly;
        sxx += lx * lx;
        sxy += lx * ly;
    }
    let denom = n * sxx - sx * sx;
    if denom.abs() < 1e-30 {
        return Err(KummerError::FitRejected { msg: "degenerate abscissae".into() });
    }
    let slope = (n * sxy - sx * sy) / denom;
    let intercept = (sy - slope * sx) / n;
    let mut residual = 0.0f64;
    for &(lx, ly) in &logs {
        residual = residual.max((ly - (slope * lx + intercept)).abs());
    }
    Ok(SlopeFit { points: logs, slope, intercept, residual, flagged: residual > residual_threshold })
}

/// Running two-point slope between consecutive sweep values (the
/// `slope_running` CSV column).
pub fn running_slopes(points: &[(f64, f64)]) -> Vec<f64> {
    let mut out = vec![f64::NAN; points.len()];
    for i in 1..points.len() {
        let (x0, y0) = points[i - 1];
        let (x1, y1) = points[i];
        out[i] = (y1.ln() - y0.ln()) / (x1.ln() - x0.ln());
    }
    out
}
