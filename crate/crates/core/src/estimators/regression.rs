//! Straight-line fits.

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::estimators::fit::FitResult;

/// Least-squares line `y = slope x + intercept`, optionally weighted by
/// `weights` (inverse variances). Parameter errors use the residual scatter.
pub fn linear_regression(x: &[f64], y: &[f64], weights: Option<&[f64]>) -> Result<FitResult> {
    let n = x.len();
    if y.len() != n || weights.is_some_and(|w| w.len() != n) {
        return Err(Error::invalid("data", "x, y and weights must have equal length"));
    }
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} points, need at least 2")));
    }
    let w: Vec<f64> = weights.map_or_else(|| vec![1.0; n], |w| w.to_vec());
    if w.iter().any(|&v| !(v > 0.0 && v.is_finite())) {
        return Err(Error::invalid("weights", "must be positive and finite"));
    }
    let sw: f64 = w.iter().sum();
    let xm = x.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let ym = y.iter().zip(&w).map(|(a, b)| a * b).sum::<f64>() / sw;
    let sxx: f64 = x.iter().zip(&w).map(|(&a, &b)| b * (a - xm).powi(2)).sum();
    if !(sxx > 0.0) {
        return Err(Error::InsufficientData("all x values are equal".to_string()));
    }
    let sxy: f64 = (0..n).map(|k| w[k] * (x[k] - xm) * (y[k] - ym)).sum();
    let slope = sxy / sxx;
    let intercept = ym - slope * xm;
    let rss: f64 = (0..n).map(|k| w[k] * (y[k] - slope * x[k] - intercept).powi(2)).sum();
    let s2 = if n > 2 { rss / (n - 2) as f64 } else { f64::NAN };
    let var_slope = s2 / sxx;
    let var_intercept = s2 * (1.0 / sw + xm * xm / sxx);
    let cov = -xm * s2 / sxx;
    let covariance = DMatrix::from_row_slice(2, 2, &[var_slope, cov, cov, var_intercept]);
    Ok(FitResult::new(
        &["slope", "intercept"],
        &[slope, intercept],
        covariance,
        rss.sqrt(),
        n,
        true,
        "closed-form least squares",
    ))
}

/// Regression of the up-conversion scale ξ against the threshold amplitude
/// over `(x_s_th, xi)` pairs. Unweighted unless `weights` is given.
pub fn xi_vs_threshold_regression(pairs: &[(f64, f64)], weights: Option<&[f64]>) -> Result<FitResult> {
    if pairs.len() < 3 {
        return Err(Error::InsufficientData(format!(
            "{} (threshold, xi) pairs, need at least 3",
            pairs.len()
        )));
    }
    let x: Vec<f64> = pairs.iter().map(|p| p.0).collect();
    let y: Vec<f64> = pairs.iter().map(|p| p.1).collect();
    linear_regression(&x, &y, weights)
}
