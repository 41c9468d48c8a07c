//! Energy decay rate from a ring-down envelope.
//!
//! A monotone envelope is fitted by a straight line through the logarithm of
//! its second half, where fast transients have died out. An envelope that
//! beats (repeatedly dips towards zero, as in the strongly coupled regime)
//! is fitted through the logarithm of its successive maxima.

use crate::error::{Error, Result};
use crate::estimators::fit::FitResult;
use crate::estimators::regression::linear_regression;

const MIN_SAMPLES: usize = 10;
/// A dip between two maxima counts as a beat node when it falls below this
/// fraction of the smaller maximum.
const NODE_DEPTH: f64 = 0.1;

/// Fits `envelope(t) ∝ exp(−γ_eff t / 2)` and reports `gamma_eff` (energy
/// decay rate, 1/s) and `tau = 2/γ_eff` (amplitude decay time, s).
/// Non-positive samples are skipped.
pub fn fit_ringdown(times: &[f64], envelope: &[f64]) -> Result<FitResult> {
    if times.len() != envelope.len() {
        return Err(Error::invalid("envelope", "times and envelope differ in length"));
    }
    let log: Vec<f64> = envelope
        .iter()
        .map(|&e| if e > 0.0 { e.ln() } else { f64::NAN })
        .collect();
    fit_ringdown_log(times, &log)
}

/// [`fit_ringdown`] on `ln envelope`, for records whose envelope leaves the
/// floating-point range. Non-finite samples are skipped.
pub fn fit_ringdown_log(times: &[f64], log_envelope: &[f64]) -> Result<FitResult> {
    if times.len() != log_envelope.len() {
        return Err(Error::invalid("log_envelope", "times and envelope differ in length"));
    }
    let (t, y): (Vec<f64>, Vec<f64>) = times
        .iter()
        .zip(log_envelope)
        .filter(|(t, y)| t.is_finite() && y.is_finite())
        .map(|(&t, &y)| (t, y))
        .unzip();
    if t.len() < MIN_SAMPLES {
        return Err(Error::InsufficientData(format!(
            "{} usable envelope samples, need at least {MIN_SAMPLES}",
            t.len()
        )));
    }

    let peaks = beat_peaks(&t, &y);
    let (fit, mode) = if peaks.len() >= 3 {
        let (pt, py): (Vec<f64>, Vec<f64>) = peaks.into_iter().unzip();
        (linear_regression(&pt, &py, None)?, "beat maxima")
    } else {
        let start = t.len() / 2;
        (linear_regression(&t[start..], &y[start..], None)?, "tail")
    };

    let slope = fit.value("slope");
    let slope_se = fit.std_error("slope");
    let gamma = -2.0 * slope;
    let gamma_se = 2.0 * slope_se;
    let tau = 2.0 / gamma;
    // dτ/dγ = −τ/γ
    let var = gamma_se * gamma_se;
    let k = -tau / gamma;
    let cov = nalgebra::DMatrix::from_row_slice(2, 2, &[var, k * var, k * var, k * k * var]);

    let span = t.last().unwrap() - t[0];
    let (converged, message) = if !(gamma > 0.0) {
        (false, format!("envelope does not decay ({mode} fit)"))
    } else if linear_fraction(&t, &y, slope, fit.value("intercept"), mode) < 0.9 {
        (false, format!("envelope is not exponential beyond noise ({mode} fit)"))
    } else if span < 2.0 * tau {
        (false, format!("record spans {:.3} decay times, need 2", span / tau))
    } else {
        (true, format!("log-linear fit of {mode}"))
    };
    Ok(FitResult::new(
        &["gamma_eff", "tau"],
        &[gamma, tau],
        cov,
        fit.residual_norm,
        t.len(),
        converged,
        message,
    ))
}

/// `Q = ω τ / 2 = ω / γ_eff`.
pub fn quality_factor(omega: f64, gamma_eff: f64) -> f64 {
    omega / gamma_eff
}

/// Maxima of a beating log-envelope, refined by a parabola through each
/// maximum and its neighbours. Empty unless at least one deep node
/// separates the maxima.
fn beat_peaks(t: &[f64], y: &[f64]) -> Vec<(f64, f64)> {
    let n = y.len();
    let mut idx = Vec::new();
    for k in 1..n - 1 {
        if y[k] > y[k - 1] && y[k] >= y[k + 1] {
            idx.push(k);
        }
    }
    if idx.len() < 2 {
        return Vec::new();
    }
    // keep maxima separated by deep nodes
    let mut kept = vec![idx[0]];
    for &k in &idx[1..] {
        let prev = *kept.last().unwrap();
        let dip = y[prev..=k].iter().cloned().fold(f64::INFINITY, f64::min);
        if dip < y[prev].min(y[k]) + NODE_DEPTH.ln() {
            kept.push(k);
        } else if y[k] > y[prev] {
            *kept.last_mut().unwrap() = k;
        }
    }
    if kept.len() < 2 {
        return Vec::new();
    }
    kept.into_iter()
        .map(|k| {
            let (t0, t1, t2) = (t[k - 1], t[k], t[k + 1]);
            let (y0, y1, y2) = (y[k - 1], y[k], y[k + 1]);
            let h = 0.5 * (t2 - t0);
            let denom = y0 - 2.0 * y1 + y2;
            if denom < 0.0 && ((t1 - t0) - (t2 - t1)).abs() < 1e-9 * h {
                let shift = 0.5 * (y0 - y2) / denom;
                (t1 + shift * h, y1 - 0.25 * (y0 - y2) * shift)
            } else {
                (t1, y1)
            }
        })
        .collect()
}

/// Coefficient of determination of the fitted line over the samples it
/// was fitted to.
fn linear_fraction(t: &[f64], y: &[f64], slope: f64, intercept: f64, mode: &str) -> f64 {
    if mode != "tail" {
        return 1.0;
    }
    let start = t.len() / 2;
    let (t, y) = (&t[start..], &y[start..]);
    let mean = y.iter().sum::<f64>() / y.len() as f64;
    let tot: f64 = y.iter().map(|v| (v - mean).powi(2)).sum();
    let res: f64 = t
        .iter()
        .zip(y)
        .map(|(&t, &v)| (v - slope * t - intercept).powi(2))
        .sum();
    if tot == 0.0 {
        return 0.0;
    }
    1.0 - res / tot
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn pure_exponential() {
        let g = 0.37;
        let t: Vec<f64> = (0..200).map(|k| k as f64 * 0.1).collect();
        let e: Vec<f64> = t.iter().map(|t| 3e-12 * (-g * t / 2.0).exp()).collect();
        let f = fit_ringdown(&t, &e).unwrap();
        assert!(f.converged, "{}", f.message);
        assert_relative_eq!(f.value("gamma_eff"), g, max_relative = 1e-12);
        assert_relative_eq!(f.value("tau"), 2.0 / g, max_relative = 1e-12);
        assert_relative_eq!(quality_factor(10.0, g), 10.0 / g);
    }

    #[test]
    fn beating_envelope() {
        let (a, w) = (0.8, 5.0);
        let t: Vec<f64> = (0..4000).map(|k| k as f64 * 0.0021).collect();
        let e: Vec<f64> = t
            .iter()
            .map(|&t| ((-a * t).exp() * (w * t + 0.3).cos()).abs())
            .collect();
        let f = fit_ringdown(&t, &e).unwrap();
        assert!(f.converged, "{}", f.message);
        assert!(f.message.contains("beat"));
        assert_relative_eq!(f.value("gamma_eff"), 2.0 * a, max_relative = 1e-4);
    }

    #[test]
    fn growing_or_flat_is_not_converged() {
        let t: Vec<f64> = (0..50).map(|k| k as f64).collect();
        let up: Vec<f64> = t.iter().map(|t| (0.1 * t).exp()).collect();
        assert!(!fit_ringdown(&t, &up).unwrap().converged);
        let short: Vec<f64> = t.iter().map(|t| (-1e-4 * t).exp()).collect();
        let f = fit_ringdown(&t, &short).unwrap();
        assert!(!f.converged);
        assert!(fit_ringdown(&t[..5], &short[..5]).is_err());
    }
}
