//! Consistency checks of estimated variances against model values.

use serde::Serialize;
use statrs::distribution::{ChiSquared, ContinuousCDF};

use crate::error::{Error, Result};

/// Two-sided χ² test of a sample variance.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VarianceTest {
    pub sample_variance: f64,
    pub expected: f64,
    pub n: usize,
    /// `(n − 1) s²/σ²`
    pub statistic: f64,
    /// Acceptance interval of `s²/σ²` at the requested confidence.
    pub ratio_bounds: (f64, f64),
    pub consistent: bool,
}

/// Tests whether `n` independent normal samples with unbiased variance
/// `sample_variance` are consistent with variance `expected`.
pub fn chi_square_variance_test(
    sample_variance: f64,
    expected: f64,
    n: usize,
    confidence: f64,
) -> Result<VarianceTest> {
    if n < 2 {
        return Err(Error::InsufficientData(format!("{n} samples, need at least 2")));
    }
    if !(expected > 0.0) {
        return Err(Error::invalid("expected", "must be positive"));
    }
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(Error::invalid("confidence", "must lie in (0, 1)"));
    }
    let dof = (n - 1) as f64;
    let chi = ChiSquared::new(dof).map_err(|e| Error::invalid("n", e.to_string()))?;
    let tail = 0.5 * (1.0 - confidence);
    let lo = chi.inverse_cdf(tail);
    let hi = chi.inverse_cdf(1.0 - tail);
    let statistic = dof * sample_variance / expected;
    Ok(VarianceTest {
        sample_variance,
        expected,
        n,
        statistic,
        ratio_bounds: (lo / dof, hi / dof),
        consistent: (lo..=hi).contains(&statistic),
    })
}

/// Unbiased sample variance about the sample mean.
pub fn sample_variance(values: &[f64]) -> f64 {
    let n = values.len();
    if n < 2 {
        return f64::NAN;
    }
    let mean = values.iter().sum::<f64>() / n as f64;
    values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (n - 1) as f64
}

/// `|value − expected| ≤ n_sigma · std_error`.
pub fn within_sigma(value: f64, expected: f64, std_error: f64, n_sigma: f64) -> bool {
    (value - expected).abs() <= n_sigma * std_error
}
