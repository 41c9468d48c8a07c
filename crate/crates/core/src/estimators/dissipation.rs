//! Fits of the amplitude-dependent quality factor `Q(x)/Q₀ = γ/γ(x)` of a
//! mode whose partner is held at amplitude `x`.

use nalgebra::{DMatrix, DVector};
use serde::Serialize;

use crate::analytic::dissipation::{linewidth_approx, linewidth_exact};
use crate::error::{Error, Result};
use crate::estimators::fit::FitResult;
use crate::estimators::lm::{covariance, levenberg_marquardt, LmOptions};

const MIN_POINTS: usize = 6;
/// ξ counts as identified when the largest amplitude reaches this fraction of it.
const MIN_REACH: f64 = 0.25;
/// and its relative standard error stays below this.
const MAX_RELATIVE_SE: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum DissipationModel {
    /// Full two-mode linewidth, saturating at `(γ_S + γ)/2`.
    Exact,
    /// `γ + (γ_S/2)(1 − sqrt(1 − x²/ξ²))`, valid for `γ ≪ γ_S`.
    Approx,
}

impl DissipationModel {
    fn linewidth(self, gamma: f64, gamma_s: f64, xi: f64, x: f64) -> f64 {
        match self {
            Self::Exact => linewidth_exact(gamma, gamma_s, xi, x).gamma,
            Self::Approx => linewidth_approx(gamma, gamma_s, xi, x),
        }
    }

    /// `(∂γ/∂ln ξ, ∂γ/∂ln γ_S)`.
    fn gradient(self, gamma: f64, gamma_s: f64, xi: f64, x: f64) -> (f64, f64) {
        let r2 = (x / xi).powi(2);
        match self {
            Self::Exact => {
                let radicand = (gamma_s - gamma).powi(2) - gamma_s * gamma_s * r2;
                if radicand <= 0.0 {
                    return (0.0, 0.5 * gamma_s);
                }
                let root = radicand.sqrt().max(1e-8 * gamma_s);
                let d_xi = -gamma_s * gamma_s * r2 / (2.0 * root);
                let d_gs = 0.5 * (1.0 - ((gamma_s - gamma) - gamma_s * r2) / root);
                (d_xi, gamma_s * d_gs)
            }
            Self::Approx => {
                if r2 >= 1.0 {
                    return (0.0, 0.5 * gamma_s);
                }
                let root = (1.0 - r2).sqrt().max(1e-8);
                (-0.5 * gamma_s * r2 / root, 0.5 * gamma_s * (1.0 - (1.0 - r2).sqrt()))
            }
        }
    }
}

/// Fits `xi` (m) and `gamma_s` (rad/s) to `(x, Q(x)/Q₀)` samples, given the
/// intrinsic linewidth `gamma` (rad/s) of the damped mode. Residuals are in
/// `ln Q`.
pub fn fit_dissipation_curve(x: &[f64], q_ratio: &[f64], gamma: f64, model: DissipationModel) -> Result<FitResult> {
    let n = x.len();
    if q_ratio.len() != n {
        return Err(Error::invalid("q_ratio", "x and q_ratio differ in length"));
    }
    if n < MIN_POINTS {
        return Err(Error::InsufficientData(format!(
            "{n} amplitude points, need at least {MIN_POINTS}"
        )));
    }
    if !(gamma > 0.0 && gamma.is_finite()) {
        return Err(Error::invalid("gamma", "must be positive and finite"));
    }
    if x.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
        return Err(Error::invalid("x", "must be finite and non-negative"));
    }
    if q_ratio.iter().any(|q| !(*q > 0.0 && q.is_finite())) {
        return Err(Error::invalid("q_ratio", "must be positive and finite"));
    }

    let widths: Vec<f64> = q_ratio.iter().map(|q| gamma / q).collect();
    let Some((xi0, gs0)) = initial_guess(x, &widths, gamma, model) else {
        return Ok(FitResult::failed(
            n,
            "no amplitude dependence: all points in the linear regime",
        ));
    };

    let log_q: Vec<f64> = q_ratio.iter().map(|q| q.ln()).collect();
    let residuals = |p: &DVector<f64>| -> Option<(DVector<f64>, DMatrix<f64>)> {
        let (xi, gs) = (p[0].exp(), p[1].exp());
        if !(xi.is_finite() && gs.is_finite() && xi > 0.0 && gs > 0.0) {
            return None;
        }
        let mut r = DVector::zeros(n);
        let mut j = DMatrix::zeros(n, 2);
        for k in 0..n {
            let w = model.linewidth(gamma, gs, xi, x[k]);
            let (d_xi, d_gs) = model.gradient(gamma, gs, xi, x[k]);
            r[k] = (gamma / w).ln() - log_q[k];
            j[(k, 0)] = -d_xi / w;
            j[(k, 1)] = -d_gs / w;
        }
        Some((r, j))
    };
    let p0 = DVector::from_vec(vec![xi0.ln(), gs0.ln()]);
    let Some(out) = levenberg_marquardt(p0, residuals, &LmOptions::default()) else {
        return Ok(FitResult::failed(n, "starting point outside the model domain"));
    };

    let values = [out.params[0].exp(), out.params[1].exp()];
    let scale = DMatrix::from_diagonal(&DVector::from_row_slice(&values));
    let cov = &scale * covariance(&out.jacobian, &out.residuals) * &scale;
    let x_max = x.iter().cloned().fold(0.0, f64::max);
    let rel_se = cov[(0, 0)].abs().sqrt() / values[0];
    let (converged, message) = if x_max < MIN_REACH * values[0] {
        (
            false,
            format!(
                "largest amplitude reaches {:.3} ξ; ξ is unidentifiable",
                x_max / values[0]
            ),
        )
    } else if !(rel_se < MAX_RELATIVE_SE) {
        (
            false,
            format!("relative standard error of ξ is {rel_se:.3}; ξ is unidentifiable"),
        )
    } else {
        (out.converged, out.message.clone())
    };
    Ok(FitResult::new(
        &["xi", "gamma_s"],
        &values,
        cov,
        out.residuals.norm(),
        n,
        converged,
        message,
    ))
}

/// Scans `γ_S` on a logarithmic grid. For each candidate every unsaturated
/// point inverts to a `ξ`, their median is taken, and the pair with the
/// smallest log-residual wins.
fn initial_guess(x: &[f64], widths: &[f64], gamma: f64, model: DissipationModel) -> Option<(f64, f64)> {
    let w_max = widths.iter().cloned().fold(0.0, f64::max);
    if !(w_max > gamma * (1.0 + 1e-9)) {
        return None;
    }
    // the saturated linewidth (γ_S + γ)/2 bounds every sample
    let gs_min = (2.0 * w_max - gamma).max(gamma * 1e-3);
    let mut best: Option<(f64, f64, f64)> = None;
    for k in 0..=160 {
        let gs = gs_min * 10f64.powf(k as f64 * 0.05);
        let mut xis: Vec<f64> = x
            .iter()
            .zip(widths)
            .filter_map(|(&x, &w)| {
                let r2 = match model {
                    DissipationModel::Exact => 4.0 * (gs - w) * (w - gamma) / (gs * gs),
                    DissipationModel::Approx => {
                        let c = 1.0 - 2.0 * (w - gamma) / gs;
                        1.0 - c * c
                    }
                };
                (x > 0.0 && w > gamma && r2 > 0.0 && r2 < 1.0).then(|| x / r2.sqrt())
            })
            .collect();
        if xis.is_empty() {
            continue;
        }
        xis.sort_by(f64::total_cmp);
        let xi = xis[xis.len() / 2];
        let cost: f64 = x
            .iter()
            .zip(widths)
            .map(|(&x, &w)| (model.linewidth(gamma, gs, xi, x) / w).ln().powi(2))
            .sum();
        if best.is_none_or(|b| cost < b.2) {
            best = Some((xi, gs, cost));
        }
    }
    best.map(|(xi, gs, _)| (xi, gs))
}
