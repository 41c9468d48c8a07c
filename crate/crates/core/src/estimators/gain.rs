//! Fits of the phase-dependent gain `G(φ) = sqrt(1 + s² − 2s cos φ)/(1 − μ²)`,
//! `s = μη`, to measured gain curves.
//!
//! Residuals are taken in `ln G`, so multiplicative measurement noise is
//! weighted evenly across the amplified and deamplified branches.

use std::f64::consts::PI;

use nalgebra::{DMatrix, DVector};
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::gain::gain_unchecked;
use crate::error::{Error, Result};
use crate::estimators::fit::FitResult;
use crate::estimators::lm::{covariance, levenberg_marquardt, LmOptions};
use crate::sde::trajectory_rng;

const MIN_POINTS: usize = 8;
/// Relative spread below which a gain curve counts as constant.
const FLAT_TOLERANCE: f64 = 1e-12;

/// How the drive ratio η enters a gain fit.
///
/// With η free the curve does not determine `(μ, η)` uniquely: since
/// `G(φ; s) ∝ G(φ; 1/s)/s`, the solution `s = μη` and its dual `1/s` with
/// `1 − μ'² = (1 − μ²)/s` fit equally well whenever `s ≥ 1 − μ²`. The
/// caller picks the side of `μη = 1` to report.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum EtaMode {
    Free(Branch),
    /// η known from the drive amplitudes, e.g. via `eta_from_drives`.
    Fixed(f64),
}

/// Side of `μη = 1` for a free-η fit.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Branch {
    /// `μη ≤ 1`; always exists.
    Below,
    /// `μη ≥ 1`, the deamplifying regime; exists only when the curve is
    /// deep enough.
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainFitOptions {
    pub eta: EtaMode,
    /// Fit an additive offset `phi0` (model evaluated at `φ + phi0`).
    pub phase_offset: bool,
}

impl Default for GainFitOptions {
    fn default() -> Self {
        Self {
            eta: EtaMode::Free(Branch::Below),
            phase_offset: false,
        }
    }
}

impl GainFitOptions {
    pub fn free_eta(branch: Branch) -> Self {
        Self {
            eta: EtaMode::Free(branch),
            phase_offset: false,
        }
    }

    pub fn fixed_eta(eta: f64) -> Self {
        Self {
            eta: EtaMode::Fixed(eta),
            phase_offset: false,
        }
    }

    pub fn with_phase_offset(mut self) -> Self {
        self.phase_offset = true;
        self
    }
}

/// Least-squares fit of `ln G` over `(phi, gain)` samples. Reports `mu`,
/// `eta` (zero error when fixed) and, if enabled, `phi0`.
pub fn fit_gain_curve(phi: &[f64], gain: &[f64], options: &GainFitOptions) -> Result<FitResult> {
    let n = phi.len();
    if gain.len() != n {
        return Err(Error::invalid("gain", "phi and gain differ in length"));
    }
    if n < MIN_POINTS {
        return Err(Error::InsufficientData(format!(
            "{n} phase points, need at least {MIN_POINTS}"
        )));
    }
    if phi.iter().any(|p| !p.is_finite()) {
        return Err(Error::invalid("phi", "must be finite"));
    }
    if gain.iter().any(|g| !(*g > 0.0 && g.is_finite())) {
        return Err(Error::invalid("gain", "must be positive and finite"));
    }
    let (lo, hi) = phi
        .iter()
        .fold((f64::INFINITY, f64::NEG_INFINITY), |(a, b), &p| (a.min(p), b.max(p)));
    if hi - lo < PI * (1.0 - 1e-12) {
        return Err(Error::InsufficientData(format!(
            "phases span {:.4} rad, need at least π",
            hi - lo
        )));
    }
    if let EtaMode::Fixed(eta) = options.eta {
        if !(eta >= 0.0 && eta.is_finite()) {
            return Err(Error::invalid("eta", format!("must be >= 0, got {eta}")));
        }
    }

    let log_g: Vec<f64> = gain.iter().map(|g| g.ln()).collect();
    let (g_min, g_max) = gain
        .iter()
        .fold((f64::INFINITY, 0.0f64), |(a, b), &g| (a.min(g), b.max(g)));
    if matches!(options.eta, EtaMode::Free(_)) && (g_max - g_min) <= FLAT_TOLERANCE * g_max {
        return Ok(FitResult::failed(
            n,
            "constant gain: μ and η are not separately identifiable",
        ));
    }

    let layout = Layout::new(options);
    let model = |p: &DVector<f64>| layout.residuals(p, phi, &log_g);
    let lm = LmOptions::default();

    let mut best: Option<crate::estimators::lm::LmOutcome> = None;
    for p0 in layout.starting_points(phi, gain) {
        if let Some(out) = levenberg_marquardt(p0, model, &lm) {
            let better = best
                .as_ref()
                .is_none_or(|b| out.residuals.norm_squared() < b.residuals.norm_squared());
            if better {
                best = Some(out);
            }
        }
    }
    let Some(mut out) = best else {
        return Ok(FitResult::failed(n, "no admissible starting point"));
    };
    let mut branch_note = None;
    if let EtaMode::Free(branch) = options.eta {
        match layout.dual_on_branch(&out.params, branch) {
            Ok(None) => {}
            Ok(Some(p)) => {
                if let Some(polished) = levenberg_marquardt(p, model, &lm) {
                    out = polished;
                }
            }
            Err(msg) => branch_note = Some(msg),
        }
    }

    let cov = covariance(&out.jacobian, &out.residuals);
    let (names, values, cov) = layout.report(&out.params, cov);
    let finite = cov.iter().all(|c| c.is_finite()) && out.residuals.norm().is_finite();
    let converged = out.converged && finite && branch_note.is_none();
    let message = match (&branch_note, finite) {
        (Some(note), _) => format!("{}; {note}", out.message),
        (None, true) => out.message.clone(),
        (None, false) => format!("{}; covariance is singular", out.message),
    };
    let names: Vec<&str> = names.iter().map(|s| s.as_str()).collect();
    Ok(FitResult::new(
        &names,
        &values,
        cov,
        out.residuals.norm(),
        n,
        converged,
        message,
    ))
}

/// Parameter vector layout: `[μ, η?, φ0?]`.
struct Layout {
    eta: EtaMode,
    offset: bool,
}

impl Layout {
    fn new(options: &GainFitOptions) -> Self {
        Self {
            eta: options.eta,
            offset: options.phase_offset,
        }
    }

    fn eta_index(&self) -> Option<usize> {
        matches!(self.eta, EtaMode::Free(_)).then_some(1)
    }

    fn offset_index(&self) -> Option<usize> {
        self.offset.then(|| 1 + self.eta_index().is_some() as usize)
    }

    fn len(&self) -> usize {
        1 + self.eta_index().is_some() as usize + self.offset as usize
    }

    fn unpack(&self, p: &DVector<f64>) -> (f64, f64, f64) {
        let eta = match self.eta {
            EtaMode::Free(_) => p[1],
            EtaMode::Fixed(e) => e,
        };
        let phi0 = self.offset_index().map_or(0.0, |k| p[k]);
        (p[0], eta, phi0)
    }

    fn pack(&self, mu: f64, eta: f64, phi0: f64) -> DVector<f64> {
        let mut p = DVector::zeros(self.len());
        p[0] = mu;
        if let Some(k) = self.eta_index() {
            p[k] = eta;
        }
        if let Some(k) = self.offset_index() {
            p[k] = phi0;
        }
        p
    }

    /// `ln G_model − ln G_data` and its Jacobian. μ may be negative here;
    /// the sign is folded into η or φ0 when reporting.
    fn residuals(&self, p: &DVector<f64>, phi: &[f64], log_g: &[f64]) -> Option<(DVector<f64>, DMatrix<f64>)> {
        let (mu, eta, phi0) = self.unpack(p);
        if !(mu.abs() < 1.0) || !eta.is_finite() || !phi0.is_finite() {
            return None;
        }
        let s = mu * eta;
        let n = phi.len();
        let mut r = DVector::zeros(n);
        let mut j = DMatrix::zeros(n, self.len());
        for k in 0..n {
            let psi = phi[k] + phi0;
            let radicand = (1.0 - s).powi(2) + 4.0 * s * (0.5 * psi).sin().powi(2);
            if !(radicand > 0.0) {
                return None;
            }
            r[k] = 0.5 * radicand.ln() - (1.0 - mu * mu).ln() - log_g[k];
            let d_s = (s - psi.cos()) / radicand;
            j[(k, 0)] = eta * d_s + 2.0 * mu / (1.0 - mu * mu);
            if let Some(c) = self.eta_index() {
                j[(k, c)] = mu * d_s;
            }
            if let Some(c) = self.offset_index() {
                j[(k, c)] = s * psi.sin() / radicand;
            }
        }
        Some((r, j))
    }

    /// Closed-form starting points. The largest sample is taken as the
    /// `cos ψ = −1` extremum and the smallest as `cos ψ = +1`.
    fn starting_points(&self, phi: &[f64], gain: &[f64]) -> Vec<DVector<f64>> {
        let k_max = argmax(gain);
        let k_min = argmax(&gain.iter().map(|g| -g).collect::<Vec<_>>());
        let (g_hi, g_lo) = (gain[k_max], gain[k_min]);
        let phi0 = if self.offset { wrap(PI - phi[k_max]) } else { 0.0 };
        let mut starts = Vec::new();
        match self.eta {
            EtaMode::Fixed(eta) => {
                // G_max μ² + ημ + (1 − G_max) = 0
                let disc = eta * eta + 4.0 * g_hi * (g_hi - 1.0);
                let mu = if disc >= 0.0 {
                    (disc.sqrt() - eta) / (2.0 * g_hi)
                } else {
                    0.0
                };
                let mu = mu.clamp(0.0, 0.99);
                starts.push(self.pack(mu, eta, phi0));
                starts.push(self.pack(0.0, eta, phi0));
                // G_min(1 − μ²) = |1 − s| leaves s on either side of 1
                if eta > 0.0 {
                    for s in [1.0 - g_lo * (1.0 - mu * mu), 1.0 + g_lo * (1.0 - mu * mu)] {
                        starts.push(self.pack((s / eta).clamp(-0.99, 0.99), eta, phi0));
                    }
                }
            }
            EtaMode::Free(_) => {
                // G_max/G_min = (1 + s)/|1 − s| has one root on each side of s = 1.
                let ratio = (g_hi / g_lo).max(1.0 + 1e-12);
                for s in [(ratio - 1.0) / (ratio + 1.0), (ratio + 1.0) / (ratio - 1.0)] {
                    let one_minus = ((1.0 + s) / g_hi).min(1.0);
                    let mu = (1.0 - one_minus).max(0.0).sqrt().min(0.99);
                    let mu = mu.max(1e-3);
                    starts.push(self.pack(mu, s / mu, phi0));
                }
            }
        }
        starts
    }

    /// The dual solution on `branch` when `params` lies on the other side of
    /// `|μη| = 1`; `Ok(None)` when already there, `Err` when the dual does
    /// not exist.
    fn dual_on_branch(
        &self,
        params: &DVector<f64>,
        branch: Branch,
    ) -> std::result::Result<Option<DVector<f64>>, String> {
        let (mu, eta, phi0) = self.unpack(params);
        let s = mu * eta;
        let above = s.abs() > 1.0;
        if above == (branch == Branch::Above) || s == 0.0 {
            return Ok(None);
        }
        let mu2 = 1.0 - (1.0 - mu * mu) / s.abs();
        if !(mu2 > 0.0) {
            return Err("no solution with μη ≥ 1 exists for this curve".to_string());
        }
        let mu_dual = mu2.sqrt().copysign(mu);
        Ok(Some(self.pack(mu_dual, 1.0 / (s * mu_dual), phi0)))
    }

    /// Reported names, values (μ ≥ 0 where a sign can be absorbed) and
    /// covariance with the same sign changes applied.
    fn report(&self, p: &DVector<f64>, cov: DMatrix<f64>) -> (Vec<String>, Vec<f64>, DMatrix<f64>) {
        let (mut mu, mut eta, mut phi0) = self.unpack(p);
        let mut sign = DVector::from_element(self.len(), 1.0);
        if mu < 0.0 && self.eta_index().is_some() {
            mu = -mu;
            eta = -eta;
            sign[0] = -1.0;
            sign[1] = -1.0;
        }
        if self.offset {
            if mu < 0.0 {
                mu = -mu;
                sign[0] = -sign[0];
                phi0 += PI;
            } else if eta < 0.0 {
                eta = -eta;
                sign[1] = -sign[1];
                phi0 += PI;
            }
            phi0 = wrap(phi0);
        }
        let d = DMatrix::from_diagonal(&sign);
        let cov = &d * cov * &d;

        // η is always reported; with fixed η it carries zero variance.
        let mut names = vec!["mu".to_string(), "eta".to_string()];
        let mut values = vec![mu, eta];
        let full = 2 + self.offset as usize;
        let mut full_cov = DMatrix::zeros(full, full);
        let map: Vec<usize> = (0..self.len())
            .map(|k| match (k, self.eta_index()) {
                (0, _) => 0,
                (1, Some(_)) => 1,
                _ => 2,
            })
            .collect();
        for a in 0..self.len() {
            for b in 0..self.len() {
                full_cov[(map[a], map[b])] = cov[(a, b)];
            }
        }
        if self.offset {
            names.push("phi0".to_string());
            values.push(phi0);
        }
        (names, values, full_cov)
    }
}

fn argmax(v: &[f64]) -> usize {
    v.iter()
        .enumerate()
        .fold(
            (0, f64::NEG_INFINITY),
            |(bk, bv), (k, &x)| if x > bv { (k, x) } else { (bk, bv) },
        )
        .0
}

/// Wraps to (−π, π].
fn wrap(a: f64) -> f64 {
    let w = a.rem_euclid(2.0 * PI);
    if w > PI {
        w - 2.0 * PI
    } else {
        w
    }
}

/// Summary of repeated fits to noisy synthetic gain curves.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GainMonteCarlo {
    pub mu_true: f64,
    pub noise: f64,
    /// Fitted μ per draw, NaN where the fit did not converge.
    pub mu_fit: Vec<f64>,
    pub tolerance: f64,
    pub n_within: usize,
}

impl GainMonteCarlo {
    pub fn n_draws(&self) -> usize {
        self.mu_fit.len()
    }
}

/// Fits `n_draws` copies of the model curve at `(mu, eta)` over `phi`, each
/// multiplied point-wise by `1 + noise·N(0, 1)`. Draw `k` uses random stream
/// `k` of `seed`, so the result does not depend on the thread count.
/// `n_within` counts fits with `|μ̂ − μ| ≤ tolerance·μ`.
#[allow(clippy::too_many_arguments)]
pub fn gain_fit_monte_carlo(
    mu: f64,
    eta: f64,
    phi: &[f64],
    noise: f64,
    n_draws: usize,
    seed: u64,
    tolerance: f64,
    options: &GainFitOptions,
) -> Result<GainMonteCarlo> {
    let clean: Vec<f64> = phi
        .iter()
        .map(|&p| crate::analytic::phase_gain(mu, eta, p))
        .collect::<Result<_>>()?;
    let normal = Normal::new(0.0, noise).map_err(|e| Error::invalid("noise", e.to_string()))?;
    let mu_fit: Vec<f64> = (0..n_draws)
        .into_par_iter()
        .map(|k| {
            let mut rng = trajectory_rng(seed, k);
            let noisy: Vec<f64> = clean.iter().map(|g| g * (1.0 + normal.sample(&mut rng))).collect();
            match fit_gain_curve(phi, &noisy, options) {
                Ok(f) if f.converged => f.value("mu"),
                _ => f64::NAN,
            }
        })
        .collect();
    let n_within = mu_fit.iter().filter(|m| (*m - mu).abs() <= tolerance * mu).count();
    Ok(GainMonteCarlo {
        mu_true: mu,
        noise,
        mu_fit,
        tolerance,
        n_within,
    })
}

/// Model gain at each phase, for plotting fitted curves.
pub fn gain_curve(mu: f64, eta: f64, phi0: f64, phi: &[f64]) -> Vec<f64> {
    phi.iter().map(|&p| gain_unchecked(mu, eta, p + phi0)).collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sde::phase_grid;

    fn curve(mu: f64, eta: f64, phi0: f64, n: usize) -> (Vec<f64>, Vec<f64>) {
        let phi = phase_grid(n);
        let g = gain_curve(mu, eta, phi0, &phi);
        (phi, g)
    }

    #[test]
    fn round_trip_free_eta() {
        let (phi, g) = curve(0.042, 24.0, 0.0, 20);
        let f = fit_gain_curve(&phi, &g, &GainFitOptions::free_eta(Branch::Above)).unwrap();
        assert!(f.converged, "{}", f.message);
        assert!((f.value("mu") / 0.042 - 1.0).abs() < 1e-3, "{}", f.value("mu"));
        assert!((f.value("eta") / 24.0 - 1.0).abs() < 1e-3);
    }

    #[test]
    fn free_eta_dual_fits_equally_well() {
        let (mu, eta) = (0.042, 24.0);
        let (phi, g) = curve(mu, eta, 0.0, 20);
        let f = fit_gain_curve(&phi, &g, &GainFitOptions::free_eta(Branch::Below)).unwrap();
        assert!(f.converged, "{}", f.message);
        let s = mu * eta;
        let mu_dual = (1.0 - (1.0 - mu * mu) / s).sqrt();
        assert!((f.value("mu") / mu_dual - 1.0).abs() < 1e-6);
        assert!((f.value("mu") * f.value("eta") * s - 1.0).abs() < 1e-6);
        // a shallow curve has no partner above μη = 1
        let (phi, g) = curve(0.3, 1.0, 0.0, 20);
        let f = fit_gain_curve(&phi, &g, &GainFitOptions::free_eta(Branch::Above)).unwrap();
        assert!(!f.converged);
    }

    #[test]
    fn round_trip_fixed_eta() {
        let (phi, g) = curve(0.3, 2.0, 0.0, 12);
        let f = fit_gain_curve(&phi, &g, &GainFitOptions::fixed_eta(2.0)).unwrap();
        assert!(f.converged, "{}", f.message);
        assert!((f.value("mu") / 0.3 - 1.0).abs() < 1e-9);
        assert_eq!(f.std_error("eta"), 0.0);
    }

    #[test]
    fn offset_is_absorbed() {
        let (phi, g) = curve(0.2, 3.0, 0.7, 16);
        let f = fit_gain_curve(&phi, &g, &GainFitOptions::fixed_eta(3.0).with_phase_offset()).unwrap();
        assert!(f.converged, "{}", f.message);
        assert!((f.value("mu") - 0.2).abs() < 1e-9);
        assert!((f.value("phi0") - 0.7).abs() < 1e-9);
    }

    #[test]
    fn flat_curve_with_free_eta_is_not_converged() {
        let phi = phase_grid(10);
        let g = vec![1.0; 10];
        let f = fit_gain_curve(&phi, &g, &GainFitOptions::default()).unwrap();
        assert!(!f.converged);
        let f = fit_gain_curve(&phi, &g, &GainFitOptions::fixed_eta(5.0)).unwrap();
        assert!(f.converged, "{}", f.message);
        assert!(f.value("mu").abs() < 1e-12);
    }

    #[test]
    fn preconditions() {
        let phi: Vec<f64> = (0..10).map(|k| k as f64 * 0.1).collect();
        let g = vec![1.0; 10];
        assert!(fit_gain_curve(&phi, &g, &GainFitOptions::default()).is_err());
        let (phi, g) = curve(0.1, 1.0, 0.0, 6);
        assert!(fit_gain_curve(&phi, &g, &GainFitOptions::default()).is_err());
    }

    #[test]
    fn monte_carlo_is_reproducible() {
        let phi = phase_grid(20);
        let opts = GainFitOptions::fixed_eta(24.0);
        let a = gain_fit_monte_carlo(0.042, 24.0, &phi, 0.02, 8, 5, 0.05, &opts).unwrap();
        let b = gain_fit_monte_carlo(0.042, 24.0, &phi, 0.02, 8, 5, 0.05, &opts).unwrap();
        assert_eq!(a, b);
        assert_eq!(a.n_draws(), 8);
    }
}
