//! Zero-time second moments of the quadrature fluctuations and the
//! cross-quadrature statistics built from them.

use std::f64::consts::PI;

use nalgebra::{Matrix3, SMatrix, SVector};
use serde::Serialize;

use crate::analytic::fluctuations::{diffusion_matrix, drift_matrices, DiffusionMatrix, MeanAmplitudes};
use crate::analytic::integrate::integrate;
use crate::analytic::spectrum::{ensure_stable, sector_spectrum};
use crate::error::{Error, Result};
use crate::model::{loss_asymmetry, normalized_pump, SystemConfig};

/// How a [`CorrelationSet`] was obtained.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum CorrelationSource {
    ClosedForm,
    Lyapunov,
    /// Stationary covariance of the Euler–Maruyama chain with step `dt`.
    DiscreteLyapunov {
        dt: f64,
    },
    Spectrum,
    BandLimited {
        bandwidth_hz: f64,
    },
    Ensemble {
        n_traj: usize,
    },
}

/// Covariances `⟨δα_k δα_l⟩`, `⟨δβ_k δβ_l⟩` (m²), ordered (i, j, S), with
/// the thermal amplitude of each mode for normalization.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CorrelationSet {
    pub c_alpha: Matrix3<f64>,
    pub c_beta: Matrix3<f64>,
    pub x_th: [f64; 3],
    pub source: CorrelationSource,
}

impl CorrelationSet {
    pub(crate) fn new(
        config: &SystemConfig,
        c_alpha: Matrix3<f64>,
        c_beta: Matrix3<f64>,
        source: CorrelationSource,
    ) -> Self {
        Self {
            c_alpha,
            c_beta,
            x_th: thermal_amplitudes(config),
            source,
        }
    }

    /// `C̃_kl = C_kl / (x_th,k x_th,l)`.
    pub fn normalized_alpha(&self) -> Matrix3<f64> {
        normalize(&self.c_alpha, &self.x_th)
    }

    pub fn normalized_beta(&self) -> Matrix3<f64> {
        normalize(&self.c_beta, &self.x_th)
    }

    /// Largest relative deviation between matching entries of the
    /// normalized matrices, relative to the largest normalized entry.
    pub fn max_relative_deviation(&self, other: &CorrelationSet) -> f64 {
        let mut worst = 0.0f64;
        for (a, b) in [
            (self.normalized_alpha(), other.normalized_alpha()),
            (self.normalized_beta(), other.normalized_beta()),
        ] {
            let scale = a.amax().max(b.amax());
            worst = worst.max((a - b).amax() / scale);
        }
        worst
    }

    /// Largest relative deviation over the membrane block, entry by entry
    /// (each entry compared against its own magnitude; cross terms below
    /// `floor` in normalized units are compared absolutely).
    pub fn membrane_deviation(&self, other: &CorrelationSet, floor: f64) -> f64 {
        let mut worst = 0.0f64;
        for (a, b) in [
            (self.normalized_alpha(), other.normalized_alpha()),
            (self.normalized_beta(), other.normalized_beta()),
        ] {
            for r in 0..2 {
                for c in 0..2 {
                    let scale = a[(r, c)].abs().max(floor);
                    worst = worst.max((a[(r, c)] - b[(r, c)]).abs() / scale);
                }
            }
        }
        worst
    }
}

fn normalize(c: &Matrix3<f64>, x: &[f64; 3]) -> Matrix3<f64> {
    Matrix3::from_fn(|r, col| c[(r, col)] / (x[r] * x[col]))
}

pub(crate) fn thermal_amplitudes(config: &SystemConfig) -> [f64; 3] {
    let t = config.temperature();
    [
        config.mode_i().thermal_amplitude(t),
        config.mode_j().thermal_amplitude(t),
        config.substrate().thermal_amplitude(t),
    ]
}

/// Membrane correlations from the closed-form expressions in `μ`, `δ` and
/// the frequency ratio, valid when the membranes have zero mean amplitude.
/// Substrate entries are thermal and uncorrelated with the membranes.
pub fn correlations_closed_form(config: &SystemConfig) -> Result<CorrelationSet> {
    let mu = normalized_pump(config)?;
    if mu >= 1.0 {
        return Err(Error::AboveThreshold { mu });
    }
    let (mi, mj) = (config.mode_i(), config.mode_j());
    let (gi, gj) = (mi.gamma(), mj.gamma());
    let (wi, wj) = (mi.omega(), mj.omega());
    let delta = loss_asymmetry(config);
    let gbar = 0.5 * (gi + gj);
    let kt = config.kt();
    let ki = mi.mass() * wi * wi;
    let kj = mj.mass() * wj * wj;
    let mu2 = mu * mu;
    let pre = 1.0 / (1.0 - mu2);

    let aii = kt / ki * pre * (1.0 - delta * mu2 + mu2 * gj / (2.0 * gbar) * (wi / wj - 1.0));
    let ajj = kt / kj * pre * (1.0 + delta * mu2 + mu2 * gi / (2.0 * gbar) * (wj / wi - 1.0));
    let aij = kt / (ki.sqrt() * kj.sqrt())
        * (mu * (1.0 - delta * delta).sqrt() / (2.0 * (1.0 - mu2)) * ((wi / wj).sqrt() + (wj / wi).sqrt()));
    let s = config.substrate();
    let ass = kt / (s.mass() * s.omega() * s.omega());

    let c_alpha = Matrix3::new(aii, aij, 0.0, aij, ajj, 0.0, 0.0, 0.0, ass);
    let mut c_beta = c_alpha;
    c_beta[(0, 1)] = -aij;
    c_beta[(1, 0)] = -aij;
    Ok(CorrelationSet::new(
        config,
        c_alpha,
        c_beta,
        CorrelationSource::ClosedForm,
    ))
}

/// Stationary covariance from `M C + C Mᵀ + D = 0` for both sectors.
pub fn correlations_lyapunov(config: &SystemConfig, mean: &MeanAmplitudes) -> Result<CorrelationSet> {
    let drift = drift_matrices(config, mean);
    ensure_stable(&drift)?;
    let d = diffusion_matrix(config);
    let x = thermal_amplitudes(config);
    let c_alpha = solve_lyapunov(&drift.m_alpha, &d, &x, 0.0)?;
    let c_beta = solve_lyapunov(&drift.m_beta, &d, &x, 0.0)?;
    Ok(CorrelationSet::new(
        config,
        c_alpha,
        c_beta,
        CorrelationSource::Lyapunov,
    ))
}

/// Stationary covariance of the Euler–Maruyama recursion
/// `δ_{n+1} = (I + MΔ) δ_n + √Δ ξ`, i.e. `C = (I+MΔ) C (I+MΔ)ᵀ + DΔ`.
/// Differs from [`correlations_lyapunov`] by `O(γΔ)`.
pub fn correlations_lyapunov_euler(config: &SystemConfig, mean: &MeanAmplitudes, dt: f64) -> Result<CorrelationSet> {
    if !(dt.is_finite() && dt > 0.0) {
        return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
    }
    let drift = drift_matrices(config, mean);
    let d = diffusion_matrix(config);
    let x = thermal_amplitudes(config);
    let c_alpha = solve_lyapunov(&drift.m_alpha, &d, &x, dt)?;
    let c_beta = solve_lyapunov(&drift.m_beta, &d, &x, dt)?;
    if [c_alpha, c_beta].iter().any(|c| (0..3).any(|k| !(c[(k, k)] > 0.0))) {
        return Err(Error::Unstable {
            growth_rate: drift.max_growth_rate(),
        });
    }
    Ok(CorrelationSet::new(
        config,
        c_alpha,
        c_beta,
        CorrelationSource::DiscreteLyapunov { dt },
    ))
}

/// Solves `(M C + C Mᵀ) + Δ M C Mᵀ + D = 0`, which is the continuous
/// equation for `Δ = 0` and the Euler–Maruyama fixed point divided by `Δ`
/// otherwise. Works in units scaled by `x` so all modes are O(1).
pub(crate) fn solve_lyapunov(m: &Matrix3<f64>, d: &DiffusionMatrix, x: &[f64; 3], dt: f64) -> Result<Matrix3<f64>> {
    // scaled variables y_k = δ_k / x_k: M̃ = X⁻¹ M X, D̃ = X⁻¹ D X⁻¹
    let ms = Matrix3::from_fn(|r, c| m[(r, c)] * x[c] / x[r]);
    let ds = Matrix3::from_fn(|r, c| d.0[(r, c)] / (x[r] * x[c]));
    let eye = Matrix3::<f64>::identity();
    let kron = |a: &Matrix3<f64>, b: &Matrix3<f64>| {
        SMatrix::<f64, 9, 9>::from_fn(|r, c| a[(r / 3, c / 3)] * b[(r % 3, c % 3)])
    };
    // column-major vec: vec(A C Bᵀ) = (B ⊗ A) vec(C)
    let op = kron(&eye, &ms) + kron(&ms, &eye) + kron(&ms, &ms) * dt;
    let rhs = -SVector::<f64, 9>::from_iterator(ds.iter().copied());
    let sol = op.lu().solve(&rhs).ok_or(Error::Singular("Lyapunov operator"))?;
    let cs = Matrix3::from_iterator(sol.iter().copied());
    let cs = 0.5 * (cs + cs.transpose());
    Ok(Matrix3::from_fn(|r, c| cs[(r, c)] * x[r] * x[c]))
}

/// Correlations by integrating the spectrum over all frequencies.
pub fn correlations_from_spectrum(config: &SystemConfig, mean: &MeanAmplitudes) -> Result<CorrelationSet> {
    integrate_spectrum(config, mean, None)
}

/// Correlations restricted to `ω ∈ [−πΔν, πΔν]`, a band of total width
/// `bandwidth_hz`, for the pure squeezing configuration.
pub fn band_limited_correlations(config: &SystemConfig, bandwidth_hz: f64) -> Result<CorrelationSet> {
    if !(bandwidth_hz.is_finite() && bandwidth_hz > 0.0) {
        return Err(Error::invalid(
            "bandwidth_hz",
            format!("must be > 0, got {bandwidth_hz}"),
        ));
    }
    integrate_spectrum(config, &MeanAmplitudes::squeezing(config), Some(PI * bandwidth_hz))
}

const SPECTRUM_REL_TOL: f64 = 1e-10;
const SPECTRUM_MAX_SEGMENTS: usize = 4000;

fn integrate_spectrum(config: &SystemConfig, mean: &MeanAmplitudes, cutoff: Option<f64>) -> Result<CorrelationSet> {
    let drift = drift_matrices(config, mean);
    ensure_stable(&drift)?;
    let d = diffusion_matrix(config);
    let x = thermal_amplitudes(config);

    // Normalized integrand so that all entries are O(1) per unit rate.
    let eval = |w: f64| -> [f64; 18] {
        let a = sector_spectrum(&drift.m_alpha, &d, w);
        let b = sector_spectrum(&drift.m_beta, &d, w);
        let mut out = [0.0; 18];
        for r in 0..3 {
            for c in 0..3 {
                let norm = x[r] * x[c];
                out[3 * r + c] = 2.0 * a[(r, c)].re / norm;
                out[9 + 3 * r + c] = 2.0 * b[(r, c)].re / norm;
            }
        }
        out
    };

    let scales = drift.rate_scales();
    let fastest = scales.iter().copied().fold(0.0, f64::max);
    let upper = cutoff.unwrap_or(64.0 * fastest);
    let mut breaks = vec![0.0, upper];
    for &s in &scales {
        let mut v = s / 64.0;
        while v <= 64.0 * s {
            if v < upper {
                breaks.push(v);
            }
            v *= 4.0;
        }
    }
    breaks.sort_by(f64::total_cmp);
    breaks.dedup_by(|a, b| (*a - *b).abs() <= 1e-12 * b.abs());

    let mut total = integrate(eval, &breaks, SPECTRUM_REL_TOL, 0.0, SPECTRUM_MAX_SEGMENTS);
    if cutoff.is_none() {
        // ω = W/u maps [W, ∞) onto (0, 1].
        let tail = integrate(
            |u: f64| {
                let w = upper / u;
                let mut v = eval(w);
                let jac = upper / (u * u);
                v.iter_mut().for_each(|e| *e *= jac);
                v
            },
            &[0.0, 1.0],
            SPECTRUM_REL_TOL,
            0.0,
            200,
        );
        for (t, v) in total.iter_mut().zip(tail) {
            *t += v;
        }
    }

    let rebuild = |offset: usize| {
        let cs = Matrix3::from_fn(|r, c| total[offset + 3 * r + c] * x[r] * x[c]);
        0.5 * (cs + cs.transpose())
    };
    let source = match cutoff {
        None => CorrelationSource::Spectrum,
        Some(w) => CorrelationSource::BandLimited { bandwidth_hz: w / PI },
    };
    Ok(CorrelationSet::new(config, rebuild(0), rebuild(9), source))
}

/// Standard deviations of the cross-quadratures
/// `x_{a,b} = (α̃_i ± α̃_j)/√2`, `y_{a,b} = (β̃_i ± β̃_j)/√2` built from
/// thermally normalized quadratures. `x_a`, `y_b` are the amplified pair and
/// `x_b`, `y_a` the squeezed pair.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CrossQuadratureStats {
    pub std_xa: f64,
    pub std_xb: f64,
    pub std_ya: f64,
    pub std_yb: f64,
}

impl CrossQuadratureStats {
    pub fn variances(&self) -> [f64; 4] {
        [self.std_xa, self.std_xb, self.std_ya, self.std_yb].map(|s| s * s)
    }

    /// `−10 log₁₀ Var` for (x_a, x_b, y_a, y_b); positive means squeezed.
    pub fn squeezing_db(&self) -> [f64; 4] {
        self.variances().map(|v| -10.0 * v.log10())
    }
}

pub fn cross_quadrature_stats(correlations: &CorrelationSet) -> CrossQuadratureStats {
    let a = correlations.normalized_alpha();
    let b = correlations.normalized_beta();
    let plus = |c: &Matrix3<f64>| 0.5 * (c[(0, 0)] + c[(1, 1)] + 2.0 * c[(0, 1)]);
    let minus = |c: &Matrix3<f64>| 0.5 * (c[(0, 0)] + c[(1, 1)] - 2.0 * c[(0, 1)]);
    CrossQuadratureStats {
        std_xa: plus(&a).max(0.0).sqrt(),
        std_xb: minus(&a).max(0.0).sqrt(),
        std_ya: plus(&b).max(0.0).sqrt(),
        std_yb: minus(&b).max(0.0).sqrt(),
    }
}
