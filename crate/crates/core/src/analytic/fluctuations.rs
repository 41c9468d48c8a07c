//! Linearised fluctuation dynamics around a mean state: drift matrices of
//! the two quadrature sectors and the thermal diffusion matrix.
//!
//! Quadratures are defined in the canonical pump frame, where `i·Ā_S` is
//! real and positive. In that frame the `α` (in-phase) and `β`
//! (out-of-phase) fluctuations obey separate real 3×3 linear systems
//! `δα̇ = M_α δα + v_α`, `δβ̇ = M_β δβ + v_β`, ordered (i, j, S).

use std::f64::consts::FRAC_PI_2;

use nalgebra::{Matrix2, Matrix3};
use serde::Serialize;

use crate::analytic::gain::Complex64;
use crate::error::Result;
use crate::model::{normalized_pump, SystemConfig};

/// Magnitudes of the mean amplitudes |Ā_i|, |Ā_j|, |Ā_S|, m.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct MeanAmplitudes {
    pub i: f64,
    pub j: f64,
    pub s: f64,
}

impl MeanAmplitudes {
    /// Pure squeezing configuration: membranes at rest on average, substrate
    /// at the pump amplitude.
    pub fn squeezing(config: &SystemConfig) -> Self {
        Self {
            i: 0.0,
            j: 0.0,
            s: config.pump_amplitude(),
        }
    }

    /// Complex mean amplitudes in the canonical frame,
    /// `(−i|Ā_i|, +i|Ā_j|, −i|Ā_S|)`.
    pub fn canonical_phasors(&self) -> [Complex64; 3] {
        [
            Complex64::new(0.0, -self.i),
            Complex64::new(0.0, self.j),
            Complex64::new(0.0, -self.s),
        ]
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DriftMatrices {
    pub m_alpha: Matrix3<f64>,
    pub m_beta: Matrix3<f64>,
    pub mean_amps: MeanAmplitudes,
}

impl DriftMatrices {
    /// Largest real part over the eigenvalues of both sectors, 1/s.
    pub fn max_growth_rate(&self) -> f64 {
        max_real_eigenvalue(&self.m_alpha).max(max_real_eigenvalue(&self.m_beta))
    }

    pub fn is_hurwitz(&self) -> bool {
        self.max_growth_rate() < 0.0
    }

    /// All |Re λ| and |Im λ| of both sectors that are nonzero.
    pub(crate) fn rate_scales(&self) -> Vec<f64> {
        let mut out = Vec::new();
        for m in [&self.m_alpha, &self.m_beta] {
            for ev in m.complex_eigenvalues().iter() {
                for v in [ev.re.abs(), ev.im.abs()] {
                    if v > 0.0 && v.is_finite() {
                        out.push(v);
                    }
                }
            }
        }
        out
    }
}

/// Thermal force diffusion, `diag(γ_k k_B T / (m_k ω_k²))`, m²/s.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiffusionMatrix(pub Matrix3<f64>);

impl DiffusionMatrix {
    pub fn diagonal(&self) -> [f64; 3] {
        [self.0[(0, 0)], self.0[(1, 1)], self.0[(2, 2)]]
    }
}

/// Builds `M_α` and `M_β`:
///
/// ```text
///        ⎛ −γ_i        ±c_i |Ā_S|   c_i |Ā_j| ⎞
/// M = ½ ⎜ ±c_j |Ā_S|  −γ_j        −c_j |Ā_i| ⎟ ,  c_k = γ_k χ_k g / 2
///        ⎝ −c_S |Ā_j|   c_S |Ā_i|   −γ_S      ⎠
/// ```
/// with the upper sign for `α` and the lower for `β`.
pub fn drift_matrices(config: &SystemConfig, mean: &MeanAmplitudes) -> DriftMatrices {
    let g = config.g();
    let c = |m: &crate::model::ModeParams| m.gamma() * m.susceptibility() * g / 2.0;
    let (ci, cj, cs) = (c(config.mode_i()), c(config.mode_j()), c(config.substrate()));
    let (gi, gj, gs) = (
        config.mode_i().gamma(),
        config.mode_j().gamma(),
        config.substrate().gamma(),
    );
    let build = |sign: f64| {
        0.5 * Matrix3::new(
            -gi,
            sign * ci * mean.s,
            ci * mean.j,
            sign * cj * mean.s,
            -gj,
            -cj * mean.i,
            -cs * mean.j,
            cs * mean.i,
            -gs,
        )
    };
    DriftMatrices {
        m_alpha: build(1.0),
        m_beta: build(-1.0),
        mean_amps: *mean,
    }
}

pub fn diffusion_matrix(config: &SystemConfig) -> DiffusionMatrix {
    let kt = config.kt();
    let d = |m: &crate::model::ModeParams| m.gamma() * kt / (m.mass() * m.omega() * m.omega());
    DiffusionMatrix(Matrix3::from_diagonal(&nalgebra::Vector3::new(
        d(config.mode_i()),
        d(config.mode_j()),
        d(config.substrate()),
    )))
}

/// Largest real part of the eigenvalues of the membrane 2×2 block of `M_α`
/// in the squeezing configuration. Negative below threshold, zero at μ = 1.
pub fn instability_growth_rate(config: &SystemConfig) -> Result<f64> {
    let _ = normalized_pump(config)?;
    let m = drift_matrices(config, &MeanAmplitudes::squeezing(config)).m_alpha;
    let block = Matrix2::new(m[(0, 0)], m[(0, 1)], m[(1, 0)], m[(1, 1)]);
    Ok(max_real_eigenvalue_2x2(&block))
}

pub(crate) fn max_real_eigenvalue_2x2(m: &Matrix2<f64>) -> f64 {
    let half_trace = 0.5 * (m[(0, 0)] + m[(1, 1)]);
    let half_diff = 0.5 * (m[(0, 0)] - m[(1, 1)]);
    let disc = half_diff * half_diff + m[(0, 1)] * m[(1, 0)];
    if disc >= 0.0 {
        half_trace + disc.sqrt()
    } else {
        half_trace
    }
}

pub(crate) fn max_real_eigenvalue(m: &Matrix3<f64>) -> f64 {
    m.complex_eigenvalues()
        .iter()
        .map(|e| e.re)
        .fold(f64::NEG_INFINITY, f64::max)
}

/// Phase rotation θ applied to both membrane amplitudes
/// (`A → A e^{−iθ}`) that maps a pump of phase `pump_phase` onto the
/// canonical frame.
pub fn canonical_rotation(pump_phase: f64) -> f64 {
    0.5 * (pump_phase + FRAC_PI_2)
}

/// Quadratures `(α, β)` of `amplitude` in a frame rotated by `theta`.
pub fn rotate_quadratures(amplitude: Complex64, theta: f64) -> (f64, f64) {
    let r = amplitude * Complex64::from_polar(1.0, -theta);
    (r.re, r.im)
}
