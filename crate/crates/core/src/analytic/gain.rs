//! Below-threshold coherent response: steady-state amplitudes under weak
//! drives and the phase-dependent gain of the signal mode.

use std::f64::consts::{FRAC_PI_2, PI};

use nalgebra::Complex;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{normalized_pump, SystemConfig};

pub type Complex64 = Complex<f64>;

/// Slowly varying complex amplitude `A` of `z = A e^{-iωt}`, m.
pub type ComplexAmplitude = Complex64;

/// Signal drive used for the phase-gain measurement, in units of the
/// signal mode's thermal amplitude.
pub const SIGNAL_DRIVE_IN_XTH: f64 = 35.0;
/// Idler drive used for the phase-gain measurement, in units of the idler
/// mode's thermal amplitude.
pub const IDLER_DRIVE_IN_XTH: f64 = 400.0;
/// Normalized pump amplitudes of the phase-gain measurement.
pub const MEASURED_MU: [f64; 4] = [0.0, 0.021, 0.038, 0.042];

/// Slowly varying force amplitude on one membrane mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Drive {
    /// |F̃|, N.
    pub magnitude: f64,
    /// arg F̃, rad.
    pub phase: f64,
}

impl Drive {
    pub fn new(magnitude: f64, phase: f64) -> Self {
        Self { magnitude, phase }
    }

    pub fn off() -> Self {
        Self::new(0.0, 0.0)
    }

    pub fn as_complex(&self) -> Complex64 {
        Complex64::from_polar(self.magnitude, self.phase)
    }
}

/// Forces that produce unpumped amplitudes `x_i`, `x_j` (m) on resonance.
pub fn drives_for_amplitudes(config: &SystemConfig, x_i: f64, x_j: f64) -> (Drive, Drive) {
    (
        Drive::new(x_i / config.mode_i().susceptibility(), 0.0),
        Drive::new(x_j / config.mode_j().susceptibility(), 0.0),
    )
}

/// Drives matching the phase-gain measurement: idler at 400 x_th,i and
/// signal at 35 x_th,j.
pub fn measured_drives(config: &SystemConfig) -> (Drive, Drive) {
    let t = config.temperature();
    drives_for_amplitudes(
        config,
        IDLER_DRIVE_IN_XTH * config.mode_i().thermal_amplitude(t),
        SIGNAL_DRIVE_IN_XTH * config.mode_j().thermal_amplitude(t),
    )
}

/// Relative phase entering the gain law, `φ_S − φ_i − φ_j + π/2`, wrapped
/// to `[0, 2π)`. At zero the down-converted field opposes the direct
/// response (maximal deamplification).
pub fn gain_phase(pump_phase: f64, force_i: &Drive, force_j: &Drive) -> f64 {
    (pump_phase - force_i.phase - force_j.phase + FRAC_PI_2).rem_euclid(2.0 * PI)
}

/// Pump phase that realises gain phase `phi` for the given drives.
pub fn pump_phase_for(phi: f64, force_i: &Drive, force_j: &Drive) -> f64 {
    phi + force_i.phase + force_j.phase - FRAC_PI_2
}

/// Steady-state amplitudes `(A_i, A_j)` of the driven, pumped membrane pair.
pub fn steady_state_amplitudes(
    config: &SystemConfig,
    force_i: &Drive,
    force_j: &Drive,
) -> Result<(ComplexAmplitude, ComplexAmplitude)> {
    let mu = normalized_pump(config)?;
    if mu >= 1.0 {
        return Err(Error::AboveThreshold { mu });
    }
    let chi_i = config.mode_i().susceptibility();
    let chi_j = config.mode_j().susceptibility();
    let cross = mu * (chi_i * chi_j).sqrt();
    let interference = Complex64::from_polar(1.0, gain_phase(config.pump_phase(), force_i, force_j));
    let denom = 1.0 - mu * mu;
    let a_i = Complex64::from_polar(1.0, force_i.phase + FRAC_PI_2)
        * (chi_i * force_i.magnitude - cross * force_j.magnitude * interference)
        / denom;
    let a_j = Complex64::from_polar(1.0, force_j.phase + FRAC_PI_2)
        * (chi_j * force_j.magnitude - cross * force_i.magnitude * interference)
        / denom;
    Ok((a_i, a_j))
}

/// Phase-dependent signal gain
/// `G = sqrt(1 + μ²η² − 2μη cos φ) / (1 − μ²)`.
pub fn phase_gain(mu: f64, eta: f64, phi: f64) -> Result<f64> {
    if !(0.0..1.0).contains(&mu) {
        if mu >= 1.0 {
            return Err(Error::AboveThreshold { mu });
        }
        return Err(Error::invalid("mu", format!("must be >= 0, got {mu}")));
    }
    if !(eta >= 0.0) {
        return Err(Error::invalid("eta", format!("must be >= 0, got {eta}")));
    }
    Ok(gain_unchecked(mu, eta, phi))
}

#[inline]
pub(crate) fn gain_unchecked(mu: f64, eta: f64, phi: f64) -> f64 {
    let s = mu * eta;
    // 1 + s² − 2s cos φ written as (1 − s)² + 2s(1 − cos φ) to keep the
    // deamplified branch accurate when s ≈ 1.
    let radicand = (1.0 - s).powi(2) + 4.0 * s * (0.5 * phi).sin().powi(2);
    radicand.max(0.0).sqrt() / (1.0 - mu * mu)
}

/// `η = sqrt(χ_i/χ_j) |F̃_i|/|F̃_j|`, identical to
/// `sqrt(χ_j/χ_i) x̄_i/x̄_j` with `x̄ = χ|F̃|`.
pub fn eta_from_drives(config: &SystemConfig, force_i: &Drive, force_j: &Drive) -> Result<f64> {
    if !(force_j.magnitude > 0.0) {
        return Err(Error::ZeroSignalDrive);
    }
    let chi_i = config.mode_i().susceptibility();
    let chi_j = config.mode_j().susceptibility();
    Ok((chi_i / chi_j).sqrt() * force_i.magnitude / force_j.magnitude)
}

/// Range of `μη` for which `G(0) < g_max` at pump `mu`.
pub fn deamplification_window(mu: f64, g_max: f64) -> (f64, f64) {
    let half = g_max * (1.0 - mu * mu);
    (1.0 - half, 1.0 + half)
}
