//! Phase-dependent gain measured by direct integration: the pump amplitude
//! is held fixed, both membranes are driven, and each phase is integrated
//! to its steady state.

use rayon::prelude::*;
use serde::Serialize;

use crate::analytic::gain::{pump_phase_for, Complex64, Drive};
use crate::error::{Error, Result};
use crate::model::{normalized_pump, SystemConfig};
use crate::sde::deterministic::{Amplitudes, Method, ModeDrive, ThreeModeSystem};

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainSweepPlan {
    /// Step, s. `None` means `1/(50 γ_max)` over the membrane modes.
    pub dt: Option<f64>,
    /// Minimum integration time in units of `1/γ_min` (membranes).
    pub min_duration: f64,
    /// Maximum integration time in units of `1/γ_min`.
    pub max_duration: f64,
    /// Target for `|Ȧ| / (γ_min |A|)` over both membranes.
    pub tolerance: f64,
    pub method: Method,
}

impl Default for GainSweepPlan {
    fn default() -> Self {
        Self {
            dt: None,
            min_duration: 20.0,
            max_duration: 5000.0,
            tolerance: 1e-11,
            method: Method::Rk4,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GainSample {
    /// Gain phase `φ_S − φ_i − φ_j + π/2`, rad.
    pub phi: f64,
    pub pump_phase: f64,
    pub mu: f64,
    /// `|A_j(φ)| / |A_j(μ = 0)|`.
    pub gain_signal: f64,
    /// `|A_i(φ)| / |A_i(μ = 0)|`; NaN when the idler is not driven.
    pub gain_idler: f64,
    pub a_i: Complex64,
    pub a_j: Complex64,
    /// Integration time used, s.
    pub settle_time: f64,
}

struct Settled {
    amplitudes: Amplitudes,
    time: f64,
}

fn settle(
    config: &SystemConfig,
    pump: Complex64,
    force_i: &Drive,
    force_j: &Drive,
    plan: &GainSweepPlan,
) -> Result<Settled> {
    let (gi, gj) = (config.mode_i().gamma(), config.mode_j().gamma());
    let gamma_min = gi.min(gj);
    let dt = plan.dt.unwrap_or(1.0 / (50.0 * gi.max(gj)));
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::invalid("dt", format!("must be > 0, got {dt}")));
    }
    let system = ThreeModeSystem::new(
        config,
        [
            ModeDrive::Free(force_i.as_complex()),
            ModeDrive::Free(force_j.as_complex()),
            ModeDrive::Held(pump),
        ],
    );
    let zero = Complex64::new(0.0, 0.0);
    let mut a = system.initial([zero, zero, zero]);
    let min_steps = (plan.min_duration / gamma_min / dt).ceil() as usize;
    let max_steps = (plan.max_duration / gamma_min / dt).ceil() as usize;
    let check_every = ((1.0 / gamma_min) / dt).ceil().max(1.0) as usize;
    let residual = |a: &Amplitudes| {
        let d = system.derivative(a);
        (0..2)
            .filter(|&k| a[k].norm() > 0.0)
            .map(|k| d[k].norm() / (gamma_min * a[k].norm()))
            .fold(0.0, f64::max)
    };
    let mut n = 0;
    loop {
        system.step(&mut a, dt, plan.method);
        n += 1;
        if n >= min_steps && n % check_every == 0 {
            let r = residual(&a);
            if r < plan.tolerance {
                return Ok(Settled {
                    amplitudes: a,
                    time: n as f64 * dt,
                });
            }
            if n >= max_steps || !r.is_finite() {
                return Err(Error::NotConverged {
                    duration: n as f64 * dt,
                    residual: r,
                });
            }
        }
    }
}

/// Steady-state gain at each phase of `phase_grid` for the pump amplitude of
/// `config`. Each phase and the unpumped reference start from rest.
pub fn run_gain_sweep(
    config: &SystemConfig,
    force_i: &Drive,
    force_j: &Drive,
    phase_grid: &[f64],
    plan: &GainSweepPlan,
) -> Result<Vec<GainSample>> {
    let mu = normalized_pump(config)?;
    if mu >= 1.0 {
        return Err(Error::AboveThreshold { mu });
    }
    if !(force_j.magnitude > 0.0) {
        return Err(Error::ZeroSignalDrive);
    }
    let reference = settle(config, Complex64::new(0.0, 0.0), force_i, force_j, plan)?;
    let ref_i = reference.amplitudes[0].norm();
    let ref_j = reference.amplitudes[1].norm();
    let amplitude = config.pump_amplitude();

    let results: Vec<Result<GainSample>> = phase_grid
        .par_iter()
        .map(|&phi| {
            let pump_phase = pump_phase_for(phi, force_i, force_j);
            let pump = Complex64::from_polar(amplitude, pump_phase);
            let s = settle(config, pump, force_i, force_j, plan)?;
            Ok(GainSample {
                phi,
                pump_phase,
                mu,
                gain_signal: s.amplitudes[1].norm() / ref_j,
                gain_idler: if ref_i > 0.0 {
                    s.amplitudes[0].norm() / ref_i
                } else {
                    f64::NAN
                },
                a_i: s.amplitudes[0],
                a_j: s.amplitudes[1],
                settle_time: s.time,
            })
        })
        .collect();
    results.into_iter().collect()
}

/// `n` equally spaced phases on `[0, 2π)`.
pub fn phase_grid(n: usize) -> Vec<f64> {
    (0..n)
        .map(|k| 2.0 * std::f64::consts::PI * k as f64 / n as f64)
        .collect()
}
