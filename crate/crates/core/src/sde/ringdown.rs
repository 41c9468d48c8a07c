//! Ring-down of one membrane mode while its partner is held at a fixed
//! amplitude and the pump is off.

use serde::Serialize;

use std::f64::consts::PI;

use crate::analytic::dissipation::linewidth_exact;
use crate::analytic::gain::Complex64;
use crate::error::{Error, Result};
use crate::model::{xi_scale_for, Membrane, SystemConfig};
use crate::sde::deterministic::{Method, ModeDrive, ThreeModeSystem};

/// Amplitudes are rescaled by this factor whenever they fall below its
/// inverse, so records can span far more than the f64 exponent range.
const RESCALE: f64 = 1e100;

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct RingdownPlan {
    pub dt: f64,
    /// Simulated time, s.
    pub duration: f64,
    pub record_stride: usize,
}

impl RingdownPlan {
    /// Step `1/(50 max(γ_S, γ_d))` and about 20 000 recorded samples.
    /// The duration covers ten amplitude e-foldings at the expected decay
    /// rate for `x_hold` and, past critical coupling, at least four beats.
    pub fn for_hold(config: &SystemConfig, damped: Membrane, x_hold: f64) -> Result<Self> {
        let gamma_d = config.membrane(damped).gamma();
        let gamma_s = config.substrate().gamma();
        let xi = xi_scale_for(config, damped)?;
        let expected = linewidth_exact(gamma_d, gamma_s, xi, x_hold.abs()).gamma;
        let radicand = (gamma_s - gamma_d).powi(2) - (gamma_s * x_hold / xi).powi(2);
        let mut duration = 20.0 / expected;
        if radicand < 0.0 {
            let beat = 0.25 * (-radicand).sqrt();
            duration = duration.max(4.0 * PI / beat);
        }
        let dt = 1.0 / (50.0 * gamma_s.max(gamma_d));
        let steps = (duration / dt).ceil() as usize;
        Ok(Self {
            dt,
            duration,
            record_stride: (steps / 20_000).max(1),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RingdownRecord {
    pub damped: Membrane,
    /// Held amplitude of the partner mode, m.
    pub x_hold: f64,
    pub x_initial: f64,
    pub times: Vec<f64>,
    /// `ln |A_d(t)|` with `A_d` in m.
    pub log_envelope: Vec<f64>,
    /// `ln |A_S(t)|`.
    pub log_substrate: Vec<f64>,
}

impl RingdownRecord {
    /// `|A_d(t)|`, m. Underflows to zero late in long records.
    pub fn envelope(&self) -> Vec<f64> {
        self.log_envelope.iter().map(|l| l.exp()).collect()
    }
}

/// Ring-down of mode j with mode i held at `x_i_hold`.
pub fn run_ringdown(config: &SystemConfig, x_i_hold: f64, x_j_initial: f64) -> Result<RingdownRecord> {
    let plan = RingdownPlan::for_hold(config, Membrane::J, x_i_hold)?;
    run_ringdown_with(config, Membrane::J, x_i_hold, x_j_initial, &plan)
}

/// Integrates the free `(A_d, A_S)` pair from `A_d = x_initial`, `A_S = 0`
/// with the partner clamped to `−i x_hold` and no pump drive. The pair obeys
/// linear equations in this setting, which is what makes the rescaling exact.
pub fn run_ringdown_with(
    config: &SystemConfig,
    damped: Membrane,
    x_hold: f64,
    x_initial: f64,
    plan: &RingdownPlan,
) -> Result<RingdownRecord> {
    if !(x_hold.is_finite() && x_hold >= 0.0) {
        return Err(Error::invalid("x_hold", format!("must be >= 0, got {x_hold}")));
    }
    if !(x_initial.is_finite() && x_initial > 0.0) {
        return Err(Error::invalid("x_initial", format!("must be > 0, got {x_initial}")));
    }
    if !(plan.dt > 0.0 && plan.duration > plan.dt && plan.record_stride > 0) {
        return Err(Error::invalid("ringdown plan", format!("{plan:?}")));
    }
    let (d, p) = match damped {
        Membrane::I => (0, 1),
        Membrane::J => (1, 0),
    };
    let zero = Complex64::new(0.0, 0.0);
    let mut drives = [ModeDrive::undriven(); 3];
    drives[p] = ModeDrive::Held(Complex64::new(0.0, -x_hold));
    let system = ThreeModeSystem::new(config, drives);
    let mut start = [zero; 3];
    start[d] = Complex64::new(x_initial, 0.0);
    let mut a = system.initial(start);

    let n_steps = (plan.duration / plan.dt).ceil() as usize;
    let mut log_scale = 0.0;
    let mut times = vec![0.0];
    let mut log_envelope = vec![a[d].norm().ln()];
    let mut log_substrate = vec![a[2].norm().ln()];
    for n in 1..=n_steps {
        system.step(&mut a, plan.dt, Method::Rk4);
        if a[d].norm().max(a[2].norm()) < x_initial / RESCALE {
            a[d] *= RESCALE;
            a[2] *= RESCALE;
            log_scale -= RESCALE.ln();
        }
        if n % plan.record_stride == 0 {
            times.push(n as f64 * plan.dt);
            log_envelope.push(a[d].norm().ln() + log_scale);
            log_substrate.push(a[2].norm().ln() + log_scale);
        }
    }
    Ok(RingdownRecord {
        damped,
        x_hold,
        x_initial,
        times,
        log_envelope,
        log_substrate,
    })
}
