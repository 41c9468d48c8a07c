use serde::Serialize;

use crate::analytic::gain::Complex64;
use crate::error::{Error, Result};
use crate::model::SystemConfig;

/// Discretization of the linear fluctuation equations.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Scheme {
    /// `x ← x + (M x + f) Δ + sqrt(D Δ) ζ`.
    EulerMaruyama,
    /// Exact transition of the linear SDE over one step: `x ← Φ x + Γ f + L ζ`
    /// with `Φ = e^{MΔ}` and `L Lᵀ` the exact one-step noise covariance.
    ExactPropagator,
}

/// Default blow-up guard in units of each mode's thermal amplitude.
pub const DEFAULT_BLOWUP_FACTOR: f64 = 1e6;
/// Largest Euler–Maruyama step in units of `1/γ_S`.
pub const EM_MAX_STEP_GAMMA_S: f64 = 1.0 / 50.0;
/// Warm-up discarded before accumulating statistics, in units of `1/γ_min`.
pub const WARMUP_GAMMA_MIN: f64 = 10.0;

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SimPlan {
    /// Time step, s.
    pub dt: f64,
    /// Total simulated time per trajectory, s.
    pub duration: f64,
    pub n_traj: usize,
    pub seed: u64,
    /// Samples are recorded every `record_stride` steps.
    pub record_stride: usize,
    /// Number of trajectories (lowest indices first) whose samples are kept.
    pub keep_records: usize,
    /// Constant slowly varying forces on (i, j, S) in the lab frame, N.
    pub drives: Option<[Complex64; 3]>,
    pub noise_on: bool,
    pub scheme: Scheme,
    /// Discarded initial interval, s. `None` means `10/γ_min`.
    pub warmup: Option<f64>,
    pub blowup_factor: f64,
    pub allow_above_threshold: bool,
}

impl SimPlan {
    pub fn new(dt: f64, duration: f64, n_traj: usize, seed: u64) -> Self {
        Self {
            dt,
            duration,
            n_traj,
            seed,
            record_stride: 1,
            keep_records: 0,
            drives: None,
            noise_on: true,
            scheme: Scheme::EulerMaruyama,
            warmup: None,
            blowup_factor: DEFAULT_BLOWUP_FACTOR,
            allow_above_threshold: false,
        }
    }

    /// Euler–Maruyama plan at the largest allowed step, `1/(50 γ_S)`.
    pub fn euler_for(config: &SystemConfig, duration: f64, n_traj: usize, seed: u64) -> Self {
        Self::new(max_euler_step(config), duration, n_traj, seed)
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_records(mut self, keep: usize, stride: usize) -> Self {
        self.keep_records = keep;
        self.record_stride = stride;
        self
    }

    pub fn with_drives(mut self, drives: [Complex64; 3]) -> Self {
        self.drives = Some(drives);
        self
    }

    pub fn without_noise(mut self) -> Self {
        self.noise_on = false;
        self
    }

    pub fn with_warmup(mut self, warmup: f64) -> Self {
        self.warmup = Some(warmup);
        self
    }

    pub fn allowing_above_threshold(mut self) -> Self {
        self.allow_above_threshold = true;
        self
    }

    pub fn n_steps(&self) -> usize {
        (self.duration / self.dt).round() as usize
    }

    pub fn warmup_time(&self, config: &SystemConfig) -> f64 {
        self.warmup.unwrap_or_else(|| WARMUP_GAMMA_MIN / gamma_min(config))
    }

    pub fn warmup_steps(&self, config: &SystemConfig) -> usize {
        (self.warmup_time(config) / self.dt).ceil() as usize
    }

    /// Checks hard constraints and returns non-fatal warnings.
    pub fn validate(&self, config: &SystemConfig) -> Result<Vec<String>> {
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::invalid("dt", format!("must be > 0, got {}", self.dt)));
        }
        if !(self.duration.is_finite() && self.duration >= self.dt) {
            return Err(Error::invalid(
                "duration",
                format!("must be at least one step, got {}", self.duration),
            ));
        }
        if self.n_traj == 0 {
            return Err(Error::invalid("n_traj", "must be >= 1"));
        }
        if self.record_stride == 0 {
            return Err(Error::invalid("record_stride", "must be >= 1"));
        }
        if !(self.blowup_factor > 0.0) {
            return Err(Error::invalid("blowup_factor", "must be > 0"));
        }
        let max_dt = max_euler_step(config);
        if self.scheme == Scheme::EulerMaruyama && self.dt > max_dt * (1.0 + 1e-12) {
            return Err(Error::invalid(
                "dt",
                format!("Euler-Maruyama step {} exceeds 1/(50 gamma_S) = {max_dt}", self.dt),
            ));
        }
        if let Some(w) = self.warmup {
            if !(w.is_finite() && w >= 0.0) {
                return Err(Error::invalid("warmup", format!("must be >= 0, got {w}")));
            }
        }
        let mut warnings = Vec::new();
        let min_duration = WARMUP_GAMMA_MIN / gamma_min(config);
        if self.duration < min_duration {
            warnings.push(format!(
                "duration {} s is shorter than 10/gamma_min = {min_duration} s; statistics are not stationary",
                self.duration
            ));
        }
        if self.warmup_steps(config) >= self.n_steps() {
            warnings.push("warm-up covers the whole run; only the final state is sampled".to_string());
        }
        Ok(warnings)
    }
}

pub fn max_euler_step(config: &SystemConfig) -> f64 {
    EM_MAX_STEP_GAMMA_S / config.substrate().gamma()
}

pub(crate) fn gamma_min(config: &SystemConfig) -> f64 {
    config
        .mode_i()
        .gamma()
        .min(config.mode_j().gamma())
        .min(config.substrate().gamma())
}
