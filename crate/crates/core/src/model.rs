//! Physical parameters of the three-mode system and the scalar quantities
//! derived from them.
//!
//! Units are SI throughout: angular frequencies and linewidths in rad/s,
//! masses in kg, displacements in m. The coupling `g` is the coefficient of
//! the interaction energy `-g X_S x_i x_j` and therefore carries N/m².

use std::f64::consts::PI;

use serde::Serialize;

use crate::error::{Error, Result};

/// Boltzmann constant, J/K.
pub const BOLTZMANN: f64 = 1.380_649e-23;

/// Default membrane effective mass, kg.
pub const DEFAULT_MEMBRANE_MASS: f64 = 2.0e-9;
/// Default substrate effective mass, kg.
pub const DEFAULT_SUBSTRATE_MASS: f64 = 1.0e-4;
/// Default bath temperature, K.
pub const DEFAULT_TEMPERATURE: f64 = 295.0;

/// Relative tolerance on ω_S = ω_i + ω_j.
const RESONANCE_TOL: f64 = 1e-9;

/// Identifies one of the two membrane modes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub enum Membrane {
    I,
    J,
}

impl Membrane {
    pub fn partner(self) -> Membrane {
        match self {
            Membrane::I => Membrane::J,
            Membrane::J => Membrane::I,
        }
    }
}

/// Constants of a single mechanical mode.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ModeParams {
    omega: f64,
    gamma: f64,
    mass: f64,
}

impl ModeParams {
    pub fn new(omega: f64, gamma: f64, mass: f64) -> Result<Self> {
        if !(omega.is_finite() && omega > 0.0) {
            return Err(Error::invalid("omega", format!("must be > 0, got {omega}")));
        }
        if !(gamma.is_finite() && gamma > 0.0) {
            return Err(Error::invalid("gamma", format!("must be > 0, got {gamma}")));
        }
        if !(mass.is_finite() && mass > 0.0) {
            return Err(Error::invalid("mass", format!("must be > 0, got {mass}")));
        }
        if gamma >= omega {
            return Err(Error::invalid(
                "gamma",
                format!("mode must be underdamped (gamma {gamma} >= omega {omega})"),
            ));
        }
        Ok(Self { omega, gamma, mass })
    }

    /// Builds a mode from a frequency and linewidth quoted in Hz.
    pub fn from_hz(freq_hz: f64, gamma_hz: f64, mass: f64) -> Result<Self> {
        Self::new(2.0 * PI * freq_hz, 2.0 * PI * gamma_hz, mass)
    }

    /// Builds a mode from a frequency in Hz and a quality factor.
    pub fn from_q(freq_hz: f64, q: f64, mass: f64) -> Result<Self> {
        if !(q.is_finite() && q > 0.0) {
            return Err(Error::invalid("q", format!("must be > 0, got {q}")));
        }
        Self::from_hz(freq_hz, freq_hz / q, mass)
    }

    pub fn omega(&self) -> f64 {
        self.omega
    }

    pub fn gamma(&self) -> f64 {
        self.gamma
    }

    pub fn mass(&self) -> f64 {
        self.mass
    }

    pub fn freq_hz(&self) -> f64 {
        self.omega / (2.0 * PI)
    }

    pub fn gamma_hz(&self) -> f64 {
        self.gamma / (2.0 * PI)
    }

    pub fn q(&self) -> f64 {
        self.omega / self.gamma
    }

    pub fn susceptibility(&self) -> f64 {
        susceptibility(self)
    }

    /// Thermal RMS displacement `sqrt(k_B T / (m ω²))`.
    pub fn thermal_amplitude(&self, temperature: f64) -> f64 {
        (BOLTZMANN * temperature / (self.mass * self.omega * self.omega)).sqrt()
    }

    pub fn with_gamma(self, gamma: f64) -> Result<Self> {
        Self::new(self.omega, gamma, self.mass)
    }

    pub fn with_mass(self, mass: f64) -> Result<Self> {
        Self::new(self.omega, self.gamma, mass)
    }
}

/// On-resonance mechanical susceptibility `1 / (m ω γ)`, m/N.
pub fn susceptibility(mode: &ModeParams) -> f64 {
    1.0 / (mode.mass * mode.omega * mode.gamma)
}

/// Two membrane modes, the substrate (pump) mode, the coupling and the
/// pump drive. The pump is always resonant: `ω_S = ω_i + ω_j`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SystemConfig {
    mode_i: ModeParams,
    mode_j: ModeParams,
    substrate: ModeParams,
    g: f64,
    pump_amplitude: f64,
    pump_phase: f64,
    temperature: f64,
}

impl SystemConfig {
    /// Creates an unpumped configuration.
    pub fn new(
        mode_i: ModeParams,
        mode_j: ModeParams,
        substrate: ModeParams,
        g: f64,
        temperature: f64,
    ) -> Result<Self> {
        if !(g.is_finite() && g >= 0.0) {
            return Err(Error::invalid("g", format!("must be >= 0, got {g}")));
        }
        if !(temperature.is_finite() && temperature > 0.0) {
            return Err(Error::invalid("temperature", format!("must be > 0, got {temperature}")));
        }
        let sum = mode_i.omega + mode_j.omega;
        if ((substrate.omega - sum) / sum).abs() > RESONANCE_TOL {
            return Err(Error::invalid(
                "substrate.omega",
                format!(
                    "pump must be resonant: omega_S = {} but omega_i + omega_j = {sum}",
                    substrate.omega
                ),
            ));
        }
        Ok(Self {
            mode_i,
            mode_j,
            substrate,
            g,
            pump_amplitude: 0.0,
            pump_phase: 0.0,
            temperature,
        })
    }

    /// The demonstration configuration: 1.5 MHz and 1.7 MHz membrane modes,
    /// a Q = 10⁴ substrate mode at their sum frequency, room temperature and
    /// a coupling chosen so that the instability threshold is 40 fm.
    pub fn demo() -> Self {
        let mode_i = ModeParams::from_hz(1.5e6, 0.1, DEFAULT_MEMBRANE_MASS).unwrap();
        let mode_j = ModeParams::from_hz(1.7e6, 0.025, DEFAULT_MEMBRANE_MASS).unwrap();
        let substrate = resonant_substrate(&mode_i, &mode_j, 320.0, DEFAULT_SUBSTRATE_MASS).unwrap();
        Self::new(mode_i, mode_j, substrate, 0.0, DEFAULT_TEMPERATURE)
            .and_then(|c| c.with_threshold(40e-15))
            .unwrap()
    }

    /// Replaces `g` by the value that places the threshold at `x_s_th`.
    pub fn with_threshold(self, x_s_th: f64) -> Result<Self> {
        if !(x_s_th.is_finite() && x_s_th > 0.0) {
            return Err(Error::invalid("threshold", format!("must be > 0, got {x_s_th}")));
        }
        let g = coupling_for_threshold(&self.mode_i, &self.mode_j, x_s_th);
        Ok(Self { g, ..self })
    }

    pub fn with_coupling(self, g: f64) -> Result<Self> {
        let mut next = Self::new(self.mode_i, self.mode_j, self.substrate, g, self.temperature)?;
        next.pump_amplitude = self.pump_amplitude;
        next.pump_phase = self.pump_phase;
        Ok(next)
    }

    pub fn with_pump(self, amplitude: f64, phase: f64) -> Result<Self> {
        if !(amplitude.is_finite() && amplitude >= 0.0) {
            return Err(Error::invalid(
                "pump_amplitude",
                format!("must be >= 0, got {amplitude}"),
            ));
        }
        if !phase.is_finite() {
            return Err(Error::invalid("pump_phase", "must be finite"));
        }
        Ok(Self {
            pump_amplitude: amplitude,
            pump_phase: phase,
            ..self
        })
    }

    /// Sets the pump amplitude to `mu` times the threshold, keeping the phase.
    pub fn with_mu(self, mu: f64) -> Result<Self> {
        if !(mu.is_finite() && mu >= 0.0) {
            return Err(Error::invalid("mu", format!("must be >= 0, got {mu}")));
        }
        let x_th = threshold(&self)?;
        self.with_pump(mu * x_th, self.pump_phase)
    }

    pub fn with_pump_phase(self, phase: f64) -> Result<Self> {
        self.with_pump(self.pump_amplitude, phase)
    }

    pub fn with_temperature(self, temperature: f64) -> Result<Self> {
        let next = Self::new(self.mode_i, self.mode_j, self.substrate, self.g, temperature)?;
        next.with_pump(self.pump_amplitude, self.pump_phase)
    }

    /// Replaces the membrane modes, rebuilding the substrate at the new sum
    /// frequency with its linewidth and mass unchanged. `g` is kept.
    pub fn with_membranes(self, mode_i: ModeParams, mode_j: ModeParams) -> Result<Self> {
        let substrate = resonant_substrate(&mode_i, &mode_j, self.substrate.gamma_hz(), self.substrate.mass)?;
        let next = Self::new(mode_i, mode_j, substrate, self.g, self.temperature)?;
        next.with_pump(self.pump_amplitude, self.pump_phase)
    }

    pub fn with_substrate_gamma(self, gamma: f64) -> Result<Self> {
        let substrate = self.substrate.with_gamma(gamma)?;
        Ok(Self { substrate, ..self })
    }

    pub fn mode_i(&self) -> &ModeParams {
        &self.mode_i
    }

    pub fn mode_j(&self) -> &ModeParams {
        &self.mode_j
    }

    pub fn membrane(&self, which: Membrane) -> &ModeParams {
        match which {
            Membrane::I => &self.mode_i,
            Membrane::J => &self.mode_j,
        }
    }

    pub fn substrate(&self) -> &ModeParams {
        &self.substrate
    }

    pub fn g(&self) -> f64 {
        self.g
    }

    pub fn pump_amplitude(&self) -> f64 {
        self.pump_amplitude
    }

    pub fn pump_phase(&self) -> f64 {
        self.pump_phase
    }

    pub fn temperature(&self) -> f64 {
        self.temperature
    }

    pub fn kt(&self) -> f64 {
        BOLTZMANN * self.temperature
    }

    /// Non-fatal diagnostics about the regime this configuration is in.
    pub fn warnings(&self) -> Vec<String> {
        let mut out = Vec::new();
        let ratio = self.substrate.gamma / self.mode_i.gamma.max(self.mode_j.gamma);
        if ratio < 100.0 {
            out.push(format!(
                "substrate linewidth is only {ratio:.3} times the membrane linewidth; \
                 closed forms assuming gamma_S >> gamma_i,j are approximate"
            ));
        }
        if let Ok(mu) = normalized_pump(self) {
            if mu >= 1.0 {
                out.push(format!("above threshold (mu = {mu}): no stationary state"));
            }
        }
        out
    }
}

/// Substrate mode at `ω_i + ω_j`.
pub fn resonant_substrate(mode_i: &ModeParams, mode_j: &ModeParams, gamma_hz: f64, mass: f64) -> Result<ModeParams> {
    ModeParams::new(mode_i.omega + mode_j.omega, 2.0 * PI * gamma_hz, mass)
}

/// Inverts the threshold relation for the coupling.
pub fn coupling_for_threshold(mode_i: &ModeParams, mode_j: &ModeParams, x_s_th: f64) -> f64 {
    2.0 / (x_s_th * (mode_i.susceptibility() * mode_j.susceptibility()).sqrt())
}

/// Pump amplitude at which the membrane pair self-oscillates,
/// `2 sqrt(1 / (g² χ_i χ_j))`.
pub fn threshold(config: &SystemConfig) -> Result<f64> {
    if config.g <= 0.0 {
        return Err(Error::NoCoupling);
    }
    let chi_i = config.mode_i.susceptibility();
    let chi_j = config.mode_j.susceptibility();
    Ok(2.0 * (1.0 / (config.g * config.g * chi_i * chi_j)).sqrt())
}

/// Up-conversion length scale for the damping of `damped` while its partner
/// is driven: `½ sqrt(γ_S/γ_d) sqrt(χ_p/χ_S) X_S,th`.
pub fn xi_scale_for(config: &SystemConfig, damped: Membrane) -> Result<f64> {
    let d = config.membrane(damped);
    let p = config.membrane(damped.partner());
    let s = &config.substrate;
    let x_th = threshold(config)?;
    Ok(0.5 * (s.gamma / d.gamma).sqrt() * (p.susceptibility() / s.susceptibility()).sqrt() * x_th)
}

/// `ξ = ½ sqrt(γ_S/γ_i) sqrt(χ_j/χ_S) X_S,th`: the amplitude of mode j at
/// which the dissipation of mode i reaches the substrate scale.
pub fn xi_scale(config: &SystemConfig) -> Result<f64> {
    xi_scale_for(config, Membrane::I)
}

/// `μ = X_S / X_S,th`. Values ≥ 1 are returned as-is; callers that need a
/// stationary state check [`SystemConfig::warnings`] or the value itself.
pub fn normalized_pump(config: &SystemConfig) -> Result<f64> {
    Ok(config.pump_amplitude / threshold(config)?)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct DerivedQuantities {
    pub chi_i: f64,
    pub chi_j: f64,
    pub chi_s: f64,
    pub x_th_i: f64,
    pub x_th_j: f64,
    pub x_th_s: f64,
    pub threshold: f64,
    pub xi: f64,
    pub xi_j: f64,
    pub mu: f64,
    pub delta: f64,
    pub gamma_bar: f64,
}

impl DerivedQuantities {
    pub fn compute(config: &SystemConfig) -> Result<Self> {
        let t = config.temperature;
        let (gi, gj) = (config.mode_i.gamma, config.mode_j.gamma);
        Ok(Self {
            chi_i: config.mode_i.susceptibility(),
            chi_j: config.mode_j.susceptibility(),
            chi_s: config.substrate.susceptibility(),
            x_th_i: config.mode_i.thermal_amplitude(t),
            x_th_j: config.mode_j.thermal_amplitude(t),
            x_th_s: config.substrate.thermal_amplitude(t),
            threshold: threshold(config)?,
            xi: xi_scale(config)?,
            xi_j: xi_scale_for(config, Membrane::J)?,
            mu: normalized_pump(config)?,
            delta: loss_asymmetry(config),
            gamma_bar: 0.5 * (gi + gj),
        })
    }

    pub fn above_threshold(&self) -> bool {
        self.mu >= 1.0
    }
}

/// `δ = (γ_i − γ_j)/(γ_i + γ_j)`.
pub fn loss_asymmetry(config: &SystemConfig) -> f64 {
    let (gi, gj) = (config.mode_i.gamma, config.mode_j.gamma);
    (gi - gj) / (gi + gj)
}
