//! Sectioned `key = value` configuration files.
//!
//! ```toml
//! [mode_i]
//! freq_hz = 1.5e6
//! q = 1.5e7            # or gamma_hz = 0.1
//! mass_kg = 2e-9       # optional
//!
//! [mode_j]
//! freq_hz = 1.7e6
//! gamma_hz = 0.025
//!
//! [substrate]
//! gamma_hz = 320       # freq_hz optional, must equal the membrane sum
//!
//! [coupling]
//! g = 1.0e15           # or threshold_m = 40e-15
//!
//! [pump]
//! mu = 0.042           # or amplitude_m
//! phase_rad = 0.0
//!
//! [env]
//! temperature_k = 295
//! ```

use std::f64::consts::PI;
use std::path::{Path, PathBuf};

use paramp::model::{resonant_substrate, DEFAULT_MEMBRANE_MASS, DEFAULT_SUBSTRATE_MASS, DEFAULT_TEMPERATURE};
use paramp::{ModeParams, SystemConfig};
use serde::{Deserialize, Serialize};
use thiserror::Error;
use toml::{Table, Value};

/// Relative tolerance when both `gamma_hz` and `q` are given.
const LINEWIDTH_CONSISTENCY_TOL: f64 = 1e-9;

#[derive(Debug, Error)]
pub enum ConfigError {
    #[error("{0}")]
    Syntax(String),

    #[error("missing key `{0}`")]
    Missing(String),

    #[error("unknown key `{0}`")]
    Unknown(String),

    #[error("`{key}`: {reason}")]
    Invalid { key: String, reason: String },

    #[error("`{first}` and `{second}` are mutually exclusive")]
    Exclusive { first: String, second: String },

    #[error("invalid configuration: {0}")]
    Model(#[from] paramp::Error),

    #[error("{path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Linewidth {
    GammaHz(f64),
    Q(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ModeSpec {
    /// Absent only for the substrate, which then sits at the membrane sum.
    pub freq_hz: Option<f64>,
    pub linewidth: Linewidth,
    pub mass_kg: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Coupling {
    G(f64),
    ThresholdM(f64),
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PumpLevel {
    AmplitudeM(f64),
    Mu(f64),
}

/// A configuration as written, before any derived quantity is computed.
/// Building it is deterministic, so the snapshot in a run manifest
/// reproduces the exact same [`SystemConfig`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfigSpec {
    pub mode_i: ModeSpec,
    pub mode_j: ModeSpec,
    pub substrate: ModeSpec,
    pub coupling: Coupling,
    pub pump: PumpLevel,
    pub pump_phase_rad: f64,
    pub temperature_k: f64,
}

impl ConfigSpec {
    /// Matches [`SystemConfig::demo`].
    pub fn demo() -> Self {
        Self {
            mode_i: ModeSpec {
                freq_hz: Some(1.5e6),
                linewidth: Linewidth::GammaHz(0.1),
                mass_kg: DEFAULT_MEMBRANE_MASS,
            },
            mode_j: ModeSpec {
                freq_hz: Some(1.7e6),
                linewidth: Linewidth::GammaHz(0.025),
                mass_kg: DEFAULT_MEMBRANE_MASS,
            },
            substrate: ModeSpec {
                freq_hz: None,
                linewidth: Linewidth::GammaHz(320.0),
                mass_kg: DEFAULT_SUBSTRATE_MASS,
            },
            coupling: Coupling::ThresholdM(40e-15),
            pump: PumpLevel::AmplitudeM(0.0),
            pump_phase_rad: 0.0,
            temperature_k: DEFAULT_TEMPERATURE,
        }
    }

    pub fn build(&self) -> Result<SystemConfig, ConfigError> {
        let mode_i = membrane(&self.mode_i, "mode_i")?;
        let mode_j = membrane(&self.mode_j, "mode_j")?;
        let s = &self.substrate;
        let substrate = match (s.freq_hz, s.linewidth) {
            (Some(f), Linewidth::GammaHz(g)) => ModeParams::from_hz(f, g, s.mass_kg)?,
            (Some(f), Linewidth::Q(q)) => ModeParams::from_q(f, q, s.mass_kg)?,
            (None, Linewidth::GammaHz(g)) => resonant_substrate(&mode_i, &mode_j, g, s.mass_kg)?,
            (None, Linewidth::Q(q)) => {
                if !(q.is_finite() && q > 0.0) {
                    return Err(invalid("substrate.q", format!("must be > 0, got {q}")));
                }
                let sum_hz = (mode_i.omega() + mode_j.omega()) / (2.0 * PI);
                resonant_substrate(&mode_i, &mode_j, sum_hz / q, s.mass_kg)?
            }
        };
        let g = match self.coupling {
            Coupling::G(g) => g,
            Coupling::ThresholdM(_) => 0.0,
        };
        let mut config = SystemConfig::new(mode_i, mode_j, substrate, g, self.temperature_k)?;
        if let Coupling::ThresholdM(x) = self.coupling {
            config = config.with_threshold(x)?;
        }
        config = match self.pump {
            PumpLevel::AmplitudeM(a) => config.with_pump(a, self.pump_phase_rad)?,
            PumpLevel::Mu(mu) => config.with_mu(mu)?.with_pump_phase(self.pump_phase_rad)?,
        };
        Ok(config)
    }
}

fn membrane(spec: &ModeSpec, section: &str) -> Result<ModeParams, ConfigError> {
    let f = spec
        .freq_hz
        .ok_or_else(|| ConfigError::Missing(format!("{section}.freq_hz")))?;
    Ok(match spec.linewidth {
        Linewidth::GammaHz(g) => ModeParams::from_hz(f, g, spec.mass_kg)?,
        Linewidth::Q(q) => ModeParams::from_q(f, q, spec.mass_kg)?,
    })
}

fn invalid(key: &str, reason: impl Into<String>) -> ConfigError {
    ConfigError::Invalid {
        key: key.to_string(),
        reason: reason.into(),
    }
}

pub fn parse_config(path: &Path) -> Result<SystemConfig, ConfigError> {
    load_spec(path)?.build()
}

pub fn load_spec(path: &Path) -> Result<ConfigSpec, ConfigError> {
    let text = std::fs::read_to_string(path).map_err(|source| ConfigError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    parse_spec(&text)
}

/// Parses and validates a configuration, including building the model once
/// so that every error surfaces here.
pub fn parse_spec(text: &str) -> Result<ConfigSpec, ConfigError> {
    let table: Table = toml::from_str(text).map_err(|e| ConfigError::Syntax(e.to_string()))?;
    const SECTIONS: [&str; 6] = ["mode_i", "mode_j", "substrate", "coupling", "pump", "env"];
    for (name, value) in &table {
        if !SECTIONS.contains(&name.as_str()) {
            return Err(ConfigError::Unknown(name.clone()));
        }
        if !value.is_table() {
            return Err(invalid(name, "expected a [section]"));
        }
    }
    let empty = Table::new();
    let section = |name: &str| -> Section<'_> {
        Section {
            name: name.to_string(),
            table: table.get(name).and_then(Value::as_table).unwrap_or(&empty),
            present: table.contains_key(name),
        }
    };

    let mode_i = section("mode_i").mode(DEFAULT_MEMBRANE_MASS, None)?;
    let mode_j = section("mode_j").mode(DEFAULT_MEMBRANE_MASS, None)?;
    // both present by now, checked in `mode`
    let sum_hz = mode_i.freq_hz.unwrap_or(0.0) + mode_j.freq_hz.unwrap_or(0.0);
    let substrate = section("substrate").mode(DEFAULT_SUBSTRATE_MASS, Some(sum_hz))?;

    let coupling = section("coupling");
    coupling.allow(&["g", "threshold_m"])?;
    let coupling = match (coupling.number("g")?, coupling.number("threshold_m")?) {
        (Some(g), None) => Coupling::G(g),
        (None, Some(x)) => Coupling::ThresholdM(x),
        (Some(_), Some(_)) => return Err(exclusive("coupling.g", "coupling.threshold_m")),
        (None, None) => return Err(ConfigError::Missing("coupling.g".into())),
    };

    let pump = section("pump");
    pump.allow(&["amplitude_m", "mu", "phase_rad"])?;
    let level = match (pump.number("amplitude_m")?, pump.number("mu")?) {
        (Some(a), None) => PumpLevel::AmplitudeM(a),
        (None, Some(mu)) => PumpLevel::Mu(mu),
        (None, None) => PumpLevel::AmplitudeM(0.0),
        (Some(_), Some(_)) => return Err(exclusive("pump.amplitude_m", "pump.mu")),
    };
    let phase = pump.number("phase_rad")?.unwrap_or(0.0);

    let env = section("env");
    env.allow(&["temperature_k"])?;
    let temperature = env.number("temperature_k")?.unwrap_or(DEFAULT_TEMPERATURE);

    let spec = ConfigSpec {
        mode_i,
        mode_j,
        substrate,
        coupling,
        pump: level,
        pump_phase_rad: phase,
        temperature_k: temperature,
    };
    spec.build()?;
    Ok(spec)
}

fn exclusive(first: &str, second: &str) -> ConfigError {
    ConfigError::Exclusive {
        first: first.into(),
        second: second.into(),
    }
}

struct Section<'a> {
    name: String,
    table: &'a Table,
    present: bool,
}

impl Section<'_> {
    fn key(&self, k: &str) -> String {
        format!("{}.{k}", self.name)
    }

    fn allow(&self, keys: &[&str]) -> Result<(), ConfigError> {
        match self.table.keys().find(|k| !keys.contains(&k.as_str())) {
            Some(k) => Err(ConfigError::Unknown(self.key(k))),
            None => Ok(()),
        }
    }

    fn number(&self, k: &str) -> Result<Option<f64>, ConfigError> {
        let v = match self.table.get(k) {
            None => return Ok(None),
            Some(Value::Float(v)) => *v,
            Some(Value::Integer(v)) => *v as f64,
            Some(other) => {
                return Err(invalid(
                    &self.key(k),
                    format!("expected a number, got {}", other.type_str()),
                ))
            }
        };
        if !v.is_finite() {
            return Err(invalid(&self.key(k), "must be finite"));
        }
        Ok(Some(v))
    }

    fn required(&self, k: &str) -> Result<f64, ConfigError> {
        self.number(k)?.ok_or_else(|| ConfigError::Missing(self.key(k)))
    }

    /// `implied_freq` is the frequency the substrate must sit at; membranes
    /// pass `None` and must state their own.
    fn mode(&self, default_mass: f64, implied_freq: Option<f64>) -> Result<ModeSpec, ConfigError> {
        if !self.present {
            return Err(ConfigError::Missing(format!("[{}]", self.name)));
        }
        self.allow(&["freq_hz", "gamma_hz", "q", "mass_kg"])?;
        let freq = match implied_freq {
            None => Some(self.required("freq_hz")?),
            Some(_) => self.number("freq_hz")?,
        };
        let f = freq.or(implied_freq).unwrap_or(f64::NAN);
        let linewidth = match (self.number("gamma_hz")?, self.number("q")?) {
            (Some(g), None) => Linewidth::GammaHz(g),
            (None, Some(q)) => Linewidth::Q(q),
            (Some(g), Some(q)) => {
                let implied = f / q;
                if !((g - implied).abs() <= LINEWIDTH_CONSISTENCY_TOL * g.abs()) {
                    return Err(invalid(
                        &self.key("q"),
                        format!("inconsistent with gamma_hz = {g}: freq_hz/q = {implied}"),
                    ));
                }
                Linewidth::GammaHz(g)
            }
            (None, None) => return Err(ConfigError::Missing(self.key("gamma_hz"))),
        };
        Ok(ModeSpec {
            freq_hz: freq,
            linewidth,
            mass_kg: self.number("mass_kg")?.unwrap_or(default_mass),
        })
    }
}

/// Writes `spec` in the file format accepted by [`parse_spec`].
pub fn to_config_text(spec: &ConfigSpec) -> String {
    let mut out = String::new();
    let mut mode = |name: &str, m: &ModeSpec| {
        out.push_str(&format!("[{name}]\n"));
        if let Some(f) = m.freq_hz {
            out.push_str(&format!("freq_hz = {f:?}\n"));
        }
        match m.linewidth {
            Linewidth::GammaHz(g) => out.push_str(&format!("gamma_hz = {g:?}\n")),
            Linewidth::Q(q) => out.push_str(&format!("q = {q:?}\n")),
        }
        out.push_str(&format!("mass_kg = {:?}\n\n", m.mass_kg));
    };
    mode("mode_i", &spec.mode_i);
    mode("mode_j", &spec.mode_j);
    mode("substrate", &spec.substrate);
    out.push_str("[coupling]\n");
    match spec.coupling {
        Coupling::G(g) => out.push_str(&format!("g = {g:?}\n\n")),
        Coupling::ThresholdM(x) => out.push_str(&format!("threshold_m = {x:?}\n\n")),
    }
    out.push_str("[pump]\n");
    match spec.pump {
        PumpLevel::AmplitudeM(a) => out.push_str(&format!("amplitude_m = {a:?}\n")),
        PumpLevel::Mu(mu) => out.push_str(&format!("mu = {mu:?}\n")),
    }
    out.push_str(&format!("phase_rad = {:?}\n\n", spec.pump_phase_rad));
    out.push_str(&format!("[env]\ntemperature_k = {:?}\n", spec.temperature_k));
    out
}
