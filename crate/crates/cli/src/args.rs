use std::path::PathBuf;

use clap::{Args, Parser, Subcommand, ValueEnum};
use paramp::Membrane;
use serde::{Deserialize, Serialize};

#[derive(Debug, Parser)]
#[command(
    name = "paramp",
    version,
    about = "Mechanical parametric amplifier: analytic model and Langevin simulation"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, PartialEq, Subcommand, Serialize, Deserialize)]
#[serde(tag = "command", rename_all = "snake_case")]
pub enum Command {
    /// Threshold, derived scales and instability growth rate vs pump level.
    Threshold(ThresholdArgs),
    /// Phase-dependent gain of the signal mode.
    Gain(GainArgs),
    /// Ring-down linewidth of one membrane with its partner held.
    Ringdown(RingdownArgs),
    /// Cross-quadrature statistics and phase-space histograms.
    Squeeze(SqueezeArgs),
    /// Fluctuation spectra of the membrane quadratures.
    Spectrum(SpectrumArgs),
    /// Fits a model curve to a CSV table.
    Fit(FitArgs),
    /// Re-runs a recorded manifest and checks every output bit for bit.
    Replay(ReplayArgs),
}

impl Command {
    pub fn name(&self) -> &'static str {
        match self {
            Command::Threshold(_) => "threshold",
            Command::Gain(_) => "gain",
            Command::Ringdown(_) => "ringdown",
            Command::Squeeze(_) => "squeeze",
            Command::Spectrum(_) => "spectrum",
            Command::Fit(_) => "fit",
            Command::Replay(_) => "replay",
        }
    }

    pub fn common(&self) -> Option<&CommonArgs> {
        match self {
            Command::Threshold(a) => Some(&a.common),
            Command::Gain(a) => Some(&a.common),
            Command::Ringdown(a) => Some(&a.common),
            Command::Squeeze(a) => Some(&a.common),
            Command::Spectrum(a) => Some(&a.common),
            Command::Fit(a) => Some(&a.common),
            Command::Replay(_) => None,
        }
    }

    pub fn common_mut(&mut self) -> Option<&mut CommonArgs> {
        match self {
            Command::Threshold(a) => Some(&mut a.common),
            Command::Gain(a) => Some(&mut a.common),
            Command::Ringdown(a) => Some(&mut a.common),
            Command::Squeeze(a) => Some(&mut a.common),
            Command::Spectrum(a) => Some(&mut a.common),
            Command::Fit(a) => Some(&mut a.common),
            Command::Replay(_) => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct CommonArgs {
    /// Configuration file; the built-in demonstration system if omitted.
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Directory for CSV outputs and the run manifest.
    #[arg(long, default_value = ".")]
    pub out_dir: PathBuf,
    /// Seed of the random streams (trajectory k uses stream k).
    #[arg(long, default_value_t = 1)]
    pub seed: u64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Mode {
    Analytic,
    Sde,
    Both,
}

impl Mode {
    pub fn analytic(self) -> bool {
        matches!(self, Mode::Analytic | Mode::Both)
    }

    pub fn sde(self) -> bool {
        matches!(self, Mode::Sde | Mode::Both)
    }
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
#[group(multiple = false)]
pub struct ModeArgs {
    /// Evaluate the closed-form model only.
    #[arg(long)]
    pub analytic_only: bool,
    /// Simulate only.
    #[arg(long)]
    pub sde_only: bool,
    /// Analytic and simulated columns side by side (default).
    #[arg(long)]
    pub both: bool,
}

impl ModeArgs {
    pub fn mode(&self) -> Mode {
        if self.analytic_only {
            Mode::Analytic
        } else if self.sde_only {
            Mode::Sde
        } else {
            Mode::Both
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum MembraneArg {
    I,
    J,
}

impl From<MembraneArg> for Membrane {
    fn from(m: MembraneArg) -> Self {
        match m {
            MembraneArg::I => Membrane::I,
            MembraneArg::J => Membrane::J,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum SchemeArg {
    /// Exact transition of the linear equations over each step.
    Exact,
    /// Euler–Maruyama; the step must not exceed 1/(50 γ_S).
    Euler,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ThresholdArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    /// Pump levels μ at which to report the instability growth rate.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5, 0.9, 0.99, 1.0, 1.01])]
    pub mu_list: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct GainArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub mode: ModeArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.021, 0.038, 0.042])]
    pub mu_list: Vec<f64>,
    /// Equally spaced gain phases on [0, 2π).
    #[arg(long, default_value_t = 20)]
    pub phase_points: usize,
    /// Integration step of the steady-state sweep, s.
    #[arg(long)]
    pub dt: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct RingdownArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub mode: ModeArgs,
    /// Held partner amplitudes in units of the damping length ξ.
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.125, 0.25, 0.375, 0.5, 0.625, 0.75, 0.875, 1.0])]
    pub hold_list: Vec<f64>,
    /// Mode that rings down; its partner is held.
    #[arg(long, value_enum, default_value_t = MembraneArg::J)]
    pub damped: MembraneArg,
    /// Integration step, s. Defaults to 1/(50 γ_S).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Simulated time per ring-down, s. Defaults to ten expected e-foldings.
    #[arg(long)]
    pub duration: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SqueezeArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub mode: ModeArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0, 0.5])]
    pub mu_list: Vec<f64>,
    #[arg(long, default_value_t = 1000)]
    pub ntraj: usize,
    /// Step, s. Defaults to 0.1/γ of the broader membrane (exact scheme)
    /// or 1/(50 γ_S) (Euler–Maruyama).
    #[arg(long)]
    pub dt: Option<f64>,
    /// Simulated time per trajectory, s.
    #[arg(long, default_value_t = 300.0)]
    pub duration: f64,
    #[arg(long, value_enum, default_value_t = SchemeArg::Exact)]
    pub scheme: SchemeArg,
    /// Adds band-limited analytic values for a measurement filter of this width.
    #[arg(long)]
    pub bandwidth_hz: Option<f64>,
    /// Bins per axis of the phase-space histograms.
    #[arg(long, default_value_t = 40)]
    pub bins: usize,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct SpectrumArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[command(flatten)]
    pub mode: ModeArgs,
    #[arg(long, value_delimiter = ',', default_values_t = [0.0])]
    pub mu_list: Vec<f64>,
    /// Total displayed frequency span around the carrier, Hz. Defaults to
    /// 20 linewidths of the broader membrane.
    #[arg(long)]
    pub bandwidth_hz: Option<f64>,
    /// Grid points for analytic-only output.
    #[arg(long, default_value_t = 401)]
    pub points: usize,
    #[arg(long, default_value_t = 100)]
    pub ntraj: usize,
    /// Sampling step, s. Defaults to 1/(4 × span).
    #[arg(long)]
    pub dt: Option<f64>,
    #[arg(long, default_value_t = 300.0)]
    pub duration: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitKind {
    /// Columns phi_rad, G.
    Gain,
    /// Columns x_m, q_ratio.
    Dissipation,
    /// Columns t_s and envelope or log_envelope.
    Ringdown,
    /// Columns x_th_m, xi_m and optionally weight.
    Xi,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BranchArg {
    Below,
    Above,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelArg {
    Exact,
    Approx,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct FitArgs {
    #[command(flatten)]
    pub common: CommonArgs,
    #[arg(long, value_enum)]
    pub kind: FitKind,
    /// Input table with a header row.
    #[arg(long)]
    pub input: PathBuf,
    /// Gain fits: fixes η instead of fitting it.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Gain fits with free η: side of μη = 1 to report.
    #[arg(long, value_enum, default_value_t = BranchArg::Below)]
    pub branch: BranchArg,
    /// Gain fits: adds a global phase offset parameter.
    #[arg(long)]
    pub phase_offset: bool,
    /// Dissipation and ring-down fits: the mode that rings down.
    #[arg(long, value_enum, default_value_t = MembraneArg::J)]
    pub damped: MembraneArg,
    #[arg(long, value_enum, default_value_t = ModelArg::Exact)]
    pub model: ModelArg,
}

#[derive(Debug, Clone, PartialEq, Args, Serialize, Deserialize)]
pub struct ReplayArgs {
    /// Manifest written by an earlier run.
    pub manifest: PathBuf,
    /// Where to write the reproduced outputs.
    #[arg(long)]
    pub out_dir: PathBuf,
}
