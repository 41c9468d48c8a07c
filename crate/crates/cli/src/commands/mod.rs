//! One module per subcommand. Each writes its tables into the run's
//! [`OutputSet`] and returns the resolved plan for the manifest.

mod fit;
mod gain;
mod ringdown;
mod spectrum;
mod squeeze;
mod threshold;

use paramp::SystemConfig;

use crate::args::Command;
use crate::error::{CliError, CliResult};
use crate::output::OutputSet;

pub struct CommandOutput {
    pub plan: serde_json::Value,
    pub summary: Vec<String>,
}

pub fn dispatch(command: &Command, config: &SystemConfig, out: &mut OutputSet) -> CliResult<CommandOutput> {
    match command {
        Command::Threshold(a) => threshold::run(config, a, out),
        Command::Gain(a) => gain::run(config, a, out),
        Command::Ringdown(a) => ringdown::run(config, a, out),
        Command::Squeeze(a) => squeeze::run(config, a, out),
        Command::Spectrum(a) => spectrum::run(config, a, out),
        Command::Fit(a) => fit::run(config, a, out),
        Command::Replay(_) => Err(CliError::config("replay is handled before dispatch")),
    }
}

pub(crate) fn to_json<T: serde::Serialize>(value: &T) -> serde_json::Value {
    serde_json::to_value(value).unwrap_or(serde_json::Value::Null)
}

pub(crate) fn check_mu_list(mu: &[f64]) -> CliResult<()> {
    if mu.is_empty() {
        return Err(CliError::config("--mu-list: at least one value required"));
    }
    if let Some(bad) = mu.iter().find(|m| !(m.is_finite() && **m >= 0.0)) {
        return Err(CliError::config(format!("--mu-list: {bad} is not a pump level >= 0")));
    }
    Ok(())
}

pub(crate) fn check_positive(flag: &str, v: f64) -> CliResult<f64> {
    if v.is_finite() && v > 0.0 {
        Ok(v)
    } else {
        Err(CliError::config(format!("{flag}: must be > 0, got {v}")))
    }
}
