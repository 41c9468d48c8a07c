//! Command-line front end: configuration files, one subcommand per
//! operation family, CSV outputs and run manifests that reproduce every
//! output file bit for bit.

pub mod args;
pub mod commands;
pub mod config;
pub mod error;
pub mod manifest;
pub mod output;

use std::path::{Path, PathBuf};

use chrono::{SecondsFormat, Utc};

pub use args::{Cli, Command};
pub use config::{load_spec, parse_config, parse_spec, ConfigError, ConfigSpec};
pub use error::{CliError, CliResult};
pub use manifest::RunManifest;

use crate::manifest::{InputFile, TOOL_NAME, TOOL_VERSION};
use crate::output::{sha256_hex, OutputSet};

/// Environment variable capping the worker count; 0 or unset means one
/// worker per core.
pub const THREADS_ENV: &str = "PARAMP_THREADS";

/// Reads [`THREADS_ENV`] and sizes the global pool accordingly.
pub fn init_thread_pool() -> CliResult<()> {
    let threads = match std::env::var(THREADS_ENV) {
        Ok(v) => v
            .trim()
            .parse::<usize>()
            .map_err(|_| CliError::config(format!("{THREADS_ENV}: expected a non-negative integer, got {v:?}")))?,
        Err(std::env::VarError::NotPresent) => 0,
        Err(e) => return Err(CliError::config(format!("{THREADS_ENV}: {e}"))),
    };
    if threads > 0 {
        // a pool may already exist when called twice in one process
        let _ = rayon::ThreadPoolBuilder::new().num_threads(threads).build_global();
    }
    Ok(())
}

/// Outcome of a successful run.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub manifest: RunManifest,
    pub manifest_path: PathBuf,
    /// Human-readable lines describing the results.
    pub summary: Vec<String>,
}

pub fn run(cli: Cli) -> CliResult<RunReport> {
    match cli.command {
        Command::Replay(r) => replay(&r.manifest, &r.out_dir),
        mut command => {
            let common = command.common().expect("non-replay commands carry common args").clone();
            let (spec, source) = match &common.config {
                Some(path) => (load_spec(path)?, path.display().to_string()),
                None => (ConfigSpec::demo(), "built-in demo".to_string()),
            };
            if let Command::Fit(f) = &mut command {
                f.input = std::fs::canonicalize(&f.input).map_err(|e| CliError::io(&f.input, e))?;
            }
            execute(&command, &spec, source, &common.out_dir)
        }
    }
}

/// Runs `command` against `spec`, writing into `out_dir`. Any failure
/// removes the files written so far.
pub fn execute(command: &Command, spec: &ConfigSpec, config_source: String, out_dir: &Path) -> CliResult<RunReport> {
    let started = now();
    let config = spec.build()?;
    let mut out = OutputSet::create(out_dir)?;
    let inputs = match command {
        Command::Fit(f) => {
            let bytes = std::fs::read(&f.input).map_err(|e| CliError::io(&f.input, e))?;
            vec![InputFile {
                path: f.input.display().to_string(),
                sha256: sha256_hex(&bytes),
            }]
        }
        _ => Vec::new(),
    };
    let result = commands::dispatch(command, &config, &mut out)?;
    let manifest = RunManifest {
        tool: TOOL_NAME.to_string(),
        version: TOOL_VERSION.to_string(),
        command: command.clone(),
        config: *spec,
        config_source,
        seed: command.common().map_or(0, |c| c.seed),
        plan: result.plan,
        threads: rayon::current_num_threads(),
        started_utc: started,
        finished_utc: now(),
        inputs,
        outputs: out.files().to_vec(),
    };
    let name = RunManifest::file_name(command.name());
    out.write_bytes(&name, &manifest.to_json()?)?;
    let manifest_path = out.dir().join(&name);
    out.commit();
    Ok(RunReport {
        manifest,
        manifest_path,
        summary: result.summary,
    })
}

/// Re-executes a manifest into `out_dir` and compares every output hash.
pub fn replay(manifest_path: &Path, out_dir: &Path) -> CliResult<RunReport> {
    let recorded = RunManifest::read(manifest_path)?;
    if recorded.tool != TOOL_NAME {
        return Err(CliError::config(format!("manifest was written by {:?}", recorded.tool)));
    }
    if recorded.version != TOOL_VERSION {
        log::warn!(
            "manifest written by version {}, replaying with {TOOL_VERSION}; outputs may differ",
            recorded.version
        );
    }
    for input in &recorded.inputs {
        let bytes = std::fs::read(&input.path).map_err(|e| CliError::io(&input.path, e))?;
        if sha256_hex(&bytes) != input.sha256 {
            return Err(CliError::config(format!(
                "input {} changed since the recorded run",
                input.path
            )));
        }
    }
    let mut command = recorded.command.clone();
    match command.common_mut() {
        Some(c) => c.out_dir = out_dir.to_path_buf(),
        None => return Err(CliError::config("a replay manifest cannot itself be replayed")),
    }
    let source = format!("replay of {}", manifest_path.display());
    let mut report = execute(&command, &recorded.config, source, out_dir)?;
    let fresh = &report.manifest.outputs;
    let mut mismatched = Vec::new();
    for old in &recorded.outputs {
        match fresh.iter().find(|f| f.name == old.name) {
            Some(f) if f.sha256 == old.sha256 => {}
            Some(_) => mismatched.push(format!("{} differs", old.name)),
            None => mismatched.push(format!("{} missing", old.name)),
        }
    }
    for f in fresh {
        if !recorded.outputs.iter().any(|o| o.name == f.name) {
            mismatched.push(format!("{} not in the recorded run", f.name));
        }
    }
    if !mismatched.is_empty() {
        return Err(CliError::Mismatch(mismatched.join(", ")));
    }
    report.summary.push(format!(
        "replay: {} outputs identical to {}",
        fresh.len(),
        manifest_path.display()
    ));
    Ok(report)
}

fn now() -> String {
    Utc::now().to_rfc3339_opts(SecondsFormat::Millis, true)
}
