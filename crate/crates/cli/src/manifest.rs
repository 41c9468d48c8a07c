use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::args::Command;
use crate::config::ConfigSpec;
use crate::error::{CliError, CliResult};
use crate::output::OutputFile;

pub const TOOL_NAME: &str = "paramp";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct InputFile {
    pub path: String,
    pub sha256: String,
}

/// Everything needed to reproduce a run: the command with its flags, the
/// configuration as written, and hashes of what went in and came out.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub tool: String,
    pub version: String,
    pub command: Command,
    pub config: ConfigSpec,
    /// Where the configuration came from, for the reader only.
    pub config_source: String,
    pub seed: u64,
    /// Resolved integration plans and derived quantities, for the reader.
    pub plan: serde_json::Value,
    /// Worker threads at run time. Outputs do not depend on it.
    pub threads: usize,
    pub started_utc: String,
    pub finished_utc: String,
    pub inputs: Vec<InputFile>,
    pub outputs: Vec<OutputFile>,
}

impl RunManifest {
    pub fn file_name(command: &str) -> String {
        format!("{command}.manifest.json")
    }

    pub fn to_json(&self) -> CliResult<Vec<u8>> {
        let mut bytes = serde_json::to_vec_pretty(self)
            .map_err(|e| CliError::numeric(format!("manifest serialization failed: {e}")))?;
        bytes.push(b'\n');
        Ok(bytes)
    }

    pub fn read(path: &Path) -> CliResult<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        serde_json::from_str(&text)
            .map_err(|e| CliError::config(format!("{}: not a run manifest: {e}", path.display())))
    }
}
