//! Instance and report documents. Both are JSON; floats are written in the
//! shortest form that parses back to the same `f64`.

use std::fs;
use std::io::Write;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::CliError;
use crate::explorer::ExplorerReport;
use crate::oracle::OracleResult;
use crate::spectrum::{BoundsReport, VectorSystem};
use crate::witness::{WitnessCheck, WitnessResult};

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceFile {
    pub schema_version: u32,
    pub n: usize,
    /// Rows are the vectors `x_j`.
    pub vectors: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
}

impl InstanceFile {
    pub fn from_system(x: &VectorSystem, label: Option<String>, seed: Option<u64>) -> Self {
        InstanceFile {
            schema_version: SCHEMA_VERSION,
            n: x.n(),
            vectors: x.rows(),
            label,
            seed,
        }
    }

    pub fn parse(text: &str) -> Result<Self, CliError> {
        let file: InstanceFile =
            serde_json::from_str(text).map_err(|e| CliError::input(format!("malformed instance: {e}")))?;
        if file.schema_version != SCHEMA_VERSION {
            return Err(CliError::input(format!(
                "unsupported schema_version {} (expected {SCHEMA_VERSION})",
                file.schema_version
            )));
        }
        if file.vectors.len() != file.n {
            return Err(CliError::input(format!(
                "n = {} but {} vectors given",
                file.n,
                file.vectors.len()
            )));
        }
        Ok(file)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = fs::read_to_string(path)
            .map_err(|e| CliError::input(format!("cannot read {}: {e}", path.display())))?;
        Self::parse(&text)
    }

    /// Validated system; rows off the unit sphere by more than the input
    /// tolerance are rejected.
    pub fn system(&self) -> Result<VectorSystem, CliError> {
        VectorSystem::from_rows(&self.vectors).map_err(CliError::from)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InstanceEcho {
    pub n: usize,
    pub vectors: Vec<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub label: Option<String>,
}

impl From<&InstanceFile> for InstanceEcho {
    fn from(f: &InstanceFile) -> Self {
        InstanceEcho {
            n: f.n,
            vectors: f.vectors.clone(),
            label: f.label.clone(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verification {
    pub check: WitnessCheck,
    pub oracle: OracleResult,
    /// `bound - tol <= witness <= oracle + tol` in log-space.
    pub sandwich_ok: bool,
    pub tolerance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceRow {
    /// Offset from the center as a fraction of `V/S`.
    pub fraction: f64,
    pub height: f64,
    /// Volume factor of the computed slice; 0 when it is empty.
    pub measured: f64,
    pub formula: f64,
    pub relative_error: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SliceTable {
    pub k: usize,
    pub seed: u64,
    pub center: Vec<f64>,
    pub shape: Vec<Vec<f64>>,
    pub volume_factor: f64,
    pub central_slice_factor: f64,
    pub rows: Vec<SliceRow>,
    pub max_relative_error: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Timing {
    pub elapsed_seconds: f64,
}

/// Output document of every subcommand except `gen`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReportFile {
    pub schema_version: u32,
    pub command: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub instance: Option<InstanceEcho>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gram: Option<Vec<Vec<f64>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bounds: Option<BoundsReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<WitnessResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub verification: Option<Verification>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub oracle: Option<OracleResult>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub explorer: Option<ExplorerReport>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub slice_table: Option<SliceTable>,
    pub timing: Timing,
}

impl ReportFile {
    pub fn new(command: &str) -> Self {
        ReportFile {
            schema_version: SCHEMA_VERSION,
            command: command.to_string(),
            instance: None,
            gram: None,
            bounds: None,
            witness: None,
            verification: None,
            oracle: None,
            explorer: None,
            slice_table: None,
            timing: Timing { elapsed_seconds: 0.0 },
        }
    }
}

pub fn to_json<T: Serialize>(value: &T) -> Result<String, CliError> {
    let mut text = serde_json::to_string_pretty(value)
        .map_err(|e| CliError::numerical(format!("cannot serialize output: {e}")))?;
    text.push('\n');
    Ok(text)
}

/// Writes to `path`, or standard output when `None`.
pub fn emit(text: &str, path: Option<&Path>) -> Result<(), CliError> {
    match path {
        Some(p) => fs::write(p, text).map_err(|e| CliError::input(format!("cannot write {}: {e}", p.display()))),
        None => {
            let mut out = std::io::stdout().lock();
            out.write_all(text.as_bytes())
                .and_then(|_| out.flush())
                .map_err(|e| CliError::input(format!("cannot write output: {e}")))
        }
    }
}
