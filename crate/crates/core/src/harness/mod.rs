//! Config-driven experiment runs that write CSV tables plus a manifest.
//!
//! Every run is a pure function of its config: all randomness comes from
//! the config seed through [`derive_seed`](crate::seed::derive_seed), so two
//! runs of the same config produce byte-identical CSV files. The manifest
//! records their SHA-256 checksums (and a wall time, which naturally differs).

mod config;
mod experiments;

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::Serialize;
use sha2::{Digest, Sha256};

pub use config::{
    BinarySection, EstimateSection, Experiment, ExperimentConfig, Grid, LinearSection, OutcomeSpec, PerCause,
    PositivitySection, ProxySection, Setting,
};
pub use experiments::{run_binary_ignorance, run_estimate, run_linear_ignorance, run_positivity};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, thiserror::Error)]
pub enum HarnessError {
    #[error("config error: {0}")]
    Config(String),
    #[error("numerical failure: {0}")]
    Numerical(String),
    #[error("i/o error at {path}: {source}")]
    Io {
        path: PathBuf,
        #[source]
        source: std::io::Error,
    },
}

impl HarnessError {
    pub(crate) fn config(field: &str, msg: impl std::fmt::Display) -> Self {
        HarnessError::Config(format!("`{field}`: {msg}"))
    }

    pub(crate) fn io(path: &Path, source: std::io::Error) -> Self {
        HarnessError::Io { path: path.to_path_buf(), source }
    }

    /// Process exit code: 2 for config errors, 3 for numerical failures,
    /// 1 for anything else.
    pub fn exit_code(&self) -> i32 {
        match self {
            HarnessError::Config(_) => 2,
            HarnessError::Numerical(_) => 3,
            HarnessError::Io { .. } => 1,
        }
    }
}

impl From<crate::Error> for HarnessError {
    fn from(e: crate::Error) -> Self {
        match e {
            crate::Error::Numerical(msg) => HarnessError::Numerical(msg),
            other => HarnessError::Config(other.to_string()),
        }
    }
}

/// One output table, held in memory until the run succeeds.
#[derive(Debug, Clone, PartialEq)]
pub struct OutputFile {
    pub name: String,
    pub contents: Vec<u8>,
}

impl OutputFile {
    pub fn sha256(&self) -> String {
        hex::encode(Sha256::digest(&self.contents))
    }
}

/// Result of an experiment before anything touches the disk.
#[derive(Debug, Clone, PartialEq)]
pub struct RunOutput {
    pub files: Vec<OutputFile>,
    /// Summary values worth recording next to the tables.
    pub notes: BTreeMap<String, serde_json::Value>,
}

#[derive(Debug, Clone, Serialize)]
pub struct ManifestEntry {
    pub file: String,
    pub bytes: usize,
    pub sha256: String,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest {
    pub experiment: String,
    pub library_version: String,
    pub seed: u64,
    pub config: ExperimentConfig,
    pub outputs: Vec<ManifestEntry>,
    pub notes: BTreeMap<String, serde_json::Value>,
    pub wall_time_seconds: f64,
}

/// Run one experiment in memory.
pub fn execute(experiment: Experiment, config: &ExperimentConfig) -> Result<RunOutput, HarnessError> {
    config.validate_for(experiment)?;
    match experiment {
        Experiment::LinearIgnorance => run_linear_ignorance(config),
        Experiment::BinaryIgnorance => run_binary_ignorance(config),
        Experiment::Estimate => run_estimate(config),
        Experiment::Positivity => run_positivity(config),
    }
}

/// Run one experiment and write its tables, then `manifest.json`, into `out_dir`.
pub fn run(experiment: Experiment, config: &ExperimentConfig, out_dir: &Path) -> Result<Manifest, HarnessError> {
    let start = Instant::now();
    let output = execute(experiment, config)?;
    std::fs::create_dir_all(out_dir).map_err(|e| HarnessError::io(out_dir, e))?;
    let mut entries = Vec::with_capacity(output.files.len());
    for file in &output.files {
        let path = out_dir.join(&file.name);
        std::fs::write(&path, &file.contents).map_err(|e| HarnessError::io(&path, e))?;
        entries.push(ManifestEntry { file: file.name.clone(), bytes: file.contents.len(), sha256: file.sha256() });
    }
    let manifest = Manifest {
        experiment: experiment.name().to_string(),
        library_version: env!("CARGO_PKG_VERSION").to_string(),
        seed: config.seed,
        config: config.clone(),
        outputs: entries,
        notes: output.notes,
        wall_time_seconds: start.elapsed().as_secs_f64(),
    };
    let path = out_dir.join(MANIFEST_FILE);
    let json = serde_json::to_string_pretty(&manifest).map_err(|e| HarnessError::Numerical(e.to_string()))?;
    std::fs::write(&path, json + "\n").map_err(|e| HarnessError::io(&path, e))?;
    Ok(manifest)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn exit_codes() {
        assert_eq!(HarnessError::Config("x".into()).exit_code(), 2);
        assert_eq!(HarnessError::from(crate::Error::Numerical("diverged".into())).exit_code(), 3);
        assert_eq!(HarnessError::from(crate::Error::Domain("p".into())).exit_code(), 2);
        let io = HarnessError::io(Path::new("x"), std::io::Error::other("boom"));
        assert_eq!(io.exit_code(), 1);
    }

    #[test]
    fn checksum_is_sha256() {
        let f = OutputFile { name: "a".into(), contents: b"abc".to_vec() };
        assert_eq!(f.sha256(), "ba7816bf8f01cfea414140de5dae2223b00361a396177a9cb410ff61f20015ad");
    }
}
