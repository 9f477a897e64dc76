use std::fs;
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use dgpml::analysis::fmt_f64;
use serde::Serialize;
use sha2::{Digest, Sha256};

use crate::config::SimConfig;
use crate::error::{CliError, Stage};

pub const MANIFEST: &str = "run_manifest.toml";
pub const FAILED: &str = "FAILED";
pub const ENERGY_TRACE: &str = "energy_trace.csv";
pub const SWEEP_TABLE: &str = "damping_sweep.csv";
pub const SNAPSHOT_DIR: &str = "snapshots";

/// Object id of `bytes` as git computes it for a blob in SHA-256 repositories.
pub fn blob_hash(bytes: &[u8]) -> String {
    let mut h = Sha256::new();
    h.update(format!("blob {}\0", bytes.len()).as_bytes());
    h.update(bytes);
    hex::encode(h.finalize())
}

pub fn create_dir(dir: &Path) -> Result<(), CliError> {
    fs::create_dir_all(dir).map_err(|e| CliError::io(dir, e))?;
    let marker = dir.join(FAILED);
    if marker.exists() {
        fs::remove_file(&marker).map_err(|e| CliError::io(&marker, e))?;
    }
    Ok(())
}

/// Best effort: the process is already failing.
pub fn write_failed(dir: &Path, stage: Stage, error: &CliError) {
    let text = format!("stage = \"{stage}\"\nexit_code = {}\nerror = {:?}\n", error.exit_code(), error.to_string());
    if let Err(e) = fs::create_dir_all(dir).and_then(|_| fs::write(dir.join(FAILED), text)) {
        log::error!("could not write {}: {e}", dir.join(FAILED).display());
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct RunInfo {
    pub command: &'static str,
    pub version: &'static str,
    pub mesh_file: PathBuf,
    pub mesh_blob_sha256: String,
    pub elements: usize,
    pub interior_elements: usize,
    pub pml_elements: usize,
    pub nodes_per_element: usize,
    pub threads: usize,
    pub dt: f64,
    pub steps: usize,
    pub final_time: f64,
    pub t_f: f64,
    pub source: dgpml::scenario::Source,
    pub pml_widths: [f64; 3],
    pub sigma_max: [f64; 3],
    #[serde(skip_serializing_if = "Option::is_none")]
    pub termination: Option<dgpml::mesh::BoundaryKind>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub initial_energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub final_energy: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub energy_samples: Option<usize>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub snapshots: Option<usize>,
}

#[derive(Debug, Clone, Serialize)]
pub struct SweepInfo {
    pub shape: String,
    pub width: f64,
    pub sigma0: f64,
    pub multipliers: Vec<f64>,
    pub baseline_energy: f64,
    pub rows: usize,
    pub failed_rows: usize,
}

#[derive(Debug, Clone, Serialize)]
pub struct Manifest<'a> {
    pub run: RunInfo,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepInfo>,
    pub config: &'a SimConfig,
}

pub fn write_manifest(dir: &Path, manifest: &Manifest) -> Result<(), CliError> {
    let text = toml::to_string(manifest).map_err(|e| CliError::Config(format!("manifest: {e}")))?;
    let path = dir.join(MANIFEST);
    fs::write(&path, text).map_err(|e| CliError::io(path, e))
}

/// `snapshots/step_NNNNNNNN.csv`: one row per node with `x,y,z,p,vx,vy,vz`.
pub fn write_snapshot(
    dir: &Path,
    step: usize,
    coords: &[[f64; 3]],
    state: &dgpml::acoustics::FieldState,
) -> Result<(), CliError> {
    let sub = dir.join(SNAPSHOT_DIR);
    fs::create_dir_all(&sub).map_err(|e| CliError::io(&sub, e))?;
    let path = sub.join(format!("step_{step:08}.csv"));
    let io = |e| CliError::io(&path, e);
    let mut w = BufWriter::new(fs::File::create(&path).map_err(io)?);
    writeln!(w, "x,y,z,p,vx,vy,vz").map_err(io)?;
    for (g, x) in coords.iter().enumerate() {
        let u = state.node(g);
        let row = [x[0], x[1], x[2], u[0], u[1], u[2], u[3]].map(fmt_f64);
        writeln!(w, "{}", row.join(",")).map_err(io)?;
    }
    w.flush().map_err(io)
}

pub fn output_dir(flag: Option<&Path>, config: &SimConfig, base: &Path) -> PathBuf {
    match flag {
        Some(dir) => dir.to_path_buf(),
        None => base.join(&config.output),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn blob_hash_matches_git_object_format() {
        // `git hash-object --object-format=sha256` of an empty file.
        assert_eq!(
            blob_hash(b""),
            "473a0f4c3be8a93681a267e3b1e9a7dcda1185436fe141f7749120a303721813"
        );
    }
}
