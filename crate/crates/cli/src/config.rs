use std::path::{Path, PathBuf};

use dgpml::acoustics::MediumParams;
use dgpml::analysis::EnergyMode;
use dgpml::mesh::BoundaryKind;
use dgpml::pml::PhiCoupling;
use dgpml::refelem::MAX_ORDER;
use dgpml::scenario::{PeriodicConvention, Source};
use serde::{Deserialize, Serialize};

use crate::error::CliError;

/// Multipliers of `σ₀` swept when the config does not list any.
pub const DEFAULT_MULTIPLIERS: [f64; 9] = [0.1, 0.2, 0.5, 1.0, 2.0, 3.0, 5.0, 7.0, 10.0];

/// Plain values come before tables so the struct serializes back to TOML.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    /// Gmsh 2.2 mesh; relative paths resolve against the config file.
    pub mesh: PathBuf,
    pub order: usize,
    #[serde(default = "default_cfl")]
    pub cfl: f64,
    /// Seconds, or `"t_f"` for the round-trip time. Defaults to the preset's
    /// choice, or `t_f` for an explicit source.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub final_time: Option<FinalTimeSpec>,
    /// Relative paths resolve against the config file; `--output` overrides.
    #[serde(default = "default_output")]
    pub output: PathBuf,
    #[serde(default)]
    pub energy_mode: EnergyMode,
    /// Energy sampling cadence in steps.
    #[serde(default = "default_energy_every")]
    pub energy_every: usize,
    /// Snapshot cadence in steps; 0 disables snapshots.
    #[serde(default)]
    pub snapshot_every: usize,
    #[serde(default)]
    pub periodic_convention: PeriodicConvention,
    #[serde(default)]
    pub medium: MediumParams,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub scenario: Option<ScenarioRef>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub source: Option<Source>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub pml: Option<PmlConfig>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sweep: Option<SweepConfig>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum FinalTimeSpec {
    Seconds(f64),
    Keyword(FinalTimeKeyword),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum FinalTimeKeyword {
    #[serde(rename = "t_f")]
    RoundTrip,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScenarioRef {
    pub preset: String,
    /// Peak wavelength in metres.
    #[serde(default = "default_wavelength")]
    pub wavelength: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PmlConfig {
    #[serde(default = "default_shape")]
    pub shape: String,
    /// Layer width per axis; measured from the mesh when absent.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub widths: Option<[f64; 3]>,
    #[serde(default)]
    pub sigma_max: SigmaSpec,
    /// Target normal-incidence reflection factor behind `σ₀`.
    #[serde(default = "default_reflection")]
    pub reflection: f64,
    #[serde(default)]
    pub phi_coupling: PhiCoupling,
    /// Kind forced onto the outer faces of layer elements.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub termination: Option<BoundaryKind>,
}

impl Default for PmlConfig {
    fn default() -> Self {
        Self {
            shape: default_shape(),
            widths: None,
            sigma_max: SigmaSpec::default(),
            reflection: default_reflection(),
            phi_coupling: PhiCoupling::default(),
            termination: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum SigmaSpec {
    /// 1/s.
    Absolute(f64),
    Multiplier(f64),
    /// Damping area `∫σ dx`, m/s.
    TargetArea(f64),
}

impl Default for SigmaSpec {
    fn default() -> Self {
        Self::Multiplier(1.0)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    #[serde(default = "default_multipliers")]
    pub multipliers: Vec<f64>,
}

fn default_cfl() -> f64 {
    0.95
}

fn default_output() -> PathBuf {
    PathBuf::from("output")
}

fn default_energy_every() -> usize {
    20
}

fn default_wavelength() -> f64 {
    1.0
}

fn default_shape() -> String {
    "quadratic".into()
}

fn default_reflection() -> f64 {
    1e-3
}

fn default_multipliers() -> Vec<f64> {
    DEFAULT_MULTIPLIERS.to_vec()
}

fn invalid(msg: impl Into<String>) -> CliError {
    CliError::Config(msg.into())
}

impl SimConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        toml::from_str(text).map_err(|e| invalid(e.to_string()))
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if !(1..=MAX_ORDER).contains(&self.order) {
            return Err(invalid(format!("order must be in 1..={MAX_ORDER}, got {}", self.order)));
        }
        if !(self.cfl > 0.0 && self.cfl.is_finite()) {
            return Err(invalid(format!("cfl must be positive, got {}", self.cfl)));
        }
        if self.energy_every == 0 {
            return Err(invalid("energy_every must be at least 1"));
        }
        self.medium.validate().map_err(|e| invalid(e.to_string()))?;
        match (&self.scenario, &self.source) {
            (Some(_), Some(_)) => return Err(invalid("give either [scenario] or [source], not both")),
            (None, None) => return Err(invalid("a [scenario] or [source] section is required")),
            (Some(s), None) if !(s.wavelength > 0.0 && s.wavelength.is_finite()) => {
                return Err(invalid(format!("wavelength must be positive, got {}", s.wavelength)));
            }
            (None, Some(src)) => src.validate().map_err(|e| invalid(e.to_string()))?,
            _ => {}
        }
        if let Some(FinalTimeSpec::Seconds(t)) = self.final_time {
            if !(t > 0.0 && t.is_finite()) {
                return Err(invalid(format!("final_time must be positive, got {t}")));
            }
        }
        if let Some(pml) = &self.pml {
            if let Some(w) = pml.widths {
                if w.iter().any(|x| !(*x > 0.0 && x.is_finite())) {
                    return Err(invalid(format!("pml widths must be positive, got {w:?}")));
                }
            }
            let value = match pml.sigma_max {
                SigmaSpec::Absolute(x) | SigmaSpec::Multiplier(x) | SigmaSpec::TargetArea(x) => x,
            };
            if !(value >= 0.0 && value.is_finite()) {
                return Err(invalid(format!("sigma_max must be finite and >= 0, got {value}")));
            }
            if !(pml.reflection > 0.0 && pml.reflection < 1.0) {
                return Err(invalid(format!("reflection must lie in (0, 1), got {}", pml.reflection)));
            }
        }
        Ok(())
    }

    /// Mesh path with relative paths taken from `base`.
    pub fn mesh_path(&self, base: &Path) -> PathBuf {
        base.join(&self.mesh)
    }
}
