//! Energy in the domain of interest, absorption error `ξ_R`, pointwise error,
//! damping sweeps and their CSV tables.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::acoustics::{FieldState, MediumParams};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Region};
use crate::pml::{damping_area, DampingProfile, DampingShape};
use crate::refelem::{mass_matrix, ReferenceElement};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EnergyMode {
    /// Plain sum of nodal energy densities, no quadrature weights.
    #[default]
    NodalSum,
    /// Integral over the interior with the element mass matrices.
    MassWeighted,
}

impl EnergyMode {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::NodalSum => "nodal_sum",
            Self::MassWeighted => "mass_weighted",
        }
    }
}

/// Precomputed weights for repeated energy evaluation on one mesh.
#[derive(Debug, Clone)]
pub struct EnergyMeter {
    mode: EnergyMode,
    num_nodes: usize,
    interior: Vec<usize>,
    /// Row-major reference mass matrix.
    mass: Vec<f64>,
    jacobian: Vec<f64>,
    inv_bulk: f64,
    density: f64,
}

impl EnergyMeter {
    pub fn new(mesh: &Mesh, elem: &ReferenceElement, medium: &MediumParams, mode: EnergyMode) -> Self {
        let m = mass_matrix(elem);
        let mass = (0..m.nrows()).flat_map(|i| m.row(i).iter().copied().collect::<Vec<_>>()).collect();
        let ref_volume = 4.0 / 3.0;
        let jacobian = mesh
            .elements
            .iter()
            .map(|tet| crate::mesh::signed_volume(&mesh.vertices, tet).abs() / ref_volume)
            .collect();
        Self {
            mode,
            num_nodes: elem.num_nodes,
            interior: (0..mesh.num_elements())
                .filter(|&k| mesh.region_tags[k] == Region::Interior)
                .collect(),
            mass,
            jacobian,
            inv_bulk: 1.0 / medium.bulk_modulus(),
            density: medium.density,
        }
    }

    pub fn mode(&self) -> EnergyMode {
        self.mode
    }

    fn element_energy(&self, k: usize, state: &FieldState) -> f64 {
        let np = self.num_nodes;
        let range = k * np..(k + 1) * np;
        let p = &state.pressure[range.clone()];
        let v = state.velocity.each_ref().map(|c| &c[range.clone()]);
        match self.mode {
            EnergyMode::NodalSum => (0..np)
                .map(|i| {
                    0.5 * (self.inv_bulk * p[i] * p[i]
                        + self.density * (v[0][i] * v[0][i] + v[1][i] * v[1][i] + v[2][i] * v[2][i]))
                })
                .sum(),
            EnergyMode::MassWeighted => {
                let quad = |u: &[f64]| -> f64 {
                    (0..np)
                        .map(|i| {
                            let row = &self.mass[i * np..(i + 1) * np];
                            u[i] * row.iter().zip(u).map(|(m, x)| m * x).sum::<f64>()
                        })
                        .sum()
                };
                let kinetic = quad(v[0]) + quad(v[1]) + quad(v[2]);
                0.5 * self.jacobian[k] * (self.inv_bulk * quad(p) + self.density * kinetic)
            }
        }
    }

    /// Energy over interior elements; per-element terms are summed in element
    /// order so the result does not depend on the thread count.
    pub fn measure(&self, state: &FieldState) -> f64 {
        let parts: Vec<f64> = self
            .interior
            .par_iter()
            .map(|&k| self.element_energy(k, state))
            .collect();
        parts.iter().sum()
    }
}

pub fn interior_energy(
    state: &FieldState,
    mesh: &Mesh,
    elem: &ReferenceElement,
    medium: &MediumParams,
    mode: EnergyMode,
) -> f64 {
    EnergyMeter::new(mesh, elem, medium, mode).measure(state)
}

#[derive(Debug, Clone, PartialEq)]
pub struct EnergyTrace {
    pub times: Vec<f64>,
    pub energy: Vec<f64>,
    pub mode: EnergyMode,
}

impl EnergyTrace {
    pub fn new(mode: EnergyMode) -> Self {
        Self {
            times: Vec::new(),
            energy: Vec::new(),
            mode,
        }
    }

    /// Appends a sample; times must increase strictly.
    pub fn push(&mut self, time: f64, energy: f64) -> Result<()> {
        if let Some(&last) = self.times.last() {
            if time <= last {
                return Err(Error::Shape(format!("sample time {time} does not follow {last}")));
            }
        }
        if !(energy >= 0.0) {
            return Err(Error::Shape(format!("energy sample {energy} is negative or NaN")));
        }
        self.times.push(time);
        self.energy.push(energy);
        Ok(())
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<(f64, f64)> {
        Some((*self.times.last()?, *self.energy.last()?))
    }

    /// Energy at the sample closest to `t`.
    pub fn at(&self, t: f64) -> Option<f64> {
        let i = self
            .times
            .iter()
            .enumerate()
            .min_by(|a, b| (a.1 - t).abs().total_cmp(&(b.1 - t).abs()))?
            .0;
        Some(self.energy[i])
    }
}

/// `ξ_R = sqrt(E / E_wall)`.
pub fn relative_error_xi(energy_pml: f64, energy_wall: f64) -> Result<f64> {
    if !(energy_wall > 0.0) {
        return Err(Error::Config(format!("reference energy must be positive, got {energy_wall}")));
    }
    Ok((energy_pml / energy_wall).sqrt())
}

/// Round-trip time `(L + 2δ)/c`.
pub fn t_f(interior_edge_length: f64, pml_width: f64, medium: &MediumParams) -> f64 {
    (interior_edge_length + 2.0 * pml_width) / medium.sound_speed
}

/// Largest nodal pressure difference over elements with `mask[k]` set.
pub fn linf_error(state: &FieldState, reference: &FieldState, mask: &[bool]) -> Result<f64> {
    if state.len() != reference.len() || mask.is_empty() || state.len() % mask.len() != 0 {
        return Err(Error::Shape(format!(
            "cannot compare fields of {} and {} nodes over {} elements",
            state.len(),
            reference.len(),
            mask.len()
        )));
    }
    let np = state.len() / mask.len();
    let mut worst = 0.0f64;
    for (k, _) in mask.iter().enumerate().filter(|(_, &m)| m) {
        for g in k * np..(k + 1) * np {
            worst = worst.max((state.pressure[g] - reference.pressure[g]).abs());
        }
    }
    Ok(worst)
}

/// Interior-element mask of a mesh.
pub fn interior_mask(mesh: &Mesh) -> Vec<bool> {
    mesh.region_tags.iter().map(|r| *r == Region::Interior).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RowStatus {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub sigma_max: f64,
    pub multiplier: f64,
    pub damping_area: f64,
    pub xi_r: Option<f64>,
    pub status: RowStatus,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SweepTable {
    pub shape: String,
    pub width: f64,
    pub sigma0: f64,
    pub baseline_energy: f64,
    pub rows: Vec<SweepRow>,
}

impl SweepTable {
    /// Row with the smallest `ξ_R` among stable rows.
    pub fn best(&self) -> Option<&SweepRow> {
        self.rows
            .iter()
            .filter(|r| r.xi_r.is_some())
            .min_by(|a, b| a.xi_r.unwrap().total_cmp(&b.xi_r.unwrap()))
    }
}

/// Sorted multipliers with duplicates removed (warned).
pub fn dedup_multipliers(multipliers: &[f64]) -> Result<Vec<f64>> {
    let mut m = multipliers.to_vec();
    if m.iter().any(|x| !(*x >= 0.0 && x.is_finite())) {
        return Err(Error::Config("sweep multipliers must be finite and >= 0".into()));
    }
    m.sort_by(f64::total_cmp);
    let before = m.len();
    m.dedup();
    if m.len() < before {
        log::warn!("dropped {} duplicate sweep multipliers", before - m.len());
    }
    Ok(m)
}

/// Runs one simulation per `σ_max = multiplier · σ₀` and reports `ξ_R` against
/// the undamped reflective baseline.
///
/// `energy_at_tf` maps a profile to the interior energy at the round-trip time.
/// The baseline is computed with `σ_max = 0` unless supplied. Failed rows are
/// recorded and the sweep continues.
pub fn damping_sweep(
    shape: Arc<dyn DampingShape>,
    width: f64,
    sigma0: f64,
    multipliers: &[f64],
    baseline: Option<f64>,
    mut energy_at_tf: impl FnMut(&DampingProfile) -> Result<f64>,
) -> Result<SweepTable> {
    let multipliers = dedup_multipliers(multipliers)?;
    let baseline_energy = match baseline {
        Some(e) => e,
        None => energy_at_tf(&DampingProfile::new(shape.clone(), 0.0, width)?)?,
    };
    let mut rows = Vec::with_capacity(multipliers.len());
    for m in multipliers {
        let profile = DampingProfile::new(shape.clone(), m * sigma0, width)?;
        let result = energy_at_tf(&profile).and_then(|e| relative_error_xi(e, baseline_energy));
        let (xi_r, status) = match result {
            Ok(x) if x.is_finite() => (Some(x), RowStatus::Ok),
            Ok(_) => (None, RowStatus::Failed),
            Err(e) => {
                log::warn!("sweep row {m} x sigma0 failed: {e}");
                (None, RowStatus::Failed)
            }
        };
        rows.push(SweepRow {
            sigma_max: profile.sigma_max,
            multiplier: m,
            damping_area: damping_area(&profile),
            xi_r,
            status,
        });
    }
    Ok(SweepTable {
        shape: shape.name().to_string(),
        width,
        sigma0,
        baseline_energy,
        rows,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct ConvergenceRow {
    pub mesh_id: String,
    pub order: usize,
    pub linf_error: f64,
    pub wall_time_s: f64,
}

/// Float formatting with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

fn write_lines(path: &Path, header: &str, lines: impl Iterator<Item = String>) -> Result<()> {
    let mut out = std::io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(out, "{header}")?;
    for line in lines {
        writeln!(out, "{line}")?;
    }
    out.flush()?;
    Ok(())
}

pub fn write_energy_csv(path: impl AsRef<Path>, trace: &EnergyTrace) -> Result<()> {
    write_lines(
        path.as_ref(),
        "time_s,energy,mode",
        trace
            .times
            .iter()
            .zip(&trace.energy)
            .map(|(t, e)| format!("{},{},{}", fmt_f64(*t), fmt_f64(*e), trace.mode.as_str())),
    )
}

pub fn write_sweep_csv(path: impl AsRef<Path>, table: &SweepTable) -> Result<()> {
    write_lines(
        path.as_ref(),
        "sigma_max,multiplier,damping_area,xi_r,status",
        table.rows.iter().map(|r| {
            format!(
                "{},{},{},{},{}",
                fmt_f64(r.sigma_max),
                fmt_f64(r.multiplier),
                fmt_f64(r.damping_area),
                r.xi_r.map(fmt_f64).unwrap_or_else(|| "nan".into()),
                match r.status {
                    RowStatus::Ok => "ok",
                    RowStatus::Failed => "failed",
                }
            )
        }),
    )
}

pub fn write_convergence_csv(path: impl AsRef<Path>, rows: &[ConvergenceRow]) -> Result<()> {
    write_lines(
        path.as_ref(),
        "mesh_id,order,linf_error,wall_time_s",
        rows.iter().map(|r| {
            format!("{},{},{},{}", r.mesh_id, r.order, fmt_f64(r.linf_error), fmt_f64(r.wall_time_s))
        }),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::tests::box_setup;
    use crate::pml::Quadratic;

    #[test]
    fn energy_of_zero_and_constant_fields() {
        let s = box_setup(0.75, 2, "reflective", 3);
        let medium = MediumParams::default();
        let n = s.mesh.num_elements() * s.elem.num_nodes;
        let mut u = FieldState::zeros(n);
        for mode in [EnergyMode::NodalSum, EnergyMode::MassWeighted] {
            assert_eq!(interior_energy(&u, &s.mesh, &s.elem, &medium, mode), 0.0);
        }
        u.pressure.fill(1.0);
        let e = interior_energy(&u, &s.mesh, &s.elem, &medium, EnergyMode::MassWeighted);
        let volume = 1.5f64.powi(3);
        let exact = volume / (2.0 * medium.bulk_modulus());
        assert!((e - exact).abs() < 1e-12 * exact, "{e} vs {exact}");
        let nodal = interior_energy(&u, &s.mesh, &s.elem, &medium, EnergyMode::NodalSum);
        assert!((nodal - n as f64 / (2.0 * medium.bulk_modulus())).abs() < 1e-9 * nodal);
    }

    #[test]
    fn xi_values() {
        assert_eq!(relative_error_xi(2.0, 2.0).unwrap(), 1.0);
        assert_eq!(relative_error_xi(0.0, 2.0).unwrap(), 0.0);
        assert_eq!(relative_error_xi(0.5, 2.0).unwrap(), 0.5);
        assert!(relative_error_xi(1.0, 0.0).is_err());
    }

    #[test]
    fn round_trip_time() {
        let m = MediumParams::default();
        assert!((t_f(5.0, 1.0, &m) - 7.0 / 343.0).abs() < 1e-15);
        assert!((t_f(5.0, 1.0, &m) - 0.020408).abs() < 1e-6);
        assert_eq!(t_f(5.0, 0.0, &m), 5.0 / 343.0);
        assert_eq!(t_f(5.0, 0.5, &m), 6.0 / 343.0);
    }

    #[test]
    fn linf_examples() {
        let mut a = FieldState::zeros(8);
        a.pressure.iter_mut().enumerate().for_each(|(i, p)| *p = i as f64);
        assert_eq!(linf_error(&a, &a, &[true, true]).unwrap(), 0.0);
        let mut b = a.clone();
        b.pressure[5] += 1e-3;
        assert!((linf_error(&a, &b, &[true, true]).unwrap() - 1e-3).abs() < 1e-15);
        assert_eq!(linf_error(&a, &b, &[true, false]).unwrap(), 0.0);
        assert!(linf_error(&a, &FieldState::zeros(4), &[true]).is_err());
    }

    #[test]
    fn trace_requires_increasing_times() {
        let mut t = EnergyTrace::new(EnergyMode::NodalSum);
        t.push(0.0, 1.0).unwrap();
        t.push(0.1, 0.5).unwrap();
        assert!(t.push(0.1, 0.4).is_err());
        assert!(t.push(0.2, -1.0).is_err());
        assert_eq!(t.at(0.09), Some(0.5));
    }

    #[test]
    fn sweep_bookkeeping() {
        let shape: Arc<dyn DampingShape> = Arc::new(Quadratic);
        let mut calls = Vec::new();
        let table = damping_sweep(shape, 1.0, 100.0, &[2.0, 0.5, 2.0, 1.0], None, |p| {
            calls.push(p.sigma_max);
            if p.sigma_max == 0.0 {
                Ok(4.0)
            } else if p.sigma_max == 200.0 {
                Err(Error::Instability { step: 3, stage: 1 })
            } else {
                Ok(1.0)
            }
        })
        .unwrap();
        assert_eq!(calls, [0.0, 50.0, 100.0, 200.0]);
        assert_eq!(table.rows.len(), 3);
        assert_eq!(table.rows[0].xi_r, Some(0.5));
        assert_eq!(table.rows[2].status, RowStatus::Failed);
        assert!((table.rows[1].damping_area - 100.0 / 3.0).abs() < 1e-12);
        assert_eq!(table.best().unwrap().multiplier, 0.5);
    }

    #[test]
    fn csv_format() {
        let dir = tempfile::tempdir().unwrap();
        let mut t = EnergyTrace::new(EnergyMode::MassWeighted);
        t.push(0.0, 0.1).unwrap();
        let path = dir.path().join("energy_trace.csv");
        write_energy_csv(&path, &t).unwrap();
        let text = std::fs::read_to_string(&path).unwrap();
        assert_eq!(
            text,
            "time_s,energy,mode\n0.0000000000000000e0,1.0000000000000001e-1,mass_weighted\n"
        );
        let back: f64 = text.lines().nth(1).unwrap().split(',').nth(1).unwrap().parse().unwrap();
        assert_eq!(back, 0.1);
    }
}
