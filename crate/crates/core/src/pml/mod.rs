//! Decoupled perfectly matched layer.
//!
//! Inside the layer the acoustic system gains damping and three auxiliary
//! variables `φ`:
//!
//! ```text
//! p_t = -ρc² ∇·v - (σx + σy + σz) p
//! v_t = -∇p / ρ - φ / (ρc²)
//! φ_t = -Γ₁ φ + ρc² Γ₂ v_t
//! ```
//!
//! `φ / (ρc²)` has units of acceleration. σ is evaluated once per node.

mod profile;

use serde::{Deserialize, Serialize};

pub use profile::{
    damping_area, eval_damping, reference_sigma, validate_shape, DampingProfile, DampingShape,
    LinearSine, Quadratic, ShapeRegistry,
};

use crate::acoustics::{FieldState, MediumParams};
use crate::error::{Error, Result};
use crate::mesh::{Mesh, Region};

/// What the auxiliary update couples to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiCoupling {
    /// Instantaneous velocity rate of the current stage.
    #[default]
    Rate,
    /// Velocity stage value after its update, read literally from the staged scheme.
    StageValue,
}

/// Axis-aligned box `[min, max]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AxisBox {
    pub min: [f64; 3],
    pub max: [f64; 3],
}

impl AxisBox {
    /// Bounding box of the interior-tagged elements.
    pub fn from_interior(mesh: &Mesh) -> Result<Self> {
        let (min, max) = mesh
            .region_bounding_box(Region::Interior)
            .ok_or_else(|| Error::Config("mesh has no interior-tagged elements".into()))?;
        Ok(Self { min, max })
    }

    pub fn extent(&self, d: usize) -> f64 {
        self.max[d] - self.min[d]
    }

    /// Distance beyond the box along axis `d` (0 inside).
    pub fn depth(&self, x: [f64; 3], d: usize) -> f64 {
        (self.min[d] - x[d]).max(x[d] - self.max[d]).max(0.0)
    }
}

/// `(diag Γ₁, diag Γ₂)`.
pub fn gamma_matrices(sigma: [f64; 3]) -> ([f64; 3], [f64; 3]) {
    let [sx, sy, sz] = sigma;
    (
        [sy + sz, sx + sz, sx + sy],
        [sx - sy - sz, sy - sx - sz, sz - sx - sy],
    )
}

/// Nodal `(σx, σy, σz)`: zero on interior elements and inside `interior_box`.
pub fn build_sigma_nodal(
    mesh: &Mesh,
    profiles: &[DampingProfile; 3],
    interior_box: &AxisBox,
) -> Result<[Vec<f64>; 3]> {
    let maps = mesh.node_maps()?;
    let np = maps.num_nodes;
    let mut sigma: [Vec<f64>; 3] = std::array::from_fn(|_| vec![0.0; maps.node_coords.len()]);
    let mut clamped = 0usize;
    for (k, region) in mesh.region_tags.iter().enumerate() {
        if *region != Region::Pml {
            continue;
        }
        for g in k * np..(k + 1) * np {
            let x = maps.node_coords[g];
            for d in 0..3 {
                let depth = interior_box.depth(x, d);
                let (depth, was_clamped) = profile::clamp_depth(&profiles[d], depth).map_err(|_| {
                    Error::Config(format!(
                        "pml node {x:?} of element {k} lies {depth:.6e} m beyond the interior box \
                         along axis {d}, wider than the {} m layer",
                        profiles[d].width
                    ))
                })?;
                clamped += was_clamped as usize;
                let p = &profiles[d];
                sigma[d][g] = p.sigma_max * p.shape.ramp(depth / p.width);
            }
        }
    }
    if clamped > 0 {
        log::warn!("{clamped} node depths clamped onto the damping layer bounds");
    }
    Ok(sigma)
}

/// Auxiliary variables and the fixed nodal damping.
#[derive(Debug, Clone)]
pub struct PmlState {
    pub phi: [Vec<f64>; 3],
    pub sigma: [Vec<f64>; 3],
    /// Elements tagged as layer; φ stays zero elsewhere.
    pub active: Vec<bool>,
}

impl PmlState {
    pub fn new(mesh: &Mesh, sigma: [Vec<f64>; 3]) -> Result<Self> {
        let len = sigma[0].len();
        if sigma.iter().any(|s| s.len() != len) || len % mesh.num_elements() != 0 {
            return Err(Error::Shape("sigma arrays do not match the mesh".into()));
        }
        if let Some(bad) = sigma.iter().flatten().find(|s| !(**s >= 0.0)) {
            return Err(Error::Config(format!("negative or NaN damping value {bad}")));
        }
        Ok(Self {
            phi: std::array::from_fn(|_| vec![0.0; len]),
            sigma,
            active: mesh.region_tags.iter().map(|r| *r == Region::Pml).collect(),
        })
    }

    /// Zero damping on every node.
    pub fn undamped(mesh: &Mesh) -> Result<Self> {
        let len = mesh.node_maps()?.node_coords.len();
        Self::new(mesh, std::array::from_fn(|_| vec![0.0; len]))
    }

    pub fn sigma_at(&self, g: usize) -> [f64; 3] {
        [self.sigma[0][g], self.sigma[1][g], self.sigma[2][g]]
    }

    pub fn phi_at(&self, g: usize) -> [f64; 3] {
        [self.phi[0][g], self.phi[1][g], self.phi[2][g]]
    }
}

/// Damping and coupling terms at one node.
///
/// `lv` is the undamped velocity rate. Returns the pressure damping term, the
/// full velocity rate `lv - φ/(ρc²)`, and `φ_t = -Γ₁φ + ρc²Γ₂ v_t`.
#[inline(always)]
pub fn node_rates(
    sigma: [f64; 3],
    p: f64,
    phi: [f64; 3],
    lv: [f64; 3],
    bulk: f64,
) -> (f64, [f64; 3], [f64; 3]) {
    let damp_p = -(sigma[0] + sigma[1] + sigma[2]) * p;
    let inv_bulk = 1.0 / bulk;
    let vt = [lv[0] - phi[0] * inv_bulk, lv[1] - phi[1] * inv_bulk, lv[2] - phi[2] * inv_bulk];
    let (g1, g2) = gamma_matrices(sigma);
    let phit = std::array::from_fn(|d| -g1[d] * phi[d] + bulk * g2[d] * vt[d]);
    (damp_p, vt, phit)
}

/// Whole-field damping terms.
#[derive(Debug, Clone, PartialEq)]
pub struct PmlRates {
    /// `-(σx + σy + σz) p`.
    pub pressure: Vec<f64>,
    /// `-φ / (ρc²)`.
    pub velocity: [Vec<f64>; 3],
    /// `-Γ₁ φ + ρc² Γ₂ v_rate`.
    pub phi: [Vec<f64>; 3],
}

/// `v_rate` is the full instantaneous velocity rate, coupling term included.
pub fn pml_rates(
    state: &FieldState,
    pml: &PmlState,
    v_rate: &[Vec<f64>; 3],
    medium: &MediumParams,
) -> Result<PmlRates> {
    let len = state.len();
    state.check_shape(len)?;
    if pml.phi.iter().chain(&pml.sigma).chain(v_rate).any(|a| a.len() != len) {
        return Err(Error::Shape("pml arrays do not match the field".into()));
    }
    let bulk = medium.bulk_modulus();
    let mut out = PmlRates {
        pressure: vec![0.0; len],
        velocity: std::array::from_fn(|_| vec![0.0; len]),
        phi: std::array::from_fn(|_| vec![0.0; len]),
    };
    for g in 0..len {
        let sigma = pml.sigma_at(g);
        let phi = pml.phi_at(g);
        out.pressure[g] = -(sigma[0] + sigma[1] + sigma[2]) * state.pressure[g];
        let (g1, g2) = gamma_matrices(sigma);
        for d in 0..3 {
            out.velocity[d][g] = -phi[d] / bulk;
            out.phi[d][g] = -g1[d] * phi[d] + bulk * g2[d] * v_rate[d][g];
        }
    }
    Ok(out)
}
