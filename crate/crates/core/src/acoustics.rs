//! Linear acoustics in first-order form: `p_t = -ρc² ∇·v`, `v_t = -∇p / ρ`.
//!
//! The spatial operator is the strong-form nodal DG discretization with an
//! upwind flux. The flux difference `A_n u⁻ - F*` is evaluated directly on the
//! jump `Δ = u⁻ - u⁺` using the closed-form `|A_n|(p, v) = c (p, (n·v) n)`.

use nalgebra::Matrix4;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{BoundaryKind, FaceKind, GeometricFactors, Mesh};
use crate::refelem::{ReferenceElement, NUM_FACES};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MediumParams {
    pub sound_speed: f64,
    pub density: f64,
}

impl Default for MediumParams {
    fn default() -> Self {
        Self {
            sound_speed: 343.0,
            density: 1.2,
        }
    }
}

impl MediumParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.sound_speed > 0.0 && self.sound_speed.is_finite()) {
            return Err(Error::Config(format!("sound speed must be positive, got {}", self.sound_speed)));
        }
        if !(self.density > 0.0 && self.density.is_finite()) {
            return Err(Error::Config(format!("density must be positive, got {}", self.density)));
        }
        Ok(())
    }

    /// Bulk modulus `ρc²`.
    pub fn bulk_modulus(&self) -> f64 {
        self.density * self.sound_speed * self.sound_speed
    }
}

/// Nodal pressure and velocity, node `k * num_nodes + i` of element `k`.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub pressure: Vec<f64>,
    pub velocity: [Vec<f64>; 3],
}

impl FieldState {
    pub fn zeros(len: usize) -> Self {
        Self {
            pressure: vec![0.0; len],
            velocity: std::array::from_fn(|_| vec![0.0; len]),
        }
    }

    pub fn len(&self) -> usize {
        self.pressure.len()
    }

    pub fn is_empty(&self) -> bool {
        self.pressure.is_empty()
    }

    /// `(p, vx, vy, vz)` at node `g`.
    pub fn node(&self, g: usize) -> [f64; 4] {
        [self.pressure[g], self.velocity[0][g], self.velocity[1][g], self.velocity[2][g]]
    }

    pub fn set_node(&mut self, g: usize, u: [f64; 4]) {
        self.pressure[g] = u[0];
        for d in 0..3 {
            self.velocity[d][g] = u[d + 1];
        }
    }

    /// `self += alpha * other`.
    pub fn axpy(&mut self, alpha: f64, other: &FieldState) {
        let pairs = std::iter::once((&mut self.pressure, &other.pressure))
            .chain(self.velocity.iter_mut().zip(&other.velocity));
        for (a, b) in pairs {
            a.iter_mut().zip(b).for_each(|(x, y)| *x += alpha * y);
        }
    }

    pub fn check_shape(&self, len: usize) -> Result<()> {
        if self.pressure.len() != len || self.velocity.iter().any(|v| v.len() != len) {
            return Err(Error::Shape(format!(
                "field arrays must hold {len} nodes, got {} / {:?}",
                self.pressure.len(),
                self.velocity.each_ref().map(Vec::len)
            )));
        }
        Ok(())
    }

    /// First element carrying a NaN or infinity, as a hard error.
    pub fn check_finite(&self, num_nodes: usize) -> Result<()> {
        let fields = [
            ("pressure", &self.pressure),
            ("velocity x", &self.velocity[0]),
            ("velocity y", &self.velocity[1]),
            ("velocity z", &self.velocity[2]),
        ];
        for (field, values) in fields {
            if let Some(g) = values.iter().position(|x| !x.is_finite()) {
                return Err(Error::NonFiniteInput {
                    field,
                    element: g / num_nodes,
                });
            }
        }
        Ok(())
    }
}

/// `A_n = A_x n_x + A_y n_y + A_z n_z` acting on `(p, vx, vy, vz)`.
pub fn flux_matrix(n: [f64; 3], medium: &MediumParams) -> Matrix4<f64> {
    let k = medium.bulk_modulus();
    let inv_rho = 1.0 / medium.density;
    let mut a = Matrix4::zeros();
    for d in 0..3 {
        a[(0, d + 1)] = k * n[d];
        a[(d + 1, 0)] = inv_rho * n[d];
    }
    a
}

/// `W |Λ| W⁻¹` for `A_n`, from the eigenpairs `±c ↔ (ρc, ±n)` and the
/// tangential null space.
pub fn abs_flux_matrix(n: [f64; 3], medium: &MediumParams) -> Matrix4<f64> {
    let c = medium.sound_speed;
    let mut a = Matrix4::zeros();
    a[(0, 0)] = c;
    for i in 0..3 {
        for j in 0..3 {
            a[(i + 1, j + 1)] = c * n[i] * n[j];
        }
    }
    a
}

/// `A_n Δ` and `|A_n| Δ` combined: returns `A_n u⁻ - F* = ½(A_n Δ - |A_n| Δ)`.
#[inline(always)]
fn flux_difference(dp: f64, dv: [f64; 3], n: [f64; 3], medium: &MediumParams) -> [f64; 4] {
    let c = medium.sound_speed;
    let ndv = n[0] * dv[0] + n[1] * dv[1] + n[2] * dv[2];
    let fp = 0.5 * (medium.bulk_modulus() * ndv - c * dp);
    let fv = 0.5 * (dp / medium.density - c * ndv);
    [fp, n[0] * fv, n[1] * fv, n[2] * fv]
}

/// Upwind numerical flux `F* = ½(A_n u⁻ + A_n u⁺ + |A_n|(u⁻ - u⁺))`.
pub fn upwind_flux(u_in: [f64; 4], u_ext: [f64; 4], n: [f64; 3], medium: &MediumParams) -> [f64; 4] {
    let a = flux_matrix(n, medium);
    let own = a * nalgebra::Vector4::from(u_in);
    let diff = flux_difference(
        u_in[0] - u_ext[0],
        [u_in[1] - u_ext[1], u_in[2] - u_ext[2], u_in[3] - u_ext[3]],
        n,
        medium,
    );
    std::array::from_fn(|i| own[i] - diff[i])
}

/// Exterior state imposed on a boundary face.
pub fn ghost_state(u_in: [f64; 4], kind: BoundaryKind) -> [f64; 4] {
    match kind {
        BoundaryKind::Reflective => [u_in[0], -u_in[1], -u_in[2], -u_in[3]],
        BoundaryKind::Abc => [0.0; 4],
    }
}

/// Per-thread work arrays for one element.
#[derive(Debug, Clone)]
pub struct Scratch {
    ur: Vec<f64>,
    us: Vec<f64>,
    ut: Vec<f64>,
    flux: [Vec<f64>; 4],
    /// Pressure rate of the last evaluated element.
    pub rate_p: Vec<f64>,
    /// Velocity rates of the last evaluated element.
    pub rate_v: [Vec<f64>; 3],
}

/// The assembled spatial operator `L_h` on a fixed mesh and order.
#[derive(Debug, Clone)]
pub struct DgOperator {
    num_nodes: usize,
    num_face_nodes: usize,
    num_elements: usize,
    medium: MediumParams,
    /// Row-major `[Dr | Ds | Dt]`, each `Np x Np`.
    diff: [Vec<f64>; 3],
    /// Row-major `Np x 4 Nfp`.
    lift: Vec<f64>,
    face_ids: Vec<usize>,
    metric: Vec<[f64; 9]>,
    face_scale: Vec<[f64; NUM_FACES]>,
    normals: Vec<[[f64; 3]; NUM_FACES]>,
    vmap_exterior: Vec<usize>,
    boundary: Vec<[Option<BoundaryKind>; NUM_FACES]>,
}

fn row_major(m: &nalgebra::DMatrix<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(m.len());
    for i in 0..m.nrows() {
        out.extend(m.row(i).iter());
    }
    out
}

impl DgOperator {
    pub fn new(
        mesh: &Mesh,
        gf: &GeometricFactors,
        elem: &ReferenceElement,
        medium: MediumParams,
    ) -> Result<Self> {
        medium.validate()?;
        let maps = mesh.node_maps()?;
        if maps.order != elem.order {
            return Err(Error::Shape(format!(
                "node maps built for order {}, operator requested for order {}",
                maps.order, elem.order
            )));
        }
        let boundary = mesh
            .face_kinds
            .iter()
            .map(|fk| {
                fk.map(|kind| match kind {
                    FaceKind::Interior => None,
                    FaceKind::Boundary(b) => Some(b),
                })
            })
            .collect();
        let face_scale = (0..mesh.num_elements())
            .map(|k| std::array::from_fn(|f| gf.face_scale(k, f)))
            .collect();
        Ok(Self {
            num_nodes: elem.num_nodes,
            num_face_nodes: elem.num_face_nodes,
            num_elements: mesh.num_elements(),
            medium,
            diff: [row_major(&elem.diff_r), row_major(&elem.diff_s), row_major(&elem.diff_t)],
            lift: row_major(&elem.lift),
            face_ids: elem.face_node_ids.iter().flatten().copied().collect(),
            metric: gf.metric.clone(),
            face_scale,
            normals: gf.normals.clone(),
            vmap_exterior: maps.vmap_exterior.clone(),
            boundary,
        })
    }

    pub fn num_nodes(&self) -> usize {
        self.num_nodes
    }

    pub fn num_elements(&self) -> usize {
        self.num_elements
    }

    pub fn len(&self) -> usize {
        self.num_nodes * self.num_elements
    }

    pub fn is_empty(&self) -> bool {
        self.num_elements == 0
    }

    pub fn medium(&self) -> &MediumParams {
        &self.medium
    }

    pub fn scratch(&self) -> Scratch {
        let np = self.num_nodes;
        let nf = NUM_FACES * self.num_face_nodes;
        Scratch {
            ur: vec![0.0; np],
            us: vec![0.0; np],
            ut: vec![0.0; np],
            flux: std::array::from_fn(|_| vec![0.0; nf]),
            rate_p: vec![0.0; np],
            rate_v: std::array::from_fn(|_| vec![0.0; np]),
        }
    }

    /// Acoustic rates of element `k`, left in `scratch.rate_p` / `scratch.rate_v`.
    pub fn element_rates(&self, k: usize, state: &FieldState, scratch: &mut Scratch) {
        let np = self.num_nodes;
        let nfp = self.num_face_nodes;
        let base = k * np;
        let p = &state.pressure[base..base + np];
        let vx = &state.velocity[0][base..base + np];
        let vy = &state.velocity[1][base..base + np];
        let vz = &state.velocity[2][base..base + np];
        let m = &self.metric[k];
        let medium = &self.medium;
        let bulk = medium.bulk_modulus();
        let inv_rho = 1.0 / medium.density;

        let Scratch {
            ur,
            us,
            ut,
            flux,
            rate_p,
            rate_v,
        } = scratch;
        for i in 0..np {
            ur[i] = m[0] * vx[i] + m[1] * vy[i] + m[2] * vz[i];
            us[i] = m[3] * vx[i] + m[4] * vy[i] + m[5] * vz[i];
            ut[i] = m[6] * vx[i] + m[7] * vy[i] + m[8] * vz[i];
        }

        let [dr, ds, dt] = &self.diff;
        for i in 0..np {
            let row = i * np;
            let (dr, ds, dt) = (&dr[row..row + np], &ds[row..row + np], &dt[row..row + np]);
            let (mut pr, mut ps, mut pt, mut div) = (0.0, 0.0, 0.0, 0.0);
            for j in 0..np {
                pr += dr[j] * p[j];
                ps += ds[j] * p[j];
                pt += dt[j] * p[j];
                div += dr[j] * ur[j] + ds[j] * us[j] + dt[j] * ut[j];
            }
            rate_p[i] = -bulk * div;
            rate_v[0][i] = -inv_rho * (m[0] * pr + m[3] * ps + m[6] * pt);
            rate_v[1][i] = -inv_rho * (m[1] * pr + m[4] * ps + m[7] * pt);
            rate_v[2][i] = -inv_rho * (m[2] * pr + m[5] * ps + m[8] * pt);
        }

        for f in 0..NUM_FACES {
            let n = self.normals[k][f];
            let fs = self.face_scale[k][f];
            let bc = self.boundary[k][f];
            for j in 0..nfp {
                let slot = f * nfp + j;
                let local = self.face_ids[slot];
                let um = [p[local], vx[local], vy[local], vz[local]];
                let up = match bc {
                    None => state.node(self.vmap_exterior[(k * NUM_FACES + f) * nfp + j]),
                    Some(kind) => ghost_state(um, kind),
                };
                let d = flux_difference(
                    um[0] - up[0],
                    [um[1] - up[1], um[2] - up[2], um[3] - up[3]],
                    n,
                    medium,
                );
                for c in 0..4 {
                    flux[c][slot] = fs * d[c];
                }
            }
        }

        let nf = NUM_FACES * nfp;
        for i in 0..np {
            let row = &self.lift[i * nf..(i + 1) * nf];
            let mut acc = [0.0; 4];
            for j in 0..nf {
                for c in 0..4 {
                    acc[c] += row[j] * flux[c][j];
                }
            }
            rate_p[i] += acc[0];
            rate_v[0][i] += acc[1];
            rate_v[1][i] += acc[2];
            rate_v[2][i] += acc[3];
        }
    }

    /// `out = L_h(state)`, parallel over elements.
    pub fn apply(&self, state: &FieldState, out: &mut FieldState) -> Result<()> {
        state.check_shape(self.len())?;
        out.check_shape(self.len())?;
        let np = self.num_nodes;
        let [ox, oy, oz] = &mut out.velocity;
        (
            out.pressure.par_chunks_mut(np),
            ox.par_chunks_mut(np),
            oy.par_chunks_mut(np),
            oz.par_chunks_mut(np),
        )
            .into_par_iter()
            .enumerate()
            .for_each_init(
                || self.scratch(),
                |scr, (k, (op, ox, oy, oz))| {
                    self.element_rates(k, state, scr);
                    op.copy_from_slice(&scr.rate_p);
                    ox.copy_from_slice(&scr.rate_v[0]);
                    oy.copy_from_slice(&scr.rate_v[1]);
                    oz.copy_from_slice(&scr.rate_v[2]);
                },
            );
        Ok(())
    }
}

/// `du/dt = L_h(u)` without damping terms; rejects non-finite input.
pub fn acoustic_rhs(
    state: &FieldState,
    mesh: &Mesh,
    gf: &GeometricFactors,
    elem: &ReferenceElement,
    medium: &MediumParams,
) -> Result<FieldState> {
    let op = DgOperator::new(mesh, gf, elem, *medium)?;
    state.check_shape(op.len())?;
    state.check_finite(op.num_nodes())?;
    let mut out = FieldState::zeros(op.len());
    op.apply(state, &mut out)?;
    Ok(out)
}
