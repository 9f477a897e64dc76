//! Reference tetrahedron operators for the strong-form nodal DG scheme.
//!
//! Faces are numbered 0: t = -1, 1: s = -1, 2: r + s + t = -1, 3: r = -1.

mod basis;
pub mod jacobi;
mod nodes;

use nalgebra::DMatrix;

pub use basis::{simplex3d, tet_modes, vandermonde2d, vandermonde3d};
pub use nodes::{equispaced_nodes, warp_blend_nodes};

use crate::error::{Error, Result};

pub const MAX_ORDER: usize = 9;
pub const NUM_FACES: usize = 4;

/// Tolerance for deciding that a node lies on a reference face.
const FACE_TOL: f64 = 1e-10;
const MAX_CONDITION: f64 = 1e10;

pub fn node_count(order: usize) -> usize {
    (order + 1) * (order + 2) * (order + 3) / 6
}

pub fn face_node_count(order: usize) -> usize {
    (order + 1) * (order + 2) / 2
}

/// Signed distance-like residual of a reference point to reference face `face`.
pub fn face_residual(face: usize, p: [f64; 3]) -> f64 {
    match face {
        0 => 1.0 + p[2],
        1 => 1.0 + p[1],
        2 => 1.0 + p[0] + p[1] + p[2],
        3 => 1.0 + p[0],
        _ => panic!("tetrahedron has 4 faces, got {face}"),
    }
}

#[derive(Debug, Clone)]
pub struct ReferenceElement {
    pub order: usize,
    pub num_nodes: usize,
    pub num_face_nodes: usize,
    /// Node coordinates (r, s, t).
    pub nodes: Vec<[f64; 3]>,
    pub vandermonde: DMatrix<f64>,
    pub inv_vandermonde: DMatrix<f64>,
    pub diff_r: DMatrix<f64>,
    pub diff_s: DMatrix<f64>,
    pub diff_t: DMatrix<f64>,
    /// `num_nodes x 4 * num_face_nodes`, faces stacked in face order.
    pub lift: DMatrix<f64>,
    /// Volume node indices of each face, ascending.
    pub face_node_ids: [Vec<usize>; NUM_FACES],
}

pub fn build_reference_element(order: usize) -> Result<ReferenceElement> {
    if !(1..=MAX_ORDER).contains(&order) {
        return Err(Error::Config(format!(
            "polynomial order must be in 1..={MAX_ORDER}, got {order}"
        )));
    }
    ReferenceElement::from_nodes(order, warp_blend_nodes(order))
}

impl ReferenceElement {
    /// Builds the operators on an arbitrary node set; degenerate sets are rejected.
    pub fn from_nodes(order: usize, nodes: Vec<[f64; 3]>) -> Result<Self> {
        let np = node_count(order);
        let nfp = face_node_count(order);
        if nodes.len() != np {
            return Err(Error::Config(format!(
                "order {order} needs {np} nodes, got {}",
                nodes.len()
            )));
        }

        let vandermonde = vandermonde3d(order, &nodes);
        let svd = vandermonde.clone().svd(false, false);
        let smax = svd.singular_values.max();
        let smin = svd.singular_values.min();
        if !(smin > 0.0) || smax / smin > MAX_CONDITION {
            return Err(Error::Config(format!(
                "node set is degenerate for order {order} (condition {:.3e})",
                smax / smin
            )));
        }
        let inv_vandermonde = vandermonde
            .clone()
            .try_inverse()
            .ok_or_else(|| Error::Config("singular Vandermonde matrix".into()))?;

        let (vr, vs, vt) = basis::grad_vandermonde3d(order, &nodes);
        let diff_r = &vr * &inv_vandermonde;
        let diff_s = &vs * &inv_vandermonde;
        let diff_t = &vt * &inv_vandermonde;

        let face_node_ids: [Vec<usize>; NUM_FACES] = std::array::from_fn(|f| {
            (0..np)
                .filter(|&i| face_residual(f, nodes[i]).abs() < FACE_TOL)
                .collect()
        });
        for (f, ids) in face_node_ids.iter().enumerate() {
            if ids.len() != nfp {
                return Err(Error::Config(format!(
                    "face {f} carries {} nodes, expected {nfp}",
                    ids.len()
                )));
            }
        }

        let lift = build_lift(order, &nodes, &vandermonde, &face_node_ids);

        Ok(Self {
            order,
            num_nodes: np,
            num_face_nodes: nfp,
            nodes,
            vandermonde,
            inv_vandermonde,
            diff_r,
            diff_s,
            diff_t,
            lift,
            face_node_ids,
        })
    }

    /// Face-local 2D coordinates used for the face mass matrix of `face`.
    pub fn face_coordinates(&self, face: usize) -> Vec<[f64; 2]> {
        face_coordinates(face, &self.nodes, &self.face_node_ids[face])
    }
}

fn face_coordinates(face: usize, nodes: &[[f64; 3]], ids: &[usize]) -> Vec<[f64; 2]> {
    ids.iter()
        .map(|&i| {
            let [r, s, t] = nodes[i];
            match face {
                0 => [r, s],
                1 => [r, t],
                _ => [s, t],
            }
        })
        .collect()
}

fn build_lift(
    order: usize,
    nodes: &[[f64; 3]],
    vandermonde: &DMatrix<f64>,
    face_node_ids: &[Vec<usize>; NUM_FACES],
) -> DMatrix<f64> {
    let np = nodes.len();
    let nfp = face_node_ids[0].len();
    let mut emat = DMatrix::<f64>::zeros(np, NUM_FACES * nfp);
    for (face, ids) in face_node_ids.iter().enumerate() {
        let vface = vandermonde2d(order, &face_coordinates(face, nodes, ids));
        let mass_face = (&vface * vface.transpose())
            .try_inverse()
            .expect("face Vandermonde of a unisolvent set is invertible");
        for (row, &vol) in ids.iter().enumerate() {
            for col in 0..nfp {
                emat[(vol, face * nfp + col)] += mass_face[(row, col)];
            }
        }
    }
    vandermonde * (vandermonde.transpose() * emat)
}

/// Reference mass matrix `(V V^T)^{-1}`.
pub fn mass_matrix(elem: &ReferenceElement) -> DMatrix<f64> {
    &elem.inv_vandermonde.transpose() * &elem.inv_vandermonde
}

pub fn lift_matrix(elem: &ReferenceElement) -> &DMatrix<f64> {
    &elem.lift
}
