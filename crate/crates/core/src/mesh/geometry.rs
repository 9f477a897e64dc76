use crate::refelem::{ReferenceElement, NUM_FACES};

use super::{Mesh, MeshError};

/// Per-element affine metric terms and per-face surface data.
#[derive(Debug, Clone)]
pub struct GeometricFactors {
    /// `[rx, ry, rz, sx, sy, sz, tx, ty, tz]` per element.
    pub metric: Vec<[f64; 9]>,
    /// Volume Jacobian of the reference-to-physical map.
    pub jacobian: Vec<f64>,
    /// Surface Jacobian of each face (physical area = 2 * face_jacobian).
    pub face_jacobian: Vec<[f64; NUM_FACES]>,
    /// Outward unit normals.
    pub normals: Vec<[[f64; 3]; NUM_FACES]>,
    /// Smallest insphere diameter over all elements.
    pub min_char_length: f64,
}

impl GeometricFactors {
    /// `face_jacobian / jacobian`, the scale applied to lifted face terms.
    pub fn face_scale(&self, k: usize, f: usize) -> f64 {
        self.face_jacobian[k][f] / self.jacobian[k]
    }
}

fn cross(a: [f64; 3], b: [f64; 3]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: [f64; 3]) -> f64 {
    (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt()
}

/// Insphere diameter of a tetrahedron: 6V / (total face area).
pub fn insphere_diameter(p: [[f64; 3]; 4]) -> f64 {
    let sub = |a: [f64; 3], b: [f64; 3]| [a[0] - b[0], a[1] - b[1], a[2] - b[2]];
    let (e1, e2, e3) = (sub(p[1], p[0]), sub(p[2], p[0]), sub(p[3], p[0]));
    let vol = (e1[0] * (e2[1] * e3[2] - e2[2] * e3[1]) - e1[1] * (e2[0] * e3[2] - e2[2] * e3[0])
        + e1[2] * (e2[0] * e3[1] - e2[1] * e3[0]))
        .abs()
        / 6.0;
    let area: f64 = super::FACE_VERTICES
        .iter()
        .map(|lv| 0.5 * norm(cross(sub(p[lv[1]], p[lv[0]]), sub(p[lv[2]], p[lv[0]]))))
        .sum();
    6.0 * vol / area
}

pub fn geometric_factors(mesh: &Mesh, _elem: &ReferenceElement) -> Result<GeometricFactors, MeshError> {
    let k_total = mesh.num_elements();
    let mut metric = Vec::with_capacity(k_total);
    let mut jacobian = Vec::with_capacity(k_total);
    let mut face_jacobian = Vec::with_capacity(k_total);
    let mut normals = Vec::with_capacity(k_total);
    let mut min_char_length = f64::INFINITY;

    for (k, tet) in mesh.elements.iter().enumerate() {
        let v = tet.map(|i| mesh.vertices[i]);
        let half = |a: [f64; 3], b: [f64; 3]| [(a[0] - b[0]) / 2.0, (a[1] - b[1]) / 2.0, (a[2] - b[2]) / 2.0];
        // Columns of the map derivative: x_r, x_s, x_t.
        let (xr, xs, xt) = (half(v[1], v[0]), half(v[2], v[0]), half(v[3], v[0]));
        let [x_r, y_r, z_r] = xr;
        let [x_s, y_s, z_s] = xs;
        let [x_t, y_t, z_t] = xt;
        let j = x_r * (y_s * z_t - z_s * y_t) - y_r * (x_s * z_t - z_s * x_t)
            + z_r * (x_s * y_t - y_s * x_t);
        if j <= 0.0 || !j.is_finite() {
            return Err(MeshError::Degenerate(k));
        }
        let rx = (y_s * z_t - z_s * y_t) / j;
        let ry = -(x_s * z_t - z_s * x_t) / j;
        let rz = (x_s * y_t - y_s * x_t) / j;
        let sx = -(y_r * z_t - z_r * y_t) / j;
        let sy = (x_r * z_t - z_r * x_t) / j;
        let sz = -(x_r * y_t - y_r * x_t) / j;
        let tx = (y_r * z_s - z_r * y_s) / j;
        let ty = -(x_r * z_s - z_r * x_s) / j;
        let tz = (x_r * y_s - y_r * x_s) / j;

        // Unnormalized outward normals from the reference face normals.
        let raw = [
            [-tx, -ty, -tz],
            [-sx, -sy, -sz],
            [rx + sx + tx, ry + sy + ty, rz + sz + tz],
            [-rx, -ry, -rz],
        ];
        let mut fj = [0.0; NUM_FACES];
        let mut nrm = [[0.0; 3]; NUM_FACES];
        for f in 0..NUM_FACES {
            let len = norm(raw[f]);
            nrm[f] = [raw[f][0] / len, raw[f][1] / len, raw[f][2] / len];
            fj[f] = len * j;
        }

        metric.push([rx, ry, rz, sx, sy, sz, tx, ty, tz]);
        jacobian.push(j);
        face_jacobian.push(fj);
        normals.push(nrm);
        min_char_length = min_char_length.min(insphere_diameter(v));
    }

    Ok(GeometricFactors {
        metric,
        jacobian,
        face_jacobian,
        normals,
        min_char_length,
    })
}
