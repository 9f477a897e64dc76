//! Orthonormal modal bases on the reference triangle and tetrahedron.
//!
//! Reference tetrahedron vertices: (-1,-1,-1), (1,-1,-1), (-1,1,-1), (-1,-1,1).
//! Reference triangle vertices: (-1,-1), (1,-1), (-1,1).

use nalgebra::DMatrix;

use super::jacobi::{grad_jacobi_p, jacobi_p};

/// Maps triangle coordinates (r, s) to the collapsed square (a, b).
fn rs_to_ab(r: f64, s: f64) -> (f64, f64) {
    let a = if (s - 1.0).abs() > 1e-14 {
        2.0 * (1.0 + r) / (1.0 - s) - 1.0
    } else {
        -1.0
    };
    (a, s)
}

/// Maps tetrahedron coordinates (r, s, t) to the collapsed cube (a, b, c).
fn rst_to_abc(r: f64, s: f64, t: f64) -> (f64, f64, f64) {
    let a = if (s + t).abs() > 1e-14 {
        2.0 * (1.0 + r) / (-s - t) - 1.0
    } else {
        -1.0
    };
    let b = if (t - 1.0).abs() > 1e-14 {
        2.0 * (1.0 + s) / (1.0 - t) - 1.0
    } else {
        -1.0
    };
    (a, b, t)
}

/// Mode index triples (i, j, k) with i + j + k <= order, in Vandermonde column order.
pub fn tet_modes(order: usize) -> Vec<(usize, usize, usize)> {
    let mut modes = Vec::new();
    for i in 0..=order {
        for j in 0..=order - i {
            for k in 0..=order - i - j {
                modes.push((i, j, k));
            }
        }
    }
    modes
}

fn tri_modes(order: usize) -> Vec<(usize, usize)> {
    let mut modes = Vec::new();
    for i in 0..=order {
        for j in 0..=order - i {
            modes.push((i, j));
        }
    }
    modes
}

pub fn simplex2d(r: f64, s: f64, i: usize, j: usize) -> f64 {
    let (a, b) = rs_to_ab(r, s);
    let h1 = jacobi_p(a, 0, 0, i);
    let h2 = jacobi_p(b, 2 * i as u32 + 1, 0, j);
    std::f64::consts::SQRT_2 * h1 * h2 * (1.0 - b).powi(i as i32)
}

pub fn simplex3d(r: f64, s: f64, t: f64, i: usize, j: usize, k: usize) -> f64 {
    let (a, b, c) = rst_to_abc(r, s, t);
    let h1 = jacobi_p(a, 0, 0, i);
    let h2 = jacobi_p(b, 2 * i as u32 + 1, 0, j);
    let h3 = jacobi_p(c, 2 * (i + j) as u32 + 2, 0, k);
    2.0 * std::f64::consts::SQRT_2
        * h1
        * h2
        * (1.0 - b).powi(i as i32)
        * h3
        * (1.0 - c).powi((i + j) as i32)
}

/// Gradient (d/dr, d/ds, d/dt) of [`simplex3d`].
pub fn grad_simplex3d(r: f64, s: f64, t: f64, i: usize, j: usize, k: usize) -> [f64; 3] {
    let (a, b, c) = rst_to_abc(r, s, t);
    let (iu, ju) = (i as u32, j as u32);
    let fa = jacobi_p(a, 0, 0, i);
    let dfa = grad_jacobi_p(a, 0, 0, i);
    let gb = jacobi_p(b, 2 * iu + 1, 0, j);
    let dgb = grad_jacobi_p(b, 2 * iu + 1, 0, j);
    let hc = jacobi_p(c, 2 * (iu + ju) + 2, 0, k);
    let dhc = grad_jacobi_p(c, 2 * (iu + ju) + 2, 0, k);
    let half_b = 0.5 * (1.0 - b);
    let half_c = 0.5 * (1.0 - c);

    let mut dr = dfa * gb * hc;
    if i > 0 {
        dr *= half_b.powi(i as i32 - 1);
    }
    if i + j > 0 {
        dr *= half_c.powi((i + j) as i32 - 1);
    }

    let mut ds = 0.5 * (1.0 + a) * dr;
    let mut tmp = dgb * half_b.powi(i as i32);
    if i > 0 {
        tmp += -0.5 * i as f64 * gb * half_b.powi(i as i32 - 1);
    }
    if i + j > 0 {
        tmp *= half_c.powi((i + j) as i32 - 1);
    }
    tmp = fa * tmp * hc;
    ds += tmp;

    let mut dt = 0.5 * (1.0 + a) * dr + 0.5 * (1.0 + b) * tmp;
    let mut tmp = dhc * half_c.powi((i + j) as i32);
    if i + j > 0 {
        tmp -= 0.5 * (i + j) as f64 * hc * half_c.powi((i + j) as i32 - 1);
    }
    tmp = fa * gb * tmp * half_b.powi(i as i32);
    dt += tmp;

    let scale = 2f64.powf(2.0 * i as f64 + j as f64 + 1.5);
    [dr * scale, ds * scale, dt * scale]
}

pub fn vandermonde3d(order: usize, nodes: &[[f64; 3]]) -> DMatrix<f64> {
    let modes = tet_modes(order);
    DMatrix::from_fn(nodes.len(), modes.len(), |row, col| {
        let [r, s, t] = nodes[row];
        let (i, j, k) = modes[col];
        simplex3d(r, s, t, i, j, k)
    })
}

/// Modal derivative matrices (V_r, V_s, V_t).
pub fn grad_vandermonde3d(
    order: usize,
    nodes: &[[f64; 3]],
) -> (DMatrix<f64>, DMatrix<f64>, DMatrix<f64>) {
    let modes = tet_modes(order);
    let mut vr = DMatrix::zeros(nodes.len(), modes.len());
    let mut vs = vr.clone();
    let mut vt = vr.clone();
    for (row, &[r, s, t]) in nodes.iter().enumerate() {
        for (col, &(i, j, k)) in modes.iter().enumerate() {
            let g = grad_simplex3d(r, s, t, i, j, k);
            vr[(row, col)] = g[0];
            vs[(row, col)] = g[1];
            vt[(row, col)] = g[2];
        }
    }
    (vr, vs, vt)
}

pub fn vandermonde2d(order: usize, nodes: &[[f64; 2]]) -> DMatrix<f64> {
    let modes = tri_modes(order);
    DMatrix::from_fn(nodes.len(), modes.len(), |row, col| {
        let [r, s] = nodes[row];
        let (i, j) = modes[col];
        simplex2d(r, s, i, j)
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gradient_matches_finite_difference() {
        let h = 1e-6;
        let p = [-0.4, -0.3, -0.5];
        for (i, j, k) in tet_modes(4) {
            let g = grad_simplex3d(p[0], p[1], p[2], i, j, k);
            for d in 0..3 {
                let mut hi = p;
                let mut lo = p;
                hi[d] += h;
                lo[d] -= h;
                let fd = (simplex3d(hi[0], hi[1], hi[2], i, j, k)
                    - simplex3d(lo[0], lo[1], lo[2], i, j, k))
                    / (2.0 * h);
                assert!((fd - g[d]).abs() < 1e-6, "mode {:?} dir {d}: {fd} vs {}", (i, j, k), g[d]);
            }
        }
    }
}
