//! Warp-and-blend interpolation nodes on the reference tetrahedron.

use nalgebra::{Matrix3, Vector3};

use super::jacobi::jacobi_gauss_lobatto_points;

/// Blend parameters optimized per order (index = order); orders above the
/// table fall back to 1.
const ALPHA_OPT: [f64; 16] = [
    0.0, 0.0, 0.0, 0.0, 0.1002, 1.1332, 1.5608, 1.3413, 1.2577, 1.1603, 1.10153, 0.6080, 0.4523,
    0.8856, 0.8717, 0.9655,
];

const NODE_TOL: f64 = 1e-10;

fn equilateral_vertices() -> [Vector3<f64>; 4] {
    let s3 = 3f64.sqrt();
    let s6 = 6f64.sqrt();
    [
        Vector3::new(-1.0, -1.0 / s3, -1.0 / s6),
        Vector3::new(1.0, -1.0 / s3, -1.0 / s6),
        Vector3::new(0.0, 2.0 / s3, -1.0 / s6),
        Vector3::new(0.0, 0.0, 3.0 / s6),
    ]
}

/// Equispaced nodes in (r, s, t), ordered with t slowest and r fastest.
pub fn equispaced_nodes(order: usize) -> Vec<[f64; 3]> {
    let n = order as f64;
    let mut out = Vec::new();
    for k in 0..=order {
        for j in 0..=order - k {
            for i in 0..=order - k - j {
                out.push([
                    -1.0 + 2.0 * i as f64 / n,
                    -1.0 + 2.0 * j as f64 / n,
                    -1.0 + 2.0 * k as f64 / n,
                ]);
            }
        }
    }
    out
}

/// 1D warp function interpolating the displacement from equispaced to GLL points.
fn eval_warp(order: usize, gll: &[f64], x: f64) -> f64 {
    let p = order as f64;
    let xeq: Vec<f64> = (0..=order).map(|i| -1.0 + 2.0 * (p - i as f64) / p).collect();
    let mut warp = 0.0;
    for i in 0..=order {
        let mut d = gll[i] - xeq[i];
        for j in 1..order {
            if i != j {
                d *= (x - xeq[j]) / (xeq[i] - xeq[j]);
            }
        }
        if i != 0 {
            d = -d / (xeq[i] - xeq[0]);
        }
        if i != order {
            d /= xeq[i] - xeq[order];
        }
        warp += d;
    }
    warp
}

/// Tangential shift on an equilateral face given its three barycentric coordinates.
fn eval_shift(order: usize, alpha: f64, gll: &[f64], l1: f64, l2: f64, l3: f64) -> (f64, f64) {
    let blend1 = l2 * l3;
    let blend2 = l1 * l3;
    let blend3 = l1 * l2;
    let w1 = 4.0 * eval_warp(order, gll, l3 - l2);
    let w2 = 4.0 * eval_warp(order, gll, l1 - l3);
    let w3 = 4.0 * eval_warp(order, gll, l2 - l1);
    let warp1 = blend1 * w1 * (1.0 + (alpha * l1).powi(2));
    let warp2 = blend2 * w2 * (1.0 + (alpha * l2).powi(2));
    let warp3 = blend3 * w3 * (1.0 + (alpha * l3).powi(2));
    let tpi = 2.0 * std::f64::consts::PI / 3.0;
    let dx = warp1 + tpi.cos() * warp2 + (2.0 * tpi).cos() * warp3;
    let dy = tpi.sin() * warp2 + (2.0 * tpi).sin() * warp3;
    (dx, dy)
}

/// Warp-and-blend nodes mapped back to reference (r, s, t) coordinates.
pub fn warp_blend_nodes(order: usize) -> Vec<[f64; 3]> {
    let alpha = ALPHA_OPT.get(order).copied().unwrap_or(1.0);
    // GLL points reversed, to match the descending equispaced ordering in eval_warp.
    let gll: Vec<f64> = jacobi_gauss_lobatto_points(0, 0, order)
        .into_iter()
        .map(|x| -x)
        .collect();
    let [v1, v2, v3, v4] = equilateral_vertices();

    let mut t1 = [v2 - v1, v2 - v1, v3 - v2, v3 - v1];
    let mut t2 = [
        v3 - 0.5 * (v1 + v2),
        v4 - 0.5 * (v1 + v2),
        v4 - 0.5 * (v2 + v3),
        v4 - 0.5 * (v1 + v3),
    ];
    for f in 0..4 {
        t1[f] /= t1[f].norm();
        t2[f] /= t2[f].norm();
    }

    let equi = equispaced_nodes(order);
    let xyz: Vec<Vector3<f64>> = equi
        .iter()
        .map(|&[r, s, t]| {
            let l1 = (1.0 + t) / 2.0;
            let l2 = (1.0 + s) / 2.0;
            let l3 = -(1.0 + r + s + t) / 2.0;
            let l4 = (1.0 + r) / 2.0;
            let base = l3 * v1 + l4 * v2 + l2 * v3 + l1 * v4;

            let mut shift = Vector3::zeros();
            for face in 0..4 {
                let (la, lb, lc, ld) = match face {
                    0 => (l1, l2, l3, l4),
                    1 => (l2, l1, l3, l4),
                    2 => (l3, l1, l4, l2),
                    _ => (l4, l1, l3, l2),
                };
                let (warp1, warp2) = eval_shift(order, alpha, &gll, lb, lc, ld);
                let mut blend = lb * lc * ld;
                let denom = (lb + 0.5 * la) * (lc + 0.5 * la) * (ld + 0.5 * la);
                if denom > NODE_TOL {
                    blend = (1.0 + (alpha * la).powi(2)) * blend / denom;
                }
                shift += blend * warp1 * t1[face] + blend * warp2 * t2[face];
                let on_face = la < NODE_TOL;
                let interior_count =
                    [lb, lc, ld].iter().filter(|&&l| l > NODE_TOL).count();
                if on_face && interior_count < 3 {
                    shift = warp1 * t1[face] + warp2 * t2[face];
                }
            }
            base + shift
        })
        .collect();

    // Equilateral -> reference tetrahedron.
    let a = Matrix3::from_columns(&[0.5 * (v2 - v1), 0.5 * (v3 - v1), 0.5 * (v4 - v1)]);
    let a_inv = a.try_inverse().expect("equilateral frame is invertible");
    let centre = 0.5 * (v2 + v3 + v4 - v1);
    xyz.iter()
        .map(|p| {
            let rst = a_inv * (p - centre);
            [rst[0], rst[1], rst[2]]
        })
        .collect()
}
