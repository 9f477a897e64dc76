#![allow(dead_code)]

use std::collections::HashMap;

use dgpml::mesh::{parse_gmsh, Mesh, Region};

/// Kuhn cube of half-width `half` with `pml_cells` layer cells of the interior spacing.
pub fn cube(half: f64, cells: usize, pml_cells: usize, side: &str) -> Mesh {
    let width = 2.0 * half / cells as f64 * pml_cells as f64;
    let spec = boxmesh::BoxSpec::cube(half, cells, width, pml_cells, side);
    parse_gmsh(&boxmesh::build(&spec).to_msh()).unwrap()
}

/// Kuhn-subdivided box with interior vertices pushed off the lattice.
pub fn jittered_box(cells: usize, amp: f64) -> Mesh {
    let spec = boxmesh::BoxSpec::cube(0.5, cells, 0.0, 0, "abc");
    let bm = boxmesh::build(&spec);
    let h = 1.0 / cells as f64;
    let vertices = bm
        .vertices
        .iter()
        .enumerate()
        .map(|(i, &v)| {
            if v.iter().any(|c| (c.abs() - 0.5).abs() < 1e-12) {
                return v;
            }
            let w = i as f64;
            [
                v[0] + amp * h * (1.7 * w).sin(),
                v[1] + amp * h * (2.3 * w).cos(),
                v[2] + amp * h * (0.9 * w + 0.4).sin(),
            ]
        })
        .collect();
    let regions = bm
        .regions
        .iter()
        .map(|&r| if r == 1 { Region::Interior } else { Region::Pml })
        .collect();
    Mesh::from_parts(vertices, bm.tets, regions, &HashMap::new()).unwrap()
}

pub fn monomial(p: [f64; 3], e: [i32; 3]) -> f64 {
    p[0].powi(e[0]) * p[1].powi(e[1]) * p[2].powi(e[2])
}

pub fn d_monomial(p: [f64; 3], e: [i32; 3], axis: usize) -> f64 {
    if e[axis] == 0 {
        return 0.0;
    }
    let mut f = e;
    f[axis] -= 1;
    e[axis] as f64 * monomial(p, f)
}

pub fn exponents(n: i32) -> Vec<[i32; 3]> {
    let mut out = Vec::new();
    for a in 0..=n {
        for b in 0..=n - a {
            for c in 0..=n - a - b {
                out.push([a, b, c]);
            }
        }
    }
    out
}
