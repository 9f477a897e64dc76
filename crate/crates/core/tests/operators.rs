mod common;

use std::collections::HashMap;

use common::{d_monomial, exponents, jittered_box, monomial};
use dgpml::mesh::{build_connectivity, geometric_factors, read_gmsh, Region};
use dgpml::refelem::{build_reference_element, mass_matrix};
use nalgebra::DVector;

#[test]
fn physical_gradient_exact_on_distorted_mesh() {
    for order in 1..=4 {
        let elem = build_reference_element(order).unwrap();
        let mesh = build_connectivity(jittered_box(2, 0.15), &elem).unwrap();
        let gf = geometric_factors(&mesh, &elem).unwrap();
        let coords = &mesh.node_maps().unwrap().node_coords;
        let np = elem.num_nodes;
        let mut worst = 0.0f64;
        for e in exponents(order as i32) {
            for k in 0..mesh.num_elements() {
                let u = DVector::from_iterator(np, (0..np).map(|i| monomial(coords[k * np + i], e)));
                let (ur, us, ut) = (&elem.diff_r * &u, &elem.diff_s * &u, &elem.diff_t * &u);
                let m = gf.metric[k];
                for i in 0..np {
                    for axis in 0..3 {
                        let d = m[axis] * ur[i] + m[3 + axis] * us[i] + m[6 + axis] * ut[i];
                        worst = worst.max((d - d_monomial(coords[k * np + i], e, axis)).abs());
                    }
                }
            }
        }
        assert!(worst < 1e-9, "order {order}: {worst:e}");
    }
}

#[test]
fn divergence_theorem_per_element() {
    let order = 3;
    let elem = build_reference_element(order).unwrap();
    let mesh = build_connectivity(jittered_box(2, 0.15), &elem).unwrap();
    let gf = geometric_factors(&mesh, &elem).unwrap();
    let coords = &mesh.node_maps().unwrap().node_coords;
    let (np, nfp) = (elem.num_nodes, elem.num_face_nodes);
    let mass = mass_matrix(&elem);
    let ones = DVector::from_element(np, 1.0);
    let weights = mass.transpose() * &ones;
    let field = |x: [f64; 3]| [x[0] * x[1] * x[1], x[2] * x[2] - x[0], x[0] * x[1] * x[2]];
    let div = |x: [f64; 3]| x[1] * x[1] + x[0] * x[1];

    for k in 0..mesh.num_elements() {
        let j = gf.jacobian[k];
        let volume: f64 = (0..np).map(|i| weights[i] * div(coords[k * np + i])).sum::<f64>() * j;

        let mut flux = DVector::zeros(4 * nfp);
        for f in 0..4 {
            let n = gf.normals[k][f];
            for (m, &i) in elem.face_node_ids[f].iter().enumerate() {
                let v = field(coords[k * np + i]);
                flux[f * nfp + m] = gf.face_scale(k, f) * (n[0] * v[0] + n[1] * v[1] + n[2] * v[2]);
            }
        }
        let lifted = &elem.lift * flux;
        let surface = weights.dot(&lifted) * j;
        assert!((volume - surface).abs() < 1e-10, "element {k}: {volume} vs {surface}");
    }
}

#[test]
fn mass_matrix_sums_to_element_volume() {
    for order in 1..=6 {
        let elem = build_reference_element(order).unwrap();
        let total: f64 = mass_matrix(&elem).iter().sum();
        assert!((total - 4.0 / 3.0).abs() < 1e-12, "order {order}: {total}");
    }
    let elem = build_reference_element(2).unwrap();
    let mesh = build_connectivity(jittered_box(3, 0.2), &elem).unwrap();
    let gf = geometric_factors(&mesh, &elem).unwrap();
    let total: f64 = gf.jacobian.iter().map(|j| j * 4.0 / 3.0).sum();
    assert!((total - 1.0).abs() < 1e-12, "{total}");
}

/// Counts tetrahedra per physical tag and triangles straight from the file text.
fn count_msh(text: &str) -> (HashMap<u32, usize>, usize) {
    let mut lines = text.lines();
    while lines.next().is_some_and(|l| l.trim() != "$Elements") {}
    let n: usize = lines.next().unwrap().trim().parse().unwrap();
    let mut tets = HashMap::new();
    let mut tris = 0;
    for line in lines.take(n) {
        let f: Vec<u32> = line.split_whitespace().map(|s| s.parse().unwrap()).collect();
        match f[1] {
            4 => *tets.entry(f[3]).or_insert(0) += 1,
            2 => tris += 1,
            _ => {}
        }
    }
    (tets, tris)
}

#[test]
fn fixture_counts_match_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("box.msh");
    let spec = boxmesh::BoxSpec::cube(1.0, 3, 0.5, 1, "reflective");
    boxmesh::build(&spec).write(&path).unwrap();

    let (tets, tris) = count_msh(&std::fs::read_to_string(&path).unwrap());
    let mesh = read_gmsh(&path).unwrap();
    assert_eq!(mesh.count_region(Region::Interior), tets[&1]);
    assert_eq!(mesh.count_region(Region::Pml), tets[&2]);
    assert_eq!(mesh.boundary_faces.len(), tris);
    assert_eq!(tets[&1], 6 * 27);
    assert_eq!(tris, 6 * 2 * 25);

    let (lo, hi) = mesh.region_bounding_box(Region::Interior).unwrap();
    assert_eq!((lo, hi), ([-1.0; 3], [1.0; 3]));
}
