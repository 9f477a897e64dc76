//! Unstructured tetrahedral meshes: topology, region tags, boundary kinds,
//! nodal trace maps and affine geometric factors.

mod geometry;
mod gmsh;

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

pub use geometry::{geometric_factors, GeometricFactors};
pub use gmsh::{parse_gmsh, read_gmsh};

use crate::refelem::{ReferenceElement, NUM_FACES};

/// Local vertex indices of each face, matching the reference face numbering.
pub const FACE_VERTICES: [[usize; 3]; NUM_FACES] = [[0, 1, 2], [0, 1, 3], [1, 2, 3], [0, 2, 3]];

#[derive(Debug, thiserror::Error)]
pub enum MeshError {
    #[error("cannot read mesh file: {0}")]
    Io(#[from] std::io::Error),
    #[error("unsupported mesh format version {0} (only ASCII 2.2 is read)")]
    UnsupportedVersion(String),
    #[error("malformed mesh file, line {line}: {message}")]
    Parse { line: usize, message: String },
    #[error("unsupported 3D element type {0} (only 4-node tetrahedra)")]
    UnsupportedElement(u32),
    #[error("element {0} has no physical volume tag")]
    MissingRegionTag(usize),
    #[error("physical volume group {0} is neither named nor numbered 1 (interior) / 2 (pml)")]
    UnknownRegion(String),
    #[error("mesh contains no tetrahedra")]
    Empty,
    #[error("element {0} has zero volume")]
    Degenerate(usize),
    #[error("non-conforming mesh: {0}")]
    NonConforming(String),
    #[error("node connectivity has not been built")]
    MissingNodeMaps,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Region {
    Interior,
    Pml,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoundaryKind {
    Reflective,
    Abc,
}

impl std::str::FromStr for BoundaryKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "reflective" => Ok(Self::Reflective),
            "abc" => Ok(Self::Abc),
            other => Err(format!("unknown boundary kind `{other}`")),
        }
    }
}

/// What lies across a given element face.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum FaceKind {
    Interior,
    Boundary(BoundaryKind),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BoundaryFace {
    pub element: usize,
    pub face: usize,
    pub kind: BoundaryKind,
}

/// Nodal data that depends on the polynomial order.
#[derive(Debug, Clone)]
pub struct NodeMaps {
    pub order: usize,
    pub num_nodes: usize,
    pub num_face_nodes: usize,
    /// Physical coordinates of node `k * num_nodes + i`.
    pub node_coords: Vec<[f64; 3]>,
    /// Volume node index of each trace node, `[K][4][num_face_nodes]` flattened.
    pub vmap_interior: Vec<usize>,
    /// Matching volume node across the face (equal to `vmap_interior` on boundaries).
    pub vmap_exterior: Vec<usize>,
}

#[derive(Debug, Clone)]
pub struct Mesh {
    pub vertices: Vec<[f64; 3]>,
    pub elements: Vec<[usize; 4]>,
    pub etoe: Vec<[usize; 4]>,
    pub etof: Vec<[usize; 4]>,
    pub boundary_faces: Vec<BoundaryFace>,
    pub region_tags: Vec<Region>,
    pub face_kinds: Vec<[FaceKind; 4]>,
    nodes: Option<NodeMaps>,
}

fn sorted3(mut v: [usize; 3]) -> [usize; 3] {
    v.sort_unstable();
    v
}

pub(crate) fn signed_volume(v: &[[f64; 3]], tet: &[usize; 4]) -> f64 {
    let a = v[tet[0]];
    let d = |p: [f64; 3]| [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
    let (b, c, e) = (d(v[tet[1]]), d(v[tet[2]]), d(v[tet[3]]));
    (b[0] * (c[1] * e[2] - c[2] * e[1]) - b[1] * (c[0] * e[2] - c[2] * e[0])
        + b[2] * (c[0] * e[1] - c[1] * e[0]))
        / 6.0
}

impl Mesh {
    /// Builds face connectivity from raw tetrahedra.
    ///
    /// `surface_kinds` maps sorted vertex triplets of tagged boundary triangles to
    /// their kind; boundary faces absent from it default to [`BoundaryKind::Abc`].
    /// Negatively oriented tetrahedra are repaired by swapping two vertices.
    pub fn from_parts(
        vertices: Vec<[f64; 3]>,
        mut elements: Vec<[usize; 4]>,
        region_tags: Vec<Region>,
        surface_kinds: &HashMap<[usize; 3], BoundaryKind>,
    ) -> Result<Self, MeshError> {
        if elements.is_empty() {
            return Err(MeshError::Empty);
        }
        assert_eq!(elements.len(), region_tags.len());

        let mut flipped = 0usize;
        for (k, tet) in elements.iter_mut().enumerate() {
            let vol = signed_volume(&vertices, tet);
            let scale = tet
                .iter()
                .skip(1)
                .map(|&i| {
                    let (p, q) = (vertices[i], vertices[tet[0]]);
                    ((p[0] - q[0]).powi(2) + (p[1] - q[1]).powi(2) + (p[2] - q[2]).powi(2)).sqrt()
                })
                .fold(0.0, f64::max);
            if vol.abs() <= 1e-12 * scale.powi(3) {
                return Err(MeshError::Degenerate(k));
            }
            if vol < 0.0 {
                tet.swap(2, 3);
                flipped += 1;
            }
        }
        if flipped > 0 {
            log::warn!("reoriented {flipped} inverted tetrahedra");
        }

        let k_total = elements.len();
        let mut etoe: Vec<[usize; 4]> = (0..k_total).map(|k| [k; 4]).collect();
        let mut etof: Vec<[usize; 4]> = (0..k_total).map(|_| [0, 1, 2, 3]).collect();
        let mut open: HashMap<[usize; 3], (usize, usize)> = HashMap::new();
        for (k, tet) in elements.iter().enumerate() {
            for (f, lv) in FACE_VERTICES.iter().enumerate() {
                let key = sorted3([tet[lv[0]], tet[lv[1]], tet[lv[2]]]);
                match open.remove(&key) {
                    Some((k2, f2)) => {
                        etoe[k][f] = k2;
                        etof[k][f] = f2;
                        etoe[k2][f2] = k;
                        etof[k2][f2] = f;
                    }
                    None => {
                        open.insert(key, (k, f));
                    }
                }
            }
        }
        // A third element on a matched face re-opens its key; count occurrences.
        let mut face_count: HashMap<[usize; 3], usize> = HashMap::new();
        for tet in &elements {
            for lv in FACE_VERTICES {
                *face_count
                    .entry(sorted3([tet[lv[0]], tet[lv[1]], tet[lv[2]]]))
                    .or_default() += 1;
            }
        }
        if let Some((face, n)) = face_count.iter().find(|(_, &n)| n > 2) {
            return Err(MeshError::NonConforming(format!(
                "face {face:?} is shared by {n} elements"
            )));
        }

        let mut boundary_faces = Vec::new();
        let mut face_kinds = vec![[FaceKind::Interior; 4]; k_total];
        let mut untagged = 0usize;
        for (k, tet) in elements.iter().enumerate() {
            for (f, lv) in FACE_VERTICES.iter().enumerate() {
                if etoe[k][f] != k {
                    continue;
                }
                let verts = [tet[lv[0]], tet[lv[1]], tet[lv[2]]];
                let kind = match surface_kinds.get(&sorted3(verts)) {
                    Some(&kind) => kind,
                    None => {
                        untagged += 1;
                        BoundaryKind::Abc
                    }
                };
                face_kinds[k][f] = FaceKind::Boundary(kind);
                boundary_faces.push(BoundaryFace {
                    element: k,
                    face: f,
                    kind,
                });
            }
        }
        check_t_junctions(&vertices, &elements, &boundary_faces)?;
        if untagged > 0 {
            log::warn!("{untagged} boundary faces carry no surface tag; using abc");
        }

        Ok(Self {
            vertices,
            elements,
            etoe,
            etof,
            boundary_faces,
            region_tags,
            face_kinds,
            nodes: None,
        })
    }

    pub fn num_elements(&self) -> usize {
        self.elements.len()
    }

    pub fn node_maps(&self) -> Result<&NodeMaps, MeshError> {
        self.nodes.as_ref().ok_or(MeshError::MissingNodeMaps)
    }

    pub fn count_region(&self, region: Region) -> usize {
        self.region_tags.iter().filter(|&&r| r == region).count()
    }

    /// Axis-aligned bounding box `(min, max)` of the vertices of elements in `region`.
    pub fn region_bounding_box(&self, region: Region) -> Option<([f64; 3], [f64; 3])> {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        let mut any = false;
        for (tet, _) in self
            .elements
            .iter()
            .zip(&self.region_tags)
            .filter(|(_, &r)| r == region)
        {
            any = true;
            for &v in tet {
                for d in 0..3 {
                    lo[d] = lo[d].min(self.vertices[v][d]);
                    hi[d] = hi[d].max(self.vertices[v][d]);
                }
            }
        }
        any.then_some((lo, hi))
    }

    /// Overrides the kind of every boundary face on an element in `region`.
    pub fn set_boundary_kind(&mut self, region: Region, kind: BoundaryKind) {
        for bf in self.boundary_faces.iter_mut() {
            if self.region_tags[bf.element] == region {
                bf.kind = kind;
                self.face_kinds[bf.element][bf.face] = FaceKind::Boundary(kind);
            }
        }
    }

    /// Physical position of reference point `rst` in element `k`.
    pub fn map_point(&self, k: usize, rst: [f64; 3]) -> [f64; 3] {
        let [r, s, t] = rst;
        let w = [-(1.0 + r + s + t) / 2.0, (1.0 + r) / 2.0, (1.0 + s) / 2.0, (1.0 + t) / 2.0];
        let mut x = [0.0; 3];
        for (wi, &v) in w.iter().zip(&self.elements[k]) {
            for d in 0..3 {
                x[d] += wi * self.vertices[v][d];
            }
        }
        x
    }
}

/// Computes physical node coordinates and the trace-pairing maps for `elem`.
pub fn build_connectivity(mut mesh: Mesh, elem: &ReferenceElement) -> Result<Mesh, MeshError> {
    let np = elem.num_nodes;
    let nfp = elem.num_face_nodes;
    let k_total = mesh.num_elements();

    let node_coords: Vec<[f64; 3]> = (0..k_total)
        .flat_map(|k| elem.nodes.iter().map(move |&rst| (k, rst)))
        .map(|(k, rst)| mesh.map_point(k, rst))
        .collect();

    let mut vmap_interior = Vec::with_capacity(k_total * NUM_FACES * nfp);
    for k in 0..k_total {
        for ids in &elem.face_node_ids {
            vmap_interior.extend(ids.iter().map(|&i| k * np + i));
        }
    }
    let mut vmap_exterior = vmap_interior.clone();

    for k in 0..k_total {
        let h = element_scale(&mesh, k);
        for f in 0..NUM_FACES {
            let (k2, f2) = (mesh.etoe[k][f], mesh.etof[k][f]);
            if k2 == k && f2 == f {
                continue;
            }
            let base = (k * NUM_FACES + f) * nfp;
            let base2 = (k2 * NUM_FACES + f2) * nfp;
            for i in 0..nfp {
                let x = node_coords[vmap_interior[base + i]];
                let (best, dist) = (0..nfp)
                    .map(|j| {
                        let y = node_coords[vmap_interior[base2 + j]];
                        let d2 = (x[0] - y[0]).powi(2) + (x[1] - y[1]).powi(2) + (x[2] - y[2]).powi(2);
                        (j, d2.sqrt())
                    })
                    .min_by(|a, b| a.1.total_cmp(&b.1))
                    .expect("faces carry nodes");
                if dist > 1e-7 * h {
                    return Err(MeshError::NonConforming(format!(
                        "trace node {i} of element {k} face {f} has no partner (gap {dist:.3e})"
                    )));
                }
                vmap_exterior[base + i] = vmap_interior[base2 + best];
            }
        }
    }

    mesh.nodes = Some(NodeMaps {
        order: elem.order,
        num_nodes: np,
        num_face_nodes: nfp,
        node_coords,
        vmap_interior,
        vmap_exterior,
    });
    Ok(mesh)
}

/// Rejects boundary vertices lying on another boundary face: the signature of
/// hanging nodes, where one side of a face is split and the other is not.
fn check_t_junctions(
    vertices: &[[f64; 3]],
    elements: &[[usize; 4]],
    boundary_faces: &[BoundaryFace],
) -> Result<(), MeshError> {
    let tris: Vec<[usize; 3]> = boundary_faces
        .iter()
        .map(|bf| {
            let lv = FACE_VERTICES[bf.face];
            let tet = elements[bf.element];
            [tet[lv[0]], tet[lv[1]], tet[lv[2]]]
        })
        .collect();
    if tris.is_empty() {
        return Ok(());
    }
    let dist = |a: [f64; 3], b: [f64; 3]| {
        ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
    };
    let mean_edge = tris
        .iter()
        .map(|t| dist(vertices[t[0]], vertices[t[1]]))
        .sum::<f64>()
        / tris.len() as f64;
    let cell = mean_edge.max(f64::MIN_POSITIVE);
    let key = |p: [f64; 3]| {
        [
            (p[0] / cell).floor() as i64,
            (p[1] / cell).floor() as i64,
            (p[2] / cell).floor() as i64,
        ]
    };

    let mut bucket: HashMap<[i64; 3], Vec<usize>> = HashMap::new();
    let mut boundary_vertices: Vec<usize> = tris.iter().flatten().copied().collect();
    boundary_vertices.sort_unstable();
    boundary_vertices.dedup();
    for &v in &boundary_vertices {
        bucket.entry(key(vertices[v])).or_default().push(v);
    }

    for tri in &tris {
        let [a, b, c] = tri.map(|i| vertices[i]);
        let sub = |p: [f64; 3], q: [f64; 3]| [p[0] - q[0], p[1] - q[1], p[2] - q[2]];
        let dot = |p: [f64; 3], q: [f64; 3]| p[0] * q[0] + p[1] * q[1] + p[2] * q[2];
        let (e0, e1) = (sub(b, a), sub(c, a));
        let n = [
            e0[1] * e1[2] - e0[2] * e1[1],
            e0[2] * e1[0] - e0[0] * e1[2],
            e0[0] * e1[1] - e0[1] * e1[0],
        ];
        let area2 = dot(n, n).sqrt();
        let h = dist(a, b).max(dist(b, c)).max(dist(a, c));
        let tol = 1e-9 * h;
        let (d00, d01, d11) = (dot(e0, e0), dot(e0, e1), dot(e1, e1));
        let denom = d00 * d11 - d01 * d01;

        let mut lo = [i64::MAX; 3];
        let mut hi = [i64::MIN; 3];
        for p in [a, b, c] {
            let kp = key(p);
            for d in 0..3 {
                lo[d] = lo[d].min(kp[d]);
                hi[d] = hi[d].max(kp[d]);
            }
        }
        for i in lo[0]..=hi[0] {
            for j in lo[1]..=hi[1] {
                for l in lo[2]..=hi[2] {
                    let Some(cands) = bucket.get(&[i, j, l]) else {
                        continue;
                    };
                    for &v in cands {
                        if tri.contains(&v) {
                            continue;
                        }
                        let w = sub(vertices[v], a);
                        if (dot(w, n) / area2).abs() > tol {
                            continue;
                        }
                        let (d20, d21) = (dot(w, e0), dot(w, e1));
                        let beta = (d11 * d20 - d01 * d21) / denom;
                        let gamma = (d00 * d21 - d01 * d20) / denom;
                        let eps = 1e-9;
                        if beta >= -eps && gamma >= -eps && beta + gamma <= 1.0 + eps {
                            return Err(MeshError::NonConforming(format!(
                                "vertex {v} lies on boundary face {tri:?} (hanging node)"
                            )));
                        }
                    }
                }
            }
        }
    }
    Ok(())
}

/// Longest edge from the first vertex; a size scale for tolerances.
fn element_scale(mesh: &Mesh, k: usize) -> f64 {
    let tet = mesh.elements[k];
    let a = mesh.vertices[tet[0]];
    tet[1..]
        .iter()
        .map(|&v| {
            let b = mesh.vertices[v];
            ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt()
        })
        .fold(0.0, f64::max)
}
