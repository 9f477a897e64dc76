//! Structured tetrahedral meshes of axis-aligned boxes, written as Gmsh 2.2
//! ASCII. Used to produce solver fixtures: an interior box optionally wrapped in
//! an absorbing shell, every hexahedral cell split into six tetrahedra around
//! its main diagonal (a conforming Kuhn subdivision).
//!
//! Physical groups written: volume 1 `interior`, volume 2 `pml`, and one
//! surface group per distinct side name, plus `reflective_obstacle` for the
//! walls of removed cell blocks.

use std::collections::{BTreeMap, HashMap};
use std::fmt::Write;

/// Cell layout along one axis: `[-pml][interior][+pml]`.
#[derive(Debug, Clone, Copy)]
pub struct Axis {
    pub min: f64,
    pub max: f64,
    pub cells: usize,
    pub pml_width: f64,
    pub pml_cells: usize,
}

impl Axis {
    pub fn new(min: f64, max: f64, cells: usize) -> Self {
        Self {
            min,
            max,
            cells,
            pml_width: 0.0,
            pml_cells: 0,
        }
    }

    pub fn with_pml(mut self, width: f64, cells: usize) -> Self {
        self.pml_width = width;
        self.pml_cells = cells;
        self
    }

    fn breakpoints(&self) -> (Vec<f64>, usize, usize) {
        let mut x = Vec::new();
        let lo = self.min - self.pml_width;
        for i in 0..self.pml_cells {
            x.push(lo + self.pml_width * i as f64 / self.pml_cells as f64);
        }
        let first_interior = x.len();
        for i in 0..self.cells {
            x.push(self.min + (self.max - self.min) * i as f64 / self.cells as f64);
        }
        let first_upper = x.len();
        for i in 0..self.pml_cells {
            x.push(self.max + self.pml_width * i as f64 / self.pml_cells as f64);
        }
        x.push(self.max + self.pml_width);
        (x, first_interior, first_upper)
    }
}

/// Inclusive-exclusive ranges of cell indices along each axis.
#[derive(Debug, Clone, Copy)]
pub struct CellBlock {
    pub x: (usize, usize),
    pub y: (usize, usize),
    pub z: (usize, usize),
}

impl CellBlock {
    fn contains(&self, i: usize, j: usize, k: usize) -> bool {
        (self.x.0..self.x.1).contains(&i)
            && (self.y.0..self.y.1).contains(&j)
            && (self.z.0..self.z.1).contains(&k)
    }
}

#[derive(Debug, Clone)]
pub struct BoxSpec {
    pub axes: [Axis; 3],
    /// Surface group name of each outer side: -x, +x, -y, +y, -z, +z.
    pub sides: [String; 6],
    pub removed: Vec<CellBlock>,
}

impl BoxSpec {
    /// Cube `[-half, half]^3` with `cells` per interior edge and an optional shell.
    pub fn cube(half: f64, cells: usize, pml_width: f64, pml_cells: usize, side: &str) -> Self {
        let axis = Axis::new(-half, half, cells).with_pml(pml_width, pml_cells);
        Self {
            axes: [axis; 3],
            sides: std::array::from_fn(|_| side.to_string()),
            removed: Vec::new(),
        }
    }
}

/// Mesh as plain arrays; `regions[e]` is 1 (interior) or 2 (pml).
#[derive(Debug, Clone)]
pub struct BoxMesh {
    pub vertices: Vec<[f64; 3]>,
    pub tets: Vec<[usize; 4]>,
    pub regions: Vec<u8>,
    /// Boundary triangles with their surface group name.
    pub triangles: Vec<([usize; 3], String)>,
}

const KUHN: [[usize; 3]; 6] = [
    [0, 1, 2],
    [0, 2, 1],
    [1, 0, 2],
    [1, 2, 0],
    [2, 0, 1],
    [2, 1, 0],
];

pub fn build(spec: &BoxSpec) -> BoxMesh {
    let grids: Vec<(Vec<f64>, usize, usize)> = spec.axes.iter().map(Axis::breakpoints).collect();
    let n: Vec<usize> = grids.iter().map(|g| g.0.len()).collect();
    let vid = |i: usize, j: usize, k: usize| i + n[0] * (j + n[1] * k);

    let mut vertices = Vec::with_capacity(n[0] * n[1] * n[2]);
    for k in 0..n[2] {
        for j in 0..n[1] {
            for i in 0..n[0] {
                vertices.push([grids[0].0[i], grids[1].0[j], grids[2].0[k]]);
            }
        }
    }

    let in_pml = |d: usize, c: usize| c < grids[d].1 || c >= grids[d].2;
    let mut tets = Vec::new();
    let mut regions = Vec::new();
    for k in 0..n[2] - 1 {
        for j in 0..n[1] - 1 {
            for i in 0..n[0] - 1 {
                if spec.removed.iter().any(|b| b.contains(i, j, k)) {
                    continue;
                }
                let region = if in_pml(0, i) || in_pml(1, j) || in_pml(2, k) { 2 } else { 1 };
                for perm in KUHN {
                    let mut c = [i, j, k];
                    let mut tet = [vid(c[0], c[1], c[2]); 4];
                    for (slot, &axis) in perm.iter().enumerate() {
                        c[axis] += 1;
                        tet[slot + 1] = vid(c[0], c[1], c[2]);
                    }
                    if signed_volume(&vertices, &tet) < 0.0 {
                        tet.swap(2, 3);
                    }
                    tets.push(tet);
                    regions.push(region);
                }
            }
        }
    }

    let mut count: HashMap<[usize; 3], usize> = HashMap::new();
    for tet in &tets {
        for face in [[0, 1, 2], [0, 1, 3], [1, 2, 3], [0, 2, 3]] {
            let mut key = face.map(|l| tet[l]);
            key.sort_unstable();
            *count.entry(key).or_default() += 1;
        }
    }
    let lo: Vec<f64> = grids.iter().map(|g| g.0[0]).collect();
    let hi: Vec<f64> = grids.iter().map(|g| *g.0.last().unwrap()).collect();
    let mut boundary: Vec<[usize; 3]> = count
        .into_iter()
        .filter(|&(_, c)| c == 1)
        .map(|(f, _)| f)
        .collect();
    boundary.sort_unstable();
    let triangles = boundary
        .into_iter()
        .map(|tri| {
            let pts = tri.map(|v| vertices[v]);
            let mut name = "reflective_obstacle".to_string();
            for d in 0..3 {
                let tol = 1e-9 * (hi[d] - lo[d]);
                if pts.iter().all(|p| (p[d] - lo[d]).abs() < tol) {
                    name = spec.sides[2 * d].clone();
                } else if pts.iter().all(|p| (p[d] - hi[d]).abs() < tol) {
                    name = spec.sides[2 * d + 1].clone();
                }
            }
            (tri, name)
        })
        .collect();

    BoxMesh {
        vertices,
        tets,
        regions,
        triangles,
    }
}

fn signed_volume(v: &[[f64; 3]], t: &[usize; 4]) -> f64 {
    let a = v[t[0]];
    let d = |p: [f64; 3]| [p[0] - a[0], p[1] - a[1], p[2] - a[2]];
    let (b, c, e) = (d(v[t[1]]), d(v[t[2]]), d(v[t[3]]));
    b[0] * (c[1] * e[2] - c[2] * e[1]) - b[1] * (c[0] * e[2] - c[2] * e[0])
        + b[2] * (c[0] * e[1] - c[1] * e[0])
}

impl BoxMesh {
    pub fn to_msh(&self) -> String {
        let mut surface_tags: BTreeMap<&str, usize> = BTreeMap::new();
        for (_, name) in &self.triangles {
            let next = 3 + surface_tags.len();
            surface_tags.entry(name.as_str()).or_insert(next);
        }

        let mut out = String::new();
        out.push_str("$MeshFormat\n2.2 0 8\n$EndMeshFormat\n$PhysicalNames\n");
        writeln!(out, "{}", 2 + surface_tags.len()).unwrap();
        out.push_str("3 1 \"interior\"\n3 2 \"pml\"\n");
        for (name, tag) in &surface_tags {
            writeln!(out, "2 {tag} \"{name}\"").unwrap();
        }
        out.push_str("$EndPhysicalNames\n$Nodes\n");
        writeln!(out, "{}", self.vertices.len()).unwrap();
        for (i, p) in self.vertices.iter().enumerate() {
            writeln!(out, "{} {:.17e} {:.17e} {:.17e}", i + 1, p[0], p[1], p[2]).unwrap();
        }
        out.push_str("$EndNodes\n$Elements\n");
        writeln!(out, "{}", self.triangles.len() + self.tets.len()).unwrap();
        let mut id = 1;
        for (tri, name) in &self.triangles {
            let tag = surface_tags[name.as_str()];
            writeln!(out, "{id} 2 2 {tag} {tag} {} {} {}", tri[0] + 1, tri[1] + 1, tri[2] + 1)
                .unwrap();
            id += 1;
        }
        for (tet, region) in self.tets.iter().zip(&self.regions) {
            writeln!(
                out,
                "{id} 4 2 {region} {region} {} {} {} {}",
                tet[0] + 1,
                tet[1] + 1,
                tet[2] + 1,
                tet[3] + 1
            )
            .unwrap();
            id += 1;
        }
        out.push_str("$EndElements\n");
        out
    }

    pub fn write(&self, path: impl AsRef<std::path::Path>) -> std::io::Result<()> {
        std::fs::write(path, self.to_msh())
    }
}
