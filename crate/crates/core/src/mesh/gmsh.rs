//! Gmsh `.msh` reader, ASCII format 2.2.
//!
//! Volume elements must be 4-node tetrahedra (type 4) carrying a physical tag.
//! Physical volume groups whose name starts with `pml` (case-insensitive) mark
//! absorbing-layer elements; any other named group is interior. Unnamed groups
//! fall back to the numbering 1 = interior, 2 = pml.
//!
//! Triangles (type 2) in physical surface groups named `reflective*` or `abc*`
//! set the boundary kind of the faces they cover.

use std::collections::HashMap;
use std::path::Path;

use super::{BoundaryKind, Mesh, MeshError, Region};

const TET4: u32 = 4;
const TRI3: u32 = 2;
/// 3D element types other than the linear tetrahedron.
const OTHER_3D: [u32; 12] = [5, 6, 7, 11, 12, 13, 14, 17, 18, 19, 29, 30];

pub fn read_gmsh(path: impl AsRef<Path>) -> Result<Mesh, MeshError> {
    let text = std::fs::read_to_string(path)?;
    parse_gmsh(&text)
}

struct Lines<'a> {
    inner: std::iter::Enumerate<std::str::Lines<'a>>,
    last: usize,
}

impl<'a> Lines<'a> {
    fn next_nonempty(&mut self) -> Option<&'a str> {
        for (i, line) in self.inner.by_ref() {
            self.last = i + 1;
            let line = line.trim();
            if !line.is_empty() {
                return Some(line);
            }
        }
        None
    }

    fn expect(&mut self, what: &str) -> Result<&'a str, MeshError> {
        self.next_nonempty().ok_or_else(|| MeshError::Parse {
            line: self.last,
            message: format!("unexpected end of file, expected {what}"),
        })
    }

    fn err(&self, message: impl Into<String>) -> MeshError {
        MeshError::Parse {
            line: self.last,
            message: message.into(),
        }
    }

    fn count(&mut self, section: &str) -> Result<usize, MeshError> {
        let line = self.expect(section)?;
        line.parse()
            .map_err(|_| self.err(format!("bad {section} count `{line}`")))
    }
}

pub fn parse_gmsh(text: &str) -> Result<Mesh, MeshError> {
    let mut lines = Lines {
        inner: text.lines().enumerate(),
        last: 0,
    };

    let mut version_seen = false;
    let mut names: HashMap<(u32, i64), String> = HashMap::new();
    let mut node_index: HashMap<i64, usize> = HashMap::new();
    let mut vertices: Vec<[f64; 3]> = Vec::new();
    let mut tets: Vec<([i64; 4], i64, usize)> = Vec::new();
    let mut tris: Vec<([i64; 3], i64)> = Vec::new();

    while let Some(line) = lines.next_nonempty() {
        match line {
            "$MeshFormat" => {
                let header = lines.expect("format header")?;
                let mut it = header.split_whitespace();
                let version = it.next().unwrap_or("");
                let file_type = it.next().unwrap_or("");
                if version != "2.2" || file_type != "0" {
                    return Err(MeshError::UnsupportedVersion(header.to_string()));
                }
                version_seen = true;
            }
            "$PhysicalNames" => {
                let n = lines.count("physical name")?;
                for _ in 0..n {
                    let l = lines.expect("physical name")?;
                    let mut it = l.splitn(3, char::is_whitespace);
                    let dim: u32 = parse_field(&lines, it.next(), "dimension")?;
                    let tag: i64 = parse_field(&lines, it.next(), "physical tag")?;
                    let name = it.next().unwrap_or("").trim().trim_matches('"').to_string();
                    names.insert((dim, tag), name);
                }
            }
            "$Nodes" => {
                let n = lines.count("node")?;
                vertices.reserve(n);
                for _ in 0..n {
                    let l = lines.expect("node")?;
                    let mut it = l.split_whitespace();
                    let id: i64 = parse_field(&lines, it.next(), "node id")?;
                    let x: f64 = parse_field(&lines, it.next(), "x")?;
                    let y: f64 = parse_field(&lines, it.next(), "y")?;
                    let z: f64 = parse_field(&lines, it.next(), "z")?;
                    node_index.insert(id, vertices.len());
                    vertices.push([x, y, z]);
                }
            }
            "$Elements" => {
                let n = lines.count("element")?;
                for _ in 0..n {
                    let l = lines.expect("element")?;
                    let fields: Vec<&str> = l.split_whitespace().collect();
                    if fields.len() < 3 {
                        return Err(lines.err("element record too short"));
                    }
                    let id: i64 = parse_field(&lines, Some(fields[0]), "element id")?;
                    let etype: u32 = parse_field(&lines, Some(fields[1]), "element type")?;
                    let ntags: usize = parse_field(&lines, Some(fields[2]), "tag count")?;
                    let tags = fields
                        .get(3..3 + ntags)
                        .ok_or_else(|| lines.err("missing element tags"))?;
                    let physical: i64 = match tags.first() {
                        Some(t) => parse_field(&lines, Some(t), "physical tag")?,
                        None => 0,
                    };
                    let conn = &fields[3 + ntags..];
                    match etype {
                        TET4 => {
                            if conn.len() != 4 {
                                return Err(lines.err("tetrahedron needs 4 nodes"));
                            }
                            let mut v = [0i64; 4];
                            for (slot, s) in v.iter_mut().zip(conn) {
                                *slot = parse_field(&lines, Some(s), "node reference")?;
                            }
                            tets.push((v, physical, id as usize));
                        }
                        TRI3 => {
                            if conn.len() != 3 {
                                return Err(lines.err("triangle needs 3 nodes"));
                            }
                            let mut v = [0i64; 3];
                            for (slot, s) in v.iter_mut().zip(conn) {
                                *slot = parse_field(&lines, Some(s), "node reference")?;
                            }
                            tris.push((v, physical));
                        }
                        t if OTHER_3D.contains(&t) => return Err(MeshError::UnsupportedElement(t)),
                        _ => {}
                    }
                }
            }
            _ => {}
        }
    }

    if !version_seen {
        return Err(MeshError::UnsupportedVersion("missing $MeshFormat".into()));
    }
    if tets.is_empty() {
        return Err(MeshError::Empty);
    }

    let resolve = |id: i64| -> Result<usize, MeshError> {
        node_index.get(&id).copied().ok_or_else(|| MeshError::Parse {
            line: 0,
            message: format!("element references unknown node {id}"),
        })
    };

    let mut elements = Vec::with_capacity(tets.len());
    let mut regions = Vec::with_capacity(tets.len());
    let mut region_cache: HashMap<i64, Region> = HashMap::new();
    for (v, physical, id) in &tets {
        if *physical <= 0 {
            return Err(MeshError::MissingRegionTag(*id));
        }
        let region = match region_cache.get(physical) {
            Some(&r) => r,
            None => {
                let r = match names.get(&(3, *physical)) {
                    Some(name) if name.to_ascii_lowercase().starts_with("pml") => Region::Pml,
                    Some(_) => Region::Interior,
                    None => match physical {
                        1 => Region::Interior,
                        2 => Region::Pml,
                        other => return Err(MeshError::UnknownRegion(other.to_string())),
                    },
                };
                region_cache.insert(*physical, r);
                r
            }
        };
        elements.push([resolve(v[0])?, resolve(v[1])?, resolve(v[2])?, resolve(v[3])?]);
        regions.push(region);
    }

    let mut surface_kinds = HashMap::new();
    let mut unnamed_surfaces = 0usize;
    for (v, physical) in &tris {
        if *physical <= 0 {
            continue;
        }
        let kind = match names.get(&(2, *physical)).map(|n| n.to_ascii_lowercase()) {
            Some(n) if n.starts_with("reflective") => BoundaryKind::Reflective,
            Some(n) if n.starts_with("abc") => BoundaryKind::Abc,
            _ => {
                unnamed_surfaces += 1;
                BoundaryKind::Abc
            }
        };
        let mut key = [resolve(v[0])?, resolve(v[1])?, resolve(v[2])?];
        key.sort_unstable();
        surface_kinds.insert(key, kind);
    }
    if unnamed_surfaces > 0 {
        log::warn!(
            "{unnamed_surfaces} surface triangles are in groups not named reflective*/abc*; using abc"
        );
    }

    Mesh::from_parts(vertices, elements, regions, &surface_kinds)
}

fn parse_field<T: std::str::FromStr>(
    lines: &Lines<'_>,
    field: Option<&str>,
    what: &str,
) -> Result<T, MeshError> {
    let s = field.ok_or_else(|| lines.err(format!("missing {what}")))?;
    s.parse().map_err(|_| lines.err(format!("bad {what} `{s}`")))
}
