//! OFF and OBJ mesh files, boundary polygon files and key=value blocks.
//!
//! OFF files for ambient dimension other than 3 carry a `# ambient N`
//! comment and `v x1 ... xN` vertex lines. Fixed vertices are listed in
//! `# fixed i j ...` comments; without them the topological boundary is
//! fixed.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::path::Path;

use super::mesh::SimplicialMesh;
use super::GeometryError;

/// Formats a float with 17 significant digits.
pub fn fmt_f64(x: f64) -> String {
    format!("{x:.16e}")
}

pub fn write_off(mesh: &SimplicialMesh) -> String {
    let n = mesh.ambient_dim();
    let mut s = String::from("OFF\n");
    if n != 3 {
        writeln!(s, "# ambient {n}").unwrap();
    }
    let fixed: Vec<String> = (0..mesh.num_vertices())
        .filter(|&v| mesh.fixed()[v])
        .map(|v| v.to_string())
        .collect();
    if !fixed.is_empty() {
        writeln!(s, "# fixed {}", fixed.join(" ")).unwrap();
    }
    writeln!(s, "{} {} 0", mesh.num_vertices(), mesh.num_cells()).unwrap();
    for v in 0..mesh.num_vertices() {
        let coords: Vec<String> = mesh.vertex(v).iter().map(|&x| fmt_f64(x)).collect();
        if n == 3 {
            writeln!(s, "{}", coords.join(" ")).unwrap();
        } else {
            writeln!(s, "v {}", coords.join(" ")).unwrap();
        }
    }
    for c in 0..mesh.num_cells() {
        let cell = mesh.cell(c);
        let idx: Vec<String> = cell.iter().map(|i| i.to_string()).collect();
        writeln!(s, "{} {}", cell.len(), idx.join(" ")).unwrap();
    }
    s
}

pub fn read_off(text: &str) -> Result<SimplicialMesh, GeometryError> {
    let mut ambient: Option<usize> = None;
    let mut fixed_list: Option<Vec<usize>> = None;
    let mut lines = Vec::new();
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if let Some(comment) = line.strip_prefix('#') {
            let mut it = comment.split_whitespace();
            match it.next() {
                Some("ambient") => {
                    let v = it.next().and_then(|x| x.parse().ok());
                    ambient = Some(v.ok_or_else(|| parse_err(no, "bad ambient comment"))?);
                }
                Some("fixed") => {
                    let list = fixed_list.get_or_insert_with(Vec::new);
                    for tok in it {
                        list.push(tok.parse().map_err(|_| parse_err(no, "bad fixed index"))?);
                    }
                }
                _ => {}
            }
            continue;
        }
        if !line.is_empty() {
            lines.push((no, line));
        }
    }
    let mut it = lines.into_iter();
    let (no, head) = it.next().ok_or_else(|| parse_err(0, "empty file"))?;
    if !head.ends_with("OFF") {
        return Err(parse_err(no, "missing OFF header"));
    }
    let (no, counts) = it.next().ok_or_else(|| parse_err(no, "missing counts"))?;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| t.parse().map_err(|_| parse_err(no, "bad counts")))
        .collect::<Result<_, _>>()?;
    if counts.len() < 2 {
        return Err(parse_err(no, "bad counts"));
    }
    let (nv, nc) = (counts[0], counts[1]);
    let mut vertices = Vec::new();
    let mut width = None;
    for _ in 0..nv {
        let (no, line) = it.next().ok_or_else(|| parse_err(no, "truncated vertex list"))?;
        let body = line.strip_prefix("v ").unwrap_or(line);
        let coords: Vec<f64> = body
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(no, "bad coordinate")))
            .collect::<Result<_, _>>()?;
        match width {
            None => width = Some(coords.len()),
            Some(w) if w != coords.len() => return Err(parse_err(no, "ragged vertex line")),
            _ => {}
        }
        vertices.extend(coords);
    }
    let width = width.unwrap_or(3);
    let ambient = ambient.unwrap_or(width);
    if ambient != width {
        return Err(parse_err(0, "vertex width does not match ambient comment"));
    }
    let mut cells = Vec::new();
    let mut dim = None;
    for _ in 0..nc {
        let (no, line) = it.next().ok_or_else(|| parse_err(no, "truncated cell list"))?;
        let idx: Vec<usize> = line
            .split_whitespace()
            .map(|t| t.parse().map_err(|_| parse_err(no, "bad index")))
            .collect::<Result<_, _>>()?;
        let k = *idx.first().ok_or_else(|| parse_err(no, "empty cell"))?;
        if idx.len() < k + 1 || !(2..=3).contains(&k) {
            return Err(parse_err(no, "cells must be segments or triangles"));
        }
        match dim {
            None => dim = Some(k - 1),
            Some(d) if d != k - 1 => return Err(parse_err(no, "mixed cell sizes")),
            _ => {}
        }
        cells.extend_from_slice(&idx[1..=k]);
    }
    let fixed = fixed_list.map(|list| {
        let mut f = vec![false; nv];
        for i in list {
            if i < nv {
                f[i] = true;
            }
        }
        f
    });
    let fixed = match fixed {
        Some(f) => {
            // boundary vertices are always fixed
            let probe = SimplicialMesh::new(dim.unwrap_or(2), ambient, vertices.clone(), cells.clone(), None)?;
            Some(f.iter().zip(probe.on_boundary()).map(|(a, b)| *a || *b).collect())
        }
        None => None,
    };
    SimplicialMesh::new(dim.unwrap_or(2), ambient, vertices, cells, fixed)
}

pub fn write_obj(mesh: &SimplicialMesh) -> String {
    let mut s = String::new();
    for v in 0..mesh.num_vertices() {
        let coords: Vec<String> = mesh.vertex(v).iter().map(|&x| fmt_f64(x)).collect();
        writeln!(s, "v {}", coords.join(" ")).unwrap();
    }
    let tag = if mesh.dim() == 1 { "l" } else { "f" };
    for c in 0..mesh.num_cells() {
        let idx: Vec<String> = mesh.cell(c).iter().map(|i| (i + 1).to_string()).collect();
        writeln!(s, "{tag} {}", idx.join(" ")).unwrap();
    }
    s
}

pub fn read_obj(text: &str) -> Result<SimplicialMesh, GeometryError> {
    let mut vertices = Vec::new();
    let mut width = None;
    let mut cells = Vec::new();
    let mut dim = None;
    for (no, raw) in text.lines().enumerate() {
        let mut it = raw.split_whitespace();
        match it.next() {
            Some("v") => {
                let coords: Vec<f64> = it
                    .map(|t| t.parse().map_err(|_| parse_err(no, "bad coordinate")))
                    .collect::<Result<_, _>>()?;
                if *width.get_or_insert(coords.len()) != coords.len() {
                    return Err(parse_err(no, "ragged vertex line"));
                }
                vertices.extend(coords);
            }
            Some(tag @ ("f" | "l")) => {
                let idx: Vec<usize> = it
                    .map(|t| {
                        let head = t.split('/').next().unwrap_or(t);
                        head.parse::<usize>()
                            .ok()
                            .filter(|&i| i > 0)
                            .map(|i| i - 1)
                            .ok_or_else(|| parse_err(no, "bad index"))
                    })
                    .collect::<Result<_, _>>()?;
                let d = if tag == "l" { 1 } else { 2 };
                if idx.len() != d + 1 {
                    return Err(parse_err(no, "cells must be segments or triangles"));
                }
                if *dim.get_or_insert(d) != d {
                    return Err(parse_err(no, "mixed cell sizes"));
                }
                cells.extend(idx);
            }
            _ => {}
        }
    }
    SimplicialMesh::new(dim.unwrap_or(2), width.unwrap_or(3), vertices, cells, None)
}

/// Reads a mesh by extension (`.off` or `.obj`).
pub fn read_mesh(path: &Path) -> Result<SimplicialMesh, GeometryError> {
    let text = std::fs::read_to_string(path).map_err(|e| GeometryError::Io(format!("{}: {e}", path.display())))?;
    match path.extension().and_then(|e| e.to_str()) {
        Some("obj") => read_obj(&text),
        _ => read_off(&text),
    }
}

/// Closed polygon, one vertex per line, whitespace-separated coordinates.
pub fn read_polygon(text: &str) -> Result<(usize, Vec<f64>), GeometryError> {
    let mut pts = Vec::new();
    let mut width = None;
    for (no, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let coords: Vec<f64> = line
            .split(|c: char| c.is_whitespace() || c == ',')
            .filter(|t| !t.is_empty())
            .map(|t| t.parse().map_err(|_| parse_err(no, "bad coordinate")))
            .collect::<Result<_, _>>()?;
        if *width.get_or_insert(coords.len()) != coords.len() {
            return Err(parse_err(no, "ragged polygon line"));
        }
        pts.extend(coords);
    }
    let w = width.ok_or(GeometryError::Empty)?;
    Ok((w, pts))
}

fn parse_err(line: usize, message: &str) -> GeometryError {
    GeometryError::Parse {
        line: line + 1,
        message: message.into(),
    }
}

/// Plain-text `key = value` block; `#` starts a comment.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct KeyValues {
    map: BTreeMap<String, String>,
}

impl KeyValues {
    pub fn parse(text: &str) -> Result<Self, GeometryError> {
        let mut map = BTreeMap::new();
        for (no, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| parse_err(no, "expected key = value"))?;
            let k = k.trim();
            if k.is_empty() {
                return Err(parse_err(no, "empty key"));
            }
            map.insert(k.to_string(), v.trim().to_string());
        }
        Ok(Self { map })
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.map.get(key).map(String::as_str)
    }

    pub fn insert(&mut self, key: &str, value: impl ToString) {
        self.map.insert(key.to_string(), value.to_string());
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &str)> {
        self.map.iter().map(|(k, v)| (k.as_str(), v.as_str()))
    }

    pub fn get_f64(&self, key: &str) -> Result<Option<f64>, GeometryError> {
        self.get(key)
            .map(|v| {
                v.parse().map_err(|_| GeometryError::InvalidParameter {
                    name: key.into(),
                    value: v.into(),
                })
            })
            .transpose()
    }

    pub fn get_usize(&self, key: &str) -> Result<Option<usize>, GeometryError> {
        self.get(key)
            .map(|v| {
                v.parse().map_err(|_| GeometryError::InvalidParameter {
                    name: key.into(),
                    value: v.into(),
                })
            })
            .transpose()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::catalog::CatalogSpec;

    #[test]
    fn off_round_trip_in_r4() {
        let m = CatalogSpec::clifford_torus(8, 8).generate().unwrap();
        let text = write_off(&m);
        assert!(text.contains("# ambient 4"));
        assert!(text.lines().any(|l| l.starts_with("v ")));
        let back = read_off(&text).unwrap();
        assert_eq!(back, m);
    }

    #[test]
    fn off_round_trip_keeps_fixed_flags() {
        let m = CatalogSpec::flat_disk(1.0, 3).generate().unwrap();
        let mut flags = m.fixed().to_vec();
        flags[0] = true;
        let m = m.with_fixed(flags).unwrap();
        assert_eq!(read_off(&write_off(&m)).unwrap(), m);
    }

    #[test]
    fn obj_round_trip_curve() {
        let m = CatalogSpec::circle(1.0, 12).generate().unwrap();
        assert_eq!(read_obj(&write_obj(&m)).unwrap(), m);
    }

    #[test]
    fn rejects_garbage() {
        assert!(read_off("OFF\n1 1 0\n0 0 0\n3 0 0 0\n").is_err());
        assert!(read_off("nope").is_err());
        assert!(KeyValues::parse("radius 2").is_err());
    }

    #[test]
    fn key_values() {
        let kv = KeyValues::parse("# c\nradius = 2.5 # trailing\n\nname=x\n").unwrap();
        assert_eq!(kv.get_f64("radius").unwrap(), Some(2.5));
        assert_eq!(kv.get("name"), Some("x"));
        assert!(kv.get_usize("name").is_err());
    }
}
