//! OFF and Wavefront OBJ readers. Only vertex positions and triangular faces
//! are kept; anything else is skipped with a warning.

use std::fmt::Write as _;
use std::path::Path;

use nalgebra::Vector3;

use super::TriangleMesh;
use crate::error::{Error, Result};

fn parse_err(line: usize, message: impl Into<String>) -> Error {
    Error::MeshParse { line, message: message.into() }
}

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    tok.parse::<f64>().map_err(|_| parse_err(line, format!("invalid number {tok:?}")))
}

fn parse_usize(tok: &str, line: usize) -> Result<usize> {
    tok.parse::<usize>().map_err(|_| parse_err(line, format!("invalid count {tok:?}")))
}

/// Parses an ASCII OFF file.
pub fn read_off(text: &str) -> Result<TriangleMesh> {
    let mut lines = text
        .lines()
        .enumerate()
        .map(|(i, l)| (i + 1, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (first_no, first) = lines.next().ok_or_else(|| parse_err(1, "empty file"))?;
    let rest = first.strip_prefix("OFF").ok_or_else(|| parse_err(first_no, "missing OFF header"))?.trim();
    let (counts_no, counts) = if rest.is_empty() {
        lines.next().ok_or_else(|| parse_err(first_no, "missing element counts"))?
    } else {
        (first_no, rest)
    };
    let counts: Vec<&str> = counts.split_whitespace().collect();
    if counts.len() < 2 {
        return Err(parse_err(counts_no, "expected vertex and face counts"));
    }
    let nv = parse_usize(counts[0], counts_no)?;
    let nf = parse_usize(counts[1], counts_no)?;

    let mut vertices = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (no, l) = lines.next().ok_or_else(|| parse_err(counts_no, "file ends inside the vertex list"))?;
        let t: Vec<&str> = l.split_whitespace().collect();
        if t.len() < 3 {
            return Err(parse_err(no, "vertex needs three coordinates"));
        }
        vertices.push(Vector3::new(parse_f64(t[0], no)?, parse_f64(t[1], no)?, parse_f64(t[2], no)?));
    }

    let mut faces = Vec::with_capacity(nf);
    let mut skipped = 0usize;
    for _ in 0..nf {
        let (no, l) = lines.next().ok_or_else(|| parse_err(counts_no, "file ends inside the face list"))?;
        let t: Vec<&str> = l.split_whitespace().collect();
        let k = parse_usize(t.first().copied().unwrap_or(""), no)?;
        if t.len() < k + 1 {
            return Err(parse_err(no, format!("face announces {k} vertices but lists {}", t.len() - 1)));
        }
        if k != 3 {
            skipped += 1;
            continue;
        }
        faces.push([parse_usize(t[1], no)?, parse_usize(t[2], no)?, parse_usize(t[3], no)?]);
    }
    if skipped > 0 {
        log::warn!("ignored {skipped} non-triangular faces");
    }
    if lines.next().is_some() {
        log::warn!("ignored trailing content after the face list");
    }
    TriangleMesh::new(vertices, faces)
}

fn obj_index(tok: &str, count: usize, line: usize) -> Result<usize> {
    let head = tok.split('/').next().unwrap_or("");
    let i: i64 = head.parse().map_err(|_| parse_err(line, format!("invalid face index {tok:?}")))?;
    let resolved = match i {
        0 => None,
        i if i > 0 => Some(i as usize - 1),
        i => count.checked_sub(i.unsigned_abs() as usize),
    };
    resolved.ok_or_else(|| parse_err(line, format!("face index {i} out of range")))
}

/// Parses a Wavefront OBJ file.
pub fn read_obj(text: &str) -> Result<TriangleMesh> {
    let mut vertices = Vec::new();
    let mut faces = Vec::new();
    let mut skipped_faces = 0usize;
    let mut skipped_records = std::collections::BTreeSet::new();
    for (i, raw) in text.lines().enumerate() {
        let no = i + 1;
        let l = raw.split('#').next().unwrap_or("").trim();
        let mut t = l.split_whitespace();
        match t.next() {
            None => {}
            Some("v") => {
                let c: Vec<&str> = t.collect();
                if c.len() < 3 {
                    return Err(parse_err(no, "vertex needs three coordinates"));
                }
                vertices.push(Vector3::new(parse_f64(c[0], no)?, parse_f64(c[1], no)?, parse_f64(c[2], no)?));
            }
            Some("f") => {
                let c: Vec<&str> = t.collect();
                if c.len() != 3 {
                    skipped_faces += 1;
                    continue;
                }
                let n = vertices.len();
                faces.push([obj_index(c[0], n, no)?, obj_index(c[1], n, no)?, obj_index(c[2], n, no)?]);
            }
            Some(other) => {
                skipped_records.insert(other.to_string());
            }
        }
    }
    if skipped_faces > 0 {
        log::warn!("ignored {skipped_faces} non-triangular faces");
    }
    if !skipped_records.is_empty() {
        let kinds: Vec<_> = skipped_records.into_iter().collect();
        log::warn!("ignored OBJ records: {}", kinds.join(", "));
    }
    TriangleMesh::new(vertices, faces)
}

/// Reads a mesh, choosing the format from the file extension.
pub fn read_mesh(path: &Path) -> Result<TriangleMesh> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    match ext.as_deref() {
        Some("off") => read_off(&text),
        Some("obj") => read_obj(&text),
        _ => Err(Error::InvalidMesh(format!("unknown mesh format: {}", path.display()))),
    }
}

/// Serializes a mesh as ASCII OFF with round-trip exact coordinates.
pub fn write_off(mesh: &TriangleMesh) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "OFF\n{} {} 0", mesh.vertices().len(), mesh.faces().len());
    for v in mesh.vertices() {
        let _ = writeln!(out, "{:?} {:?} {:?}", v.x, v.y, v.z);
    }
    for f in mesh.faces() {
        let _ = writeln!(out, "3 {} {} {}", f[0], f[1], f[2]);
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;

    const OFF: &str = "OFF\n# a tetrahedron\n4 4 6\n0 0 0\n1 0 0\n0 1 0\n0 0 1\n3 0 2 1\n3 0 1 3\n3 1 2 3\n3 0 3 2\n";

    #[test]
    fn off_round_trip() {
        let mesh = read_off(OFF).unwrap();
        assert_eq!(mesh.vertices().len(), 4);
        assert_eq!(mesh.faces()[2], [1, 2, 3]);
        assert_eq!(read_off(&write_off(&mesh)).unwrap(), mesh);
    }

    #[test]
    fn off_header_with_counts_and_quads() {
        let text = "OFF 4 2 0\n0 0 0\n1 0 0\n1 1 0\n0 1 0\n3 0 1 2\n4 0 1 2 3\n";
        let mesh = read_off(text).unwrap();
        assert_eq!(mesh.faces().len(), 1);
    }

    #[test]
    fn off_errors_carry_line_numbers() {
        let err = read_off("OFF\n2 0 0\n0 0 0\n1 x 0\n").unwrap_err();
        assert_eq!(err, Error::MeshParse { line: 4, message: "invalid number \"x\"".into() });
        assert!(matches!(read_off("PLY\n"), Err(Error::MeshParse { line: 1, .. })));
        assert!(matches!(read_off("OFF\n3 1 0\n0 0 0\n"), Err(Error::MeshParse { .. })));
    }

    #[test]
    fn obj_with_slashes_negatives_and_extras() {
        let text = "o thing\nv 0 0 0\nv 1 0 0\nv 0 1 0\nv 0 0 1\nvn 0 0 1\nf 1/1/1 3/3/1 2/2/1\nf -4 -3 -1\nf 1 2 3 4\ns off\n";
        let mesh = read_obj(text).unwrap();
        assert_eq!(mesh.vertices().len(), 4);
        assert_eq!(mesh.faces(), &[[0, 2, 1], [0, 1, 3]]);
        assert!(matches!(read_obj("v 0 0 0\nf 1 2 9\n"), Err(Error::MeshParse { .. }) | Err(Error::InvalidMesh(_))));
        assert!(matches!(read_obj("v 0 0 0\nf 0 1 1\n"), Err(Error::MeshParse { line: 2, .. })));
    }
}
