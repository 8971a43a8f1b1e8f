//! Text formats: OFF and OBJ meshes (triangles only), per-vertex feature
//! files and label files.
//!
//! Writers print floats with Rust's shortest round-trip representation, so
//! read → write → read is bit-exact.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use super::TriangleMesh;
use crate::error::DataError;
use crate::tensor::Tensor2;

fn read(path: &Path) -> Result<String, DataError> {
    fs::read_to_string(path).map_err(|source| DataError::Io { path: path.to_path_buf(), source })
}

/// Writes through a temporary sibling file and renames it into place.
pub fn write_atomic(path: &Path, contents: &[u8]) -> Result<(), DataError> {
    let io_err = |source| DataError::Io { path: path.to_path_buf(), source };
    let tmp = path.with_extension(match path.extension() {
        Some(e) => format!("{}.tmp", e.to_string_lossy()),
        None => "tmp".to_string(),
    });
    fs::write(&tmp, contents).map_err(io_err)?;
    fs::rename(&tmp, path).map_err(io_err)
}

fn parse_err(path: &Path, line: usize, msg: impl Into<String>) -> DataError {
    DataError::Parse { path: path.to_path_buf(), line, msg: msg.into() }
}

fn parse_f64(tok: &str, path: &Path, line: usize) -> Result<f64, DataError> {
    tok.parse::<f64>().map_err(|_| parse_err(path, line, format!("invalid number `{tok}`")))
}

fn parse_usize(tok: &str, path: &Path, line: usize) -> Result<usize, DataError> {
    tok.parse::<usize>().map_err(|_| parse_err(path, line, format!("invalid index `{tok}`")))
}

/// Non-empty, comment-stripped lines with 1-based line numbers.
fn content_lines(text: &str) -> impl Iterator<Item = (usize, &str)> {
    text.lines().enumerate().filter_map(|(i, l)| {
        let l = l.split('#').next().unwrap_or("").trim();
        (!l.is_empty()).then_some((i + 1, l))
    })
}

pub fn parse_off(text: &str, path: &Path) -> Result<TriangleMesh, DataError> {
    let mut lines = content_lines(text);
    let (ln, first) = lines.next().ok_or_else(|| parse_err(path, 0, "empty file"))?;
    let counts_line = if first == "OFF" {
        lines.next().ok_or_else(|| parse_err(path, ln, "missing counts line"))?
    } else if let Some(rest) = first.strip_prefix("OFF") {
        (ln, rest.trim())
    } else {
        return Err(parse_err(path, ln, "missing OFF header"));
    };
    let (ln, counts) = counts_line;
    let counts: Vec<usize> = counts
        .split_whitespace()
        .map(|t| parse_usize(t, path, ln))
        .collect::<Result<_, _>>()?;
    if counts.len() < 2 {
        return Err(parse_err(path, ln, "expected vertex and face counts"));
    }
    let (nv, nf) = (counts[0], counts[1]);

    let mut positions = Vec::with_capacity(nv);
    for _ in 0..nv {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(path, ln, "truncated vertex list"))?;
        let v: Vec<f64> =
            l.split_whitespace().map(|t| parse_f64(t, path, ln)).collect::<Result<_, _>>()?;
        if v.len() < 3 {
            return Err(parse_err(path, ln, "vertex needs three coordinates"));
        }
        positions.push([v[0], v[1], v[2]]);
    }
    let mut faces = Vec::with_capacity(nf);
    for _ in 0..nf {
        let (ln, l) = lines.next().ok_or_else(|| parse_err(path, ln, "truncated face list"))?;
        let idx: Vec<usize> =
            l.split_whitespace().map(|t| parse_usize(t, path, ln)).collect::<Result<_, _>>()?;
        if idx.first() != Some(&3) || idx.len() < 4 {
            return Err(parse_err(path, ln, "only triangle faces are supported"));
        }
        faces.push([idx[1], idx[2], idx[3]]);
    }
    TriangleMesh::new(positions, faces).map_err(|e| parse_err(path, 0, e.to_string()))
}

pub fn parse_obj(text: &str, path: &Path) -> Result<TriangleMesh, DataError> {
    let mut positions = Vec::new();
    let mut faces = Vec::new();
    for (ln, l) in content_lines(text) {
        let mut toks = l.split_whitespace();
        match toks.next() {
            Some("v") => {
                let v: Vec<f64> = toks.map(|t| parse_f64(t, path, ln)).collect::<Result<_, _>>()?;
                if v.len() < 3 {
                    return Err(parse_err(path, ln, "vertex needs three coordinates"));
                }
                positions.push([v[0], v[1], v[2]]);
            }
            Some("f") => {
                let idx: Vec<usize> = toks
                    .map(|t| {
                        // `v`, `v/vt`, `v//vn`, `v/vt/vn`
                        let v = t.split('/').next().unwrap_or("");
                        let i = parse_usize(v, path, ln)?;
                        i.checked_sub(1).ok_or_else(|| parse_err(path, ln, "OBJ indices are 1-based"))
                    })
                    .collect::<Result<_, _>>()?;
                if idx.len() != 3 {
                    return Err(parse_err(path, ln, "only triangle faces are supported"));
                }
                faces.push([idx[0], idx[1], idx[2]]);
            }
            _ => {}
        }
    }
    TriangleMesh::new(positions, faces).map_err(|e| parse_err(path, 0, e.to_string()))
}

/// Reads an `.off` or `.obj` mesh (by extension) and checks connectivity.
pub fn read_mesh(path: &Path) -> Result<TriangleMesh, DataError> {
    let text = read(path)?;
    let mesh = match path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase) {
        Some(ext) if ext == "obj" => parse_obj(&text, path)?,
        _ => parse_off(&text, path)?,
    };
    mesh.check_connected().map_err(|e| parse_err(path, 0, e.to_string()))?;
    Ok(mesh)
}

pub fn format_off(mesh: &TriangleMesh) -> String {
    let mut s = String::from("OFF\n");
    let _ = writeln!(s, "{} {} 0", mesh.vertex_count(), mesh.face_count());
    for p in mesh.positions() {
        let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    s
}

pub fn format_obj(mesh: &TriangleMesh) -> String {
    let mut s = String::new();
    for p in mesh.positions() {
        let _ = writeln!(s, "v {} {} {}", p[0], p[1], p[2]);
    }
    for f in mesh.faces() {
        let _ = writeln!(s, "f {} {} {}", f[0] + 1, f[1] + 1, f[2] + 1);
    }
    s
}

pub fn write_mesh(path: &Path, mesh: &TriangleMesh) -> Result<(), DataError> {
    let text = match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("obj") => format_obj(mesh),
        _ => format_off(mesh),
    };
    write_atomic(path, text.as_bytes())
}

pub fn parse_features(text: &str, path: &Path) -> Result<Tensor2, DataError> {
    let mut rows: Vec<Vec<f64>> = Vec::new();
    for (ln, l) in content_lines(text) {
        let row: Vec<f64> =
            l.split_whitespace().map(|t| parse_f64(t, path, ln)).collect::<Result<_, _>>()?;
        if let Some(first) = rows.first() {
            if first.len() != row.len() {
                return Err(parse_err(
                    path,
                    ln,
                    format!("expected {} values, found {}", first.len(), row.len()),
                ));
            }
        }
        rows.push(row);
    }
    Ok(Tensor2::from_rows(&rows))
}

pub fn read_features(path: &Path) -> Result<Tensor2, DataError> {
    parse_features(&read(path)?, path)
}

pub fn format_features(features: &Tensor2) -> String {
    let mut s = String::new();
    for i in 0..features.rows() {
        let row: Vec<String> = features.row(i).iter().map(|v| v.to_string()).collect();
        s.push_str(&row.join(" "));
        s.push('\n');
    }
    s
}

pub fn write_features(path: &Path, features: &Tensor2) -> Result<(), DataError> {
    write_atomic(path, format_features(features).as_bytes())
}

pub fn parse_labels(text: &str, path: &Path) -> Result<Vec<usize>, DataError> {
    content_lines(text).map(|(ln, l)| parse_usize(l, path, ln)).collect()
}

pub fn read_labels(path: &Path) -> Result<Vec<usize>, DataError> {
    parse_labels(&read(path)?, path)
}

pub fn format_labels(labels: &[usize]) -> String {
    let mut s = String::with_capacity(labels.len() * 3);
    for l in labels {
        let _ = writeln!(s, "{l}");
    }
    s
}

pub fn write_labels(path: &Path, labels: &[usize]) -> Result<(), DataError> {
    write_atomic(path, format_labels(labels).as_bytes())
}

/// Legacy-VTK polydata with per-vertex integer labels, readable by common
/// mesh viewers.
pub fn format_vtk_labeled(mesh: &TriangleMesh, labels: &[usize]) -> String {
    let mut s = String::from("# vtk DataFile Version 3.0\nsurface parcellation\nASCII\nDATASET POLYDATA\n");
    let _ = writeln!(s, "POINTS {} double", mesh.vertex_count());
    for p in mesh.positions() {
        let _ = writeln!(s, "{} {} {}", p[0], p[1], p[2]);
    }
    let _ = writeln!(s, "POLYGONS {} {}", mesh.face_count(), mesh.face_count() * 4);
    for f in mesh.faces() {
        let _ = writeln!(s, "3 {} {} {}", f[0], f[1], f[2]);
    }
    let _ = writeln!(s, "POINT_DATA {}\nSCALARS label int 1\nLOOKUP_TABLE default", labels.len());
    for l in labels {
        let _ = writeln!(s, "{l}");
    }
    s
}
