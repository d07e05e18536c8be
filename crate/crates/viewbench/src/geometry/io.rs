//! OBJ and PLY mesh ingestion plus OBJ export.
//!
//! Supported inputs: ASCII OBJ, ASCII PLY, and binary little-endian PLY.
//! Only positions and faces are read; normals, texture coordinates, colors,
//! and materials are skipped. Non-triangle faces are fan-triangulated.

use std::fs;
use std::path::Path;

use nalgebra::Point3;

use super::{GeometryError, TriangleMesh};

/// Loads a mesh from an OBJ or PLY file, chosen by extension (falls back to
/// content sniffing for unknown extensions).
pub fn load_mesh(path: impl AsRef<Path>) -> Result<TriangleMesh, GeometryError> {
    let path = path.as_ref();
    let bytes = fs::read(path).map_err(|source| GeometryError::Io {
        path: path.display().to_string(),
        source,
    })?;
    let ext = path
        .extension()
        .and_then(|e| e.to_str())
        .map(|e| e.to_ascii_lowercase());
    let name = path.display().to_string();
    match ext.as_deref() {
        Some("obj") => parse_obj(&bytes, &name),
        Some("ply") => parse_ply(&bytes, &name),
        _ => {
            if bytes.starts_with(b"ply") {
                parse_ply(&bytes, &name)
            } else {
                parse_obj(&bytes, &name)
            }
        }
    }
}

/// Writes a mesh as ASCII OBJ (positions and triangle faces only).
pub fn save_obj(mesh: &TriangleMesh, path: impl AsRef<Path>) -> Result<(), GeometryError> {
    let path = path.as_ref();
    let mut out = String::with_capacity(mesh.vertices().len() * 32);
    for v in mesh.vertices() {
        out.push_str(&format!("v {} {} {}\n", v.x, v.y, v.z));
    }
    for t in mesh.triangles() {
        out.push_str(&format!("f {} {} {}\n", t[0] + 1, t[1] + 1, t[2] + 1));
    }
    fs::write(path, out).map_err(|source| GeometryError::Io {
        path: path.display().to_string(),
        source,
    })
}

fn parse_err(path: &str, reason: impl Into<String>) -> GeometryError {
    GeometryError::Parse {
        path: path.to_string(),
        reason: reason.into(),
    }
}

fn parse_obj(bytes: &[u8], path: &str) -> Result<TriangleMesh, GeometryError> {
    let text = String::from_utf8_lossy(bytes);
    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();
    for (lineno, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let mut it = line.split_whitespace();
        match it.next() {
            Some("v") => {
                let mut coord = [0.0f64; 3];
                for c in &mut coord {
                    *c = it
                        .next()
                        .and_then(|s| s.parse().ok())
                        .ok_or_else(|| parse_err(path, format!("bad vertex at line {}", lineno + 1)))?;
                }
                vertices.push(Point3::new(coord[0], coord[1], coord[2]));
            }
            Some("f") => {
                let mut idx: Vec<u32> = Vec::with_capacity(4);
                for tok in it {
                    let first = tok.split('/').next().unwrap_or("");
                    let i: i64 = first
                        .parse()
                        .map_err(|_| parse_err(path, format!("bad face index at line {}", lineno + 1)))?;
                    let resolved = if i > 0 {
                        i - 1
                    } else if i < 0 {
                        vertices.len() as i64 + i
                    } else {
                        return Err(parse_err(path, format!("zero face index at line {}", lineno + 1)));
                    };
                    if resolved < 0 || resolved >= vertices.len() as i64 {
                        return Err(parse_err(
                            path,
                            format!("face index out of range at line {}", lineno + 1),
                        ));
                    }
                    idx.push(resolved as u32);
                }
                if idx.len() < 3 {
                    return Err(parse_err(path, format!("face with <3 vertices at line {}", lineno + 1)));
                }
                for k in 1..idx.len() - 1 {
                    triangles.push([idx[0], idx[k], idx[k + 1]]);
                }
            }
            _ => {}
        }
    }
    TriangleMesh::new(vertices, triangles).map_err(|e| match e {
        GeometryError::Parse { reason, .. } => parse_err(path, reason),
        other => other,
    })
}

#[derive(Clone, Copy, PartialEq)]
enum PlyFormat {
    Ascii,
    BinaryLe,
}

#[derive(Clone, Copy)]
enum ScalarType {
    F32,
    F64,
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
}

impl ScalarType {
    fn parse(name: &str) -> Option<ScalarType> {
        Some(match name {
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::F32 | ScalarType::I32 | ScalarType::U32 => 4,
            ScalarType::F64 => 8,
        }
    }

    fn read_le(self, bytes: &[u8]) -> f64 {
        match self {
            ScalarType::F32 => f32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            ScalarType::F64 => f64::from_le_bytes(bytes[..8].try_into().unwrap()),
            ScalarType::I8 => bytes[0] as i8 as f64,
            ScalarType::U8 => bytes[0] as f64,
            ScalarType::I16 => i16::from_le_bytes(bytes[..2].try_into().unwrap()) as f64,
            ScalarType::U16 => u16::from_le_bytes(bytes[..2].try_into().unwrap()) as f64,
            ScalarType::I32 => i32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
            ScalarType::U32 => u32::from_le_bytes(bytes[..4].try_into().unwrap()) as f64,
        }
    }
}

enum PlyProperty {
    Scalar { ty: ScalarType, name: String },
    List { count: ScalarType, item: ScalarType, name: String },
}

struct PlyElement {
    name: String,
    count: usize,
    properties: Vec<PlyProperty>,
}

fn parse_ply(bytes: &[u8], path: &str) -> Result<TriangleMesh, GeometryError> {
    // Header is always ASCII lines terminated by "end_header".
    let header_end = find_header_end(bytes).ok_or_else(|| parse_err(path, "missing end_header"))?;
    let header = String::from_utf8_lossy(&bytes[..header_end.0]);
    let mut lines = header.lines();
    if lines.next().map(|l| l.trim()) != Some("ply") {
        return Err(parse_err(path, "not a PLY file"));
    }

    let mut format = None;
    let mut elements: Vec<PlyElement> = Vec::new();
    for raw in lines {
        let line = raw.trim();
        let mut it = line.split_whitespace();
        match it.next() {
            Some("format") => {
                format = match it.next() {
                    Some("ascii") => Some(PlyFormat::Ascii),
                    Some("binary_little_endian") => Some(PlyFormat::BinaryLe),
                    Some(other) => return Err(parse_err(path, format!("unsupported PLY format {other}"))),
                    None => return Err(parse_err(path, "truncated format line")),
                };
            }
            Some("element") => {
                let name = it.next().ok_or_else(|| parse_err(path, "element without name"))?;
                let count: usize = it
                    .next()
                    .and_then(|s| s.parse().ok())
                    .ok_or_else(|| parse_err(path, "element without count"))?;
                elements.push(PlyElement {
                    name: name.to_string(),
                    count,
                    properties: Vec::new(),
                });
            }
            Some("property") => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| parse_err(path, "property before element"))?;
                let first = it.next().ok_or_else(|| parse_err(path, "empty property"))?;
                if first == "list" {
                    let count = ScalarType::parse(it.next().unwrap_or(""))
                        .ok_or_else(|| parse_err(path, "bad list count type"))?;
                    let item = ScalarType::parse(it.next().unwrap_or(""))
                        .ok_or_else(|| parse_err(path, "bad list item type"))?;
                    let name = it.next().unwrap_or("").to_string();
                    el.properties.push(PlyProperty::List { count, item, name });
                } else {
                    let ty = ScalarType::parse(first)
                        .ok_or_else(|| parse_err(path, format!("bad property type {first}")))?;
                    let name = it.next().unwrap_or("").to_string();
                    el.properties.push(PlyProperty::Scalar { ty, name });
                }
            }
            Some("comment") | Some("obj_info") | Some("end_header") | None => {}
            Some(_) => {}
        }
    }
    let format = format.ok_or_else(|| parse_err(path, "missing format line"))?;
    let body = &bytes[header_end.1..];

    let mut vertices: Vec<Point3<f64>> = Vec::new();
    let mut triangles: Vec<[u32; 3]> = Vec::new();

    match format {
        PlyFormat::Ascii => {
            let text = String::from_utf8_lossy(body);
            let mut tokens = text.split_whitespace();
            let mut next_f64 = |what: &str| -> Result<f64, GeometryError> {
                tokens
                    .next()
                    .and_then(|s| s.parse::<f64>().ok())
                    .ok_or_else(|| parse_err(path, format!("truncated {what}")))
            };
            for el in &elements {
                for _ in 0..el.count {
                    let mut pos = [f64::NAN; 3];
                    let mut face: Vec<u32> = Vec::new();
                    for prop in &el.properties {
                        match prop {
                            PlyProperty::Scalar { name, .. } => {
                                let v = next_f64(&el.name)?;
                                match name.as_str() {
                                    "x" => pos[0] = v,
                                    "y" => pos[1] = v,
                                    "z" => pos[2] = v,
                                    _ => {}
                                }
                            }
                            PlyProperty::List { name, .. } => {
                                let n = next_f64("list count")? as usize;
                                let is_face = el.name == "face"
                                    && (name == "vertex_indices" || name == "vertex_index");
                                for _ in 0..n {
                                    let v = next_f64("list item")?;
                                    if is_face {
                                        face.push(v as u32);
                                    }
                                }
                            }
                        }
                    }
                    if el.name == "vertex" {
                        vertices.push(Point3::new(pos[0], pos[1], pos[2]));
                    } else if el.name == "face" && face.len() >= 3 {
                        for k in 1..face.len() - 1 {
                            triangles.push([face[0], face[k], face[k + 1]]);
                        }
                    }
                }
            }
        }
        PlyFormat::BinaryLe => {
            let mut off = 0usize;
            let mut take = |n: usize| -> Result<&[u8], GeometryError> {
                if off + n > body.len() {
                    return Err(parse_err(path, "truncated binary body"));
                }
                let s = &body[off..off + n];
                off += n;
                Ok(s)
            };
            for el in &elements {
                for _ in 0..el.count {
                    let mut pos = [f64::NAN; 3];
                    let mut face: Vec<u32> = Vec::new();
                    for prop in &el.properties {
                        match prop {
                            PlyProperty::Scalar { ty, name } => {
                                let v = ty.read_le(take(ty.size())?);
                                match name.as_str() {
                                    "x" => pos[0] = v,
                                    "y" => pos[1] = v,
                                    "z" => pos[2] = v,
                                    _ => {}
                                }
                            }
                            PlyProperty::List { count, item, name } => {
                                let n = count.read_le(take(count.size())?) as usize;
                                let is_face = el.name == "face"
                                    && (name == "vertex_indices" || name == "vertex_index");
                                for _ in 0..n {
                                    let v = item.read_le(take(item.size())?);
                                    if is_face {
                                        face.push(v as u32);
                                    }
                                }
                            }
                        }
                    }
                    if el.name == "vertex" {
                        vertices.push(Point3::new(pos[0], pos[1], pos[2]));
                    } else if el.name == "face" && face.len() >= 3 {
                        for k in 1..face.len() - 1 {
                            triangles.push([face[0], face[k], face[k + 1]]);
                        }
                    }
                }
            }
        }
    }

    TriangleMesh::new(vertices, triangles).map_err(|e| match e {
        GeometryError::Parse { reason, .. } => parse_err(path, reason),
        other => other,
    })
}

/// Returns (header byte length, body start offset).
fn find_header_end(bytes: &[u8]) -> Option<(usize, usize)> {
    let needle = b"end_header";
    let mut i = 0;
    while i + needle.len() <= bytes.len() {
        if &bytes[i..i + needle.len()] == needle {
            // Skip to past the newline that terminates the line.
            let mut j = i + needle.len();
            while j < bytes.len() && bytes[j] != b'\n' {
                j += 1;
            }
            return Some((i, j + 1));
        }
        i += 1;
    }
    None
}
