//! XYZ and ASCII PLY readers and writers.
//!
//! Floats are written in shortest round-trip form, so a write followed by a
//! read reproduces every value exactly.

use std::fmt::Write as _;
use std::fs;
use std::path::Path;

use cadpu_core::{Point3, PointCloud};

use crate::{Error, Result, TriMesh};

fn parse_f64(tok: &str, line: usize) -> Result<f64> {
    let v: f64 = tok.parse().map_err(|_| Error::Parse {
        line,
        msg: format!("not a number: {tok:?}"),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            msg: format!("non-finite value {tok:?}"),
        });
    }
    Ok(v)
}

/// Parses `x y z` or `x y z nx ny nz` lines. Blank lines are skipped; every
/// data line must have the same column count.
pub fn parse_xyz(text: &str) -> Result<PointCloud> {
    let mut points = Vec::new();
    let mut normals = Vec::new();
    let mut columns = None;
    for (i, raw) in text.lines().enumerate() {
        let line = i + 1;
        let toks: Vec<&str> = raw.split_whitespace().collect();
        if toks.is_empty() {
            continue;
        }
        if toks.len() != 3 && toks.len() != 6 {
            return Err(Error::Parse {
                line,
                msg: format!("expected 3 or 6 columns, found {}", toks.len()),
            });
        }
        match columns {
            None => columns = Some(toks.len()),
            Some(c) if c != toks.len() => {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {c} columns like the first line, found {}", toks.len()),
                })
            }
            _ => {}
        }
        let v = toks
            .iter()
            .map(|t| parse_f64(t, line))
            .collect::<Result<Vec<_>>>()?;
        points.push(Point3::new(v[0], v[1], v[2]));
        if v.len() == 6 {
            normals.push(Point3::new(v[3], v[4], v[5]));
        }
    }
    Ok(if normals.is_empty() {
        PointCloud::new(points)?
    } else {
        PointCloud::with_normals(points, normals)?
    })
}

pub fn format_xyz(cloud: &PointCloud) -> String {
    let mut out = String::with_capacity(cloud.len() * 48);
    let normals = cloud.normals();
    for (i, p) in cloud.points().iter().enumerate() {
        write!(out, "{} {} {}", p.x, p.y, p.z).unwrap();
        if let Some(n) = normals {
            write!(out, " {} {} {}", n[i].x, n[i].y, n[i].z).unwrap();
        }
        out.push('\n');
    }
    out
}

pub fn read_xyz(path: &Path) -> Result<PointCloud> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_xyz(&text)
}

pub fn write_xyz(path: &Path, cloud: &PointCloud) -> Result<()> {
    fs::write(path, format_xyz(cloud)).map_err(|e| Error::io(path, e))
}

/// Contents of a PLY file: vertex positions, optional vertex normals and
/// triangles (polygons are fan-triangulated).
#[derive(Debug, Clone, PartialEq)]
pub struct PlyData {
    pub vertices: Vec<Point3>,
    pub normals: Option<Vec<Point3>>,
    pub faces: Vec<[usize; 3]>,
}

impl PlyData {
    pub fn into_mesh(self) -> Result<TriMesh> {
        TriMesh::new(self.vertices, self.faces)
    }

    pub fn into_cloud(self) -> Result<PointCloud> {
        Ok(match self.normals {
            Some(n) => PointCloud::with_normals(self.vertices, n)?,
            None => PointCloud::new(self.vertices)?,
        })
    }
}

const SCALAR_TYPES: &[&str] = &[
    "char", "uchar", "short", "ushort", "int", "uint", "float", "double", "int8", "uint8", "int16",
    "uint16", "int32", "uint32", "float32", "float64",
];

#[derive(Debug)]
enum Property {
    Scalar(String),
    List(String),
}

#[derive(Debug)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

fn ply_err(msg: impl Into<String>) -> Error {
    Error::Ply(msg.into())
}

fn parse_header<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>) -> Result<Vec<Element>> {
    match lines.next() {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(ply_err("missing 'ply' magic line")),
    }
    let mut elements: Vec<Element> = Vec::new();
    let mut saw_format = false;
    for (line, raw) in lines.by_ref() {
        let toks: Vec<&str> = raw.split_whitespace().collect();
        match toks.as_slice() {
            [] => {}
            ["end_header"] => {
                if !saw_format {
                    return Err(ply_err("missing format line"));
                }
                return Ok(elements);
            }
            ["format", fmt, ..] => {
                if fmt.starts_with("binary") {
                    return Err(ply_err("binary PLY unsupported"));
                }
                if *fmt != "ascii" {
                    return Err(ply_err(format!("unknown format {fmt:?}")));
                }
                saw_format = true;
            }
            ["comment", ..] | ["obj_info", ..] => {}
            ["element", name, count] => {
                let count = count.parse().map_err(|_| Error::Parse {
                    line,
                    msg: format!("bad element count {count:?}"),
                })?;
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            ["property", "list", count_ty, item_ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| ply_err("property before any element"))?;
                if !SCALAR_TYPES.contains(count_ty) || !SCALAR_TYPES.contains(item_ty) {
                    return Err(ply_err(format!(
                        "unsupported property type 'list {count_ty} {item_ty}'"
                    )));
                }
                el.props.push(Property::List(name.to_string()));
            }
            ["property", ty, name] => {
                let el = elements
                    .last_mut()
                    .ok_or_else(|| ply_err("property before any element"))?;
                if !SCALAR_TYPES.contains(ty) {
                    return Err(ply_err(format!("unsupported property type {ty:?}")));
                }
                el.props.push(Property::Scalar(name.to_string()));
            }
            _ => {
                return Err(Error::Parse {
                    line,
                    msg: format!("unrecognized header line {raw:?}"),
                })
            }
        }
    }
    Err(ply_err("header not terminated by end_header"))
}

pub fn parse_ply(text: &str) -> Result<PlyData> {
    let mut lines = text.lines().enumerate().map(|(i, l)| (i + 1, l));
    let elements = parse_header(&mut lines)?;
    let mut body = lines.filter(|(_, l)| !l.trim().is_empty());
    let mut vertices = Vec::new();
    let mut normals: Option<Vec<Point3>> = None;
    let mut faces = Vec::new();
    for el in &elements {
        let scalar_pos = |name: &str| {
            el.props
                .iter()
                .position(|p| matches!(p, Property::Scalar(n) if n == name))
        };
        let xyz = ["x", "y", "z"].map(scalar_pos);
        let nxyz = ["nx", "ny", "nz"].map(scalar_pos);
        let has_normals = nxyz.iter().all(Option::is_some);
        if el.name == "vertex" {
            if xyz.iter().any(Option::is_none) {
                return Err(ply_err("vertex element lacks x/y/z properties"));
            }
            if has_normals {
                normals = Some(Vec::with_capacity(el.count));
            }
        }
        let list_pos = el.props.iter().position(
            |p| matches!(p, Property::List(n) if n == "vertex_indices" || n == "vertex_index"),
        );
        for _ in 0..el.count {
            let (line, raw) = body
                .next()
                .ok_or_else(|| ply_err(format!("file ends inside element {:?}", el.name)))?;
            let toks: Vec<&str> = raw.split_whitespace().collect();
            // Walk properties, collecting scalars and the face list.
            let mut at = 0;
            let mut scalars = Vec::with_capacity(el.props.len());
            let mut list: Vec<usize> = Vec::new();
            for (pi, prop) in el.props.iter().enumerate() {
                let tok = toks.get(at).ok_or_else(|| Error::Parse {
                    line,
                    msg: "too few values".into(),
                })?;
                match prop {
                    Property::Scalar(_) => {
                        scalars.push(parse_f64(tok, line)?);
                        at += 1;
                    }
                    Property::List(_) => {
                        let n: usize = tok.parse().map_err(|_| Error::Parse {
                            line,
                            msg: format!("bad list length {tok:?}"),
                        })?;
                        let items = toks.get(at + 1..at + 1 + n).ok_or_else(|| Error::Parse {
                            line,
                            msg: "list shorter than its length".into(),
                        })?;
                        if Some(pi) == list_pos {
                            list = items
                                .iter()
                                .map(|t| {
                                    t.parse().map_err(|_| Error::Parse {
                                        line,
                                        msg: format!("bad vertex index {t:?}"),
                                    })
                                })
                                .collect::<Result<_>>()?;
                        }
                        scalars.push(f64::NAN);
                        at += 1 + n;
                    }
                }
            }
            if at != toks.len() {
                return Err(Error::Parse {
                    line,
                    msg: format!("expected {at} values, found {}", toks.len()),
                });
            }
            if el.name == "vertex" {
                let [x, y, z] = xyz.map(|p| scalars[p.unwrap()]);
                vertices.push(Point3::new(x, y, z));
                if let Some(ns) = normals.as_mut() {
                    let [a, b, c] = nxyz.map(|p| scalars[p.unwrap()]);
                    ns.push(Point3::new(a, b, c));
                }
            } else if el.name == "face" && list_pos.is_some() {
                if list.len() < 3 {
                    return Err(Error::Parse {
                        line,
                        msg: format!("face with {} vertices", list.len()),
                    });
                }
                for w in 1..list.len() - 1 {
                    faces.push([list[0], list[w], list[w + 1]]);
                }
            }
        }
    }
    if let Some(&bad) = faces.iter().flatten().find(|&&v| v >= vertices.len()) {
        return Err(ply_err(format!("face references vertex {bad} of {}", vertices.len())));
    }
    Ok(PlyData {
        vertices,
        normals,
        faces,
    })
}

pub fn format_ply(data: &PlyData) -> String {
    let mut out = String::new();
    out.push_str("ply\nformat ascii 1.0\n");
    writeln!(out, "element vertex {}", data.vertices.len()).unwrap();
    out.push_str("property double x\nproperty double y\nproperty double z\n");
    if data.normals.is_some() {
        out.push_str("property double nx\nproperty double ny\nproperty double nz\n");
    }
    if !data.faces.is_empty() {
        writeln!(out, "element face {}", data.faces.len()).unwrap();
        out.push_str("property list uchar int vertex_indices\n");
    }
    out.push_str("end_header\n");
    for (i, v) in data.vertices.iter().enumerate() {
        write!(out, "{} {} {}", v.x, v.y, v.z).unwrap();
        if let Some(n) = &data.normals {
            write!(out, " {} {} {}", n[i].x, n[i].y, n[i].z).unwrap();
        }
        out.push('\n');
    }
    for f in &data.faces {
        writeln!(out, "3 {} {} {}", f[0], f[1], f[2]).unwrap();
    }
    out
}

pub fn read_ply(path: &Path) -> Result<PlyData> {
    let text = fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    parse_ply(&text)
}

pub fn write_ply(path: &Path, data: &PlyData) -> Result<()> {
    fs::write(path, format_ply(data)).map_err(|e| Error::io(path, e))
}

pub fn write_ply_mesh(path: &Path, mesh: &TriMesh) -> Result<()> {
    write_ply(
        path,
        &PlyData {
            vertices: mesh.vertices().to_vec(),
            normals: None,
            faces: mesh.faces().to_vec(),
        },
    )
}

pub fn write_ply_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    write_ply(
        path,
        &PlyData {
            vertices: cloud.points().to_vec(),
            normals: cloud.normals().map(<[Point3]>::to_vec),
            faces: Vec::new(),
        },
    )
}

/// Reads a point cloud from `.xyz` or `.ply` by extension.
pub fn read_cloud(path: &Path) -> Result<PointCloud> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("ply") => read_ply(path)?.into_cloud(),
        _ => read_xyz(path),
    }
}

/// Writes `.ply` by extension, XYZ otherwise.
pub fn write_cloud(path: &Path, cloud: &PointCloud) -> Result<()> {
    match path.extension().and_then(|e| e.to_str()) {
        Some(e) if e.eq_ignore_ascii_case("ply") => write_ply_cloud(path, cloud),
        _ => write_xyz(path, cloud),
    }
}
