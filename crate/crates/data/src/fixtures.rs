//! Built-in analytic surfaces, all roughly unit-sized and centered at the
//! origin, with outward (or +z) face winding.

use std::collections::HashMap;

use cadpu_core::Point3;

use crate::{Error, Result, TriMesh};

pub const FIXTURE_NAMES: &[&str] = &["sphere", "cylinder", "saddle", "cube", "plane"];

/// Mesh for one of [`FIXTURE_NAMES`] at default resolution.
pub fn fixture(name: &str) -> Result<TriMesh> {
    match name {
        "sphere" => Ok(sphere(3)),
        "cylinder" => Ok(cylinder(48, 8)),
        "saddle" => Ok(saddle(24)),
        "cube" => Ok(cube(4)),
        "plane" => Ok(plane(8)),
        other => Err(Error::UnknownFixture(other.to_string())),
    }
}

// (n+1)^2 vertices of f over [-1, 1]^2; normals follow df/ds x df/dt.
fn grid(n: usize, f: impl Fn(f64, f64) -> Point3, verts: &mut Vec<Point3>, faces: &mut Vec<[usize; 3]>) {
    let base = verts.len();
    let n = n.max(1);
    for j in 0..=n {
        for i in 0..=n {
            let s = -1.0 + 2.0 * i as f64 / n as f64;
            let t = -1.0 + 2.0 * j as f64 / n as f64;
            verts.push(f(s, t));
        }
    }
    let id = |i: usize, j: usize| base + j * (n + 1) + i;
    for j in 0..n {
        for i in 0..n {
            let (a, b, c, d) = (id(i, j), id(i + 1, j), id(i + 1, j + 1), id(i, j + 1));
            faces.push([a, b, c]);
            faces.push([a, c, d]);
        }
    }
}

fn build(verts: Vec<Point3>, faces: Vec<[usize; 3]>) -> TriMesh {
    TriMesh::new(verts, faces).expect("generated meshes are valid")
}

/// The square `[-1, 1]^2` in the plane `z = 0`.
pub fn plane(n: usize) -> TriMesh {
    let (mut v, mut f) = (Vec::new(), Vec::new());
    grid(n, |s, t| Point3::new(s, t, 0.0), &mut v, &mut f);
    build(v, f)
}

/// `z = (x^2 - y^2) / 2` over `[-1, 1]^2`.
pub fn saddle(n: usize) -> TriMesh {
    let (mut v, mut f) = (Vec::new(), Vec::new());
    grid(n, |s, t| Point3::new(s, t, 0.5 * (s * s - t * t)), &mut v, &mut f);
    build(v, f)
}

/// Surface of `[-1, 1]^3`, each face split into an `n` x `n` grid.
pub fn cube(n: usize) -> TriMesh {
    let x = Point3::new(1.0, 0.0, 0.0);
    let y = Point3::new(0.0, 1.0, 0.0);
    let z = Point3::new(0.0, 0.0, 1.0);
    let sides = [(x, y, z), (-x, z, y), (y, z, x), (-y, x, z), (z, x, y), (-z, y, x)];
    let (mut v, mut f) = (Vec::new(), Vec::new());
    for (n0, u, w) in sides {
        grid(n, |s, t| n0 + u * s + w * t, &mut v, &mut f);
    }
    build(v, f)
}

/// Closed cylinder of radius 0.5 and height 1.5 along z.
pub fn cylinder(segments: usize, rings: usize) -> TriMesh {
    let segments = segments.max(3);
    let rings = rings.max(1);
    let (r, h) = (0.5, 0.75);
    let mut v = Vec::new();
    let mut f = Vec::new();
    for k in 0..=rings {
        let zk = -h + 2.0 * h * k as f64 / rings as f64;
        for i in 0..segments {
            let a = std::f64::consts::TAU * i as f64 / segments as f64;
            v.push(Point3::new(r * a.cos(), r * a.sin(), zk));
        }
    }
    let id = |i: usize, k: usize| k * segments + i % segments;
    for k in 0..rings {
        for i in 0..segments {
            let (a, b, c, d) = (id(i, k), id(i + 1, k), id(i + 1, k + 1), id(i, k + 1));
            f.push([a, b, c]);
            f.push([a, c, d]);
        }
    }
    let bottom = v.len();
    v.push(Point3::new(0.0, 0.0, -h));
    let top = v.len();
    v.push(Point3::new(0.0, 0.0, h));
    for i in 0..segments {
        f.push([bottom, id(i + 1, 0), id(i, 0)]);
        f.push([top, id(i, rings), id(i + 1, rings)]);
    }
    build(v, f)
}

/// Unit icosphere after `subdivisions` rounds of midpoint splitting.
pub fn sphere(subdivisions: usize) -> TriMesh {
    let t = (1.0 + 5f64.sqrt()) / 2.0;
    let mut v: Vec<Point3> = [
        [-1.0, t, 0.0],
        [1.0, t, 0.0],
        [-1.0, -t, 0.0],
        [1.0, -t, 0.0],
        [0.0, -1.0, t],
        [0.0, 1.0, t],
        [0.0, -1.0, -t],
        [0.0, 1.0, -t],
        [t, 0.0, -1.0],
        [t, 0.0, 1.0],
        [-t, 0.0, -1.0],
        [-t, 0.0, 1.0],
    ]
    .iter()
    .map(|&a| Point3::from_array(a).normalized().unwrap())
    .collect();
    let mut f: Vec<[usize; 3]> = vec![
        [0, 11, 5],
        [0, 5, 1],
        [0, 1, 7],
        [0, 7, 10],
        [0, 10, 11],
        [1, 5, 9],
        [5, 11, 4],
        [11, 10, 2],
        [10, 7, 6],
        [7, 1, 8],
        [3, 9, 4],
        [3, 4, 2],
        [3, 2, 6],
        [3, 6, 8],
        [3, 8, 9],
        [4, 9, 5],
        [2, 4, 11],
        [6, 2, 10],
        [8, 6, 7],
        [9, 8, 1],
    ];
    for _ in 0..subdivisions {
        let mut mid: HashMap<(usize, usize), usize> = HashMap::new();
        let mut split = |a: usize, b: usize, v: &mut Vec<Point3>| {
            *mid.entry((a.min(b), a.max(b))).or_insert_with(|| {
                v.push(((v[a] + v[b]) * 0.5).normalized().unwrap());
                v.len() - 1
            })
        };
        let mut next = Vec::with_capacity(f.len() * 4);
        for [a, b, c] in f {
            let ab = split(a, b, &mut v);
            let bc = split(b, c, &mut v);
            let ca = split(c, a, &mut v);
            next.extend([[a, ab, ca], [b, bc, ab], [c, ca, bc], [ab, bc, ca]]);
        }
        f = next;
    }
    build(v, f)
}
