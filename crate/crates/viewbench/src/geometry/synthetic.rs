//! Synthetic test shapes in the canonical unit frame.
//!
//! Sphere, cube, and torus are watertight; the open box is a hollow shell
//! with a single square aperture in the top face (one boundary loop) and a
//! sealed inner shell offset by the wall thickness, giving it a deep
//! aperture-mediated cavity that only narrow view cones can observe.

use std::collections::HashMap;

use nalgebra::Point3;

use super::{normalize_mesh, GeometryError, TriangleMesh};

/// Shape family plus tessellation parameters.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SyntheticSpec {
    /// Icosphere; `level` subdivisions of an icosahedron (level 4 has 5120
    /// triangles, vertices at radius 1 within 1e-6).
    Sphere { level: u32 },
    /// Cube with each face gridded `level x level`.
    Cube { level: u32 },
    /// Hollow box: outer shell with a square hole of side `opening` in the
    /// top face and a sealed inner shell at distance `wall` inside it. Both
    /// parameters are in outer half-extent units (the outer box spans
    /// [-1,1]^3 before normalization).
    OpenBox { wall: f64, opening: f64 },
    /// Ring torus with the given major/minor radii; `8*level x 4*level`
    /// parametric grid.
    Torus { major: f64, minor: f64, level: u32 },
}

/// Builds the requested shape and normalizes it into the unit frame.
pub fn make_synthetic(spec: &SyntheticSpec) -> Result<TriangleMesh, GeometryError> {
    let raw = match *spec {
        SyntheticSpec::Sphere { level } => {
            if level > 6 {
                return Err(GeometryError::InvalidShape(format!(
                    "sphere level {level} too fine (max 6)"
                )));
            }
            icosphere(level)
        }
        SyntheticSpec::Cube { level } => {
            if level == 0 || level > 64 {
                return Err(GeometryError::InvalidShape(format!(
                    "cube level {level} out of range [1, 64]"
                )));
            }
            gridded_box(level)
        }
        SyntheticSpec::OpenBox { wall, opening } => {
            if !(wall > 0.0 && wall < 1.0) {
                return Err(GeometryError::InvalidShape(format!(
                    "open box wall thickness {wall} outside (0, 1)"
                )));
            }
            if !(opening > 0.0 && opening < 2.0) {
                return Err(GeometryError::InvalidShape(format!(
                    "open box opening {opening} must be positive and smaller than the box side 2"
                )));
            }
            open_box(wall, opening)
        }
        SyntheticSpec::Torus { major, minor, level } => {
            if !(minor > 0.0 && major > minor) {
                return Err(GeometryError::InvalidShape(format!(
                    "torus radii ({major}, {minor}) must satisfy 0 < minor < major"
                )));
            }
            if level == 0 || level > 32 {
                return Err(GeometryError::InvalidShape(format!(
                    "torus level {level} out of range [1, 32]"
                )));
            }
            torus(major, minor, level)
        }
    };
    let (normalized, _) = normalize_mesh(&raw)?;
    Ok(normalized)
}

/// Welds vertices by exact coordinate bit pattern while building.
struct MeshBuilder {
    vertices: Vec<Point3<f64>>,
    index: HashMap<[u64; 3], u32>,
    triangles: Vec<[u32; 3]>,
}

impl MeshBuilder {
    fn new() -> Self {
        MeshBuilder {
            vertices: Vec::new(),
            index: HashMap::new(),
            triangles: Vec::new(),
        }
    }

    fn vertex(&mut self, p: Point3<f64>) -> u32 {
        let key = [p.x.to_bits(), p.y.to_bits(), p.z.to_bits()];
        *self.index.entry(key).or_insert_with(|| {
            self.vertices.push(p);
            (self.vertices.len() - 1) as u32
        })
    }

    fn tri(&mut self, a: u32, b: u32, c: u32) {
        self.triangles.push([a, b, c]);
    }

    fn quad(&mut self, a: u32, b: u32, c: u32, d: u32) {
        self.tri(a, b, c);
        self.tri(a, c, d);
    }

    fn finish(self) -> Result<TriangleMesh, GeometryError> {
        TriangleMesh::new(self.vertices, self.triangles)
    }
}

fn icosphere(level: u32) -> TriangleMesh {
    let phi = (1.0 + 5f64.sqrt()) / 2.0;
    let raw = [
        [-1.0, phi, 0.0],
        [1.0, phi, 0.0],
        [-1.0, -phi, 0.0],
        [1.0, -phi, 0.0],
        [0.0, -1.0, phi],
        [0.0, 1.0, phi],
        [0.0, -1.0, -phi],
        [0.0, 1.0, -phi],
        [phi, 0.0, -1.0],
        [phi, 0.0, 1.0],
        [-phi, 0.0, -1.0],
        [-phi, 0.0, 1.0],
    ];
    let mut vertices: Vec<Point3<f64>> = raw
        .iter()
        .map(|v| {
            let p = Point3::new(v[0], v[1], v[2]);
            Point3::from(p.coords / p.coords.norm())
        })
        .collect();
    let mut faces: Vec<[u32; 3]> = vec![
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

    for _ in 0..level {
        let mut midpoint: HashMap<(u32, u32), u32> = HashMap::new();
        let mut next = Vec::with_capacity(faces.len() * 4);
        for f in &faces {
            let mut mid = [0u32; 3];
            for k in 0..3 {
                let (a, b) = (f[k], f[(k + 1) % 3]);
                let key = (a.min(b), a.max(b));
                mid[k] = *midpoint.entry(key).or_insert_with(|| {
                    let m = (vertices[a as usize].coords + vertices[b as usize].coords) * 0.5;
                    vertices.push(Point3::from(m / m.norm()));
                    (vertices.len() - 1) as u32
                });
            }
            next.push([f[0], mid[0], mid[2]]);
            next.push([f[1], mid[1], mid[0]]);
            next.push([f[2], mid[2], mid[1]]);
            next.push([mid[0], mid[1], mid[2]]);
        }
        faces = next;
    }
    TriangleMesh::new(vertices, faces).expect("icosphere is never degenerate")
}

/// Cube surface from -1 to 1 with `level x level` cells per face.
fn gridded_box(level: u32) -> TriangleMesh {
    let mut b = MeshBuilder::new();
    let n = level as usize;
    let coord = |i: usize| -1.0 + 2.0 * i as f64 / n as f64;
    // (axis, sign): face with normal along +-axis.
    for axis in 0..3 {
        for &sign in &[-1.0f64, 1.0] {
            let u_axis = (axis + 1) % 3;
            let v_axis = (axis + 2) % 3;
            for iu in 0..n {
                for iv in 0..n {
                    let mut corner = |du: usize, dv: usize| {
                        let mut c = [0.0f64; 3];
                        c[axis] = sign;
                        c[u_axis] = coord(iu + du);
                        c[v_axis] = coord(iv + dv);
                        b.vertex(Point3::new(c[0], c[1], c[2]))
                    };
                    let (p00, p10, p11, p01) =
                        (corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1));
                    if sign > 0.0 {
                        b.quad(p00, p10, p11, p01);
                    } else {
                        b.quad(p00, p01, p11, p10);
                    }
                }
            }
        }
    }
    b.finish().expect("gridded box is never degenerate")
}

/// Outer shell [-1,1]^3 with a square hole of side `opening` centered in the
/// z=+1 face, plus a sealed inner shell at half-extent `1 - wall`.
///
/// Every outer face is gridded on the lattice {-1, -h, h, 1} (h = half the
/// opening) so faces share edges without T-junctions; the hole is the
/// omitted center cell of the top face.
fn open_box(wall: f64, opening: f64) -> TriangleMesh {
    let h = opening / 2.0;
    let lattice = [-1.0, -h, h, 1.0];
    let mut b = MeshBuilder::new();

    for axis in 0..3 {
        for &sign in &[-1.0f64, 1.0] {
            let u_axis = (axis + 1) % 3;
            let v_axis = (axis + 2) % 3;
            let is_top = axis == 2 && sign > 0.0;
            for iu in 0..3 {
                for iv in 0..3 {
                    if is_top && iu == 1 && iv == 1 {
                        continue; // the aperture
                    }
                    let mut corner = |du: usize, dv: usize| {
                        let mut c = [0.0f64; 3];
                        c[axis] = sign;
                        c[u_axis] = lattice[iu + du];
                        c[v_axis] = lattice[iv + dv];
                        b.vertex(Point3::new(c[0], c[1], c[2]))
                    };
                    let (p00, p10, p11, p01) =
                        (corner(0, 0), corner(1, 0), corner(1, 1), corner(0, 1));
                    if sign > 0.0 {
                        b.quad(p00, p10, p11, p01);
                    } else {
                        b.quad(p00, p01, p11, p10);
                    }
                }
            }
        }
    }

    // Sealed inner shell, wound toward the cavity.
    let e = 1.0 - wall;
    let inner = [
        [-e, -e, -e],
        [e, -e, -e],
        [e, e, -e],
        [-e, e, -e],
        [-e, -e, e],
        [e, -e, e],
        [e, e, e],
        [-e, e, e],
    ];
    let ids: Vec<u32> = inner
        .iter()
        .map(|c| b.vertex(Point3::new(c[0], c[1], c[2])))
        .collect();
    let quads: [[usize; 4]; 6] = [
        [0, 1, 2, 3], // bottom, normal up into cavity? keep consistent inward winding
        [4, 7, 6, 5],
        [0, 4, 5, 1],
        [2, 6, 7, 3],
        [1, 5, 6, 2],
        [3, 7, 4, 0],
    ];
    for q in quads {
        b.quad(ids[q[0]], ids[q[1]], ids[q[2]], ids[q[3]]);
    }
    b.finish().expect("open box is never degenerate")
}

fn torus(major: f64, minor: f64, level: u32) -> TriangleMesh {
    let nu = (8 * level) as usize;
    let nv = (4 * level) as usize;
    let mut vertices = Vec::with_capacity(nu * nv);
    for iu in 0..nu {
        let u = 2.0 * std::f64::consts::PI * iu as f64 / nu as f64;
        for iv in 0..nv {
            let v = 2.0 * std::f64::consts::PI * iv as f64 / nv as f64;
            let ring = major + minor * v.cos();
            vertices.push(Point3::new(ring * u.cos(), ring * u.sin(), minor * v.sin()));
        }
    }
    let mut triangles = Vec::with_capacity(2 * nu * nv);
    let at = |iu: usize, iv: usize| (iu % nu * nv + iv % nv) as u32;
    for iu in 0..nu {
        for iv in 0..nv {
            let (a, b, c, d) = (at(iu, iv), at(iu + 1, iv), at(iu + 1, iv + 1), at(iu, iv + 1));
            triangles.push([a, b, c]);
            triangles.push([a, c, d]);
        }
    }
    TriangleMesh::new(vertices, triangles).expect("torus is never degenerate")
}

/// Undirected edge usage counts; watertight meshes use every edge twice.
pub fn edge_use_counts(mesh: &TriangleMesh) -> HashMap<(u32, u32), u32> {
    let mut counts = HashMap::new();
    for t in mesh.triangles() {
        for k in 0..3 {
            let (a, b) = (t[k], t[(k + 1) % 3]);
            let key = (a.min(b), a.max(b));
            *counts.entry(key).or_insert(0) += 1;
        }
    }
    counts
}

/// Number of closed loops formed by boundary edges (edges used once).
pub fn boundary_loop_count(mesh: &TriangleMesh) -> usize {
    let counts = edge_use_counts(mesh);
    let mut adjacency: HashMap<u32, Vec<u32>> = HashMap::new();
    for (&(a, b), &c) in &counts {
        if c == 1 {
            adjacency.entry(a).or_default().push(b);
            adjacency.entry(b).or_default().push(a);
        }
    }
    let mut visited: std::collections::HashSet<u32> = std::collections::HashSet::new();
    let mut loops = 0;
    let mut starts: Vec<u32> = adjacency.keys().copied().collect();
    starts.sort_unstable();
    for start in starts {
        if visited.contains(&start) {
            continue;
        }
        loops += 1;
        let mut stack = vec![start];
        while let Some(v) = stack.pop() {
            if !visited.insert(v) {
                continue;
            }
            for &n in &adjacency[&v] {
                if !visited.contains(&n) {
                    stack.push(n);
                }
            }
        }
    }
    loops
}
