//! Triangle mesh storage and canonical normalization.
//!
//! The canonical frame places the center of the minimal enclosing sphere of
//! the vertices at the origin and scales that sphere to radius exactly 1,
//! so every downstream component (view sphere, shell distance, voxel grid
//! anchoring) can assume a unit object.

use nalgebra::{Point3, Vector3};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::{GeometryError, DEGENERATE_AREA};

/// Indexed triangle mesh in normalized object units.
#[derive(Debug, Clone)]
pub struct TriangleMesh {
    vertices: Vec<Point3<f64>>,
    triangles: Vec<[u32; 3]>,
}

impl TriangleMesh {
    /// Builds a mesh, dropping triangles with area below the degenerate
    /// threshold and vertices left unreferenced by the cleanup.
    pub fn new(
        vertices: Vec<Point3<f64>>,
        triangles: Vec<[u32; 3]>,
    ) -> Result<Self, GeometryError> {
        for v in &vertices {
            if !v.coords.iter().all(|c| c.is_finite()) {
                return Err(GeometryError::Parse {
                    path: String::new(),
                    reason: "non-finite vertex coordinate".into(),
                });
            }
        }
        let n = vertices.len() as u32;
        let mut kept = Vec::with_capacity(triangles.len());
        for t in triangles {
            if t.iter().any(|&i| i >= n) {
                return Err(GeometryError::Parse {
                    path: String::new(),
                    reason: format!("triangle index out of range: {t:?}"),
                });
            }
            let a = vertices[t[0] as usize];
            let b = vertices[t[1] as usize];
            let c = vertices[t[2] as usize];
            let area = 0.5 * (b - a).cross(&(c - a)).norm();
            if area >= DEGENERATE_AREA {
                kept.push(t);
            }
        }
        if kept.is_empty() {
            return Err(GeometryError::EmptyMesh);
        }
        Ok(TriangleMesh {
            vertices,
            triangles: kept,
        })
    }

    pub fn vertices(&self) -> &[Point3<f64>] {
        &self.vertices
    }

    pub fn triangles(&self) -> &[[u32; 3]] {
        &self.triangles
    }

    pub fn triangle_count(&self) -> usize {
        self.triangles.len()
    }

    /// Corner points of triangle `i`.
    #[inline]
    pub fn corners(&self, i: usize) -> [Point3<f64>; 3] {
        let t = self.triangles[i];
        [
            self.vertices[t[0] as usize],
            self.vertices[t[1] as usize],
            self.vertices[t[2] as usize],
        ]
    }

    pub fn triangle_area(&self, i: usize) -> f64 {
        let [a, b, c] = self.corners(i);
        0.5 * (b - a).cross(&(c - a)).norm()
    }

    pub fn surface_area(&self) -> f64 {
        (0..self.triangles.len()).map(|i| self.triangle_area(i)).sum()
    }

    pub fn apply(&self, t: &NormalizationTransform) -> TriangleMesh {
        TriangleMesh {
            vertices: self.vertices.iter().map(|v| t.apply(v)).collect(),
            triangles: self.triangles.clone(),
        }
    }
}

/// Translation followed by uniform scaling; maps a raw mesh into the
/// canonical unit frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NormalizationTransform {
    pub translation: Vector3<f64>,
    pub uniform_scale: f64,
}

impl NormalizationTransform {
    pub fn identity() -> Self {
        NormalizationTransform {
            translation: Vector3::zeros(),
            uniform_scale: 1.0,
        }
    }

    #[inline]
    pub fn apply(&self, p: &Point3<f64>) -> Point3<f64> {
        Point3::from((p.coords + self.translation) * self.uniform_scale)
    }

    pub fn inverse(&self) -> Self {
        NormalizationTransform {
            translation: -self.translation * self.uniform_scale,
            uniform_scale: 1.0 / self.uniform_scale,
        }
    }
}

/// Maps a mesh into the canonical frame: minimal-enclosing-sphere center at
/// the origin, radius 1.
///
/// Returns the normalized mesh together with the transform that produced it.
/// Errors if all vertices coincide.
pub fn normalize_mesh(
    mesh: &TriangleMesh,
) -> Result<(TriangleMesh, NormalizationTransform), GeometryError> {
    let (center, radius) = min_enclosing_sphere(mesh.vertices());
    if radius < 1e-12 {
        return Err(GeometryError::DegenerateMesh);
    }
    let transform = NormalizationTransform {
        translation: -center.coords,
        uniform_scale: 1.0 / radius,
    };
    Ok((mesh.apply(&transform), transform))
}

/// Exact minimal enclosing sphere (Welzl, move-to-front) of a point set.
///
/// The seeded shuffle keeps the expected-linear behavior while staying
/// deterministic run to run.
pub fn min_enclosing_sphere(points: &[Point3<f64>]) -> (Point3<f64>, f64) {
    assert!(!points.is_empty());
    let mut pts: Vec<Point3<f64>> = points.to_vec();
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed_ba11);
    pts.shuffle(&mut rng);

    let mut ball = Ball {
        center: pts[0],
        r2: 0.0,
    };
    for i in 1..pts.len() {
        if !ball.contains(&pts[i]) {
            ball = with_boundary(&pts[..i], &[pts[i]]);
        }
    }
    (ball.center, ball.r2.max(0.0).sqrt())
}

#[derive(Clone, Copy)]
struct Ball {
    center: Point3<f64>,
    r2: f64,
}

impl Ball {
    fn contains(&self, p: &Point3<f64>) -> bool {
        (p - self.center).norm_squared() <= self.r2 * (1.0 + 1e-10) + 1e-20
    }
}

fn with_boundary(pts: &[Point3<f64>], boundary: &[Point3<f64>]) -> Ball {
    let mut ball = trivial_ball(boundary);
    if boundary.len() == 4 {
        return ball;
    }
    for i in 0..pts.len() {
        if !ball.contains(&pts[i]) {
            let mut b = boundary.to_vec();
            b.push(pts[i]);
            ball = with_boundary(&pts[..i], &b);
        }
    }
    ball
}

fn trivial_ball(b: &[Point3<f64>]) -> Ball {
    match b.len() {
        0 => Ball {
            center: Point3::origin(),
            r2: 0.0,
        },
        1 => Ball {
            center: b[0],
            r2: 0.0,
        },
        2 => ball_2(&b[0], &b[1]),
        3 => ball_3(&b[0], &b[1], &b[2]),
        4 => ball_4(&b[0], &b[1], &b[2], &b[3]),
        _ => unreachable!("boundary support never exceeds 4 points"),
    }
}

fn ball_2(a: &Point3<f64>, b: &Point3<f64>) -> Ball {
    let center = Point3::from((a.coords + b.coords) * 0.5);
    Ball {
        center,
        r2: (a - center).norm_squared(),
    }
}

/// Circumsphere of three points with center in their plane; falls back to
/// the two-point ball when the triangle is (near-)degenerate.
fn ball_3(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>) -> Ball {
    let ab = b - a;
    let ac = c - a;
    let n = ab.cross(&ac);
    let d = 2.0 * n.norm_squared();
    if d < 1e-24 {
        // Collinear: the two farthest points define the ball.
        let cands = [ball_2(a, b), ball_2(a, c), ball_2(b, c)];
        return cands
            .into_iter()
            .max_by(|x, y| x.r2.total_cmp(&y.r2))
            .unwrap();
    }
    let rel = (ac.norm_squared() * n.cross(&ab) + ab.norm_squared() * ac.cross(&n)) / d;
    let center = a + rel;
    Ball {
        center,
        r2: rel.norm_squared(),
    }
}

/// Circumsphere of four points; falls back to face spheres when coplanar.
fn ball_4(a: &Point3<f64>, b: &Point3<f64>, c: &Point3<f64>, d: &Point3<f64>) -> Ball {
    let ab = b - a;
    let ac = c - a;
    let ad = d - a;
    let m = nalgebra::Matrix3::from_rows(&[ab.transpose(), ac.transpose(), ad.transpose()]);
    let rhs = Vector3::new(
        0.5 * ab.norm_squared(),
        0.5 * ac.norm_squared(),
        0.5 * ad.norm_squared(),
    );
    match m.lu().solve(&rhs) {
        Some(rel) if rel.iter().all(|x| x.is_finite()) => {
            let center = a + rel;
            Ball {
                center,
                r2: rel.norm_squared(),
            }
        }
        _ => {
            // Coplanar support: the smallest face sphere containing all four.
            let faces = [
                ball_3(a, b, c),
                ball_3(a, b, d),
                ball_3(a, c, d),
                ball_3(b, c, d),
            ];
            let all = [*a, *b, *c, *d];
            faces
                .into_iter()
                .filter(|s| all.iter().all(|p| s.contains(p)))
                .min_by(|x, y| x.r2.total_cmp(&y.r2))
                .unwrap_or_else(|| {
                    // Numerical corner: fall back to the widest pair.
                    let pairs = [
                        ball_2(a, b),
                        ball_2(a, c),
                        ball_2(a, d),
                        ball_2(b, c),
                        ball_2(b, d),
                        ball_2(c, d),
                    ];
                    pairs.into_iter().max_by(|x, y| x.r2.total_cmp(&y.r2)).unwrap()
                })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn cube_mesh(lo: f64, hi: f64) -> TriangleMesh {
        let v = [
            [lo, lo, lo],
            [hi, lo, lo],
            [hi, hi, lo],
            [lo, hi, lo],
            [lo, lo, hi],
            [hi, lo, hi],
            [hi, hi, hi],
            [lo, hi, hi],
        ];
        let quads: [[u32; 4]; 6] = [
            [0, 3, 2, 1],
            [4, 5, 6, 7],
            [0, 1, 5, 4],
            [2, 3, 7, 6],
            [1, 2, 6, 5],
            [3, 0, 4, 7],
        ];
        let mut tris = Vec::new();
        for q in quads {
            tris.push([q[0], q[1], q[2]]);
            tris.push([q[0], q[2], q[3]]);
        }
        TriangleMesh::new(v.iter().map(|c| Point3::new(c[0], c[1], c[2])).collect(), tris)
            .unwrap()
    }

    #[test]
    fn cleanup_drops_degenerate_triangles() {
        let verts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
        ];
        // Second triangle is collinear.
        let mesh = TriangleMesh::new(verts, vec![[0, 1, 2], [0, 1, 3]]).unwrap();
        assert_eq!(mesh.triangle_count(), 1);
    }

    #[test]
    fn all_degenerate_is_an_error() {
        let verts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(2.0, 0.0, 0.0),
        ];
        assert!(matches!(
            TriangleMesh::new(verts, vec![[0, 1, 2]]),
            Err(GeometryError::EmptyMesh)
        ));
    }

    #[test]
    fn unit_cube_normalizes_to_bounding_sphere_frame() {
        let mesh = cube_mesh(0.0, 2.0);
        let (norm, t) = normalize_mesh(&mesh).unwrap();
        // Center (1,1,1) to origin, scale 1/sqrt(3).
        assert!((t.translation - Vector3::new(-1.0, -1.0, -1.0)).norm() < 1e-9);
        assert!((t.uniform_scale - 1.0 / 3f64.sqrt()).abs() < 1e-9);
        let (center, radius) = min_enclosing_sphere(norm.vertices());
        assert!(center.coords.norm() < 1e-6);
        assert!((radius - 1.0).abs() < 1e-6);
    }

    #[test]
    fn normalization_is_idempotent() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        for _ in 0..10 {
            let verts: Vec<Point3<f64>> = (0..40)
                .map(|_| {
                    Point3::new(
                        rng.random_range(-3.0..5.0),
                        rng.random_range(-1.0..9.0),
                        rng.random_range(-4.0..2.0),
                    )
                })
                .collect();
            let tris: Vec<[u32; 3]> = (0..12)
                .map(|_| {
                    let mut t = [0u32; 3];
                    loop {
                        for x in &mut t {
                            *x = rng.random_range(0..40);
                        }
                        if t[0] != t[1] && t[1] != t[2] && t[0] != t[2] {
                            break;
                        }
                    }
                    t
                })
                .collect();
            let Ok(mesh) = TriangleMesh::new(verts, tris) else {
                continue;
            };
            let (once, _) = normalize_mesh(&mesh).unwrap();
            let (twice, t2) = normalize_mesh(&once).unwrap();
            assert!(t2.translation.norm() < 1e-6);
            assert!((t2.uniform_scale - 1.0).abs() < 1e-6);
            for (a, b) in once.vertices().iter().zip(twice.vertices()) {
                assert!((a - b).norm() < 1e-6);
            }
        }
    }

    #[test]
    fn degenerate_all_coincident_vertices() {
        let verts = vec![Point3::origin(); 3];
        assert!(TriangleMesh::new(verts, vec![[0, 1, 2]]).is_err());
    }

    #[test]
    fn enclosing_sphere_of_random_points_contains_all() {
        let mut rng = ChaCha8Rng::seed_from_u64(99);
        for _ in 0..20 {
            let pts: Vec<Point3<f64>> = (0..200)
                .map(|_| {
                    Point3::new(
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                        rng.random_range(-1.0..1.0),
                    )
                })
                .collect();
            let (c, r) = min_enclosing_sphere(&pts);
            let max_d = pts.iter().map(|p| (p - c).norm()).fold(0.0, f64::max);
            assert!(max_d <= r * (1.0 + 1e-9) + 1e-12);
            // Minimality: some point must sit on the boundary.
            assert!(max_d >= r * (1.0 - 1e-9) - 1e-12);
        }
    }
}
