//! Area-uniform surface point sampling.

use nalgebra::Point3;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use super::TriangleMesh;

/// Provenance of a point cloud.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CloudSource {
    GroundTruthSample,
    Observation,
}

#[derive(Debug, Clone)]
pub struct SurfacePointCloud {
    pub points: Vec<Point3<f64>>,
    pub source: CloudSource,
}

/// Samples `count` points area-uniformly on the mesh surface.
///
/// Deterministic for a given seed: triangle choice uses a cumulative-area
/// table and barycentric coordinates use the square-root warp.
pub fn sample_surface_points(mesh: &TriangleMesh, count: usize, seed: u64) -> SurfacePointCloud {
    assert!(count >= 1, "count must be at least 1");
    let mut cumulative = Vec::with_capacity(mesh.triangle_count());
    let mut total = 0.0;
    for i in 0..mesh.triangle_count() {
        total += mesh.triangle_area(i);
        cumulative.push(total);
    }

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut points = Vec::with_capacity(count);
    for _ in 0..count {
        let target = rng.random_range(0.0..total);
        let ti = cumulative.partition_point(|&c| c <= target).min(mesh.triangle_count() - 1);
        let [a, b, c] = mesh.corners(ti);
        let r1: f64 = rng.random();
        let r2: f64 = rng.random();
        let s = r1.sqrt();
        let u = 1.0 - s;
        let v = r2 * s;
        points.push(Point3::from(a.coords * u + b.coords * v + c.coords * (1.0 - u - v)));
    }
    SurfacePointCloud {
        points,
        source: CloudSource::GroundTruthSample,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::TriangleMesh;

    #[test]
    fn single_triangle_points_stay_in_plane() {
        let verts = vec![
            Point3::new(0.0, 0.0, 0.3),
            Point3::new(1.0, 0.0, 0.3),
            Point3::new(0.0, 1.0, 0.3),
        ];
        let mesh = TriangleMesh::new(verts, vec![[0, 1, 2]]).unwrap();
        let cloud = sample_surface_points(&mesh, 1000, 3);
        for p in &cloud.points {
            assert!((p.z - 0.3).abs() < 1e-9);
            assert!(p.x >= -1e-12 && p.y >= -1e-12 && p.x + p.y <= 1.0 + 1e-12);
        }
    }

    #[test]
    fn per_triangle_counts_follow_area_ratio() {
        // Two triangles with 3:1 area ratio.
        let verts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(3.0, 0.0, 0.0),
            Point3::new(0.0, 2.0, 0.0),
            Point3::new(10.0, 0.0, 0.0),
            Point3::new(11.0, 0.0, 0.0),
            Point3::new(10.0, 2.0, 0.0),
        ];
        let mesh = TriangleMesh::new(verts, vec![[0, 1, 2], [3, 4, 5]]).unwrap();
        let cloud = sample_surface_points(&mesh, 100_000, 11);
        let big = cloud.points.iter().filter(|p| p.x < 5.0).count();
        let small = cloud.points.len() - big;
        // Multinomial expectation 75k / 25k, 2% slack.
        assert!((big as f64 - 75_000.0).abs() < 1500.0, "big={big}");
        assert!((small as f64 - 25_000.0).abs() < 1500.0, "small={small}");
    }

    #[test]
    fn same_seed_gives_identical_clouds() {
        let verts = vec![
            Point3::new(0.0, 0.0, 0.0),
            Point3::new(1.0, 0.0, 0.0),
            Point3::new(0.0, 1.0, 1.0),
        ];
        let mesh = TriangleMesh::new(verts, vec![[0, 1, 2]]).unwrap();
        let a = sample_surface_points(&mesh, 500, 42);
        let b = sample_surface_points(&mesh, 500, 42);
        assert_eq!(a.points, b.points);
        let c = sample_surface_points(&mesh, 500, 43);
        assert_ne!(a.points, c.points);
    }

    #[test]
    fn samples_lie_on_some_triangle() {
        use crate::geometry::{make_synthetic, SyntheticSpec};
        let mesh = make_synthetic(&SyntheticSpec::Cube { level: 2 }).unwrap();
        let cloud = sample_surface_points(&mesh, 2000, 5);
        for p in &cloud.points {
            let mut best = f64::INFINITY;
            for ti in 0..mesh.triangle_count() {
                let tri = mesh.corners(ti);
                best = best.min(point_triangle_distance(p, &tri));
            }
            assert!(best < 1e-7, "sample {p:?} off surface by {best}");
        }
    }

    fn point_triangle_distance(p: &Point3<f64>, tri: &[Point3<f64>; 3]) -> f64 {
        // Projection onto the plane clamped to the triangle via barycentrics;
        // falls back to edge/vertex distances.
        let [a, b, c] = tri;
        let ab = b - a;
        let ac = c - a;
        let ap = p - a;
        let d1 = ab.dot(&ap);
        let d2 = ac.dot(&ap);
        if d1 <= 0.0 && d2 <= 0.0 {
            return ap.norm();
        }
        let bp = p - b;
        let d3 = ab.dot(&bp);
        let d4 = ac.dot(&bp);
        if d3 >= 0.0 && d4 <= d3 {
            return bp.norm();
        }
        let vc = d1 * d4 - d3 * d2;
        if vc <= 0.0 && d1 >= 0.0 && d3 <= 0.0 {
            let v = d1 / (d1 - d3);
            return (ap - ab * v).norm();
        }
        let cp = p - c;
        let d5 = ab.dot(&cp);
        let d6 = ac.dot(&cp);
        if d6 >= 0.0 && d5 <= d6 {
            return cp.norm();
        }
        let vb = d5 * d2 - d1 * d6;
        if vb <= 0.0 && d2 >= 0.0 && d6 <= 0.0 {
            let w = d2 / (d2 - d6);
            return (ap - ac * w).norm();
        }
        let va = d3 * d6 - d5 * d4;
        if va <= 0.0 && (d4 - d3) >= 0.0 && (d5 - d6) >= 0.0 {
            let w = (d4 - d3) / ((d4 - d3) + (d5 - d6));
            return (bp - (c - b) * w).norm();
        }
        let denom = 1.0 / (va + vb + vc);
        let v = vb * denom;
        let w = vc * denom;
        (ap - ab * v - ac * w).norm()
    }
}
