//! Depth rendering and back-projection.
//!
//! Depths are Euclidean first-hit distances along each pixel's ray, stored
//! as f32 (matching the wire encoding, so local and remote clients observe
//! bit-identical values). No-hit pixels read +infinity.

use nalgebra::{Matrix3, Point3, Vector3};
use rayon::prelude::*;

use crate::geometry::RayAccelerator;
use crate::viewspace::{CameraIntrinsics, ViewPose};

use super::PerceptionError;

pub const NO_HIT: f32 = f32::INFINITY;

/// Rendered depth frame with the pose that produced it.
#[derive(Debug, Clone, PartialEq)]
pub struct DepthImage {
    pub width: u32,
    pub height: u32,
    /// Row-major first-hit distances; `NO_HIT` where the ray misses or the
    /// hit lies beyond the far range.
    pub depths: Vec<f32>,
    pub pose: ViewPose,
    pub far: f64,
}

impl DepthImage {
    #[inline]
    pub fn depth_at(&self, col: u32, row: u32) -> f32 {
        self.depths[(row * self.width + col) as usize]
    }

    pub fn hit_count(&self) -> usize {
        self.depths.iter().filter(|d| d.is_finite()).count()
    }

    /// Binary wire encoding: little-endian u32 width, u32 height, f32 far,
    /// pose as 12 f32 (row-major rotation then position), then row-major
    /// f32 depths with +inf as the no-hit sentinel.
    pub fn to_bytes(&self) -> Vec<u8> {
        let mut out = Vec::with_capacity(12 + 48 + self.depths.len() * 4);
        out.extend_from_slice(&self.width.to_le_bytes());
        out.extend_from_slice(&self.height.to_le_bytes());
        out.extend_from_slice(&(self.far as f32).to_le_bytes());
        for r in 0..3 {
            for c in 0..3 {
                out.extend_from_slice(&(self.pose.rotation[(r, c)] as f32).to_le_bytes());
            }
        }
        for c in 0..3 {
            out.extend_from_slice(&(self.pose.position[c] as f32).to_le_bytes());
        }
        for d in &self.depths {
            out.extend_from_slice(&d.to_le_bytes());
        }
        out
    }

    pub fn from_bytes(bytes: &[u8]) -> Result<Self, PerceptionError> {
        if bytes.len() < 60 {
            return Err(PerceptionError::PayloadTruncated {
                expected: 60,
                got: bytes.len(),
            });
        }
        let width = u32::from_le_bytes(bytes[0..4].try_into().unwrap());
        let height = u32::from_le_bytes(bytes[4..8].try_into().unwrap());
        let far = f32::from_le_bytes(bytes[8..12].try_into().unwrap()) as f64;
        if width == 0 || height == 0 || width > 1 << 14 || height > 1 << 14 {
            return Err(PerceptionError::PayloadMalformed(format!(
                "implausible image size {width}x{height}"
            )));
        }
        let mut f = [0.0f64; 12];
        for (i, v) in f.iter_mut().enumerate() {
            let o = 12 + i * 4;
            *v = f32::from_le_bytes(bytes[o..o + 4].try_into().unwrap()) as f64;
        }
        let rotation = Matrix3::new(f[0], f[1], f[2], f[3], f[4], f[5], f[6], f[7], f[8]);
        let position = Point3::new(f[9], f[10], f[11]);
        let expected = 60 + (width as usize * height as usize) * 4;
        if bytes.len() != expected {
            return Err(PerceptionError::PayloadTruncated {
                expected,
                got: bytes.len(),
            });
        }
        let depths = bytes[60..]
            .chunks_exact(4)
            .map(|c| f32::from_le_bytes(c.try_into().unwrap()))
            .collect();
        Ok(DepthImage {
            width,
            height,
            depths,
            pose: ViewPose { position, rotation },
            far,
        })
    }
}

/// Renders the first-hit depth frame for a pose.
///
/// Deterministic: rows are rendered in parallel but every pixel value is a
/// pure function of (pose, intrinsics, geometry).
pub fn render_depth(acc: &RayAccelerator, pose: &ViewPose, intr: &CameraIntrinsics) -> DepthImage {
    let width = intr.width;
    let height = intr.height;
    let mut depths = vec![NO_HIT; (width * height) as usize];
    depths
        .par_chunks_mut(width as usize)
        .enumerate()
        .for_each(|(row, out)| {
            for (col, d) in out.iter_mut().enumerate() {
                let dir = pose.pixel_ray(intr, col as u32, row as u32);
                if let Some(hit) = acc.first_hit(&pose.position, &dir) {
                    if hit.distance <= intr.far {
                        *d = hit.distance as f32;
                    }
                }
            }
        });
    DepthImage {
        width,
        height,
        depths,
        pose: *pose,
        far: intr.far,
    }
}

/// Back-projects every hit pixel to a world-space point through the inverse
/// pinhole model.
pub fn depth_to_points(img: &DepthImage, intr: &CameraIntrinsics) -> Vec<Point3<f64>> {
    let mut points = Vec::with_capacity(img.hit_count());
    for row in 0..img.height {
        for col in 0..img.width {
            let d = img.depth_at(col, row);
            if d.is_finite() {
                let dir: Vector3<f64> = img.pose.pixel_ray(intr, col, row);
                points.push(img.pose.position + dir * d as f64);
            }
        }
    }
    points
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{linear_first_hit, make_synthetic, RayAccelerator, SyntheticSpec};
    use crate::viewspace::{view_pose, ViewDirection};
    use nalgebra::Vector3;

    fn sphere_setup() -> (crate::geometry::TriangleMesh, RayAccelerator, ViewPose, CameraIntrinsics) {
        let mesh = make_synthetic(&SyntheticSpec::Sphere { level: 4 }).unwrap();
        let acc = RayAccelerator::build(&mesh);
        let pose = view_pose(&ViewDirection::new(Vector3::new(0.0, 0.0, 1.0)), 2.5).unwrap();
        let intr = CameraIntrinsics::default_depth();
        (mesh, acc, pose, intr)
    }

    #[test]
    fn empty_scene_renders_all_no_hit() {
        // A tiny far-away triangle outside every pixel frustum.
        let verts = vec![
            Point3::new(100.0, 0.0, 0.0),
            Point3::new(101.0, 0.0, 0.0),
            Point3::new(100.0, 1.0, 0.0),
        ];
        let mesh = crate::geometry::TriangleMesh::new(verts, vec![[0, 1, 2]]).unwrap();
        let acc = RayAccelerator::build(&mesh);
        let pose = view_pose(&ViewDirection::new(Vector3::new(0.0, 0.0, 1.0)), 2.5).unwrap();
        let intr = CameraIntrinsics::default_depth();
        let img = render_depth(&acc, &pose, &intr);
        assert_eq!(img.hit_count(), 0);
        assert!(depth_to_points(&img, &intr).is_empty());
    }

    #[test]
    fn sphere_center_pixel_depth() {
        let (_, acc, pose, intr) = sphere_setup();
        let img = render_depth(&acc, &pose, &intr);
        let d = img.depth_at(intr.width / 2, intr.height / 2);
        // Camera at 2.5 looking at a unit sphere: first hit near 1.5 (half a
        // pixel off the exact axis).
        assert!((d - 1.5).abs() < 5e-3, "depth {d}");
    }

    #[test]
    fn every_pixel_matches_single_ray_query() {
        let (mesh, acc, pose, intr) = sphere_setup();
        let img = render_depth(&acc, &pose, &intr);
        for row in (0..intr.height).step_by(17) {
            for col in (0..intr.width).step_by(13) {
                let dir = pose.pixel_ray(&intr, col, row);
                let expect = linear_first_hit(&mesh, &pose.position, &dir)
                    .filter(|h| h.distance <= intr.far)
                    .map(|h| h.distance as f32)
                    .unwrap_or(NO_HIT);
                assert_eq!(img.depth_at(col, row), expect);
            }
        }
    }

    #[test]
    fn backprojected_sphere_points_near_unit_radius() {
        let (_, acc, pose, intr) = sphere_setup();
        let img = render_depth(&acc, &pose, &intr);
        let pts = depth_to_points(&img, &intr);
        assert!(!pts.is_empty());
        for p in &pts {
            let r = p.coords.norm();
            assert!((r - 1.0).abs() < 2e-3, "radius {r}");
        }
    }

    #[test]
    fn rendering_is_deterministic() {
        let (_, acc, pose, intr) = sphere_setup();
        let a = render_depth(&acc, &pose, &intr);
        let b = render_depth(&acc, &pose, &intr);
        assert_eq!(a.depths, b.depths);
    }

    #[test]
    fn wire_roundtrip_is_bit_exact() {
        let (_, acc, pose, intr) = sphere_setup();
        let img = render_depth(&acc, &pose, &intr);
        let bytes = img.to_bytes();
        assert_eq!(bytes.len(), 60 + img.depths.len() * 4);
        let back = DepthImage::from_bytes(&bytes).unwrap();
        assert_eq!(back.width, img.width);
        assert_eq!(back.depths, img.depths);
        // Pose survives at f32 precision.
        assert!((back.pose.position - img.pose.position).norm() < 1e-6);
    }

    #[test]
    fn truncated_payload_is_rejected() {
        let (_, acc, pose, intr) = sphere_setup();
        let img = render_depth(&acc, &pose, &intr);
        let bytes = img.to_bytes();
        assert!(DepthImage::from_bytes(&bytes[..100]).is_err());
        assert!(DepthImage::from_bytes(&bytes[..30]).is_err());
    }
}
