//! Candidate view spheres: Tammes view sets, camera poses, reachability
//! masks, and the shell-distance travel metric.

mod tammes;

pub use tammes::{default_iterations, solve_tammes, solve_tammes_cached, solve_tammes_disk_cached};

use nalgebra::{Matrix3, Point3, Vector3};
use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error)]
pub enum ViewspaceError {
    #[error("a view set needs at least 2 directions, got {0}")]
    TooFewViews(usize),
    #[error("camera radius must exceed the unit object, got {0}")]
    RadiusInsideObject(f64),
    #[error("no feasible views under the reachability mask")]
    EmptyFeasibleSet,
    #[error("shell distance requires equal radii, got {0} and {1}")]
    RadiusMismatch(f64, f64),
    #[error("invalid camera intrinsics: {0}")]
    InvalidIntrinsics(String),
}

/// Default camera sphere radius in normalized units.
pub const DEFAULT_RADIUS: f64 = 2.5;
/// Default depth far range in normalized units.
pub const DEFAULT_FAR: f64 = 5.0;

/// Unit direction on the viewing sphere.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct ViewDirection(pub(crate) Vector3<f64>);

impl ViewDirection {
    /// Normalizes the input; panics on the zero vector.
    pub fn new(v: Vector3<f64>) -> Self {
        let n = v.norm();
        assert!(n > 1e-12, "view direction must be nonzero");
        ViewDirection(v / n)
    }

    pub fn vector(&self) -> Vector3<f64> {
        self.0
    }

    /// Angle to another direction in radians.
    pub fn angle_to(&self, other: &ViewDirection) -> f64 {
        self.0.dot(&other.0).clamp(-1.0, 1.0).acos()
    }
}

/// Ordered set of candidate view directions at a fixed camera radius.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViewSet {
    pub directions: Vec<ViewDirection>,
    pub radius: f64,
    pub label: String,
}

impl ViewSet {
    pub fn len(&self) -> usize {
        self.directions.len()
    }

    pub fn is_empty(&self) -> bool {
        self.directions.is_empty()
    }

    /// Smallest pairwise angle in radians.
    pub fn min_pairwise_angle(&self) -> f64 {
        let mut best = f64::INFINITY;
        for i in 0..self.directions.len() {
            for j in i + 1..self.directions.len() {
                best = best.min(self.directions[i].angle_to(&self.directions[j]));
            }
        }
        best
    }
}

/// Pinhole camera parameters.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CameraIntrinsics {
    pub width: u32,
    pub height: u32,
    /// Vertical field of view in degrees.
    pub vfov_deg: f64,
    /// Depth far range in normalized units; hits beyond it read as no-hit.
    pub far: f64,
}

impl CameraIntrinsics {
    pub fn new(width: u32, height: u32, vfov_deg: f64, far: f64) -> Result<Self, ViewspaceError> {
        if width < 16 || height < 16 {
            return Err(ViewspaceError::InvalidIntrinsics(format!(
                "image size {width}x{height} below 16x16"
            )));
        }
        if !(10.0..=120.0).contains(&vfov_deg) {
            return Err(ViewspaceError::InvalidIntrinsics(format!(
                "vertical fov {vfov_deg} outside [10, 120] degrees"
            )));
        }
        if !(far > 0.0) {
            return Err(ViewspaceError::InvalidIntrinsics(format!("far range {far} not positive")));
        }
        Ok(CameraIntrinsics {
            width,
            height,
            vfov_deg,
            far,
        })
    }

    /// 256x256, 45 degree vertical FOV, far range 5.
    pub fn default_depth() -> Self {
        CameraIntrinsics {
            width: 256,
            height: 256,
            vfov_deg: 45.0,
            far: DEFAULT_FAR,
        }
    }

    /// Focal length in pixels (square pixels).
    pub fn focal(&self) -> f64 {
        (self.height as f64 / 2.0) / (self.vfov_deg.to_radians() / 2.0).tan()
    }
}

/// Camera pose looking at the object center.
///
/// The rotation maps camera coordinates to world coordinates with the
/// computer-vision convention: +x right, +y down, +z forward (toward the
/// origin).
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ViewPose {
    pub position: Point3<f64>,
    pub rotation: Matrix3<f64>,
}

impl ViewPose {
    pub fn forward(&self) -> Vector3<f64> {
        self.rotation.column(2).into()
    }

    /// World-space ray direction through pixel center (col, row).
    #[inline]
    pub fn pixel_ray(&self, intr: &CameraIntrinsics, col: u32, row: u32) -> Vector3<f64> {
        let f = intr.focal();
        let cx = intr.width as f64 / 2.0;
        let cy = intr.height as f64 / 2.0;
        let x = (col as f64 + 0.5 - cx) / f;
        let y = (row as f64 + 0.5 - cy) / f;
        let cam = Vector3::new(x, y, 1.0);
        (self.rotation * cam).normalize()
    }
}

/// Builds the look-at pose for a direction at the given camera radius.
///
/// The up reference is world +z projected orthogonal to the viewing axis,
/// falling back to +-x at the poles.
pub fn view_pose(direction: &ViewDirection, radius: f64) -> Result<ViewPose, ViewspaceError> {
    if radius <= 1.0 {
        return Err(ViewspaceError::RadiusInsideObject(radius));
    }
    let position = Point3::from(direction.vector() * radius);
    let forward = -direction.vector();
    let up_ref = if forward.z.abs() > 1.0 - 1e-9 {
        Vector3::new(if forward.z > 0.0 { 1.0 } else { -1.0 }, 0.0, 0.0)
    } else {
        Vector3::new(0.0, 0.0, 1.0)
    };
    let up = (up_ref - forward * up_ref.dot(&forward)).normalize();
    let right = forward.cross(&up);
    let down = -up;
    let rotation = Matrix3::from_columns(&[right, down, forward]);
    Ok(ViewPose { position, rotation })
}

/// Feasible subset of the candidate sphere.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ReachabilityMask {
    /// Every candidate is executable.
    Whole,
    /// One quarter of the sphere: directions with z >= 0 and x >= 0,
    /// boundary inclusive.
    Quarter,
    /// Explicit list of allowed candidate indices.
    Explicit(Vec<u32>),
}

impl ReachabilityMask {
    pub fn admits(&self, index: usize, direction: &ViewDirection) -> bool {
        match self {
            ReachabilityMask::Whole => true,
            ReachabilityMask::Quarter => {
                let v = direction.vector();
                v.z >= 0.0 && v.x >= 0.0
            }
            ReachabilityMask::Explicit(allowed) => allowed.contains(&(index as u32)),
        }
    }
}

/// Filters a view set through a mask, preserving the original ordering.
///
/// Returns the feasible candidate indices and the restricted view set.
pub fn apply_mask(
    views: &ViewSet,
    mask: &ReachabilityMask,
) -> Result<(Vec<usize>, ViewSet), ViewspaceError> {
    let mut indices = Vec::new();
    let mut directions = Vec::new();
    for (i, d) in views.directions.iter().enumerate() {
        if mask.admits(i, d) {
            indices.push(i);
            directions.push(*d);
        }
    }
    if indices.is_empty() {
        return Err(ViewspaceError::EmptyFeasibleSet);
    }
    Ok((
        indices,
        ViewSet {
            directions,
            radius: views.radius,
            label: format!("{}-masked", views.label),
        },
    ))
}

/// Camera travel distance between two poses on the same sphere.
///
/// Uses the Euclidean chord when the straight segment stays more than unit
/// distance from the origin, otherwise the great-circle arc R*theta. Always
/// at least the chord length.
pub fn shell_distance(a: &ViewPose, b: &ViewPose) -> Result<f64, ViewspaceError> {
    let ra = a.position.coords.norm();
    let rb = b.position.coords.norm();
    if (ra - rb).abs() > 1e-6 {
        return Err(ViewspaceError::RadiusMismatch(ra, rb));
    }
    let chord = (a.position - b.position).norm();
    if chord == 0.0 {
        return Ok(0.0);
    }
    if segment_origin_distance(&a.position, &b.position) > 1.0 {
        Ok(chord)
    } else {
        let cos = (a.position.coords.dot(&b.position.coords) / (ra * rb)).clamp(-1.0, 1.0);
        Ok(ra * cos.acos())
    }
}

/// Distance from the origin to segment p-q.
fn segment_origin_distance(p: &Point3<f64>, q: &Point3<f64>) -> f64 {
    let d = q - p;
    let len2 = d.norm_squared();
    if len2 == 0.0 {
        return p.coords.norm();
    }
    let t = (-p.coords.dot(&d) / len2).clamp(0.0, 1.0);
    (p.coords + d * t).norm()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn dir(x: f64, y: f64, z: f64) -> ViewDirection {
        ViewDirection::new(Vector3::new(x, y, z))
    }

    #[test]
    fn pose_from_top_direction() {
        let p = view_pose(&dir(0.0, 0.0, 1.0), 2.5).unwrap();
        assert!((p.position - Point3::new(0.0, 0.0, 2.5)).norm() < 1e-12);
        assert!((p.forward() - Vector3::new(0.0, 0.0, -1.0)).norm() < 1e-9);
    }

    #[test]
    fn pose_from_x_direction_has_up_z() {
        let p = view_pose(&dir(1.0, 0.0, 0.0), 2.5).unwrap();
        assert!((p.forward() - Vector3::new(-1.0, 0.0, 0.0)).norm() < 1e-9);
        // Camera up = -down = -column 1.
        let up: Vector3<f64> = -p.rotation.column(1);
        assert!((up - Vector3::new(0.0, 0.0, 1.0)).norm() < 1e-9);
    }

    #[test]
    fn pose_rejects_radius_inside_object() {
        assert!(view_pose(&dir(1.0, 0.0, 0.0), 0.9).is_err());
    }

    #[test]
    fn look_at_invariant_on_random_directions() {
        use rand::Rng;
        use rand::SeedableRng;
        let mut rng = rand_chacha::ChaCha8Rng::seed_from_u64(4);
        for _ in 0..200 {
            let d = dir(
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0),
                rng.random_range(-1.0..1.0f64).max(-0.999),
            );
            let p = view_pose(&d, 2.5).unwrap();
            assert!((p.position.coords.norm() - 2.5).abs() < 1e-9);
            let toward_center = -p.position.coords / p.position.coords.norm();
            assert!((p.forward().dot(&toward_center) - 1.0).abs() < 1e-9);
            // Rotation orthonormal.
            let rtr = p.rotation.transpose() * p.rotation;
            assert!((rtr - Matrix3::identity()).norm() < 1e-9);
            assert!((p.rotation.determinant() - 1.0).abs() < 1e-9);
        }
    }

    #[test]
    fn quarter_mask_on_axis_directions() {
        let views = ViewSet {
            directions: vec![
                dir(1.0, 0.0, 0.0),
                dir(-1.0, 0.0, 0.0),
                dir(0.0, 1.0, 0.0),
                dir(0.0, -1.0, 0.0),
                dir(0.0, 0.0, 1.0),
                dir(0.0, 0.0, -1.0),
            ],
            radius: 2.5,
            label: "custom".into(),
        };
        let (idx, _) = apply_mask(&views, &ReachabilityMask::Quarter).unwrap();
        // Boundary-inclusive: +x, +-y (x=0, z=0), +z all satisfy z>=0 and x>=0.
        assert_eq!(idx, vec![0, 2, 3, 4]);
    }

    #[test]
    fn whole_mask_returns_all_and_is_idempotent() {
        let views = solve_tammes(16, 7, 400).unwrap();
        let (idx, restricted) = apply_mask(&views, &ReachabilityMask::Whole).unwrap();
        assert_eq!(idx.len(), 16);
        let (idx2, _) = apply_mask(&restricted, &ReachabilityMask::Whole).unwrap();
        assert_eq!(idx2.len(), 16);
    }

    #[test]
    fn explicit_mask_of_one_view() {
        let views = solve_tammes(8, 7, 400).unwrap();
        let (idx, _) = apply_mask(&views, &ReachabilityMask::Explicit(vec![3])).unwrap();
        assert_eq!(idx, vec![3]);
    }

    #[test]
    fn empty_feasible_set_is_an_error() {
        let views = solve_tammes(4, 7, 400).unwrap();
        assert!(matches!(
            apply_mask(&views, &ReachabilityMask::Explicit(vec![])),
            Err(ViewspaceError::EmptyFeasibleSet)
        ));
    }

    #[test]
    fn shell_distance_same_pose_is_zero() {
        let p = view_pose(&dir(0.3, -0.2, 0.9), 2.5).unwrap();
        assert_eq!(shell_distance(&p, &p).unwrap(), 0.0);
    }

    #[test]
    fn shell_distance_antipodal_uses_arc() {
        let a = view_pose(&dir(0.0, 0.0, 1.0), 2.5).unwrap();
        let b = view_pose(&dir(0.0, 0.0, -1.0), 2.5).unwrap();
        let d = shell_distance(&a, &b).unwrap();
        assert!((d - std::f64::consts::PI * 2.5).abs() < 1e-9);
    }

    #[test]
    fn shell_distance_small_angle_uses_chord() {
        let a = view_pose(&dir(0.0, 0.0, 1.0), 2.5).unwrap();
        let ten = 10f64.to_radians();
        let b = view_pose(&dir(ten.tan(), 0.0, 1.0), 2.5).unwrap();
        // 10 degrees apart: chord 2 R sin(5 deg), closest approach R cos(5) > 1.
        let d = shell_distance(&a, &b).unwrap();
        assert!((d - 2.0 * 2.5 * (ten / 2.0).sin()).abs() < 1e-9, "d={d}");
    }

    #[test]
    fn shell_distance_rejects_radius_mismatch() {
        let a = view_pose(&dir(0.0, 0.0, 1.0), 2.5).unwrap();
        let b = view_pose(&dir(0.0, 0.0, 1.0), 3.0).unwrap();
        assert!(shell_distance(&a, &b).is_err());
    }
}
