//! Per-object difficulty characterization and difficulty-aware splits.
//!
//! Three quantities are kept distinct: the externally observable surface
//! fraction (an object attribute), the view count at which the observable
//! envelope saturates, and the minimum number of protocol views needed to
//! cover everything the protocol can see (set cover).

mod saturation;
mod setcover;
mod split;

pub use saturation::{
    detect_saturation, find_stabilization, observable_union, saturation_curve,
    self_occlusion_ratio, SaturationCurve, DEFAULT_EPSILON, DEFAULT_SCHEDULE, DEFAULT_WINDOW,
};
pub use setcover::{
    build_coverage_matrix, coverage_rows, solve_set_cover, CoverageMatrix, SetCoverSolution,
    SolveMode,
};
pub use split::{balanced_train_sample, stratified_test_split};

use std::time::Duration;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::geometry::{RayAccelerator, SurfaceVoxelGrid, TriangleMesh};
use crate::viewspace::{solve_tammes_cached, CameraIntrinsics, ViewspaceError};

#[derive(Debug, Error)]
pub enum DifficultyError {
    #[error("saturation schedule must be non-empty and strictly increasing")]
    BadSchedule,
    #[error("surface voxel grid is empty")]
    EmptySurface,
    #[error("coverage universe is empty: object invisible under the protocol")]
    EmptyUniverse,
    #[error("set cover infeasible: rows do not cover the universe")]
    Infeasible,
    #[error("split quota {quota} invalid for pool of {pool}")]
    BadQuota { quota: usize, pool: usize },
    #[error(transparent)]
    Viewspace(#[from] ViewspaceError),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
}

/// Difficulty annotation for one object under a fixed protocol.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct DifficultyAnnotation {
    /// Surface voxel resolution the annotation was computed at.
    pub resolution: f64,
    /// Number of occupied surface voxels.
    pub surface_voxels: usize,
    /// Externally observable fraction of the surface, in [0, 1].
    pub visible_ratio: f64,
    /// First schedule size where the observable envelope stabilizes.
    pub saturation_views: usize,
    /// Envelope value (observable voxels) at saturation.
    pub saturated_voxels: usize,
    /// Minimum protocol views covering the protocol-coverable universe.
    pub planning_views: usize,
    /// Whether `planning_views` is a certified optimum or a greedy bound.
    pub planning_mode: SolveMode,
    /// True when saturation needs more views than the planning protocol.
    pub slow_saturation: bool,
}

/// Knobs for [`annotate_object`]; `Default` matches the canonical protocol
/// (r = 0.02, 128 candidate views, 30 s exact-cover budget).
#[derive(Debug, Clone)]
pub struct AnnotateOptions {
    pub resolution: f64,
    pub protocol_views: usize,
    pub tammes_seed: u64,
    pub schedule: Vec<usize>,
    pub epsilon: f64,
    pub window: usize,
    pub exact_budget: Duration,
    pub intrinsics: CameraIntrinsics,
    pub radius: f64,
}

impl Default for AnnotateOptions {
    fn default() -> Self {
        AnnotateOptions {
            resolution: 0.02,
            protocol_views: 128,
            tammes_seed: 7,
            schedule: DEFAULT_SCHEDULE.to_vec(),
            epsilon: DEFAULT_EPSILON,
            window: DEFAULT_WINDOW,
            exact_budget: Duration::from_secs(30),
            intrinsics: CameraIntrinsics::default_depth(),
            radius: crate::viewspace::DEFAULT_RADIUS,
        }
    }
}

/// Everything [`annotate_object`] derives; the coverage matrix is reusable
/// for oracle planners and the annotation is the serializable summary.
pub struct AnnotationOutput {
    pub annotation: DifficultyAnnotation,
    pub curve: SaturationCurve,
    pub matrix: CoverageMatrix,
    pub svg: SurfaceVoxelGrid,
}

/// Runs the difficulty pipeline on a normalized mesh: saturation curve,
/// stabilization detection, self-occlusion ratio, protocol coverage matrix,
/// and minimum set cover (exact within budget, greedy fallback recorded in
/// `planning_mode`).
pub fn annotate_object(
    mesh: &TriangleMesh,
    opts: &AnnotateOptions,
) -> Result<AnnotationOutput, DifficultyError> {
    if !opts.schedule.windows(2).all(|w| w[0] < w[1]) || opts.schedule.is_empty() {
        return Err(DifficultyError::BadSchedule);
    }
    let acc = RayAccelerator::build(mesh);
    let svg = crate::geometry::voxelize_surface(mesh, opts.resolution)?;
    if svg.is_empty() {
        return Err(DifficultyError::EmptySurface);
    }

    // Per-view coverage under the planning protocol; reused for the curve
    // entry at N = protocol_views and for the set-cover matrix.
    let protocol = solve_tammes_cached(opts.protocol_views, opts.tammes_seed)?;
    let protocol_rows = coverage_rows(&acc, &svg, &protocol, opts.radius, &opts.intrinsics)?;

    // Walk the schedule and stop as soon as the envelope stabilizes: later
    // points cannot change the first stable point or the values read off
    // it (the envelope is a prefix maximum). Slow-saturation objects still
    // evaluate the whole schedule.
    let mut schedule_prefix = Vec::new();
    let mut raw = Vec::new();
    let mut envelope: Vec<usize> = Vec::new();
    for &n in &opts.schedule {
        let count = if n == opts.protocol_views {
            let mut union = crate::bitset::Bitset::new(svg.len());
            for row in &protocol_rows {
                union.union_with(row);
            }
            union.count_ones()
        } else {
            observable_union(&acc, &svg, n, opts.tammes_seed, &opts.intrinsics, opts.radius)?
                .count_ones()
        };
        schedule_prefix.push(n);
        envelope.push(envelope.last().copied().unwrap_or(0).max(count));
        raw.push(count);
        if saturation::find_stabilization(&envelope, opts.epsilon, opts.window).is_some() {
            break;
        }
    }
    let curve = SaturationCurve::from_raw(schedule_prefix, raw);

    let (saturation_views, saturated_voxels) = detect_saturation(&curve, opts.epsilon, opts.window);
    let visible_ratio = self_occlusion_ratio(saturated_voxels, &svg)?;

    let matrix = CoverageMatrix::from_coverage(&protocol_rows)?;
    let exact = solve_set_cover(&matrix, SolveMode::Exact, opts.exact_budget)?;
    let planning_mode = if exact.certified_optimal {
        SolveMode::Exact
    } else {
        SolveMode::Greedy
    };

    Ok(AnnotationOutput {
        annotation: DifficultyAnnotation {
            resolution: opts.resolution,
            surface_voxels: svg.len(),
            visible_ratio,
            saturation_views,
            saturated_voxels,
            planning_views: exact.selected.len(),
            planning_mode,
            slow_saturation: saturation_views > opts.protocol_views,
        },
        curve,
        matrix,
        svg,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_synthetic, SyntheticSpec};

    fn quick_opts() -> AnnotateOptions {
        AnnotateOptions {
            resolution: 0.04,
            protocol_views: 32,
            schedule: vec![2, 4, 6, 8, 12, 16, 24, 32, 48, 64],
            exact_budget: Duration::from_secs(5),
            ..AnnotateOptions::default()
        }
    }

    #[test]
    fn sphere_annotation_is_easy_everywhere() {
        let mesh = make_synthetic(&SyntheticSpec::Sphere { level: 3 }).unwrap();
        let out = annotate_object(&mesh, &quick_opts()).unwrap();
        let a = &out.annotation;
        assert!(a.visible_ratio >= 0.99, "visible ratio {}", a.visible_ratio);
        assert!(a.saturation_views <= 16, "saturation at {}", a.saturation_views);
        assert!(a.planning_views <= 8, "planning views {}", a.planning_views);
        assert!(!a.slow_saturation);
    }

    #[test]
    fn open_box_is_harder_than_sphere() {
        let sphere = make_synthetic(&SyntheticSpec::Sphere { level: 3 }).unwrap();
        let cavity = make_synthetic(&SyntheticSpec::OpenBox {
            wall: 0.3,
            opening: 0.6,
        })
        .unwrap();
        let opts = quick_opts();
        let a = annotate_object(&sphere, &opts).unwrap().annotation;
        let b = annotate_object(&cavity, &opts).unwrap().annotation;
        assert!(
            b.saturation_views > a.saturation_views,
            "{} vs {}",
            b.saturation_views,
            a.saturation_views
        );
        assert!(
            b.planning_views > a.planning_views,
            "{} vs {}",
            b.planning_views,
            a.planning_views
        );
        assert!(b.visible_ratio < a.visible_ratio);
    }

    #[test]
    fn annotation_serializes_to_stable_json() {
        let a = DifficultyAnnotation {
            resolution: 0.02,
            surface_voxels: 1000,
            visible_ratio: 0.9,
            saturated_voxels: 900,
            saturation_views: 192,
            planning_views: 12,
            planning_mode: SolveMode::Exact,
            slow_saturation: true,
        };
        let json = serde_json::to_string(&a).unwrap();
        let back: DifficultyAnnotation = serde_json::from_str(&json).unwrap();
        assert_eq!(a, back);
        assert!(json.contains("\"slow_saturation\":true"));
    }
}
