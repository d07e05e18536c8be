//! Observable-surface saturation curves and the self-occlusion ratio.

use serde::{Deserialize, Serialize};

use crate::bitset::Bitset;
use crate::geometry::{RayAccelerator, SurfaceVoxelGrid};
use crate::perception::coverage_union;
use crate::viewspace::{solve_tammes_cached, view_pose, CameraIntrinsics};

use super::DifficultyError;

/// View-set sizes evaluated when building a saturation curve.
///
/// Finer steps at the head resolve fast-saturating convex objects; the tail
/// reaches past the 128-view planning protocol so slow-saturation behavior
/// up to 512 views is observable.
pub const DEFAULT_SCHEDULE: &[usize] = &[
    2, 4, 6, 8, 12, 16, 24, 32, 48, 64, 96, 128, 192, 256, 384, 512,
];

/// Relative-gain threshold for the stable low-gain regime.
pub const DEFAULT_EPSILON: f64 = 0.01;
/// Consecutive low-gain transitions required.
pub const DEFAULT_WINDOW: usize = 2;

/// Jointly observable voxel counts per evaluated view-set size.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SaturationCurve {
    pub schedule: Vec<usize>,
    /// Raw union sizes |S_N| per schedule entry.
    pub raw: Vec<usize>,
    /// Monotone running maximum of `raw` (view sets of different sizes are
    /// not nested, so the raw curve can dip).
    pub envelope: Vec<usize>,
}

impl SaturationCurve {
    pub fn from_raw(schedule: Vec<usize>, raw: Vec<usize>) -> Self {
        let mut envelope = Vec::with_capacity(raw.len());
        let mut best = 0;
        for &v in &raw {
            best = best.max(v);
            envelope.push(best);
        }
        SaturationCurve {
            schedule,
            raw,
            envelope,
        }
    }
}

/// Computes the observable-surface curve over the schedule: for each N the
/// union of per-view coverage over an N-view Tammes set.
pub fn saturation_curve(
    acc: &RayAccelerator,
    svg: &SurfaceVoxelGrid,
    schedule: &[usize],
    tammes_seed: u64,
    intr: &CameraIntrinsics,
    radius: f64,
) -> Result<SaturationCurve, DifficultyError> {
    if !schedule.windows(2).all(|w| w[0] < w[1]) || schedule.is_empty() {
        return Err(DifficultyError::BadSchedule);
    }
    let mut raw = Vec::with_capacity(schedule.len());
    for &n in schedule {
        raw.push(observable_union(acc, svg, n, tammes_seed, intr, radius)?.count_ones());
    }
    Ok(SaturationCurve::from_raw(schedule.to_vec(), raw))
}

/// Union of coverage over the cached N-view Tammes set.
pub fn observable_union(
    acc: &RayAccelerator,
    svg: &SurfaceVoxelGrid,
    n: usize,
    tammes_seed: u64,
    intr: &CameraIntrinsics,
    radius: f64,
) -> Result<Bitset, DifficultyError> {
    let views = solve_tammes_cached(n, tammes_seed)?;
    let poses: Vec<_> = views
        .directions
        .iter()
        .map(|d| view_pose(d, radius))
        .collect::<Result<_, _>>()?;
    Ok(coverage_union(acc, svg, &poses, intr))
}

/// First index into the envelope where the relative gain stayed below
/// `epsilon` for `window` consecutive transitions, if any.
pub fn find_stabilization(envelope: &[usize], epsilon: f64, window: usize) -> Option<usize> {
    assert!(window >= 1);
    (window..envelope.len()).find(|&i| {
        (i - window + 1..=i).all(|j| {
            let prev = envelope[j - 1].max(1) as f64;
            (envelope[j] as f64 - envelope[j - 1] as f64) / prev < epsilon
        })
    })
}

/// Finds the first schedule point where the envelope's relative gain stays
/// below `epsilon` for `window` consecutive transitions.
///
/// Returns (saturation view count, envelope value there). Falls back to the
/// last schedule point when the curve never stabilizes.
pub fn detect_saturation(
    curve: &SaturationCurve,
    epsilon: f64,
    window: usize,
) -> (usize, usize) {
    assert!(
        curve.schedule.len() > window,
        "need at least window+1 schedule points"
    );
    let i = find_stabilization(&curve.envelope, epsilon, window)
        .unwrap_or(curve.schedule.len() - 1);
    (curve.schedule[i], curve.envelope[i])
}

/// Externally observable fraction of the discretized surface.
pub fn self_occlusion_ratio(
    saturated_voxels: usize,
    svg: &SurfaceVoxelGrid,
) -> Result<f64, DifficultyError> {
    if svg.is_empty() {
        return Err(DifficultyError::EmptySurface);
    }
    Ok((saturated_voxels as f64 / svg.len() as f64).clamp(0.0, 1.0))
}
