//! Per-view surface-voxel coverage sets.
//!
//! A surface voxel is covered by a view when at least one back-projected
//! depth pixel lands inside it or within a quarter-voxel of its box, so
//! coverage derives from the same rendered observations that drive the
//! reconstruction metrics. The assignment tolerance keeps conservatively
//! voxelized cells (whose interior surface patch can be arbitrarily small)
//! reachable by discrete pixel samples; without it the observable fraction
//! of a sphere plateaus near 0.98 instead of 1.

use nalgebra::Point3;
use rayon::prelude::*;

use crate::bitset::Bitset;
use crate::geometry::{RayAccelerator, SurfaceVoxelGrid};
use crate::viewspace::{CameraIntrinsics, ViewPose};

use super::{depth_to_points, render_depth};

/// Assignment tolerance as a fraction of the voxel resolution.
pub const COVERAGE_TOLERANCE: f64 = 0.25;

/// Set of observable surface voxels for one view, as a bitset over the
/// grid's dense voxel ids.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CoverageSet {
    pub bits: Bitset,
}

impl CoverageSet {
    pub fn empty(svg: &SurfaceVoxelGrid) -> Self {
        CoverageSet {
            bits: Bitset::new(svg.len()),
        }
    }

    pub fn count(&self) -> usize {
        self.bits.count_ones()
    }
}

/// Marks every occupied cell within the assignment tolerance of `p`.
/// The point's own (half-open) cell always qualifies; neighbors only when
/// the point sits within `eps` of their closed box.
fn mark_point(svg: &SurfaceVoxelGrid, p: &Point3<f64>, eps: f64, bits: &mut Bitset) {
    let r = svg.resolution();
    let o = svg.origin();
    let mut idx = [0i32; 3];
    let mut lo_gap = [0f64; 3];
    let mut hi_gap = [0f64; 3];
    for a in 0..3 {
        let rel = (p[a] - o[a]) / r;
        let fl = rel.floor();
        idx[a] = fl as i32;
        lo_gap[a] = (rel - fl) * r;
        hi_gap[a] = (1.0 - (rel - fl)) * r;
    }
    for dx in -1..=1i32 {
        let gx = match dx {
            -1 => lo_gap[0],
            1 => hi_gap[0],
            _ => 0.0,
        };
        if gx > eps {
            continue;
        }
        for dy in -1..=1i32 {
            let gy = match dy {
                -1 => lo_gap[1],
                1 => hi_gap[1],
                _ => 0.0,
            };
            if gx * gx + gy * gy > eps * eps {
                continue;
            }
            for dz in -1..=1i32 {
                let gz = match dz {
                    -1 => lo_gap[2],
                    1 => hi_gap[2],
                    _ => 0.0,
                };
                if gx * gx + gy * gy + gz * gz > eps * eps {
                    continue;
                }
                if let Some(id) = svg.index_of([idx[0] + dx, idx[1] + dy, idx[2] + dz]) {
                    bits.set(id as usize);
                }
            }
        }
    }
}

/// Renders the view and marks every surface voxel holding a hit point.
pub fn coverage_set(
    acc: &RayAccelerator,
    svg: &SurfaceVoxelGrid,
    pose: &ViewPose,
    intr: &CameraIntrinsics,
) -> CoverageSet {
    let img = render_depth(acc, pose, intr);
    let eps = svg.resolution() * COVERAGE_TOLERANCE;
    let mut bits = Bitset::new(svg.len());
    for p in depth_to_points(&img, intr) {
        mark_point(svg, &p, eps, &mut bits);
    }
    CoverageSet { bits }
}

/// Union of per-view coverage over a list of poses, rendered in parallel.
pub fn coverage_union(
    acc: &RayAccelerator,
    svg: &SurfaceVoxelGrid,
    poses: &[ViewPose],
    intr: &CameraIntrinsics,
) -> Bitset {
    poses
        .par_iter()
        .map(|pose| coverage_set(acc, svg, pose, intr).bits)
        .reduce(
            || Bitset::new(svg.len()),
            |mut a, b| {
                a.union_with(&b);
                a
            },
        )
}
