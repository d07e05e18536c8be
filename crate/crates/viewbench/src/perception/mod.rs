//! Observation pipeline: depth rendering from hidden geometry, point-cloud
//! back-projection and fusion, per-view surface coverage, and occupancy
//! mapping with information gain.
//!
//! Rendering and coverage are pure functions of immutable geometry and can
//! run in parallel across views. `ObservedCloud` and `OccupancyGrid` are
//! single-writer per episode.

mod cloud;
mod coverage;
mod depth;
mod occupancy;

pub use cloud::{ObservedCloud, VoxelCounter};
pub use coverage::{coverage_set, coverage_union, CoverageSet};
pub use depth::{depth_to_points, render_depth, DepthImage};
pub use occupancy::{
    information_gain, update_occupancy, CellState, OccupancyGrid, OCCUPANCY_EXTENT,
};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum PerceptionError {
    #[error("depth payload truncated: expected {expected} bytes, got {got}")]
    PayloadTruncated { expected: usize, got: usize },
    #[error("depth payload malformed: {0}")]
    PayloadMalformed(String),
}
