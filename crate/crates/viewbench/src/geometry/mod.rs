//! Mesh ingestion, canonical normalization, surface discretization, point
//! sampling, and ray-cast first-hit queries.
//!
//! All types are immutable after construction and safe to share across
//! episode workers.

mod bvh;
mod io;
mod mesh;
mod sample;
mod synthetic;
mod voxel;

pub use bvh::{linear_first_hit, ray_triangle, RayAccelerator, RayHit};
pub use io::{load_mesh, save_obj};
pub use mesh::{min_enclosing_sphere, normalize_mesh, NormalizationTransform, TriangleMesh};
pub use sample::{sample_surface_points, CloudSource, SurfacePointCloud};
pub use synthetic::{boundary_loop_count, edge_use_counts, make_synthetic, SyntheticSpec};
pub use voxel::{tri_box_overlap, voxelize_surface, SurfaceVoxelGrid};

use thiserror::Error;

#[derive(Debug, Error)]
pub enum GeometryError {
    #[error("failed to read {path}: {source}")]
    Io {
        path: String,
        source: std::io::Error,
    },
    #[error("failed to parse {path}: {reason}")]
    Parse { path: String, reason: String },
    #[error("mesh has no triangles after degenerate cleanup")]
    EmptyMesh,
    #[error("degenerate mesh: all vertices coincide")]
    DegenerateMesh,
    #[error("voxel resolution must be in (0, 1], got {0}")]
    InvalidResolution(f64),
    #[error("invalid synthetic shape parameters: {0}")]
    InvalidShape(String),
}

/// Triangles with area below this are dropped during mesh cleanup.
pub const DEGENERATE_AREA: f64 = 1e-12;
