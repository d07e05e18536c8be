//! Benchmark engine for object-centric view planning in active 3D
//! reconstruction.
//!
//! The crate covers the full loop of a view-planning benchmark:
//!
//! - [`geometry`]: mesh ingestion (OBJ/PLY), canonical normalization,
//!   surface voxelization, area-uniform sampling, BVH ray casting, and
//!   synthetic test shapes.
//! - [`viewspace`]: Tammes view-set generation on the camera sphere,
//!   look-at poses, reachability masks, and the shell-distance travel
//!   metric.
//! - [`perception`]: depth rendering against hidden geometry, point-cloud
//!   back-projection and fusion, per-view surface-voxel coverage, and
//!   occupancy-grid mapping with information gain.
//! - [`difficulty`]: saturation curves, self-occlusion ratios, set-cover
//!   planning difficulty, per-object annotation, and difficulty-aware
//!   dataset splits.
//! - [`episode`]: the online evaluation protocol — budgets, stopping
//!   rules, reachability, and per-step coverage/path metrics.
//! - [`planners`]: classical and oracle baselines behind a single planner
//!   contract (iterative, budgeted-plan, and set-cover-plan modes).
//! - [`server`]: an HTTP evaluation service that holds hidden geometry
//!   and exposes the episode protocol, plus an in-process transport with
//!   identical semantics.
//! - [`runner`]: drives a planner through an episode over either
//!   transport, maintaining the client-side reconstruction state.
//! - [`cli`]: batch commands (annotate, evaluate, split, reference,
//!   serve, report) used by the `viewbench` binary.
//!
//! See the `examples/` directory for runnable walkthroughs of each
//! capability.

pub mod bitset;
pub mod cli;
pub mod difficulty;
pub mod episode;
pub mod geometry;
pub mod perception;
pub mod planners;
pub mod runner;
pub mod server;
pub mod viewspace;
