//! Online hidden-geometry evaluation episodes: budgets, stopping semantics,
//! feasibility, and per-step metrics.
//!
//! One episode has one logical owner; concurrent episodes hold independent
//! state. The evaluator owns the ground-truth side (accumulated cloud,
//! coverage tracker, stabilization counter); planner-facing reconstruction
//! state lives client-side in the runner.

mod metrics;
mod store;

pub use metrics::{ms_should_stop, nsc, surface_coverage, CoverageTracker, TimeBin};
pub use store::{ObjectEntry, ObjectStore, GT_SAMPLES, GT_SEED, REFERENCE_VIEWS};

use std::sync::Arc;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::perception::{
    depth_to_points, render_depth, update_occupancy, DepthImage, ObservedCloud, OccupancyGrid,
    VoxelCounter,
};
use crate::viewspace::{
    apply_mask, solve_tammes_cached, view_pose, CameraIntrinsics, ReachabilityMask, ViewPose,
    ViewSet, ViewspaceError,
};

#[derive(Debug, Error)]
pub enum EpisodeError {
    #[error("view {0} is infeasible under the reachability mask")]
    InfeasibleView(usize),
    #[error("view {0} was already executed in this episode")]
    DuplicateView(usize),
    #[error("episode already terminated")]
    EpisodeDone,
    #[error("episode still running; metrics are withheld until termination")]
    StillRunning,
    #[error("view index {0} out of range for the candidate set")]
    IndexOutOfRange(usize),
    #[error("observable-surface reference is zero: object invisible under mask")]
    ZeroReference,
    #[error("ground-truth point cloud is empty")]
    EmptyGroundTruth,
    #[error("unknown object id {0:?}")]
    UnknownObject(String),
    #[error(transparent)]
    Viewspace(#[from] ViewspaceError),
    #[error(transparent)]
    Geometry(#[from] crate::geometry::GeometryError),
}

/// View budget semantics.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Budget {
    /// Up to K algorithm-selected views after the initial observation.
    Fixed(u32),
    /// Free-budget execution: native stopping, an optional benchmark-side
    /// map-stabilization rule at resolution `ms_delta` (applied to
    /// iterative planners; plan-based planners stop natively), and a hard
    /// cap on selected views.
    Automatic { cap: u32, ms_delta: Option<f64> },
}

pub const AUTOMATIC_CAP: u32 = 128;
pub const DEFAULT_MS_DELTA: f64 = 0.02;

impl Budget {
    pub fn automatic() -> Self {
        Budget::Automatic {
            cap: AUTOMATIC_CAP,
            ms_delta: Some(DEFAULT_MS_DELTA),
        }
    }
}

/// Full episode protocol: budget, reachability, candidate sphere, metric
/// threshold, camera model, and seeds.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProtocolConfig {
    pub budget: Budget,
    pub mask: ReachabilityMask,
    /// Candidate Tammes set size (the planning protocol).
    pub candidate_count: usize,
    pub candidate_seed: u64,
    /// Coverage threshold tau in normalized units.
    pub tau: f64,
    pub intrinsics: CameraIntrinsics,
    /// Camera sphere radius.
    pub radius: f64,
    pub seed: u64,
    /// Observation fusion cell size (default tau/4).
    pub dedup_resolution: f64,
}

impl ProtocolConfig {
    pub fn new(budget: Budget, mask: ReachabilityMask) -> Self {
        let tau = 0.02;
        ProtocolConfig {
            budget,
            mask,
            candidate_count: 128,
            candidate_seed: 7,
            tau,
            intrinsics: CameraIntrinsics::default_depth(),
            radius: crate::viewspace::DEFAULT_RADIUS,
            seed: 0,
            dedup_resolution: tau / 4.0,
        }
    }

    pub fn candidates(&self) -> Result<Arc<ViewSet>, EpisodeError> {
        Ok(solve_tammes_cached(self.candidate_count, self.candidate_seed)?)
    }
}

/// Pure feasibility check against the protocol mask.
pub fn check_feasible(
    candidates: &ViewSet,
    mask: &ReachabilityMask,
    view_index: usize,
) -> Result<bool, EpisodeError> {
    let dir = candidates
        .directions
        .get(view_index)
        .ok_or(EpisodeError::IndexOutOfRange(view_index))?;
    Ok(mask.admits(view_index, dir))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum TerminationReason {
    Budget,
    Cap,
    MsStop,
    NativeStop,
    NoValidView,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum EpisodeStatus {
    Running,
    Done(TerminationReason),
}

/// Metrics recorded after every executed view.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct StepRecord {
    /// 0 is the standardized initial observation.
    pub step: u32,
    pub view_index: u32,
    pub sc: f64,
    pub nsc: f64,
    pub path_increment: f64,
    pub planner_time: f64,
}

impl StepRecord {
    pub const CSV_HEADER: &'static str = "step,view_index,sc,nsc,path_increment,planner_time";

    pub fn to_csv_row(&self) -> String {
        format!(
            "{},{},{},{},{},{}",
            self.step, self.view_index, self.sc, self.nsc, self.path_increment, self.planner_time
        )
    }

    pub fn from_csv_row(row: &str) -> Option<StepRecord> {
        let mut it = row.split(',');
        Some(StepRecord {
            step: it.next()?.parse().ok()?,
            view_index: it.next()?.parse().ok()?,
            sc: it.next()?.parse().ok()?,
            nsc: it.next()?.parse().ok()?,
            path_increment: it.next()?.parse().ok()?,
            planner_time: it.next()?.parse().ok()?,
        })
    }
}

/// Final episode metrics.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub object_id: String,
    pub nsc: f64,
    pub sc: f64,
    /// Executed views including the standardized initial observation.
    pub views: u32,
    pub path_cost: f64,
    /// Total planner-reported seconds.
    pub planning_time: f64,
    pub time_bin: TimeBin,
    pub termination: TerminationReason,
}

/// Evaluator-side state of one running episode.
pub struct EpisodeState {
    pub object_id: String,
    config: ProtocolConfig,
    candidates: Arc<ViewSet>,
    feasible: Vec<usize>,
    visited: Vec<usize>,
    poses: Vec<ViewPose>,
    cloud: ObservedCloud,
    grid: OccupancyGrid,
    ms_counter: VoxelCounter,
    ms_history: Vec<usize>,
    coverage: CoverageTracker,
    sc_ref: f64,
    path_cost: f64,
    records: Vec<StepRecord>,
    planning_time: f64,
    status: EpisodeStatus,
}

/// Starts an episode: validates feasibility, computes the observable
/// reference, and executes the standardized initial observation (the
/// feasible candidate closest to the +z pole, ties to the lowest index).
///
/// Returns the state together with the initial observation.
pub fn start_episode(
    store: &ObjectStore,
    object_id: &str,
    config: &ProtocolConfig,
) -> Result<(EpisodeState, DepthImage), EpisodeError> {
    let entry = store.get(object_id)?;
    let candidates = config.candidates()?;
    let (feasible, _) = apply_mask(&candidates, &config.mask)?;

    let sc_ref = store.reference(
        object_id,
        &config.mask,
        &candidates,
        config.tau,
        &config.intrinsics,
        config.radius,
        config.candidate_seed,
        config.dedup_resolution,
    )?;
    if sc_ref <= 0.0 {
        return Err(EpisodeError::ZeroReference);
    }

    // Candidates are sorted by descending z, so the first feasible index is
    // the pole-most view with lowest-index tie-breaking.
    let initial = feasible[0];

    let mut state = EpisodeState {
        object_id: object_id.to_string(),
        config: config.clone(),
        candidates,
        feasible,
        visited: Vec::new(),
        poses: Vec::new(),
        cloud: ObservedCloud::new(config.dedup_resolution),
        grid: OccupancyGrid::default_grid(),
        ms_counter: VoxelCounter::new(match config.budget {
            Budget::Automatic {
                ms_delta: Some(d), ..
            } => d,
            _ => DEFAULT_MS_DELTA,
        }),
        ms_history: Vec::new(),
        coverage: CoverageTracker::new(Arc::clone(&entry.gt_points), config.tau),
        sc_ref,
        path_cost: 0.0,
        records: Vec::new(),
        planning_time: 0.0,
        status: EpisodeStatus::Running,
    };

    let img = state.observe(&entry, initial, 0.0, 0.0)?;
    Ok((state, img))
}

impl EpisodeState {
    pub fn status(&self) -> EpisodeStatus {
        self.status
    }

    pub fn records(&self) -> &[StepRecord] {
        &self.records
    }

    pub fn visited(&self) -> &[usize] {
        &self.visited
    }

    pub fn feasible(&self) -> &[usize] {
        &self.feasible
    }

    pub fn candidates(&self) -> &ViewSet {
        &self.candidates
    }

    pub fn config(&self) -> &ProtocolConfig {
        &self.config
    }

    pub fn sc_ref(&self) -> f64 {
        self.sc_ref
    }

    pub fn current_pose(&self) -> Option<&ViewPose> {
        self.poses.last()
    }

    pub fn is_feasible(&self, view_index: usize) -> Result<bool, EpisodeError> {
        check_feasible(&self.candidates, &self.config.mask, view_index)
    }

    /// Selected views so far, excluding the initial observation.
    fn selected(&self) -> u32 {
        (self.visited.len() as u32).saturating_sub(1)
    }

    /// Executes one algorithm-selected view: renders, fuses, updates the
    /// occupancy map and path cost, records metrics, then evaluates the
    /// termination rules.
    pub fn execute_step(
        &mut self,
        store: &ObjectStore,
        view_index: usize,
        planner_time: f64,
    ) -> Result<(StepRecord, DepthImage), EpisodeError> {
        if self.status != EpisodeStatus::Running {
            return Err(EpisodeError::EpisodeDone);
        }
        if !self.is_feasible(view_index)? {
            return Err(EpisodeError::InfeasibleView(view_index));
        }
        if self.visited.contains(&view_index) {
            return Err(EpisodeError::DuplicateView(view_index));
        }
        let entry = store.get(&self.object_id)?;

        let prev_pose = *self.poses.last().expect("episode always has the initial pose");
        let new_pose = view_pose(&self.candidates.directions[view_index], self.config.radius)?;
        let increment = crate::viewspace::shell_distance(&prev_pose, &new_pose)?;

        let img = self.observe(&entry, view_index, increment, planner_time)?;
        let record = *self.records.last().unwrap();

        // Termination: stabilization first (the cap only applies when no
        // earlier criterion triggers), then budget bounds.
        match self.config.budget {
            Budget::Fixed(k) => {
                if self.selected() >= k {
                    self.status = EpisodeStatus::Done(TerminationReason::Budget);
                }
            }
            Budget::Automatic { cap, ms_delta } => {
                if ms_delta.is_some() && ms_should_stop(&self.ms_history) {
                    self.status = EpisodeStatus::Done(TerminationReason::MsStop);
                } else if self.selected() >= cap {
                    self.status = EpisodeStatus::Done(TerminationReason::Cap);
                }
            }
        }
        Ok((record, img))
    }

    /// Renders and integrates one view, appending its step record.
    fn observe(
        &mut self,
        entry: &ObjectEntry,
        view_index: usize,
        path_increment: f64,
        planner_time: f64,
    ) -> Result<DepthImage, EpisodeError> {
        let pose = view_pose(&self.candidates.directions[view_index], self.config.radius)?;
        let img = render_depth(&entry.accel, &pose, &self.config.intrinsics);
        let points = depth_to_points(&img, &self.config.intrinsics);

        self.cloud.fuse(&points);
        self.coverage.observe(&points);
        update_occupancy(&mut self.grid, &img, &self.config.intrinsics);
        self.ms_counter.insert_all(&points);
        self.ms_history.push(self.ms_counter.count());

        self.path_cost += path_increment;
        self.planning_time += planner_time;
        let sc = self.coverage.fraction();
        let record = StepRecord {
            step: self.records.len() as u32,
            view_index: view_index as u32,
            sc,
            nsc: nsc(sc, self.sc_ref)?,
            path_increment,
            planner_time,
        };
        self.records.push(record);
        self.visited.push(view_index);
        self.poses.push(pose);
        Ok(img)
    }

    /// Marks the episode done for planner-side reasons (native plan end or
    /// no valid view left).
    pub fn finish(&mut self, reason: TerminationReason) -> Result<(), EpisodeError> {
        if self.status != EpisodeStatus::Running {
            return Err(EpisodeError::EpisodeDone);
        }
        self.status = EpisodeStatus::Done(reason);
        Ok(())
    }

    /// Aggregates the final report; only valid once the episode is done.
    pub fn finalize(&self) -> Result<MetricsReport, EpisodeError> {
        let EpisodeStatus::Done(termination) = self.status else {
            return Err(EpisodeError::StillRunning);
        };
        let last = self.records.last().expect("initial observation always recorded");
        Ok(MetricsReport {
            object_id: self.object_id.clone(),
            nsc: last.nsc,
            sc: last.sc,
            views: self.visited.len() as u32,
            path_cost: self.path_cost,
            planning_time: self.planning_time,
            time_bin: TimeBin::from_seconds(self.planning_time),
            termination,
        })
    }
}
