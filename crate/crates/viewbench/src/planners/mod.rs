//! Classical and oracle view planners behind one contract.
//!
//! Three execution modes: iterative planners emit one view per query;
//! budgeted plans and set-cover plans emit a finite ordered list once and
//! replay it. Planners only see client-observable state (candidate sphere,
//! feasibility, the accumulated observation cloud and occupancy grid) —
//! except the oracle variants, which are deliberately fed ground-truth
//! coverage.

mod tsp;

pub use tsp::{path_cost, tsp_order};

use std::collections::VecDeque;
use std::sync::Arc;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bitset::Bitset;
use crate::difficulty::{solve_set_cover, CoverageMatrix, SolveMode};
use crate::perception::{information_gain, ObservedCloud, OccupancyGrid};
use crate::viewspace::{shell_distance, view_pose, CameraIntrinsics, ViewPose, ViewSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ExecutionMode {
    Iterative,
    BudgetedPlan,
    SetCoverPlan,
}

/// How the runner reacts when a proposed view is infeasible or duplicate.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum FeasibilityPolicy {
    /// Re-query the planner with the offending view excluded.
    NextBest,
    /// End the episode (single-index action interfaces).
    Terminate,
}

/// Recovery decision for a rejected view.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum RecoveryAction {
    Requery,
    Terminate,
}

/// Maps a planner's feasibility policy to the action taken after an
/// infeasible or duplicate proposal.
pub fn adapt_feasibility(policy: FeasibilityPolicy) -> RecoveryAction {
    match policy {
        FeasibilityPolicy::NextBest => RecoveryAction::Requery,
        FeasibilityPolicy::Terminate => RecoveryAction::Terminate,
    }
}

/// Client-observable episode state handed to planners on every query.
pub struct PlannerView<'a> {
    pub candidates: &'a ViewSet,
    /// Feasible candidate indices under the episode mask, ascending.
    pub feasible: &'a [usize],
    /// Views already executed, in execution order.
    pub visited: &'a [usize],
    /// Views the runner excluded after rejections this episode.
    pub excluded: &'a [usize],
    pub cloud: &'a ObservedCloud,
    pub grid: &'a OccupancyGrid,
    pub current_pose: &'a ViewPose,
    pub intrinsics: &'a CameraIntrinsics,
    pub radius: f64,
}

impl PlannerView<'_> {
    /// Feasible candidates not yet visited or excluded, ascending.
    pub fn open_views(&self) -> Vec<usize> {
        self.feasible
            .iter()
            .copied()
            .filter(|i| !self.visited.contains(i) && !self.excluded.contains(i))
            .collect()
    }

    pub fn pose_of(&self, index: usize) -> ViewPose {
        view_pose(&self.candidates.directions[index], self.radius)
            .expect("candidate radius exceeds the unit object")
    }
}

/// A view planner driven by the runner.
pub trait Planner: Send {
    fn name(&self) -> &str;
    fn mode(&self) -> ExecutionMode;
    fn policy(&self) -> FeasibilityPolicy {
        FeasibilityPolicy::NextBest
    }
    /// Next view to execute, or None when the planner stops natively.
    fn next_view(&mut self, view: &PlannerView) -> Option<usize>;
}

/// Where plan-based planners take their per-view coverage rows from.
#[derive(Clone)]
pub enum CoverageSource {
    /// Ground-truth coverage matrix over the full candidate set.
    Oracle(Arc<CoverageMatrix>),
    /// Frontier cells of the client occupancy grid, rows traced through
    /// the current map.
    Frontier,
}

// ---------------------------------------------------------------------
// Random + TSP

/// Uniformly samples up to K feasible views and orders them for short
/// travel. Emits the plan one view at a time.
pub struct RandomTspPlanner {
    k: usize,
    seed: u64,
    plan: Option<VecDeque<usize>>,
}

impl RandomTspPlanner {
    pub fn new(k: usize, seed: u64) -> Self {
        RandomTspPlanner {
            k,
            seed,
            plan: None,
        }
    }
}

/// Samples K feasible views without replacement and TSP-orders them from
/// the start pose. Clamps (with a warning) when K exceeds the candidates.
pub fn plan_random_tsp(
    open_views: &[usize],
    k: usize,
    seed: u64,
    start: &ViewPose,
    candidates: &ViewSet,
    radius: f64,
) -> Vec<usize> {
    let mut take = k;
    if take > open_views.len() {
        eprintln!(
            "plan_random_tsp: requested {k} views but only {} feasible; clamping",
            open_views.len()
        );
        take = open_views.len();
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut pool = open_views.to_vec();
    pool.shuffle(&mut rng);
    let mut chosen: Vec<usize> = pool.into_iter().take(take).collect();
    chosen.sort_unstable();
    let poses: Vec<ViewPose> = chosen
        .iter()
        .map(|&i| view_pose(&candidates.directions[i], radius).unwrap())
        .collect();
    let order = tsp_order(&poses, start);
    order.into_iter().map(|slot| chosen[slot]).collect()
}

impl Planner for RandomTspPlanner {
    fn name(&self) -> &str {
        "random-tsp"
    }

    fn mode(&self) -> ExecutionMode {
        ExecutionMode::BudgetedPlan
    }

    fn next_view(&mut self, view: &PlannerView) -> Option<usize> {
        if self.plan.is_none() {
            let plan = plan_random_tsp(
                &view.open_views(),
                self.k,
                self.seed,
                view.current_pose,
                view.candidates,
                view.radius,
            );
            self.plan = Some(plan.into());
        }
        self.plan.as_mut().unwrap().pop_front()
    }
}

// ---------------------------------------------------------------------
// Information gain

/// Picks the unvisited feasible view maximizing
/// `gain(v) * exp(-lambda * shell_distance(current, v))`; lambda 0 is pure
/// information gain, large lambda degenerates to nearest-first.
pub fn next_view_infogain(
    grid: &OccupancyGrid,
    open_views: &[usize],
    current: &ViewPose,
    lambda: f64,
    candidates: &ViewSet,
    radius: f64,
    intr: &CameraIntrinsics,
) -> Option<usize> {
    if open_views.is_empty() {
        return None;
    }
    let scored: Vec<(usize, f64)> = open_views
        .par_iter()
        .map(|&i| {
            let pose = view_pose(&candidates.directions[i], radius).unwrap();
            let gain = information_gain(grid, &pose, intr) as f64;
            let dist = shell_distance(current, &pose).unwrap();
            (i, gain * (-lambda * dist).exp())
        })
        .collect();
    scored
        .into_iter()
        .max_by(|(ia, a), (ib, b)| a.total_cmp(b).then(ib.cmp(ia)))
        .map(|(i, _)| i)
}

/// Iterative exploration planner scoring candidates by unknown-volume
/// information gain with an optional movement penalty.
///
/// Candidate scoring uses a quarter-resolution camera model: utilities are
/// ranked, not reported, and full-resolution gain evaluation per candidate
/// per step dominates episode runtime otherwise.
pub struct InfoGainPlanner {
    lambda: f64,
    name: String,
}

impl InfoGainPlanner {
    pub fn new(lambda: f64) -> Self {
        InfoGainPlanner {
            lambda,
            name: if lambda == 0.0 {
                "infogain".to_string()
            } else {
                "infogain-mov".to_string()
            },
        }
    }
}

impl Planner for InfoGainPlanner {
    fn name(&self) -> &str {
        &self.name
    }

    fn mode(&self) -> ExecutionMode {
        ExecutionMode::Iterative
    }

    fn next_view(&mut self, view: &PlannerView) -> Option<usize> {
        let scoring_intr = CameraIntrinsics {
            width: (view.intrinsics.width / 4).max(16),
            height: (view.intrinsics.height / 4).max(16),
            ..*view.intrinsics
        };
        next_view_infogain(
            view.grid,
            &view.open_views(),
            view.current_pose,
            self.lambda,
            view.candidates,
            view.radius,
            &scoring_intr,
        )
    }
}

// ---------------------------------------------------------------------
// Oracle greedy

/// Picks the unvisited feasible view with the largest additional
/// ground-truth coverage; zero-gain picks fall back to the lowest index.
pub fn next_view_oracle(
    matrix: &CoverageMatrix,
    covered: &Bitset,
    open_views: &[usize],
) -> Option<usize> {
    open_views
        .iter()
        .copied()
        .map(|i| (i, covered.gain_from(&matrix.rows[i])))
        .max_by(|(ia, a), (ib, b)| a.cmp(b).then(ib.cmp(ia)))
        .map(|(i, _)| i)
}

/// Iterative rollout against the ground-truth coverage matrix.
pub struct OracleGreedyPlanner {
    matrix: Arc<CoverageMatrix>,
}

impl OracleGreedyPlanner {
    pub fn new(matrix: Arc<CoverageMatrix>) -> Self {
        OracleGreedyPlanner { matrix }
    }
}

impl Planner for OracleGreedyPlanner {
    fn name(&self) -> &str {
        "oracle-greedy"
    }

    fn mode(&self) -> ExecutionMode {
        ExecutionMode::Iterative
    }

    fn next_view(&mut self, view: &PlannerView) -> Option<usize> {
        let mut covered = Bitset::new(self.matrix.universe_size);
        for &v in view.visited {
            covered.union_with(&self.matrix.rows[v]);
        }
        next_view_oracle(&self.matrix, &covered, &view.open_views())
    }
}

// ---------------------------------------------------------------------
// Set-cover and max-coverage plans

/// Greedy set cover over the feasible sub-matrix, TSP-ordered from the
/// start pose. The caller maps sub-matrix row slots back via `views`.
pub fn plan_set_cover(
    rows: &[Bitset],
    views: &[usize],
    start: &ViewPose,
    candidates: &ViewSet,
    radius: f64,
) -> Vec<usize> {
    let Ok(matrix) = CoverageMatrix::from_coverage(rows) else {
        return Vec::new();
    };
    let solution = solve_set_cover(&matrix, SolveMode::Greedy, std::time::Duration::ZERO)
        .expect("union of rows covers its own universe");
    let chosen: Vec<usize> = solution.selected.iter().map(|&slot| views[slot]).collect();
    let poses: Vec<ViewPose> = chosen
        .iter()
        .map(|&i| view_pose(&candidates.directions[i], radius).unwrap())
        .collect();
    tsp_order(&poses, start)
        .into_iter()
        .map(|slot| chosen[slot])
        .collect()
}

/// Greedy max-coverage plan of up to K views; when the coverable universe
/// is exhausted early, the remaining budget is filled with the feasible
/// views farthest (by minimum angle) from those already selected. The
/// result is TSP-ordered.
pub fn plan_max_coverage(
    rows: &[Bitset],
    views: &[usize],
    k: usize,
    start: &ViewPose,
    candidates: &ViewSet,
    radius: f64,
) -> Vec<usize> {
    if views.is_empty() || k == 0 {
        return Vec::new();
    }
    let universe = rows.first().map(|r| r.len()).unwrap_or(0);
    let mut covered = Bitset::new(universe);
    let mut chosen: Vec<usize> = Vec::new();
    let mut chosen_slots: Vec<usize> = Vec::new();
    while chosen.len() < k.min(views.len()) {
        let best = (0..views.len())
            .filter(|s| !chosen_slots.contains(s))
            .map(|s| (s, covered.gain_from(&rows[s])))
            .max_by(|(sa, a), (sb, b)| a.cmp(b).then(sb.cmp(sa)));
        match best {
            Some((slot, gain)) if gain > 0 => {
                covered.union_with(&rows[slot]);
                chosen_slots.push(slot);
                chosen.push(views[slot]);
            }
            _ => break, // coverable universe exhausted
        }
    }
    // Farthest-point fill for the remaining budget.
    while chosen.len() < k.min(views.len()) {
        let best = views
            .iter()
            .enumerate()
            .filter(|(s, _)| !chosen_slots.contains(s))
            .map(|(s, &i)| {
                let dir = &candidates.directions[i];
                let min_angle = chosen
                    .iter()
                    .map(|&j| dir.angle_to(&candidates.directions[j]))
                    .fold(f64::INFINITY, f64::min);
                (s, i, min_angle)
            })
            .max_by(|(sa, _, a), (sb, _, b)| a.total_cmp(b).then(sb.cmp(sa)));
        match best {
            Some((slot, i, _)) => {
                chosen_slots.push(slot);
                chosen.push(i);
            }
            None => break,
        }
    }
    let poses: Vec<ViewPose> = chosen
        .iter()
        .map(|&i| view_pose(&candidates.directions[i], radius).unwrap())
        .collect();
    tsp_order(&poses, start)
        .into_iter()
        .map(|slot| chosen[slot])
        .collect()
}

/// Downsampled pixel stride for frontier row tracing.
const FRONTIER_STRIDE: u32 = 4;

/// Rows over the current frontier (occupied cells adjacent to unknown):
/// a frontier cell belongs to a view's row when one of the view's rays
/// reaches it as its first occupied cell.
fn frontier_rows(
    grid: &OccupancyGrid,
    views: &[usize],
    candidates: &ViewSet,
    radius: f64,
    intr: &CameraIntrinsics,
) -> Vec<Bitset> {
    let frontier = grid.frontier_cells();
    let mut id_of = std::collections::HashMap::new();
    for (i, &c) in frontier.iter().enumerate() {
        id_of.insert(c, i);
    }
    let scoring_intr = CameraIntrinsics {
        width: (intr.width / FRONTIER_STRIDE).max(16),
        height: (intr.height / FRONTIER_STRIDE).max(16),
        ..*intr
    };
    views
        .par_iter()
        .map(|&v| {
            let pose = view_pose(&candidates.directions[v], radius).unwrap();
            let mut row = Bitset::new(frontier.len());
            for_each_first_occupied(grid, &pose, &scoring_intr, |cell| {
                if let Some(&fi) = id_of.get(&cell) {
                    row.set(fi);
                }
            });
            row
        })
        .collect()
}

/// Walks every pixel ray of the pose and reports the first occupied cell
/// each ray reaches within the far range.
fn for_each_first_occupied(
    grid: &OccupancyGrid,
    pose: &ViewPose,
    intr: &CameraIntrinsics,
    mut f: impl FnMut([i32; 3]),
) {
    for row in 0..intr.height {
        for col in 0..intr.width {
            let dir = pose.pixel_ray(intr, col, row);
            if let Some(cell) = grid.first_occupied_along(&pose.position, &dir, intr.far) {
                f(cell);
            }
        }
    }
}

/// Finite plan covering what the source says is coverable, with native
/// stop at exhaustion.
pub struct ScpPlanner {
    source: CoverageSource,
    name: String,
    plan: Option<VecDeque<usize>>,
}

impl ScpPlanner {
    pub fn new(source: CoverageSource) -> Self {
        let name = match &source {
            CoverageSource::Oracle(_) => "scp-oracle",
            CoverageSource::Frontier => "scp-frontier",
        };
        ScpPlanner {
            source,
            name: name.to_string(),
            plan: None,
        }
    }
}

impl Planner for ScpPlanner {
    fn name(&self) -> &str {
        &self.name
    }

    fn mode(&self) -> ExecutionMode {
        ExecutionMode::SetCoverPlan
    }

    fn next_view(&mut self, view: &PlannerView) -> Option<usize> {
        if self.plan.is_none() {
            let open = view.open_views();
            let rows: Vec<Bitset> = match &self.source {
                CoverageSource::Oracle(m) => open.iter().map(|&i| m.rows[i].clone()).collect(),
                CoverageSource::Frontier => frontier_rows(
                    view.grid,
                    &open,
                    view.candidates,
                    view.radius,
                    view.intrinsics,
                ),
            };
            self.plan = Some(
                plan_set_cover(&rows, &open, view.current_pose, view.candidates, view.radius)
                    .into(),
            );
        }
        self.plan.as_mut().unwrap().pop_front()
    }
}

/// Budgeted greedy max-coverage plan with farthest-point fill.
pub struct McpPlanner {
    source: CoverageSource,
    k: usize,
    name: String,
    plan: Option<VecDeque<usize>>,
}

impl McpPlanner {
    pub fn new(source: CoverageSource, k: usize) -> Self {
        let name = match &source {
            CoverageSource::Oracle(_) => "mcp-oracle",
            CoverageSource::Frontier => "mcp-frontier",
        };
        McpPlanner {
            source,
            k,
            name: name.to_string(),
            plan: None,
        }
    }
}

impl Planner for McpPlanner {
    fn name(&self) -> &str {
        &self.name
    }

    fn mode(&self) -> ExecutionMode {
        ExecutionMode::BudgetedPlan
    }

    fn next_view(&mut self, view: &PlannerView) -> Option<usize> {
        if self.plan.is_none() {
            let open = view.open_views();
            let rows: Vec<Bitset> = match &self.source {
                CoverageSource::Oracle(m) => open.iter().map(|&i| m.rows[i].clone()).collect(),
                CoverageSource::Frontier => frontier_rows(
                    view.grid,
                    &open,
                    view.candidates,
                    view.radius,
                    view.intrinsics,
                ),
            };
            self.plan = Some(
                plan_max_coverage(
                    &rows,
                    &open,
                    self.k,
                    view.current_pose,
                    view.candidates,
                    view.radius,
                )
                .into(),
            );
        }
        self.plan.as_mut().unwrap().pop_front()
    }
}

// ---------------------------------------------------------------------
// Construction from declarative specs

/// Declarative planner selection for run configurations.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct PlannerSpec {
    pub name: String,
    #[serde(default)]
    pub k: Option<usize>,
    #[serde(default)]
    pub lambda: Option<f64>,
    #[serde(default)]
    pub seed: Option<u64>,
    #[serde(default)]
    pub policy: Option<FeasibilityPolicy>,
}

/// Default movement penalty for the movement-aware information-gain
/// planner.
pub const DEFAULT_LAMBDA: f64 = 0.25;

/// Builds a planner from its spec. Oracle-backed planners need the
/// ground-truth coverage matrix of the target object.
pub fn build_planner(
    spec: &PlannerSpec,
    budget_k: usize,
    oracle: Option<Arc<CoverageMatrix>>,
) -> Result<Box<dyn Planner>, String> {
    let k = spec.k.unwrap_or(budget_k);
    let planner: Box<dyn Planner> = match spec.name.as_str() {
        "random-tsp" => Box::new(RandomTspPlanner::new(k, spec.seed.unwrap_or(0))),
        "infogain" => Box::new(InfoGainPlanner::new(spec.lambda.unwrap_or(0.0))),
        "infogain-mov" => Box::new(InfoGainPlanner::new(spec.lambda.unwrap_or(DEFAULT_LAMBDA))),
        "oracle-greedy" => Box::new(OracleGreedyPlanner::new(
            oracle.ok_or("oracle-greedy needs a coverage matrix")?,
        )),
        "scp-oracle" => Box::new(ScpPlanner::new(CoverageSource::Oracle(
            oracle.ok_or("scp-oracle needs a coverage matrix")?,
        ))),
        "scp-frontier" => Box::new(ScpPlanner::new(CoverageSource::Frontier)),
        "mcp-oracle" => Box::new(McpPlanner::new(
            CoverageSource::Oracle(oracle.ok_or("mcp-oracle needs a coverage matrix")?),
            k,
        )),
        "mcp-frontier" => Box::new(McpPlanner::new(CoverageSource::Frontier, k)),
        other => return Err(format!("unknown planner {other:?}")),
    };
    Ok(match spec.policy {
        Some(policy) => Box::new(PolicyOverride { inner: planner, policy }),
        None => planner,
    })
}

/// Wraps a planner with an explicit feasibility policy (to emulate
/// single-index interfaces that terminate on a rejected prediction).
struct PolicyOverride {
    inner: Box<dyn Planner>,
    policy: FeasibilityPolicy,
}

impl Planner for PolicyOverride {
    fn name(&self) -> &str {
        self.inner.name()
    }

    fn mode(&self) -> ExecutionMode {
        self.inner.mode()
    }

    fn policy(&self) -> FeasibilityPolicy {
        self.policy
    }

    fn next_view(&mut self, view: &PlannerView) -> Option<usize> {
        self.inner.next_view(view)
    }
}
