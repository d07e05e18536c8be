//! Batch commands behind the `viewbench` binary: difficulty annotation,
//! episode evaluation, dataset splits, reference computation, serving, and
//! report aggregation.
//!
//! Every command is resumable or idempotent: reruns with the same config
//! and seeds skip finished work and produce byte-identical artifacts
//! (wall-clock timings only appear when `measure_time` is enabled).

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};
use std::sync::Arc;
use std::time::Duration;

use anyhow::{bail, Context, Result};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::difficulty::{
    annotate_object, balanced_train_sample, build_coverage_matrix, stratified_test_split,
    AnnotateOptions, CoverageMatrix, DifficultyAnnotation, DEFAULT_SCHEDULE,
};
use crate::episode::{Budget, MetricsReport, ObjectStore, ProtocolConfig, StepRecord, TimeBin};
use crate::geometry::{load_mesh, voxelize_surface, RayAccelerator};
use crate::planners::{build_planner, PlannerSpec};
use crate::runner::run_episode;
use crate::server::{HttpServer, LocalTransport, SessionRegistry};
use crate::viewspace::{CameraIntrinsics, ReachabilityMask};

/// Declarative run configuration; unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    /// Directory of OBJ/PLY meshes; ids are file stems.
    pub object_dir: PathBuf,
    pub output_dir: PathBuf,
    /// Surface voxel resolution for difficulty annotation.
    #[serde(default = "default_resolution")]
    pub resolution: f64,
    /// Saturation schedule; None uses the built-in default.
    #[serde(default)]
    pub schedule: Option<Vec<usize>>,
    /// Exact set-cover time budget in seconds.
    #[serde(default = "default_exact_budget")]
    pub exact_budget_secs: f64,
    pub protocol: ProtocolSection,
    #[serde(default)]
    pub planners: Vec<PlannerSpec>,
    #[serde(default)]
    pub seed: u64,
    /// Worker threads for batch evaluation; 0 uses the rayon default.
    #[serde(default)]
    pub workers: usize,
    /// Report wall-clock planning times (breaks artifact determinism).
    #[serde(default)]
    pub measure_time: bool,
    /// Planning-difficulty bucket edges for balanced splits.
    #[serde(default = "default_bucket_edges")]
    pub bucket_edges: Vec<usize>,
}

fn default_resolution() -> f64 {
    0.02
}

fn default_exact_budget() -> f64 {
    30.0
}

fn default_bucket_edges() -> Vec<usize> {
    vec![4, 8, 16, 32]
}

#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(deny_unknown_fields)]
pub struct ProtocolSection {
    pub budget: Budget,
    pub mask: ReachabilityMask,
    #[serde(default = "default_candidates")]
    pub candidates: usize,
    #[serde(default = "default_candidate_seed")]
    pub candidate_seed: u64,
    #[serde(default = "default_tau")]
    pub tau: f64,
    #[serde(default = "default_radius")]
    pub radius: f64,
    #[serde(default = "CameraIntrinsics::default_depth")]
    pub intrinsics: CameraIntrinsics,
}

fn default_candidates() -> usize {
    128
}

fn default_candidate_seed() -> u64 {
    7
}

fn default_tau() -> f64 {
    0.02
}

fn default_radius() -> f64 {
    crate::viewspace::DEFAULT_RADIUS
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            object_dir: PathBuf::from("objects"),
            output_dir: PathBuf::from("out"),
            resolution: default_resolution(),
            schedule: None,
            exact_budget_secs: default_exact_budget(),
            protocol: ProtocolSection {
                budget: Budget::Fixed(30),
                mask: ReachabilityMask::Whole,
                candidates: default_candidates(),
                candidate_seed: default_candidate_seed(),
                tau: default_tau(),
                radius: default_radius(),
                intrinsics: CameraIntrinsics::default_depth(),
            },
            planners: vec![
                PlannerSpec {
                    name: "random-tsp".into(),
                    k: None,
                    lambda: None,
                    seed: Some(1),
                    policy: None,
                },
                PlannerSpec {
                    name: "oracle-greedy".into(),
                    k: None,
                    lambda: None,
                    seed: None,
                    policy: None,
                },
            ],
            seed: 0,
            workers: 0,
            measure_time: false,
            bucket_edges: default_bucket_edges(),
        }
    }
}

impl RunConfig {
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let text = fs::read_to_string(path.as_ref())
            .with_context(|| format!("reading config {}", path.as_ref().display()))?;
        let config: RunConfig = serde_json::from_str(&text).context("parsing config")?;
        Ok(config)
    }

    pub fn protocol_config(&self) -> ProtocolConfig {
        ProtocolConfig {
            budget: self.protocol.budget,
            mask: self.protocol.mask.clone(),
            candidate_count: self.protocol.candidates,
            candidate_seed: self.protocol.candidate_seed,
            tau: self.protocol.tau,
            intrinsics: self.protocol.intrinsics,
            radius: self.protocol.radius,
            seed: self.seed,
            dedup_resolution: self.protocol.tau / 4.0,
        }
    }

    fn annotate_options(&self) -> AnnotateOptions {
        AnnotateOptions {
            resolution: self.resolution,
            protocol_views: self.protocol.candidates,
            tammes_seed: self.protocol.candidate_seed,
            schedule: self
                .schedule
                .clone()
                .unwrap_or_else(|| DEFAULT_SCHEDULE.to_vec()),
            exact_budget: Duration::from_secs_f64(self.exact_budget_secs),
            intrinsics: self.protocol.intrinsics,
            radius: self.protocol.radius,
            ..AnnotateOptions::default()
        }
    }

    fn budget_k(&self) -> usize {
        match self.protocol.budget {
            Budget::Fixed(k) => k as usize,
            Budget::Automatic { cap, .. } => cap as usize,
        }
    }
}

/// Prints the fully defaulted configuration as JSON.
pub fn default_config_json() -> String {
    serde_json::to_string_pretty(&RunConfig::default()).expect("default config serializes")
}

/// Sorted (id, path) pairs of meshes in the object directory.
pub fn list_objects(dir: &Path) -> Result<Vec<(String, PathBuf)>> {
    let mut out = Vec::new();
    for entry in fs::read_dir(dir).with_context(|| format!("reading {}", dir.display()))? {
        let path = entry?.path();
        let ext = path
            .extension()
            .and_then(|e| e.to_str())
            .map(|e| e.to_ascii_lowercase());
        if matches!(ext.as_deref(), Some("obj") | Some("ply")) {
            let id = path
                .file_stem()
                .and_then(|s| s.to_str())
                .map(|s| s.to_string())
                .context("mesh file without a stem")?;
            out.push((id, path));
        }
    }
    out.sort();
    if out.is_empty() {
        bail!("no OBJ/PLY meshes in {}", dir.display());
    }
    Ok(out)
}

fn build_store(config: &RunConfig) -> Result<ObjectStore> {
    // Warm the view-set caches from disk so repeated commands skip the
    // Tammes optimization entirely.
    let cache_dir = config.output_dir.join("cache").join("viewsets");
    for n in [config.protocol.candidates, crate::episode::REFERENCE_VIEWS] {
        let _ = crate::viewspace::solve_tammes_disk_cached(
            &cache_dir,
            n,
            config.protocol.candidate_seed,
        );
    }
    let mut store = ObjectStore::new();
    for (id, path) in list_objects(&config.object_dir)? {
        let mesh = load_mesh(&path).with_context(|| format!("loading {}", path.display()))?;
        store.register(&id, &mesh)?;
    }
    Ok(store)
}

fn maybe_thread_pool(workers: usize) -> Option<rayon::ThreadPool> {
    (workers > 0).then(|| {
        rayon::ThreadPoolBuilder::new()
            .num_threads(workers)
            .build()
            .expect("worker pool")
    })
}

// ---------------------------------------------------------------------
// annotate

/// One line of the annotation JSONL artifact.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
pub struct AnnotationRecord {
    pub id: String,
    #[serde(flatten)]
    pub annotation: DifficultyAnnotation,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct AnnotationSummary {
    pub objects: usize,
    /// Histogram over planning difficulty.
    pub planning_histogram: BTreeMap<usize, usize>,
    pub slow_saturation: Vec<String>,
    pub errors: Vec<String>,
}

pub fn annotations_path(config: &RunConfig) -> PathBuf {
    config.output_dir.join("annotations.jsonl")
}

/// Reads the annotation artifact back.
pub fn read_annotations(path: &Path) -> Result<Vec<AnnotationRecord>> {
    let text = fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
    let mut out = Vec::new();
    for line in text.lines().filter(|l| !l.trim().is_empty()) {
        out.push(serde_json::from_str(line).context("parsing annotation line")?);
    }
    Ok(out)
}

/// Annotates every mesh in the object directory, appending one JSON line
/// per object. Already-annotated ids are skipped, so interrupted runs
/// resume. Unreadable meshes are reported and the run continues.
pub fn cmd_annotate(config: &RunConfig) -> Result<AnnotationSummary> {
    fs::create_dir_all(&config.output_dir)?;
    let path = annotations_path(config);
    let mut existing: Vec<AnnotationRecord> = if path.exists() {
        read_annotations(&path)?
    } else {
        Vec::new()
    };
    let done: std::collections::BTreeSet<String> =
        existing.iter().map(|r| r.id.clone()).collect();

    let opts = config.annotate_options();
    let pool = maybe_thread_pool(config.workers);
    let mut errors = Vec::new();
    let mut fresh: Vec<AnnotationRecord> = Vec::new();
    for (id, mesh_path) in list_objects(&config.object_dir)? {
        if done.contains(&id) {
            continue;
        }
        let result = (|| -> Result<AnnotationRecord> {
            let mesh = load_mesh(&mesh_path)?;
            let (mesh, _) = crate::geometry::normalize_mesh(&mesh)?;
            let run = || annotate_object(&mesh, &opts);
            let output = match &pool {
                Some(p) => p.install(run),
                None => run(),
            }?;
            Ok(AnnotationRecord {
                id: id.clone(),
                annotation: output.annotation,
            })
        })();
        match result {
            Ok(record) => fresh.push(record),
            Err(e) => {
                eprintln!("annotate: skipping {id}: {e}");
                errors.push(format!("{id}: {e}"));
            }
        }
    }

    if !fresh.is_empty() {
        let mut text = String::new();
        for r in &fresh {
            text.push_str(&serde_json::to_string(r)?);
            text.push('\n');
        }
        let mut combined = fs::read_to_string(&path).unwrap_or_default();
        combined.push_str(&text);
        fs::write(&path, combined)?;
        existing.extend(fresh);
    }

    let mut histogram: BTreeMap<usize, usize> = BTreeMap::new();
    let mut slow = Vec::new();
    for r in &existing {
        *histogram.entry(r.annotation.planning_views).or_default() += 1;
        if r.annotation.slow_saturation {
            slow.push(r.id.clone());
        }
    }
    slow.sort();
    let summary = AnnotationSummary {
        objects: existing.len(),
        planning_histogram: histogram,
        slow_saturation: slow,
        errors,
    };
    fs::write(
        config.output_dir.join("annotation_summary.json"),
        serde_json::to_string_pretty(&summary)?,
    )?;
    Ok(summary)
}

// ---------------------------------------------------------------------
// reference

fn reference_key(config: &RunConfig, object: &str) -> String {
    let p = &config.protocol;
    let mask = match &p.mask {
        ReachabilityMask::Whole => "whole".to_string(),
        ReachabilityMask::Quarter => "quarter".to_string(),
        ReachabilityMask::Explicit(v) => format!("explicit-{}", v.len()),
    };
    format!(
        "{object}|{mask}|{}|{}x{}|{}|{}|{}",
        p.tau, p.intrinsics.width, p.intrinsics.height, p.intrinsics.vfov_deg, p.intrinsics.far,
        p.radius
    )
}

/// Computes (or loads) the observable-surface reference for every object
/// under the configured mask, persisting the values to
/// `references.json` in the output directory.
pub fn cmd_reference(config: &RunConfig) -> Result<BTreeMap<String, f64>> {
    fs::create_dir_all(&config.output_dir)?;
    let store = Arc::new(build_store(config)?);
    let path = config.output_dir.join("references.json");
    let mut cache: BTreeMap<String, f64> = if path.exists() {
        serde_json::from_str(&fs::read_to_string(&path)?)?
    } else {
        BTreeMap::new()
    };

    let protocol = config.protocol_config();
    let candidates = protocol.candidates()?;
    let ids: Vec<String> = store.ids().cloned().collect();
    for id in &ids {
        let key = reference_key(config, id);
        if cache.contains_key(&key) {
            continue;
        }
        let value = store.reference(
            id,
            &protocol.mask,
            &candidates,
            protocol.tau,
            &protocol.intrinsics,
            protocol.radius,
            protocol.candidate_seed,
            protocol.dedup_resolution,
        )?;
        cache.insert(key, value);
    }
    fs::write(&path, serde_json::to_string_pretty(&cache)?)?;
    Ok(cache)
}

// ---------------------------------------------------------------------
// evaluate

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct EpisodeArtifact {
    pub object: String,
    pub planner: String,
    pub report: MetricsReport,
}

/// Aggregate row for one planner over all evaluated objects.
#[derive(Debug, Clone, Serialize)]
pub struct AggregateRow {
    pub planner: String,
    pub episodes: usize,
    pub mean_views: f64,
    pub mean_nsc: f64,
    pub mean_sc: f64,
    pub mean_path_cost: f64,
    pub mean_planning_time: f64,
    pub time_bin: TimeBin,
}

fn cell_paths(config: &RunConfig, object: &str, planner: &str) -> (PathBuf, PathBuf) {
    (
        config
            .output_dir
            .join("traces")
            .join(format!("{object}__{planner}.csv")),
        config
            .output_dir
            .join("reports")
            .join(format!("{object}__{planner}.json")),
    )
}

/// Runs every (object x planner) cell under the configured protocol and
/// writes per-episode traces, reports, and ranked aggregate tables. Cells
/// with existing artifacts are skipped; planner failures are recorded and
/// the batch continues.
pub fn cmd_evaluate(config: &RunConfig) -> Result<Vec<AggregateRow>> {
    fs::create_dir_all(config.output_dir.join("traces"))?;
    fs::create_dir_all(config.output_dir.join("reports"))?;
    let store = Arc::new(build_store(config)?);
    let registry = Arc::new(SessionRegistry::new(Arc::clone(&store)));
    let protocol = config.protocol_config();
    let opts = config.annotate_options();

    let needs_oracle = config
        .planners
        .iter()
        .any(|p| p.name.contains("oracle"));
    let ids: Vec<String> = store.ids().cloned().collect();

    // Oracle planners consume the ground-truth coverage matrix under the
    // episode protocol.
    let matrices: BTreeMap<String, Arc<CoverageMatrix>> = if needs_oracle {
        let candidates = protocol.candidates()?;
        ids.iter()
            .map(|id| {
                let entry = store.get(id)?;
                let svg = voxelize_surface(&entry.mesh, opts.resolution)?;
                let acc = RayAccelerator::build(&entry.mesh);
                let matrix = build_coverage_matrix(
                    &acc,
                    &svg,
                    &candidates,
                    protocol.radius,
                    &protocol.intrinsics,
                )?;
                Ok((id.clone(), Arc::new(matrix)))
            })
            .collect::<Result<_>>()?
    } else {
        BTreeMap::new()
    };

    let mut cells: Vec<(String, PlannerSpec)> = Vec::new();
    for id in &ids {
        for planner in &config.planners {
            cells.push((id.clone(), planner.clone()));
        }
    }

    let pool = maybe_thread_pool(config.workers);
    let run_cells = || -> Vec<Result<()>> {
        cells
            .par_iter()
            .map(|(object, spec)| -> Result<()> {
                let (trace_path, report_path) = cell_paths(config, object, &spec.name);
                if trace_path.exists() && report_path.exists() {
                    return Ok(());
                }
                let mut planner =
                    build_planner(spec, config.budget_k(), matrices.get(object).cloned())
                        .map_err(|e| anyhow::anyhow!(e))?;
                let mut transport = LocalTransport::new(Arc::clone(&registry));
                let outcome = run_episode(
                    &mut transport,
                    planner.as_mut(),
                    object,
                    &protocol,
                    config.measure_time,
                )?;
                let mut csv = String::from(StepRecord::CSV_HEADER);
                csv.push('\n');
                for r in &outcome.records {
                    csv.push_str(&r.to_csv_row());
                    csv.push('\n');
                }
                fs::write(&trace_path, csv)?;
                let artifact = EpisodeArtifact {
                    object: object.clone(),
                    planner: spec.name.clone(),
                    report: outcome.report,
                };
                fs::write(&report_path, serde_json::to_string_pretty(&artifact)?)?;
                Ok(())
            })
            .collect()
    };
    let results = match &pool {
        Some(p) => p.install(run_cells),
        None => run_cells(),
    };
    for r in results {
        if let Err(e) = r {
            eprintln!("evaluate: episode failed: {e}");
        }
    }

    cmd_report(config)
}

/// Rebuilds the aggregate tables from the report artifacts on disk; the
/// aggregates are a pure function of the per-episode outputs.
pub fn cmd_report(config: &RunConfig) -> Result<Vec<AggregateRow>> {
    let reports_dir = config.output_dir.join("reports");
    let mut artifacts: Vec<EpisodeArtifact> = Vec::new();
    if reports_dir.exists() {
        let mut paths: Vec<PathBuf> = fs::read_dir(&reports_dir)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|e| e == "json"))
            .collect();
        paths.sort();
        for p in paths {
            artifacts.push(serde_json::from_str(&fs::read_to_string(&p)?)?);
        }
    }
    let mut by_planner: BTreeMap<String, Vec<&EpisodeArtifact>> = BTreeMap::new();
    for a in &artifacts {
        by_planner.entry(a.planner.clone()).or_default().push(a);
    }

    let mut rows: Vec<AggregateRow> = by_planner
        .into_iter()
        .map(|(planner, list)| {
            let n = list.len() as f64;
            let mean = |f: &dyn Fn(&EpisodeArtifact) -> f64| -> f64 {
                list.iter().map(|a| f(a)).sum::<f64>() / n
            };
            let mean_time = mean(&|a| a.report.planning_time);
            AggregateRow {
                planner,
                episodes: list.len(),
                mean_views: mean(&|a| a.report.views as f64),
                mean_nsc: mean(&|a| a.report.nsc),
                mean_sc: mean(&|a| a.report.sc),
                mean_path_cost: mean(&|a| a.report.path_cost),
                mean_planning_time: mean_time,
                time_bin: TimeBin::from_seconds(mean_time),
            }
        })
        .collect();

    // Quality table: ranked by NSC.
    rows.sort_by(|a, b| b.mean_nsc.total_cmp(&a.mean_nsc).then(a.planner.cmp(&b.planner)));
    write_aggregate(&config.output_dir.join("aggregate.csv"), &rows)?;

    // Path-efficiency table: NSC floor, then shortest travel first.
    let mut path_rows: Vec<AggregateRow> = rows
        .iter()
        .filter(|r| r.mean_nsc >= 0.95)
        .cloned()
        .collect();
    path_rows.sort_by(|a, b| {
        a.mean_path_cost
            .total_cmp(&b.mean_path_cost)
            .then(a.planner.cmp(&b.planner))
    });
    write_aggregate(&config.output_dir.join("aggregate_path.csv"), &path_rows)?;
    Ok(rows)
}

fn write_aggregate(path: &Path, rows: &[AggregateRow]) -> Result<()> {
    let mut csv = String::from(
        "planner,episodes,mean_views,mean_nsc,mean_sc,mean_path_cost,mean_planning_time,time_bin\n",
    );
    for r in rows {
        csv.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.planner,
            r.episodes,
            r.mean_views,
            r.mean_nsc,
            r.mean_sc,
            r.mean_path_cost,
            r.mean_planning_time,
            r.time_bin
        ));
    }
    fs::write(path, csv)?;
    Ok(())
}

// ---------------------------------------------------------------------
// split

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SplitMode {
    Stratified,
    Balanced,
    Raw,
}

impl std::str::FromStr for SplitMode {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "stratified" => Ok(SplitMode::Stratified),
            "balanced" => Ok(SplitMode::Balanced),
            "raw" => Ok(SplitMode::Raw),
            other => Err(format!("unknown split mode {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SplitArtifact {
    pub mode: SplitMode,
    pub quota: usize,
    pub seed: u64,
    pub test: Vec<String>,
    pub train: Vec<String>,
}

/// Splits the annotated pool into disjoint test/train id lists. Slow
/// saturation objects are excluded up front (they form a separate
/// diagnostic pool).
pub fn cmd_split(
    config: &RunConfig,
    quota: usize,
    mode: SplitMode,
    seed: u64,
) -> Result<SplitArtifact> {
    let records = read_annotations(&annotations_path(config))
        .context("annotations required; run annotate first")?;
    let pool: Vec<&AnnotationRecord> = records
        .iter()
        .filter(|r| !r.annotation.slow_saturation)
        .collect();
    let planning: Vec<usize> = pool.iter().map(|r| r.annotation.planning_views).collect();

    let (test_idx, train_idx) = match mode {
        SplitMode::Stratified => stratified_test_split(&planning, quota, seed)?,
        SplitMode::Balanced => {
            let sample = balanced_train_sample(&planning, quota, &config.bucket_edges, seed)?;
            let chosen: std::collections::BTreeSet<usize> = sample.iter().copied().collect();
            let rest = (0..pool.len()).filter(|i| !chosen.contains(i)).collect();
            (sample, rest)
        }
        SplitMode::Raw => {
            if quota == 0 || quota > pool.len() {
                bail!("quota {quota} invalid for pool of {}", pool.len());
            }
            let mut idx: Vec<usize> = (0..pool.len()).collect();
            idx.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
            let mut test: Vec<usize> = idx[..quota].to_vec();
            test.sort_unstable();
            let chosen: std::collections::BTreeSet<usize> = test.iter().copied().collect();
            let rest = (0..pool.len()).filter(|i| !chosen.contains(i)).collect();
            (test, rest)
        }
    };

    let artifact = SplitArtifact {
        mode,
        quota,
        seed,
        test: test_idx.iter().map(|&i| pool[i].id.clone()).collect(),
        train: train_idx.iter().map(|&i| pool[i].id.clone()).collect(),
    };
    let dir = config.output_dir.join("splits");
    fs::create_dir_all(&dir)?;
    let name = format!(
        "{}_{quota}_{seed}.json",
        serde_json::to_value(mode)?.as_str().unwrap()
    );
    fs::write(dir.join(name), serde_json::to_string_pretty(&artifact)?)?;
    Ok(artifact)
}

// ---------------------------------------------------------------------
// serve

/// Binds the evaluation service on `addr` and blocks until the process is
/// stopped.
pub fn cmd_serve(config: &RunConfig, addr: &str, workers: usize) -> Result<()> {
    let store = Arc::new(build_store(config)?);
    let registry = Arc::new(SessionRegistry::new(store));
    let server = HttpServer::bind(registry, addr, workers.max(2))
        .with_context(|| format!("binding {addr}"))?;
    println!("serving on {}", server.base_url());
    server.join();
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{make_synthetic, save_obj, SyntheticSpec};

    fn tiny_config(dir: &Path) -> RunConfig {
        let object_dir = dir.join("objects");
        fs::create_dir_all(&object_dir).unwrap();
        for (id, spec) in [
            ("ball", SyntheticSpec::Sphere { level: 2 }),
            ("crate", SyntheticSpec::Cube { level: 2 }),
        ] {
            let mesh = make_synthetic(&spec).unwrap();
            save_obj(&mesh, object_dir.join(format!("{id}.obj"))).unwrap();
        }
        RunConfig {
            object_dir,
            output_dir: dir.join("out"),
            resolution: 0.05,
            schedule: Some(vec![2, 4, 6, 8, 12, 16]),
            exact_budget_secs: 2.0,
            protocol: ProtocolSection {
                budget: Budget::Fixed(3),
                mask: ReachabilityMask::Whole,
                candidates: 16,
                candidate_seed: 7,
                tau: 0.02,
                radius: 2.5,
                intrinsics: CameraIntrinsics::new(64, 64, 45.0, 5.0).unwrap(),
            },
            planners: vec![
                PlannerSpec {
                    name: "random-tsp".into(),
                    k: None,
                    lambda: None,
                    seed: Some(1),
                    policy: None,
                },
                PlannerSpec {
                    name: "oracle-greedy".into(),
                    k: None,
                    lambda: None,
                    seed: None,
                    policy: None,
                },
            ],
            seed: 0,
            workers: 0,
            measure_time: false,
            bucket_edges: vec![4, 8],
        }
    }

    #[test]
    fn config_rejects_unknown_keys_and_round_trips() {
        let json = default_config_json();
        let back: RunConfig = serde_json::from_str(&json).unwrap();
        assert_eq!(back, RunConfig::default());
        let bad = json.replace("\"seed\": 0", "\"sneed\": 0");
        assert!(serde_json::from_str::<RunConfig>(&bad).is_err());
    }

    #[test]
    fn annotate_evaluate_split_pipeline() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path());

        // Annotate: one record per mesh, histogram sums to object count.
        let summary = cmd_annotate(&config).unwrap();
        assert_eq!(summary.objects, 2);
        assert!(summary.errors.is_empty());
        let total: usize = summary.planning_histogram.values().sum();
        assert_eq!(total, 2);
        let first = fs::read_to_string(annotations_path(&config)).unwrap();

        // Rerun hits the resume path and leaves the artifact untouched.
        let summary2 = cmd_annotate(&config).unwrap();
        assert_eq!(summary2.objects, 2);
        assert_eq!(first, fs::read_to_string(annotations_path(&config)).unwrap());

        // Evaluate: 2 objects x 2 planners.
        let rows = cmd_evaluate(&config).unwrap();
        assert_eq!(rows.len(), 2);
        for row in &rows {
            assert_eq!(row.episodes, 2);
            assert!(row.mean_nsc > 0.5);
        }
        let agg1 = fs::read_to_string(config.output_dir.join("aggregate.csv")).unwrap();
        assert_eq!(agg1.lines().count(), 3);

        //

        // Aggregates re-derive identically from the stored artifacts.
        cmd_report(&config).unwrap();
        let agg2 = fs::read_to_string(config.output_dir.join("aggregate.csv")).unwrap();
        assert_eq!(agg1, agg2);

        // Traces re-sum to the reported path cost.
        let trace = fs::read_to_string(
            config
                .output_dir
                .join("traces")
                .join("ball__oracle-greedy.csv"),
        )
        .unwrap();
        let report: EpisodeArtifact = serde_json::from_str(
            &fs::read_to_string(
                config
                    .output_dir
                    .join("reports")
                    .join("ball__oracle-greedy.json"),
            )
            .unwrap(),
        )
        .unwrap();
        let resummed: f64 = trace
            .lines()
            .skip(1)
            .filter_map(StepRecord::from_csv_row)
            .map(|r| r.path_increment)
            .sum();
        assert!((resummed - report.report.path_cost).abs() < 1e-9);

        // Splits partition the pool.
        let split = cmd_split(&config, 1, SplitMode::Stratified, 3).unwrap();
        assert_eq!(split.test.len(), 1);
        assert_eq!(split.train.len(), 1);
        let raw = cmd_split(&config, 1, SplitMode::Raw, 3).unwrap();
        assert_eq!(raw.test.len() + raw.train.len(), 2);
        let balanced = cmd_split(&config, 2, SplitMode::Balanced, 3).unwrap();
        assert_eq!(balanced.test.len(), 2);
    }

    #[test]
    fn references_persist_across_runs() {
        let dir = tempfile::tempdir().unwrap();
        let config = tiny_config(dir.path());
        let refs = cmd_reference(&config).unwrap();
        assert_eq!(refs.len(), 2);
        let again = cmd_reference(&config).unwrap();
        assert_eq!(refs, again);
        for v in refs.values() {
            assert!(*v > 0.5 && *v <= 1.0);
        }
    }
}
