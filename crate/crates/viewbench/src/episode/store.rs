//! Registered objects and the per-mask observable-surface reference cache.

use std::collections::{BTreeMap, HashMap};
use std::sync::{Arc, Mutex};

use nalgebra::Point3;

use crate::geometry::{
    normalize_mesh, sample_surface_points, RayAccelerator, TriangleMesh,
};
use crate::perception::{depth_to_points, render_depth, ObservedCloud};
use crate::viewspace::{
    apply_mask, solve_tammes_cached, view_pose, CameraIntrinsics, ReachabilityMask, ViewSet,
};

use super::metrics::surface_coverage;
use super::EpisodeError;

/// Ground-truth surface sample count per object.
pub const GT_SAMPLES: usize = 100_000;
/// Fixed sampling seed so every run sees the same ground truth.
pub const GT_SEED: u64 = 0x6e0c_17e5;
/// Dense reference view-set size.
pub const REFERENCE_VIEWS: usize = 360;

/// One registered object: hidden geometry plus derived immutable state.
pub struct ObjectEntry {
    pub id: String,
    pub mesh: TriangleMesh,
    pub accel: RayAccelerator,
    /// Shared ground-truth sample positions.
    pub gt_points: Arc<Vec<Point3<f64>>>,
}

impl ObjectEntry {
    pub fn new(id: impl Into<String>, mesh: &TriangleMesh) -> Result<Self, EpisodeError> {
        let (mesh, _) = normalize_mesh(mesh)?;
        let accel = RayAccelerator::build(&mesh);
        let gt = sample_surface_points(&mesh, GT_SAMPLES, GT_SEED);
        Ok(ObjectEntry {
            id: id.into(),
            mesh,
            accel,
            gt_points: Arc::new(gt.points),
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Hash)]
struct ReferenceKey {
    object: String,
    mask: String,
    tau_bits: u64,
    width: u32,
    height: u32,
    vfov_bits: u64,
    far_bits: u64,
    radius_bits: u64,
}

fn mask_tag(mask: &ReachabilityMask) -> String {
    match mask {
        ReachabilityMask::Whole => "whole".into(),
        ReachabilityMask::Quarter => "quarter".into(),
        ReachabilityMask::Explicit(list) => {
            let mut sorted = list.clone();
            sorted.sort_unstable();
            let joined: Vec<String> = sorted.iter().map(|i| i.to_string()).collect();
            format!("explicit:{}", joined.join(","))
        }
    }
}

/// Holds hidden object geometry; never hands out mesh data to clients.
pub struct ObjectStore {
    objects: BTreeMap<String, Arc<ObjectEntry>>,
    references: Mutex<HashMap<ReferenceKey, f64>>,
}

impl Default for ObjectStore {
    fn default() -> Self {
        Self::new()
    }
}

impl ObjectStore {
    pub fn new() -> Self {
        ObjectStore {
            objects: BTreeMap::new(),
            references: Mutex::new(HashMap::new()),
        }
    }

    /// Registers a mesh under an id, normalizing it into the unit frame.
    pub fn register(&mut self, id: impl Into<String>, mesh: &TriangleMesh) -> Result<(), EpisodeError> {
        let entry = ObjectEntry::new(id, mesh)?;
        self.objects.insert(entry.id.clone(), Arc::new(entry));
        Ok(())
    }

    pub fn get(&self, id: &str) -> Result<Arc<ObjectEntry>, EpisodeError> {
        self.objects
            .get(id)
            .cloned()
            .ok_or_else(|| EpisodeError::UnknownObject(id.to_string()))
    }

    pub fn ids(&self) -> impl Iterator<Item = &String> {
        self.objects.keys()
    }

    /// Observable-surface reference SC for (object, mask): the coverage of
    /// the cloud fused from every feasible view of a dense reference
    /// Tammes set. Cached per key; repeated calls return the identical
    /// value bit for bit.
    #[allow(clippy::too_many_arguments)]
    pub fn reference(
        &self,
        object: &str,
        mask: &ReachabilityMask,
        candidates: &ViewSet,
        tau: f64,
        intr: &CameraIntrinsics,
        radius: f64,
        tammes_seed: u64,
        dedup_resolution: f64,
    ) -> Result<f64, EpisodeError> {
        let key = ReferenceKey {
            object: object.to_string(),
            mask: mask_tag(mask),
            tau_bits: tau.to_bits(),
            width: intr.width,
            height: intr.height,
            vfov_bits: intr.vfov_deg.to_bits(),
            far_bits: intr.far.to_bits(),
            radius_bits: radius.to_bits(),
        };
        if let Some(&v) = self.references.lock().unwrap().get(&key) {
            return Ok(v);
        }
        let entry = self.get(object)?;

        // Geometric masks filter the dense reference sphere; explicit
        // index masks are tied to the candidate set, so the reference is
        // everything those feasible candidates can observe.
        let directions = match mask {
            ReachabilityMask::Explicit(_) => {
                let (_, restricted) = apply_mask(candidates, mask)?;
                restricted.directions
            }
            _ => {
                let dense = solve_tammes_cached(REFERENCE_VIEWS, tammes_seed)?;
                let (_, restricted) = apply_mask(&dense, mask)?;
                restricted.directions
            }
        };

        use rayon::prelude::*;
        let frames: Vec<Vec<Point3<f64>>> = directions
            .par_iter()
            .map(|d| {
                let pose = view_pose(d, radius)?;
                let img = render_depth(&entry.accel, &pose, intr);
                Ok(depth_to_points(&img, intr))
            })
            .collect::<Result<_, crate::viewspace::ViewspaceError>>()?;
        let mut cloud = ObservedCloud::new(dedup_resolution);
        for frame in &frames {
            cloud.fuse(frame);
        }
        let gt = crate::geometry::SurfacePointCloud {
            points: entry.gt_points.as_ref().clone(),
            source: crate::geometry::CloudSource::GroundTruthSample,
        };
        let sc = surface_coverage(&gt, &cloud, tau)?;
        self.references.lock().unwrap().insert(key, sc);
        Ok(sc)
    }

    /// Preloads previously computed reference values (disk caches live in
    /// the CLI layer).
    pub fn preload_reference(
        &self,
        object: &str,
        mask: &ReachabilityMask,
        tau: f64,
        intr: &CameraIntrinsics,
        radius: f64,
        value: f64,
    ) {
        let key = ReferenceKey {
            object: object.to_string(),
            mask: mask_tag(mask),
            tau_bits: tau.to_bits(),
            width: intr.width,
            height: intr.height,
            vfov_bits: intr.vfov_deg.to_bits(),
            far_bits: intr.far.to_bits(),
            radius_bits: radius.to_bits(),
        };
        self.references.lock().unwrap().insert(key, value);
    }
}
