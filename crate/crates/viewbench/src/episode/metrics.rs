//! Coverage metrics and stopping rules.

use std::collections::HashMap;
use std::sync::Arc;

use nalgebra::Point3;
use serde::{Deserialize, Serialize};

use crate::geometry::SurfacePointCloud;
use crate::perception::ObservedCloud;

use super::EpisodeError;

/// Fraction of ground-truth points with an observed point within `tau`.
pub fn surface_coverage(
    gt: &SurfacePointCloud,
    cloud: &ObservedCloud,
    tau: f64,
) -> Result<f64, EpisodeError> {
    if gt.points.is_empty() {
        return Err(EpisodeError::EmptyGroundTruth);
    }
    if cloud.is_empty() {
        return Ok(0.0);
    }
    let mut cells: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
    for (i, p) in cloud.points().iter().enumerate() {
        cells.entry(cell_key(p, tau)).or_default().push(i as u32);
    }
    let tau2 = tau * tau;
    let mut covered = 0usize;
    'gt: for g in &gt.points {
        let c = cell_key(g, tau);
        for dx in -1..=1i64 {
            for dy in -1..=1i64 {
                for dz in -1..=1i64 {
                    if let Some(bucket) = cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                        for &oi in bucket {
                            if (cloud.points()[oi as usize] - g).norm_squared() <= tau2 {
                                covered += 1;
                                continue 'gt;
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(covered as f64 / gt.points.len() as f64)
}

#[inline]
fn cell_key(p: &Point3<f64>, tau: f64) -> [i64; 3] {
    [
        (p.x / tau).floor() as i64,
        (p.y / tau).floor() as i64,
        (p.z / tau).floor() as i64,
    ]
}

/// Incremental version of [`surface_coverage`] for per-step updates: once a
/// ground-truth point is covered it stays covered (the observed cloud only
/// grows), so each new observation batch only touches uncovered points near
/// the new points.
pub struct CoverageTracker {
    tau: f64,
    gt: Arc<Vec<Point3<f64>>>,
    cells: HashMap<[i64; 3], Vec<u32>>,
    covered: Vec<bool>,
    covered_count: usize,
}

impl CoverageTracker {
    pub fn new(gt: Arc<Vec<Point3<f64>>>, tau: f64) -> Self {
        let mut cells: HashMap<[i64; 3], Vec<u32>> = HashMap::new();
        for (i, p) in gt.iter().enumerate() {
            cells.entry(cell_key(p, tau)).or_default().push(i as u32);
        }
        let covered = vec![false; gt.len()];
        CoverageTracker {
            tau,
            gt,
            cells,
            covered,
            covered_count: 0,
        }
    }

    pub fn observe(&mut self, new_points: &[Point3<f64>]) {
        let tau2 = self.tau * self.tau;
        for p in new_points {
            let c = cell_key(p, self.tau);
            for dx in -1..=1i64 {
                for dy in -1..=1i64 {
                    for dz in -1..=1i64 {
                        if let Some(bucket) = self.cells.get(&[c[0] + dx, c[1] + dy, c[2] + dz]) {
                            for &gi in bucket {
                                if !self.covered[gi as usize]
                                    && (self.gt[gi as usize] - p).norm_squared() <= tau2
                                {
                                    self.covered[gi as usize] = true;
                                    self.covered_count += 1;
                                }
                            }
                        }
                    }
                }
            }
        }
    }

    pub fn fraction(&self) -> f64 {
        self.covered_count as f64 / self.gt.len().max(1) as f64
    }
}

/// Normalized surface coverage, clamped to 1 (point sampling can nudge SC
/// marginally past a finite-view reference).
pub fn nsc(sc: f64, sc_ref: f64) -> Result<f64, EpisodeError> {
    if sc_ref <= 0.0 {
        return Err(EpisodeError::ZeroReference);
    }
    Ok((sc / sc_ref).min(1.0))
}

/// Map-stabilization rule: stop when the three most recent relative gains
/// of the voxelized observation count all fall below 1%.
pub fn ms_should_stop(counts: &[usize]) -> bool {
    if counts.len() < 4 {
        return false;
    }
    counts[counts.len() - 3..].iter().enumerate().all(|(k, &c)| {
        let prev = counts[counts.len() - 4 + k];
        (c as f64 - prev as f64) / (prev.max(1) as f64) < 0.01
    })
}

/// Coarse planning-runtime bins.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum TimeBin {
    #[serde(rename = "<0.1")]
    Under100ms,
    #[serde(rename = "0.1-0.5")]
    To500ms,
    #[serde(rename = "0.5-1")]
    To1s,
    #[serde(rename = "1-3")]
    To3s,
    #[serde(rename = "3-5")]
    To5s,
    #[serde(rename = ">5")]
    Over5s,
}

impl TimeBin {
    pub fn from_seconds(t: f64) -> Self {
        if t < 0.1 {
            TimeBin::Under100ms
        } else if t < 0.5 {
            TimeBin::To500ms
        } else if t < 1.0 {
            TimeBin::To1s
        } else if t < 3.0 {
            TimeBin::To3s
        } else if t < 5.0 {
            TimeBin::To5s
        } else {
            TimeBin::Over5s
        }
    }
}

impl std::fmt::Display for TimeBin {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        let s = match self {
            TimeBin::Under100ms => "<0.1",
            TimeBin::To500ms => "0.1-0.5",
            TimeBin::To1s => "0.5-1",
            TimeBin::To3s => "1-3",
            TimeBin::To5s => "3-5",
            TimeBin::Over5s => ">5",
        };
        f.write_str(s)
    }
}
