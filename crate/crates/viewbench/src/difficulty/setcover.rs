//! Planning difficulty as minimum set cover over per-view coverage sets.

use std::time::{Duration, Instant};

use rayon::prelude::*;

use crate::bitset::Bitset;
use crate::geometry::{RayAccelerator, SurfaceVoxelGrid};
use crate::perception::coverage_set;
use crate::viewspace::{view_pose, CameraIntrinsics, ViewSet, ViewspaceError};

use super::DifficultyError;

/// Per-view coverage bitsets for every direction of a candidate set.
pub fn coverage_rows(
    acc: &RayAccelerator,
    svg: &SurfaceVoxelGrid,
    views: &ViewSet,
    radius: f64,
    intr: &CameraIntrinsics,
) -> Result<Vec<Bitset>, DifficultyError> {
    let rows = views
        .directions
        .par_iter()
        .map(|d| {
            let pose = view_pose(d, radius)?;
            Ok(coverage_set(acc, svg, &pose, intr).bits)
        })
        .collect::<Result<_, ViewspaceError>>()?;
    Ok(rows)
}

/// Protocol coverage matrix: the union of all per-view coverage sets under
/// the candidate protocol, densely re-indexed, one row per candidate.
pub fn build_coverage_matrix(
    acc: &RayAccelerator,
    svg: &SurfaceVoxelGrid,
    views: &ViewSet,
    radius: f64,
    intr: &CameraIntrinsics,
) -> Result<CoverageMatrix, DifficultyError> {
    CoverageMatrix::from_coverage(&coverage_rows(acc, svg, views, radius, intr)?)
}

/// Per-candidate-view coverage over the protocol-coverable universe.
///
/// The universe is the union of all rows, re-indexed densely in ascending
/// surface-voxel id order; every row is expressed in universe indexing.
#[derive(Debug, Clone)]
pub struct CoverageMatrix {
    pub universe_size: usize,
    pub rows: Vec<Bitset>,
}

impl CoverageMatrix {
    /// Re-indexes per-view coverage bitsets (over surface-voxel ids) into
    /// the dense universe.
    pub fn from_coverage(per_view: &[Bitset]) -> Result<Self, DifficultyError> {
        let Some(first) = per_view.first() else {
            return Err(DifficultyError::EmptyUniverse);
        };
        let mut union = Bitset::new(first.len());
        for row in per_view {
            union.union_with(row);
        }
        let ids: Vec<usize> = union.iter_ones().collect();
        if ids.is_empty() {
            return Err(DifficultyError::EmptyUniverse);
        }
        let mut dense = vec![u32::MAX; first.len()];
        for (d, &id) in ids.iter().enumerate() {
            dense[id] = d as u32;
        }
        let rows = per_view
            .iter()
            .map(|row| {
                let mut bits = Bitset::new(ids.len());
                for id in row.iter_ones() {
                    bits.set(dense[id] as usize);
                }
                bits
            })
            .collect();
        Ok(CoverageMatrix {
            universe_size: ids.len(),
            rows,
        })
    }

    /// Restricts to a candidate subset, dropping universe elements no
    /// feasible row covers (they are unreachable under the mask).
    pub fn restrict(&self, candidates: &[usize]) -> Result<(CoverageMatrix, Vec<usize>), DifficultyError> {
        let picked: Vec<&Bitset> = candidates.iter().map(|&i| &self.rows[i]).collect();
        let mut union = Bitset::new(self.universe_size);
        for row in &picked {
            union.union_with(row);
        }
        let kept: Vec<usize> = union.iter_ones().collect();
        if kept.is_empty() {
            return Err(DifficultyError::EmptyUniverse);
        }
        let mut dense = vec![u32::MAX; self.universe_size];
        for (d, &id) in kept.iter().enumerate() {
            dense[id] = d as u32;
        }
        let rows = picked
            .iter()
            .map(|row| {
                let mut bits = Bitset::new(kept.len());
                for id in row.iter_ones() {
                    if dense[id] != u32::MAX {
                        bits.set(dense[id] as usize);
                    }
                }
                bits
            })
            .collect();
        Ok((
            CoverageMatrix {
                universe_size: kept.len(),
                rows,
            },
            candidates.to_vec(),
        ))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SolveMode {
    Greedy,
    Exact,
}

#[derive(Debug, Clone)]
pub struct SetCoverSolution {
    /// Selected candidate row indices, ascending.
    pub selected: Vec<usize>,
    /// True when branch and bound completed within budget, proving no
    /// smaller cover exists.
    pub certified_optimal: bool,
}

/// Solves minimum set cover over the matrix rows.
///
/// Greedy: max marginal gain with lowest-index tie break, then a redundancy
/// elimination pass. Exact: branch and bound over the most-constrained
/// uncovered element, greedy upper bound, ceil(uncovered / max-row-size)
/// lower bound; falls back to the greedy result (uncertified) when the time
/// budget runs out.
pub fn solve_set_cover(
    matrix: &CoverageMatrix,
    mode: SolveMode,
    budget: Duration,
) -> Result<SetCoverSolution, DifficultyError> {
    let mut all = Bitset::new(matrix.universe_size);
    for row in &matrix.rows {
        all.union_with(row);
    }
    if !all.all_set() {
        return Err(DifficultyError::Infeasible);
    }

    let mut greedy = greedy_cover(matrix);
    greedy.sort_unstable();
    if mode == SolveMode::Greedy {
        return Ok(SetCoverSolution {
            selected: greedy,
            certified_optimal: false,
        });
    }

    let deadline = Instant::now() + budget;
    let mut search = Search {
        matrix,
        element_rows: element_cover_lists(matrix),
        max_row_ones: matrix.rows.iter().map(|r| r.count_ones()).max().unwrap_or(1).max(1),
        best: greedy.clone(),
        deadline,
        nodes_since_check: 0,
        timed_out: false,
    };
    let mut covered = Bitset::new(matrix.universe_size);
    let mut selected = Vec::new();
    search.recurse(&mut covered, &mut selected, matrix.universe_size);

    if search.timed_out {
        Ok(SetCoverSolution {
            selected: greedy,
            certified_optimal: false,
        })
    } else {
        let mut best = search.best;
        best.sort_unstable();
        Ok(SetCoverSolution {
            selected: best,
            certified_optimal: true,
        })
    }
}

fn greedy_cover(matrix: &CoverageMatrix) -> Vec<usize> {
    let mut covered = Bitset::new(matrix.universe_size);
    let mut selected: Vec<usize> = Vec::new();
    let mut remaining = matrix.universe_size;
    while remaining > 0 {
        let mut best_gain = 0;
        let mut best_row = usize::MAX;
        for (i, row) in matrix.rows.iter().enumerate() {
            let gain = covered.gain_from(row);
            if gain > best_gain {
                best_gain = gain;
                best_row = i;
            }
        }
        debug_assert!(best_row != usize::MAX, "precondition: rows cover universe");
        covered.union_with(&matrix.rows[best_row]);
        remaining -= best_gain;
        selected.push(best_row);
    }

    // Redundancy elimination: drop any view whose removal keeps the cover,
    // scanning in ascending index order.
    let mut kept = selected.clone();
    kept.sort_unstable();
    let mut i = 0;
    while i < kept.len() {
        let mut union = Bitset::new(matrix.universe_size);
        for (j, &row) in kept.iter().enumerate() {
            if j != i {
                union.union_with(&matrix.rows[row]);
            }
        }
        if union.all_set() {
            kept.remove(i);
        } else {
            i += 1;
        }
    }
    kept
}

/// For each universe element, the rows covering it (ascending).
fn element_cover_lists(matrix: &CoverageMatrix) -> Vec<Vec<u32>> {
    let mut lists = vec![Vec::new(); matrix.universe_size];
    for (i, row) in matrix.rows.iter().enumerate() {
        for e in row.iter_ones() {
            lists[e].push(i as u32);
        }
    }
    lists
}

struct Search<'a> {
    matrix: &'a CoverageMatrix,
    element_rows: Vec<Vec<u32>>,
    max_row_ones: usize,
    best: Vec<usize>,
    deadline: Instant,
    nodes_since_check: u32,
    timed_out: bool,
}

impl Search<'_> {
    fn recurse(&mut self, covered: &mut Bitset, selected: &mut Vec<usize>, uncovered: usize) {
        if self.timed_out {
            return;
        }
        self.nodes_since_check += 1;
        if self.nodes_since_check >= 4096 {
            self.nodes_since_check = 0;
            if Instant::now() >= self.deadline {
                self.timed_out = true;
                return;
            }
        }
        if uncovered == 0 {
            if selected.len() < self.best.len() {
                self.best = selected.clone();
            }
            return;
        }
        let lower = uncovered.div_ceil(self.max_row_ones);
        if selected.len() + lower >= self.best.len() {
            return;
        }

        // Branch on the uncovered element with the fewest covering rows;
        // every cover must pick one of them, so the search stays complete.
        let mut pick = usize::MAX;
        let mut fewest = usize::MAX;
        for e in 0..self.matrix.universe_size {
            if !covered.get(e) {
                let n = self.element_rows[e].len();
                if n < fewest {
                    fewest = n;
                    pick = e;
                    if n <= 1 {
                        break;
                    }
                }
            }
        }
        debug_assert!(pick != usize::MAX);

        let options = self.element_rows[pick].clone();
        for row_idx in options {
            let row = &self.matrix.rows[row_idx as usize];
            let gain = covered.gain_from(row);
            if gain == 0 {
                continue;
            }
            let saved = covered.clone();
            covered.union_with(row);
            selected.push(row_idx as usize);
            self.recurse(covered, selected, uncovered - gain);
            selected.pop();
            *covered = saved;
            if self.timed_out {
                return;
            }
        }
    }
}
