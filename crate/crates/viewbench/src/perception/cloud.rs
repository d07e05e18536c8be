//! Accumulated observation cloud with voxel-hash deduplication.

use std::collections::HashSet;

use nalgebra::Point3;

/// Fused observation point cloud.
///
/// Fusion keeps the first point seen in each dedup cell, so repeated
/// observations of the same surface patch do not grow the cloud.
#[derive(Debug, Clone)]
pub struct ObservedCloud {
    points: Vec<Point3<f64>>,
    dedup_resolution: f64,
    occupied: HashSet<[i64; 3]>,
}

impl ObservedCloud {
    pub fn new(dedup_resolution: f64) -> Self {
        assert!(dedup_resolution > 0.0);
        ObservedCloud {
            points: Vec::new(),
            dedup_resolution,
            occupied: HashSet::new(),
        }
    }

    pub fn points(&self) -> &[Point3<f64>] {
        &self.points
    }

    pub fn len(&self) -> usize {
        self.points.len()
    }

    pub fn is_empty(&self) -> bool {
        self.points.is_empty()
    }

    pub fn dedup_resolution(&self) -> f64 {
        self.dedup_resolution
    }

    #[inline]
    fn key(&self, p: &Point3<f64>) -> [i64; 3] {
        [
            (p.x / self.dedup_resolution).floor() as i64,
            (p.y / self.dedup_resolution).floor() as i64,
            (p.z / self.dedup_resolution).floor() as i64,
        ]
    }

    /// Fuses new points into the cloud; returns how many survived dedup.
    /// Idempotent for repeated identical input.
    pub fn fuse(&mut self, new_points: &[Point3<f64>]) -> usize {
        let mut added = 0;
        for p in new_points {
            if self.occupied.insert(self.key(p)) {
                self.points.push(*p);
                added += 1;
            }
        }
        added
    }
}

/// Counts distinct voxel cells of a growing point set at a fixed
/// resolution. Backs the map-stabilization stopping rule, independent of
/// any planner-owned grid.
#[derive(Debug, Clone)]
pub struct VoxelCounter {
    resolution: f64,
    cells: HashSet<[i64; 3]>,
}

impl VoxelCounter {
    pub fn new(resolution: f64) -> Self {
        assert!(resolution > 0.0);
        VoxelCounter {
            resolution,
            cells: HashSet::new(),
        }
    }

    pub fn insert_all(&mut self, points: &[Point3<f64>]) {
        for p in points {
            self.cells.insert([
                (p.x / self.resolution).floor() as i64,
                (p.y / self.resolution).floor() as i64,
                (p.z / self.resolution).floor() as i64,
            ]);
        }
    }

    pub fn count(&self) -> usize {
        self.cells.len()
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn refusing_same_points_is_idempotent() {
        let pts = vec![
            Point3::new(0.1, 0.2, 0.3),
            Point3::new(0.4, 0.5, 0.6),
            Point3::new(-0.3, 0.0, 0.9),
        ];
        let mut cloud = ObservedCloud::new(0.005);
        cloud.fuse(&pts);
        let n = cloud.len();
        let added = cloud.fuse(&pts);
        assert_eq!(added, 0);
        assert_eq!(cloud.len(), n);
    }

    #[test]
    fn far_apart_points_both_survive() {
        let mut cloud = ObservedCloud::new(0.005);
        cloud.fuse(&[Point3::new(0.0, 0.0, 0.0), Point3::new(1.0, 1.0, 1.0)]);
        assert_eq!(cloud.len(), 2);
    }

    #[test]
    fn size_equals_distinct_hash_cells() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        let res = 0.01;
        let pts: Vec<Point3<f64>> = (0..20_000)
            .map(|_| {
                Point3::new(
                    rng.random_range(-0.2..0.2),
                    rng.random_range(-0.2..0.2),
                    rng.random_range(-0.2..0.2),
                )
            })
            .collect();
        let mut cloud = ObservedCloud::new(res);
        cloud.fuse(&pts);
        let distinct: std::collections::HashSet<[i64; 3]> = pts
            .iter()
            .map(|p| {
                [
                    (p.x / res).floor() as i64,
                    (p.y / res).floor() as i64,
                    (p.z / res).floor() as i64,
                ]
            })
            .collect();
        assert_eq!(cloud.len(), distinct.len());
    }

    #[test]
    fn voxel_counter_matches_fused_cells_at_same_resolution() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let pts: Vec<Point3<f64>> = (0..5_000)
            .map(|_| {
                Point3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                )
            })
            .collect();
        let mut counter = VoxelCounter::new(0.02);
        counter.insert_all(&pts);
        let mut cloud = ObservedCloud::new(0.02);
        let added = cloud.fuse(&pts);
        assert_eq!(counter.count(), added);
    }
}
