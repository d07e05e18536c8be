//! Open-path view ordering under the shell-distance metric.

use crate::viewspace::{shell_distance, ViewPose};

/// Orders views into a short open path from a fixed start pose:
/// nearest-neighbor construction refined by 2-opt until no move improves,
/// keeping whichever of the nearest-neighbor or input-order starts ends up
/// cheaper. The result therefore never costs more than visiting the views
/// in the given order.
pub fn tsp_order(poses: &[ViewPose], start: &ViewPose) -> Vec<usize> {
    let n = poses.len();
    if n <= 1 {
        return (0..n).collect();
    }
    let dist = DistanceTable::new(poses, start);

    let nn = nearest_neighbor(&dist, n);
    let improved_nn = two_opt(nn, &dist);
    let improved_id = two_opt((0..n).collect(), &dist);
    if dist.path_cost(&improved_nn) <= dist.path_cost(&improved_id) {
        improved_nn
    } else {
        improved_id
    }
}

/// Total open-path cost of visiting `poses` in order from `start`.
pub fn path_cost(poses: &[ViewPose], start: &ViewPose) -> f64 {
    let mut total = 0.0;
    let mut prev = start;
    for p in poses {
        total += shell_distance(prev, p).expect("poses share one camera sphere");
        prev = p;
    }
    total
}

struct DistanceTable {
    /// d[i][j] for views; last row/col is the start pose.
    d: Vec<f64>,
    n: usize,
}

impl DistanceTable {
    fn new(poses: &[ViewPose], start: &ViewPose) -> Self {
        let n = poses.len();
        let m = n + 1;
        let mut d = vec![0.0; m * m];
        for i in 0..n {
            for j in i + 1..n {
                let v = shell_distance(&poses[i], &poses[j]).expect("same-radius poses");
                d[i * m + j] = v;
                d[j * m + i] = v;
            }
        }
        for i in 0..n {
            let v = shell_distance(start, &poses[i]).expect("same-radius poses");
            d[n * m + i] = v;
            d[i * m + n] = v;
        }
        DistanceTable { d, n }
    }

    #[inline]
    fn get(&self, i: usize, j: usize) -> f64 {
        self.d[i * (self.n + 1) + j]
    }

    #[inline]
    fn from_start(&self, i: usize) -> f64 {
        self.get(self.n, i)
    }

    fn path_cost(&self, order: &[usize]) -> f64 {
        let mut total = self.from_start(order[0]);
        for w in order.windows(2) {
            total += self.get(w[0], w[1]);
        }
        total
    }
}

fn nearest_neighbor(dist: &DistanceTable, n: usize) -> Vec<usize> {
    let mut remaining: Vec<usize> = (0..n).collect();
    let mut order = Vec::with_capacity(n);
    let mut current = dist.n; // start pose slot
    while !remaining.is_empty() {
        let (slot, _) = remaining
            .iter()
            .enumerate()
            .min_by(|(_, &a), (_, &b)| {
                dist.get(current, a)
                    .total_cmp(&dist.get(current, b))
                    .then(a.cmp(&b))
            })
            .unwrap();
        current = remaining.remove(slot);
        order.push(current);
    }
    order
}

fn two_opt(mut order: Vec<usize>, dist: &DistanceTable) -> Vec<usize> {
    let n = order.len();
    loop {
        let mut best_delta = -1e-12;
        let mut best: Option<(usize, usize)> = None;
        for i in 0..n - 1 {
            let before = if i == 0 {
                dist.from_start(order[i])
            } else {
                dist.get(order[i - 1], order[i])
            };
            for j in i + 1..n {
                // Reverse order[i..=j]: the edge into the segment flips to
                // order[j]; the edge out (when any) flips to order[i].
                let into_new = if i == 0 {
                    dist.from_start(order[j])
                } else {
                    dist.get(order[i - 1], order[j])
                };
                let mut delta = into_new - before;
                if j + 1 < n {
                    delta += dist.get(order[i], order[j + 1]) - dist.get(order[j], order[j + 1]);
                }
                if delta < best_delta {
                    best_delta = delta;
                    best = Some((i, j));
                }
            }
        }
        match best {
            Some((i, j)) => order[i..=j].reverse(),
            None => return order,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::viewspace::{view_pose, ViewDirection};
    use nalgebra::Vector3;
    use rand::Rng;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn pose_of(v: Vector3<f64>) -> ViewPose {
        view_pose(&ViewDirection::new(v), 2.5).unwrap()
    }

    fn random_poses(rng: &mut ChaCha8Rng, n: usize) -> Vec<ViewPose> {
        (0..n)
            .map(|_| {
                pose_of(Vector3::new(
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0),
                    rng.random_range(-1.0..1.0f64).max(-0.99),
                ))
            })
            .collect()
    }

    #[test]
    fn single_view_is_identity() {
        let start = pose_of(Vector3::new(0.0, 0.0, 1.0));
        let poses = vec![pose_of(Vector3::new(1.0, 0.0, 0.0))];
        assert_eq!(tsp_order(&poses, &start), vec![0]);
    }

    #[test]
    fn collinear_angles_order_monotonically() {
        let start = pose_of(Vector3::new(0.0, 0.0, 1.0));
        // Three views at increasing angle from start along one great circle.
        let poses = vec![
            pose_of(Vector3::new(0.9, 0.0, 0.4)),
            pose_of(Vector3::new(0.4, 0.0, 0.9)),
            pose_of(Vector3::new(1.0, 0.0, 0.05)),
        ];
        assert_eq!(tsp_order(&poses, &start), vec![1, 0, 2]);
    }

    #[test]
    fn never_worse_than_given_order() {
        let mut rng = ChaCha8Rng::seed_from_u64(31);
        for _ in 0..100 {
            let start = pose_of(Vector3::new(0.0, 0.0, 1.0));
            let n = rng.random_range(2..15);
            let poses = random_poses(&mut rng, n);
            let order = tsp_order(&poses, &start);
            let ordered: Vec<ViewPose> = order.iter().map(|&i| poses[i]).collect();
            assert!(path_cost(&ordered, &start) <= path_cost(&poses, &start) + 1e-9);
            // Result is a permutation.
            let mut sorted = order.clone();
            sorted.sort_unstable();
            assert_eq!(sorted, (0..poses.len()).collect::<Vec<_>>());
        }
    }

    #[test]
    fn close_to_brute_force_on_small_instances() {
        let mut rng = ChaCha8Rng::seed_from_u64(77);
        for case in 0..50 {
            let start = pose_of(Vector3::new(0.0, 0.0, 1.0));
            let n = rng.random_range(2..=8);
            let poses = random_poses(&mut rng, n);
            let order = tsp_order(&poses, &start);
            let got = {
                let ordered: Vec<ViewPose> = order.iter().map(|&i| poses[i]).collect();
                path_cost(&ordered, &start)
            };
            // Exhaustive optimum by permutation.
            let mut best = f64::INFINITY;
            let mut perm: Vec<usize> = (0..n).collect();
            loop {
                let ordered: Vec<ViewPose> = perm.iter().map(|&i| poses[i]).collect();
                best = best.min(path_cost(&ordered, &start));
                if !next_permutation(&mut perm) {
                    break;
                }
            }
            assert!(
                got <= best * 1.05 + 1e-9,
                "case {case}: got {got}, optimum {best}"
            );
        }
    }

    #[test]
    fn deterministic_output() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let start = pose_of(Vector3::new(0.0, 0.0, 1.0));
        let poses = random_poses(&mut rng, 12);
        assert_eq!(tsp_order(&poses, &start), tsp_order(&poses, &start));
    }

    fn next_permutation(p: &mut [usize]) -> bool {
        let n = p.len();
        if n < 2 {
            return false;
        }
        let mut i = n - 1;
        while i > 0 && p[i - 1] >= p[i] {
            i -= 1;
        }
        if i == 0 {
            return false;
        }
        let mut j = n - 1;
        while p[j] <= p[i - 1] {
            j -= 1;
        }
        p.swap(i - 1, j);
        p[i..].reverse();
        true
    }
}
