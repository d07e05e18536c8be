//! Property tests for the metric and state-machine invariants.

use nalgebra::{Point3, Vector3};
use proptest::prelude::*;

use viewbench::episode::{ms_should_stop, nsc};
use viewbench::perception::{CellState, ObservedCloud, OccupancyGrid};
use viewbench::viewspace::{
    apply_mask, shell_distance, solve_tammes, view_pose, ReachabilityMask, ViewDirection,
};

fn unit_vector() -> impl Strategy<Value = Vector3<f64>> {
    (-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64)
        .prop_filter_map("nonzero", |(x, y, z)| {
            let v = Vector3::new(x, y, z);
            (v.norm() > 1e-3).then(|| v / v.norm())
        })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn shell_distance_is_a_shell_metric(a in unit_vector(), b in unit_vector()) {
        let pa = view_pose(&ViewDirection::new(a), 2.5).unwrap();
        let pb = view_pose(&ViewDirection::new(b), 2.5).unwrap();
        let ab = shell_distance(&pa, &pb).unwrap();
        let ba = shell_distance(&pb, &pa).unwrap();
        // Symmetric, nonnegative, zero iff same pose, at least the chord.
        prop_assert!((ab - ba).abs() < 1e-12);
        prop_assert!(ab >= 0.0);
        let chord = (pa.position - pb.position).norm();
        prop_assert!(ab >= chord - 1e-12);
        if chord == 0.0 {
            prop_assert_eq!(ab, 0.0);
        } else {
            prop_assert!(ab > 0.0);
        }
        // Never longer than the full great-circle arc.
        prop_assert!(ab <= 2.5 * std::f64::consts::PI + 1e-12);
    }

    #[test]
    fn fusion_size_equals_distinct_cells_and_is_idempotent(
        points in prop::collection::vec((-1.0..1.0f64, -1.0..1.0f64, -1.0..1.0f64), 0..400),
        res in 0.004..0.1f64,
    ) {
        let pts: Vec<Point3<f64>> = points.iter().map(|&(x, y, z)| Point3::new(x, y, z)).collect();
        let mut cloud = ObservedCloud::new(res);
        cloud.fuse(&pts);
        let first = cloud.len();
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
        prop_assert_eq!(first, distinct.len());
        cloud.fuse(&pts);
        prop_assert_eq!(cloud.len(), first);
    }

    #[test]
    fn occupancy_transitions_form_a_monotone_lattice(order in Just(()).prop_perturb(|_, mut rng| {
        let mut idx: Vec<usize> = (0..8).collect();
        for i in (1..idx.len()).rev() {
            let j = (rng.next_u32() as usize) % (i + 1);
            idx.swap(i, j);
        }
        idx
    })) {
        // Replay the same renders in a random order; occupied counts never
        // decrease and occupied cells never revert to free.
        use std::sync::LazyLock;
        use viewbench::geometry::{make_synthetic, RayAccelerator, SyntheticSpec};
        use viewbench::perception::{render_depth, update_occupancy, DepthImage};
        use viewbench::viewspace::CameraIntrinsics;

        static FRAMES: LazyLock<(CameraIntrinsics, Vec<DepthImage>)> = LazyLock::new(|| {
            let mesh = make_synthetic(&SyntheticSpec::Torus { major: 0.7, minor: 0.3, level: 2 }).unwrap();
            let acc = RayAccelerator::build(&mesh);
            let intr = CameraIntrinsics::new(48, 48, 45.0, 5.0).unwrap();
            let views = solve_tammes(8, 7, 300).unwrap();
            let frames = views
                .directions
                .iter()
                .map(|d| render_depth(&acc, &view_pose(d, 2.5).unwrap(), &intr))
                .collect();
            (intr, frames)
        });

        let (intr, frames) = &*FRAMES;
        let mut grid = OccupancyGrid::new(0.15);
        let mut occupied_cells: std::collections::HashSet<[i32; 3]> = std::collections::HashSet::new();
        let mut last_count = 0usize;
        for &i in &order {
            update_occupancy(&mut grid, &frames[i], intr);
            let count = grid.count(CellState::Occupied);
            prop_assert!(count >= last_count, "occupied count dropped");
            last_count = count;
            for c in &occupied_cells {
                prop_assert_eq!(grid.state(*c), CellState::Occupied);
            }
            let d = grid.dim() as i32;
            for x in 0..d {
                for y in 0..d {
                    for z in 0..d {
                        if grid.state([x, y, z]) == CellState::Occupied {
                            occupied_cells.insert([x, y, z]);
                        }
                    }
                }
            }
        }
    }

    #[test]
    fn mask_application_is_idempotent(n in 4usize..48, seed in 0u64..20) {
        let views = solve_tammes(n, seed, 200).unwrap();
        for mask in [ReachabilityMask::Whole, ReachabilityMask::Quarter] {
            if let Ok((idx, restricted)) = apply_mask(&views, &mask) {
                // Order preserved and within range.
                prop_assert!(idx.windows(2).all(|w| w[0] < w[1]));
                // Re-applying to the restricted set keeps every direction.
                let again = apply_mask(&restricted, &mask);
                prop_assert!(again.is_ok());
                prop_assert_eq!(again.unwrap().0.len(), idx.len());
            }
        }
    }

    #[test]
    fn quarter_admits_about_a_quarter(n in 64usize..200) {
        let views = solve_tammes(n, 7, 300).unwrap();
        let (idx, _) = apply_mask(&views, &ReachabilityMask::Quarter).unwrap();
        let frac = idx.len() as f64 / n as f64;
        prop_assert!((0.20..=0.30).contains(&frac), "fraction {}", frac);
    }

    #[test]
    fn nsc_stays_clamped(sc in 0.0..1.0f64, sc_ref in 0.01..1.0f64) {
        let v = nsc(sc, sc_ref).unwrap();
        prop_assert!((0.0..=1.0).contains(&v));
        if sc >= sc_ref {
            prop_assert_eq!(v, 1.0);
        }
    }

    #[test]
    fn stabilization_needs_three_low_gain_steps(counts in prop::collection::vec(1usize..100_000, 4..20)) {
        let stopped = ms_should_stop(&counts);
        let n = counts.len();
        let manual = (n - 3..n).all(|i| {
            (counts[i] as f64 - counts[i - 1] as f64) / (counts[i - 1].max(1) as f64) < 0.01
        });
        prop_assert_eq!(stopped, manual);
    }
}
