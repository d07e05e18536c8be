//! Runs one online evaluation episode end to end and prints the per-step
//! trace: an oracle-greedy planner reconstructing a hollow box it can only
//! observe through rendered depth frames.
//!
//! ```bash
//! cargo run --release --example run_episode
//! ```

use std::sync::Arc;
use std::time::Duration;

use viewbench::difficulty::{annotate_object, AnnotateOptions};
use viewbench::episode::{Budget, ObjectStore, ProtocolConfig};
use viewbench::geometry::{make_synthetic, SyntheticSpec};
use viewbench::planners::OracleGreedyPlanner;
use viewbench::runner::run_episode;
use viewbench::server::{LocalTransport, SessionRegistry};
use viewbench::viewspace::ReachabilityMask;

fn main() -> anyhow::Result<()> {
    let mesh = make_synthetic(&SyntheticSpec::OpenBox {
        wall: 0.3,
        opening: 0.6,
    })?;
    let mut store = ObjectStore::new();
    store.register("open-box", &mesh)?;
    let store = Arc::new(store);

    // The oracle consumes the ground-truth coverage matrix; everything else
    // in the episode flows through the hidden-geometry protocol.
    let out = annotate_object(
        &store.get("open-box")?.mesh,
        &AnnotateOptions {
            exact_budget: Duration::from_secs(5),
            ..AnnotateOptions::default()
        },
    )?;
    let matrix = Arc::new(out.matrix);

    let registry = Arc::new(SessionRegistry::new(store));
    let mut transport = LocalTransport::new(registry);
    let mut planner = OracleGreedyPlanner::new(matrix);
    let config = ProtocolConfig::new(Budget::automatic(), ReachabilityMask::Whole);

    let outcome = run_episode(&mut transport, &mut planner, "open-box", &config, false)?;

    println!("{:>4} {:>5} {:>8} {:>8} {:>10}", "step", "view", "sc", "nsc", "path+");
    for r in &outcome.records {
        println!(
            "{:>4} {:>5} {:>8.4} {:>8.4} {:>10.4}",
            r.step, r.view_index, r.sc, r.nsc, r.path_increment
        );
    }
    let m = &outcome.report;
    println!(
        "\nterminated: {:?} after {} views | nsc {:.4} sc {:.4} path {:.2}",
        m.termination, m.views, m.nsc, m.sc, m.path_cost
    );
    Ok(())
}
