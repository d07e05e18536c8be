//! Compares the built-in planners on one object under a fixed budget.
//!
//! ```bash
//! cargo run --release --example compare_planners
//! ```

use std::sync::Arc;
use std::time::Duration;

use viewbench::difficulty::{annotate_object, AnnotateOptions};
use viewbench::episode::{Budget, ObjectStore, ProtocolConfig};
use viewbench::geometry::{make_synthetic, SyntheticSpec};
use viewbench::planners::{build_planner, PlannerSpec};
use viewbench::runner::run_episode;
use viewbench::server::{LocalTransport, SessionRegistry};
use viewbench::viewspace::ReachabilityMask;

fn main() -> anyhow::Result<()> {
    let mesh = make_synthetic(&SyntheticSpec::Torus {
        major: 0.7,
        minor: 0.3,
        level: 4,
    })?;
    let mut store = ObjectStore::new();
    store.register("torus", &mesh)?;
    let store = Arc::new(store);
    let out = annotate_object(
        &store.get("torus")?.mesh,
        &AnnotateOptions {
            exact_budget: Duration::from_secs(5),
            ..AnnotateOptions::default()
        },
    )?;
    let matrix = Arc::new(out.matrix);
    let registry = Arc::new(SessionRegistry::new(store));

    let config = ProtocolConfig::new(Budget::Fixed(10), ReachabilityMask::Whole);
    let planner_names = [
        "random-tsp",
        "infogain",
        "infogain-mov",
        "oracle-greedy",
        "scp-oracle",
        "mcp-oracle",
        "scp-frontier",
    ];

    println!(
        "{:<14} {:>6} {:>8} {:>8} {:>9} {:>12}",
        "planner", "views", "nsc", "sc", "path", "stopped"
    );
    for name in planner_names {
        let spec = PlannerSpec {
            name: name.into(),
            k: None,
            lambda: None,
            seed: Some(11),
            policy: None,
        };
        let mut planner = build_planner(&spec, 10, Some(Arc::clone(&matrix)))
            .map_err(|e| anyhow::anyhow!(e))?;
        let mut transport = LocalTransport::new(Arc::clone(&registry));
        let outcome = run_episode(&mut transport, planner.as_mut(), "torus", &config, false)?;
        let m = &outcome.report;
        println!(
            "{:<14} {:>6} {:>8.4} {:>8.4} {:>9.2} {:>12}",
            name,
            m.views,
            m.nsc,
            m.sc,
            m.path_cost,
            format!("{:?}", m.termination).to_lowercase()
        );
    }
    Ok(())
}
