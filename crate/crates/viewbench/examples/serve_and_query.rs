//! Serves the evaluation protocol over HTTP on an ephemeral port, drives a
//! remote episode through the HTTP client, and shows that the remote trace
//! matches an in-process run exactly.
//!
//! ```bash
//! cargo run --release --example serve_and_query
//! ```

use std::sync::Arc;

use viewbench::episode::{Budget, ObjectStore, ProtocolConfig};
use viewbench::geometry::{make_synthetic, SyntheticSpec};
use viewbench::planners::RandomTspPlanner;
use viewbench::runner::run_episode;
use viewbench::server::{HttpServer, HttpTransport, LocalTransport, SessionRegistry};
use viewbench::viewspace::ReachabilityMask;

fn main() -> anyhow::Result<()> {
    let mesh = make_synthetic(&SyntheticSpec::Cube { level: 4 })?;
    let mut store = ObjectStore::new();
    store.register("cube", &mesh)?;
    let registry = Arc::new(SessionRegistry::new(Arc::new(store)));

    let server = HttpServer::bind(Arc::clone(&registry), "127.0.0.1:0", 2)?;
    println!("serving on {}", server.base_url());

    let config = ProtocolConfig::new(Budget::Fixed(5), ReachabilityMask::Whole);

    let remote = {
        let mut transport = HttpTransport::new(server.base_url());
        let mut planner = RandomTspPlanner::new(5, 3);
        run_episode(&mut transport, &mut planner, "cube", &config, false)?
    };
    println!("remote episode: {} views, nsc {:.4}", remote.report.views, remote.report.nsc);

    let local = {
        let mut transport = LocalTransport::new(Arc::clone(&registry));
        let mut planner = RandomTspPlanner::new(5, 3);
        run_episode(&mut transport, &mut planner, "cube", &config, false)?
    };

    assert_eq!(remote.records, local.records);
    assert_eq!(remote.report, local.report);
    println!("remote and in-process traces are identical ({} steps)", remote.records.len());

    server.shutdown();
    Ok(())
}
