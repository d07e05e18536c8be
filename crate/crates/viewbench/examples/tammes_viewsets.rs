//! Solves Tammes configurations for several sizes and reports packing
//! quality against the known small-N optima.
//!
//! ```bash
//! cargo run --release --example tammes_viewsets
//! ```

use viewbench::viewspace::{default_iterations, solve_tammes};

fn main() -> anyhow::Result<()> {
    println!("{:>5} {:>12} {:>12}", "N", "min angle", "known best");
    for (n, known) in [
        (2usize, Some(180.0)),
        (4, Some(109.47)),
        (6, Some(90.0)),
        (12, Some(63.43)),
        (24, Some(43.69)),
        (128, None),
        (360, None),
    ] {
        let set = solve_tammes(n, 7, default_iterations(n))?;
        let deg = set.min_pairwise_angle().to_degrees();
        match known {
            Some(k) => println!("{n:>5} {deg:>11.3}\u{b0} {k:>11.2}\u{b0}"),
            None => println!("{n:>5} {deg:>11.3}\u{b0} {:>12}", "-"),
        }
    }

    // View sets serialize to JSON for caching and external tools.
    let set = solve_tammes(16, 7, default_iterations(16))?;
    let json = serde_json::to_string_pretty(&set)?;
    println!("\ntammes-16 as JSON (first lines):");
    for line in json.lines().take(8) {
        println!("  {line}");
    }
    Ok(())
}
