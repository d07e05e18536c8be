//! Thin command-line front end; all logic lives in the library.

use anyhow::Result;
use clap::{Parser, Subcommand};

use viewbench::cli::{self, RunConfig, SplitMode};

#[derive(Parser)]
#[command(name = "viewbench", version, about = "Object-centric view-planning benchmark engine")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Annotate every mesh in the object directory with difficulty.
    Annotate {
        #[arg(long)]
        config: std::path::PathBuf,
    },
    /// Run every (object x planner) episode and build aggregate tables.
    Evaluate {
        #[arg(long)]
        config: std::path::PathBuf,
    },
    /// Split the annotated pool into test/train id lists.
    Split {
        #[arg(long)]
        config: std::path::PathBuf,
        #[arg(long)]
        quota: usize,
        #[arg(long, default_value = "stratified")]
        mode: SplitMode,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Compute observable-surface references for the configured mask.
    Reference {
        #[arg(long)]
        config: std::path::PathBuf,
    },
    /// Serve the evaluation protocol over HTTP.
    Serve {
        #[arg(long)]
        config: std::path::PathBuf,
        /// Listen address; VIEWBENCH_ADDR overrides the default.
        #[arg(long, default_value = "127.0.0.1:7700")]
        addr: String,
        #[arg(long, default_value_t = 4)]
        workers: usize,
    },
    /// Rebuild aggregate tables from existing traces and reports.
    Report {
        #[arg(long)]
        config: std::path::PathBuf,
    },
    /// Print the default configuration as JSON.
    Defaults,
}

fn main() -> Result<()> {
    let args = Args::parse();
    match args.command {
        Command::Annotate { config } => {
            let summary = cli::cmd_annotate(&RunConfig::load(config)?)?;
            println!("{}", serde_json::to_string_pretty(&summary)?);
        }
        Command::Evaluate { config } => {
            let rows = cli::cmd_evaluate(&RunConfig::load(config)?)?;
            for r in &rows {
                println!(
                    "{}: nsc {:.4} sc {:.4} path {:.2} views {:.1} [{}]",
                    r.planner, r.mean_nsc, r.mean_sc, r.mean_path_cost, r.mean_views, r.time_bin
                );
            }
        }
        Command::Split {
            config,
            quota,
            mode,
            seed,
        } => {
            let artifact = cli::cmd_split(&RunConfig::load(config)?, quota, mode, seed)?;
            println!(
                "test {} objects / train {} objects",
                artifact.test.len(),
                artifact.train.len()
            );
        }
        Command::Reference { config } => {
            let refs = cli::cmd_reference(&RunConfig::load(config)?)?;
            for (k, v) in &refs {
                println!("{k} -> {v}");
            }
        }
        Command::Serve {
            config,
            addr,
            workers,
        } => {
            let addr = std::env::var("VIEWBENCH_ADDR").unwrap_or(addr);
            cli::cmd_serve(&RunConfig::load(config)?, &addr, workers)?;
        }
        Command::Report { config } => {
            cli::cmd_report(&RunConfig::load(config)?)?;
            println!("aggregate tables rebuilt");
        }
        Command::Defaults => {
            println!("{}", cli::default_config_json());
        }
    }
    Ok(())
}
