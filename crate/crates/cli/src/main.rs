#![allow(clippy::neg_cmp_op_on_partial_ord)]

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

mod commands;
mod config;

use config::RunConfig;

/// Spline trajectory optimisation with prior reuse.
#[derive(Debug, Parser)]
#[command(name = "trajopt", version)]
struct Cli {
    /// Flat JSON configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Root seed; overrides the config value.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Directory for output files.
    #[arg(long, global = true, default_value = ".")]
    out: PathBuf,
    /// Configuration override, repeatable.
    #[arg(long = "set", value_name = "KEY=VALUE", global = true)]
    set: Vec<String>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Optimise random scenarios and write a prior database.
    BuildDb {
        /// Number of records.
        #[arg(long)]
        count: usize,
        /// Database file name inside the output directory.
        #[arg(long, default_value = "db.jsonl")]
        name: String,
    },
    /// Plan one scenario warm-started from a database.
    Plan(PlanArgs),
    /// Warm against cold convergence on held-out scenarios.
    BenchPrior {
        #[arg(long)]
        db: PathBuf,
        #[arg(long, default_value_t = 20)]
        holdout: usize,
    },
    /// Kernel × acquisition grid.
    Sweep {
        #[arg(long, default_value_t = 20)]
        scenarios: usize,
    },
    /// Optimised control points around fixed obstacles.
    Density {
        #[arg(long, default_value_t = 100)]
        combos: usize,
    },
    /// Objective over a lattice of single control points.
    Contour {
        #[arg(long, default_value_t = 50)]
        grid: usize,
    },
}

#[derive(Debug, Args)]
pub struct PlanArgs {
    #[arg(long)]
    pub db: PathBuf,
    /// Start position `x,y` in cm.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub sp: (f64, f64),
    /// End position `x,y` in cm.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true)]
    pub ep: (f64, f64),
    /// Start velocity `x,y` in cm/s.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, default_value = "0,0")]
    pub sv: (f64, f64),
    /// End velocity `x,y` in cm/s.
    #[arg(long, value_parser = parse_pair, allow_hyphen_values = true, default_value = "0,0")]
    pub ev: (f64, f64),
    /// Obstacle position `x,y` in cm, repeatable.
    #[arg(long = "obstacle", value_parser = parse_pair, allow_hyphen_values = true)]
    pub obstacles: Vec<(f64, f64)>,
    /// Write the polyline, velocity profile and simulated trace.
    #[arg(long)]
    pub export: bool,
}

fn parse_pair(s: &str) -> Result<(f64, f64), String> {
    let (a, b) = s.split_once(',').ok_or_else(|| format!("expected x,y, got `{s}`"))?;
    let x = a.trim().parse::<f64>().map_err(|e| e.to_string())?;
    let y = b.trim().parse::<f64>().map_err(|e| e.to_string())?;
    Ok((x, y))
}

fn run(cli: Cli) -> anyhow::Result<()> {
    let mut cfg = RunConfig::load(cli.config.as_deref(), &cli.set)?;
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    std::fs::create_dir_all(&cli.out)?;
    let out = cli.out.as_path();
    match cli.command {
        Command::BuildDb { count, name } => commands::build_db(&cfg, count, &out.join(name)),
        Command::Plan(args) => commands::plan(&cfg, &args, out),
        Command::BenchPrior { db, holdout } => commands::bench_prior(&cfg, &db, holdout, out),
        Command::Sweep { scenarios } => commands::sweep(&cfg, scenarios, out),
        Command::Density { combos } => commands::density(&cfg, combos, out),
        Command::Contour { grid } => commands::contour(&cfg, grid, out),
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::FAILURE
        }
    }
}
