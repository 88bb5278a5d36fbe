//! relcov: dimension bandwidth, map reliability, and allocate rates for
//! dense local wireless deployments.
//!
//! Every run reads one TOML config (all sections optional), applies an
//! optional scenario preset, writes its artifacts into `--out-dir`, and
//! finishes with a manifest recording the resolved config, the seed, and
//! a digest of every output file. Re-running with the manifest's config
//! and seed reproduces the outputs byte for byte, at any worker count.

mod commands;
mod gnuplot;
mod manifest;
mod presets;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use relcov::config::RunConfig;
use relcov::{Error, Result};

use crate::presets::Figure;

#[derive(Debug, Parser)]
#[command(name = "relcov", version, about = "Reliability coverage toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Option<Command>,

    /// Master seed; every random stream in a run derives from it.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,

    /// Worker threads (0 = one per core). Changes speed, never results.
    #[arg(long, global = true, default_value_t = 0)]
    workers: usize,

    /// Directory for output artifacts.
    #[arg(long, global = true, default_value = "out")]
    out_dir: PathBuf,

    /// TOML run configuration; defaults apply when omitted.
    #[arg(long, global = true)]
    config: Option<PathBuf>,

    /// Scenario preset layered on top of the config.
    #[arg(long, global = true, value_enum)]
    figure: Option<Figure>,

    /// Print the fully resolved configuration as TOML and exit.
    #[arg(long, global = true)]
    dump_params: bool,

    /// Also write a ready-to-run gnuplot script next to the data.
    #[arg(long, global = true)]
    gnuplot: bool,
}

#[derive(Debug, Clone, Subcommand)]
enum Command {
    /// Minimum bandwidth meeting the coverage target, per density.
    Dimension,
    /// Coverage over a bandwidth x density x reliability-target grid.
    Sweep,
    /// Per-point reliability map for one deployment.
    Relmap,
    /// Outage map from measurement traces via tail extrapolation.
    Evtmap {
        /// Measurement input (.csv or .json); simulated when omitted.
        #[arg(long)]
        measurements: Option<PathBuf>,
    },
    /// Rate map and coverage verdict at the configured outage budget.
    Allocate {
        /// Measurement input (.csv or .json); simulated when omitted.
        #[arg(long)]
        measurements: Option<PathBuf>,
        /// Previously emitted outage map (.json); verdict only.
        #[arg(long, conflicts_with = "measurements")]
        outage_map: Option<PathBuf>,
    },
}

impl Command {
    fn name(&self) -> &'static str {
        match self {
            Command::Dimension => "dimension",
            Command::Sweep => "sweep",
            Command::Relmap => "relmap",
            Command::Evtmap { .. } => "evtmap",
            Command::Allocate { .. } => "allocate",
        }
    }
}

/// Exit codes are part of the interface: 0 success, 2 configuration or
/// I/O problem, 3 infeasible coverage target, 4 not enough data for an
/// estimator, 5 internal numeric failure.
fn exit_code_for(err: &Error) -> u8 {
    match err {
        Error::InvalidArgument(_) | Error::InvalidScenario(_) | Error::Io(_) | Error::Csv(_) => 2,
        Error::TargetInfeasible { .. } => 3,
        Error::InsufficientData(_) | Error::FitFailed(_) | Error::ResolutionLimit { .. } => 4,
        Error::Numeric(_) => 5,
    }
}

fn run(cli: &Cli) -> Result<()> {
    let mut cfg = match &cli.config {
        Some(path) => RunConfig::load(path)?,
        None => RunConfig::default(),
    };
    if let Some(figure) = cli.figure {
        presets::apply(&mut cfg, figure);
        cfg.validate()?;
    }

    if cli.dump_params {
        print!("{}", cfg.to_toml_string()?);
        return Ok(());
    }

    let command = cli.command.as_ref().ok_or_else(|| {
        Error::InvalidArgument("missing subcommand (try --help)".into())
    })?;

    if cli.workers > 0 {
        rayon::ThreadPoolBuilder::new()
            .num_threads(cli.workers)
            .build_global()
            .map_err(|e| Error::InvalidArgument(format!("worker pool: {e}")))?;
    }

    std::fs::create_dir_all(&cli.out_dir)?;
    let started = Instant::now();
    let ctx = commands::Ctx {
        cfg: &cfg,
        seed: cli.seed,
        out_dir: &cli.out_dir,
        gnuplot: cli.gnuplot,
    };
    let outputs = match command {
        Command::Dimension => commands::dimension(&ctx)?,
        Command::Sweep => commands::sweep(&ctx)?,
        Command::Relmap => commands::relmap(&ctx)?,
        Command::Evtmap { measurements } => commands::evtmap(&ctx, measurements.as_deref())?,
        Command::Allocate {
            measurements,
            outage_map,
        } => commands::allocate(&ctx, measurements.as_deref(), outage_map.as_deref())?,
    };

    let manifest = manifest::RunManifest::collect(
        command.name(),
        &cfg,
        cli.seed,
        started.elapsed().as_secs_f64(),
        &cli.out_dir,
        &outputs,
    )?;
    manifest.write(&cli.out_dir)?;
    for file in &outputs {
        println!("wrote {}", cli.out_dir.join(file).display());
    }
    println!("wrote {}", cli.out_dir.join(manifest::MANIFEST_FILE).display());
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err}");
            ExitCode::from(exit_code_for(&err))
        }
    }
}
