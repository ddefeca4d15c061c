//! `cake`: scene synthesis, CAKE acquisition, reconstruction and reports.

mod config;
mod error;
mod manifest;
mod stages;

use std::fs;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use config::RunConfig;
use error::CliError;

#[derive(Parser)]
#[command(
    name = "cake",
    version,
    about = "Coded aperture keyed exposure video simulation"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Config file of `[section]` headers and `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// Overrides `[run] seed`.
    #[arg(long, global = true)]
    seed: Option<u64>,
    /// Overrides `[run] out`.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Reconstruction method for `recon`: spline, cake, dsm-cake, of-cake,
    /// tvl1 (cake and dsm-cake), of, coarse-only or all.
    #[arg(long, global = true)]
    method: Option<String>,
}

#[derive(Subcommand, Clone, Copy, PartialEq, Eq)]
enum Command {
    /// Render the synthetic scene.
    Synth,
    /// Draw the random and dual-scale mask sequences.
    Masks,
    /// Simulate the CAKE and conventional measurements.
    Acquire,
    /// Closed-form low-rate preview from the dual-scale measurements.
    Coarse,
    /// Upsample the preview and estimate optical flow on it.
    Flow,
    /// Reconstruct the full-rate video.
    Recon,
    /// RMSE table over the scored region.
    Metrics,
    /// Gram concentration and disc-bound report.
    Ripcheck,
    /// Dump cubes, residuals and difference frames as 16-bit PGM.
    Export,
    /// Every stage from synth to metrics.
    Run,
}

impl Command {
    fn name(self) -> &'static str {
        match self {
            Command::Synth => "synth",
            Command::Masks => "masks",
            Command::Acquire => "acquire",
            Command::Coarse => "coarse",
            Command::Flow => "flow",
            Command::Recon => "recon",
            Command::Metrics => "metrics",
            Command::Ripcheck => "ripcheck",
            Command::Export => "export",
            Command::Run => "run",
        }
    }
}

fn load(cli: &Cli) -> Result<RunConfig, CliError> {
    let mut cfg = match &cli.config {
        Some(path) => {
            let text = fs::read_to_string(path)
                .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
            RunConfig::parse(&text)
                .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?
        }
        None => RunConfig::default(),
    };
    if let Some(seed) = cli.seed {
        cfg.seed = seed;
    }
    if let Some(out) = &cli.out {
        cfg.out = out.clone();
    }
    Ok(cfg)
}

fn execute(cli: &Cli) -> Result<(), CliError> {
    let cfg = load(cli)?;
    let method = cli.method.as_deref();
    if method.is_some() && !matches!(cli.command, Command::Recon | Command::Export) {
        return Err(CliError::Config(
            "--method only applies to recon and export".into(),
        ));
    }
    let files = match cli.command {
        Command::Synth => stages::synth(&cfg)?,
        Command::Masks => stages::masks(&cfg)?,
        Command::Acquire => stages::acquire(&cfg)?,
        Command::Coarse => stages::coarse(&cfg)?,
        Command::Flow => stages::flow(&cfg)?,
        Command::Recon => stages::recon(&cfg, method)?,
        Command::Metrics => {
            let (files, table) = stages::metrics(&cfg)?;
            print!("{table}");
            files
        }
        Command::Ripcheck => {
            let (files, report) = stages::ripcheck(&cfg)?;
            print!("{report}");
            files
        }
        Command::Export => stages::export(&cfg, method)?,
        Command::Run => {
            let (files, table) = stages::run_all(&cfg)?;
            print!("{table}");
            files
        }
    };
    let path = manifest::write(&cfg, cli.command.name(), method, &files)?;
    eprintln!(
        "{}: wrote {} files, manifest {}",
        cli.command.name(),
        files.outputs.len(),
        path.display()
    );
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(&cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            e.exit_code()
        }
    }
}
