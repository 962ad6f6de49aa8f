use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use cas_cli::config::{DbList, SeedList};
use cas_cli::error::EXIT_FLAGGED;
use cas_cli::output::{write_records, write_table};
use cas_cli::runner::{open_output, summary_table, SUMMARY_COLUMNS};
use cas_cli::{
    collect_sweep, emit_trace, run_point, run_sweep, summarize, CliError, ExperimentConfig, FileConfig, Scheme,
    SweepRecord,
};
use clap::{Args, Parser, Subcommand};

/// Communication-assisted sensing power allocation experiments.
#[derive(Debug, Parser)]
#[command(name = "cas", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Solve a single (seed, SNR_c) point.
    Point {
        #[command(flatten)]
        at: PointArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep seeds × SNR_c and write one record per scheme and point.
    Sweep {
        #[command(flatten)]
        common: Common,
    },
    /// Write the per-iteration dual objective for both initializations.
    Trace {
        #[command(flatten)]
        at: PointArgs,
        #[command(flatten)]
        common: Common,
    },
    /// Sweep both schemes, then print per-SNR means and the percent gain.
    Compare {
        #[command(flatten)]
        common: Common,
    },
}

#[derive(Debug, Args)]
struct PointArgs {
    /// Channel seed (before CAS_SEED_OFFSET).
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Communication SNR in dB.
    #[arg(long, allow_hyphen_values = true, default_value_t = 10.0)]
    snr_c_db: f64,
}

#[derive(Debug, Args)]
struct Common {
    /// TOML file with configuration keys; flags take precedence.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Worker threads for sweeps (default: all cores).
    #[arg(long)]
    jobs: Option<usize>,
    #[command(flatten)]
    overrides: FileConfig,
}

fn seed_offset() -> Result<i64, CliError> {
    match std::env::var("CAS_SEED_OFFSET") {
        Ok(v) => v.trim().parse().map_err(|e| CliError::Config(format!("CAS_SEED_OFFSET={v:?}: {e}"))),
        Err(std::env::VarError::NotPresent) => Ok(0),
        Err(e) => Err(CliError::Config(format!("CAS_SEED_OFFSET: {e}"))),
    }
}

fn resolve(common: Common, point: Option<&PointArgs>) -> Result<ExperimentConfig, CliError> {
    let file = match &common.config {
        Some(p) => FileConfig::from_path(p)?,
        None => FileConfig::default(),
    };
    let mut merged = file.overlay(common.overrides);
    if let Some(at) = point {
        merged.seeds = Some(SeedList(vec![at.seed]));
        merged.snr_c_db_list = Some(DbList(vec![at.snr_c_db]));
    }
    ExperimentConfig::resolve(merged, seed_offset()?)
}

fn flagged(records: &[SweepRecord]) -> bool {
    records.iter().any(|r| !r.converged)
}

fn run(cli: Cli) -> Result<bool, CliError> {
    match cli.command {
        Command::Point { at, common } => {
            let cfg = resolve(common, Some(&at))?;
            let path = cfg.output_path.as_deref();
            let mut out = open_output(path)?;
            let records = run_point(&cfg, cfg.seeds[0], cfg.snr_c_db_list[0])?;
            write_records(&mut out, cfg.output_format, &records)
                .and_then(|_| out.flush())
                .map_err(|e| io_err(path.map_or_else(|| "<stdout>".into(), |p| p.to_path_buf()), e))?;
            Ok(flagged(&records))
        }
        Command::Sweep { common } => {
            let jobs = common.jobs;
            let cfg = resolve(common, None)?;
            Ok(flagged(&run_sweep(&cfg, jobs)?))
        }
        Command::Trace { at, common } => {
            let cfg = resolve(common, Some(&at))?;
            emit_trace(&cfg, cfg.seeds[0], cfg.snr_c_db_list[0])?;
            Ok(false)
        }
        Command::Compare { mut common } => {
            let jobs = common.jobs;
            common.overrides.scheme = Some(Scheme::Both);
            let cfg = resolve(common, None)?;
            // Records go to --output when given; stdout carries only the summary.
            let records = match cfg.output_path {
                Some(_) => run_sweep(&cfg, jobs)?,
                None => collect_sweep(&cfg, jobs)?,
            };
            let rows = summary_table(&summarize(&records));
            let mut stdout = std::io::stdout().lock();
            write_table(&mut stdout, cfg.output_format, &SUMMARY_COLUMNS, &rows)
                .map_err(|e| io_err("<stdout>".into(), e))?;
            Ok(flagged(&records))
        }
    }
}

fn io_err(path: PathBuf, source: std::io::Error) -> CliError {
    CliError::Io { path, source }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(false) => ExitCode::SUCCESS,
        Ok(true) => {
            eprintln!("warning: some records are flagged (not converged or degenerate)");
            ExitCode::from(EXIT_FLAGGED)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
