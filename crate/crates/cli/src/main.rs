//! `qdl` — experiment harness for the hybrid quantum-classical block
//! emulator: transfer-protocol sweeps, single-block fidelity studies, a
//! gradient check, memory-infidelity fitting, and closed-form overhead
//! reports.
//!
//! Exit codes: 0 success, 1 validation error (flags, config, input files),
//! 2 runtime error or a failed gradient check.

mod commands;
mod config;
mod output;

use clap::{Args, Parser, Subcommand};
use commands::{CmdError, CmdResult};
use output::{OutputFormat, Table};
use qdl_core::qlam::NoiseMode;
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(name = "qdl", version, about)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// TOML experiment config.
    #[arg(long)]
    config: Option<PathBuf>,
    /// Base seed; overrides the config's `[noise] seed`.
    #[arg(long)]
    seed: Option<u64>,
    /// Noise mode override: exact, bounded, or stochastic.
    #[arg(long, value_parser = parse_noise)]
    noise: Option<NoiseMode>,
    /// Concurrent grid points.
    #[arg(long, default_value_t = 1)]
    jobs: usize,
    /// Output path; stdout when omitted (overrides `[output] path`).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Output format.
    #[arg(long, value_enum, default_value_t = OutputFormat::Csv)]
    format: OutputFormat,
}

fn parse_noise(s: &str) -> Result<NoiseMode, String> {
    s.parse::<NoiseMode>().map_err(|e| e.to_string())
}

#[derive(Subcommand)]
enum Command {
    /// Coefficient-transfer sweep over (dimension, rank, precision, seed).
    DcdSweep(Common),
    /// Max-norm tomography sweep over (dimension, precision, seed).
    TomoSweep(Common),
    /// Single residual or transformer block over a (noise, precision) grid.
    Block(Common),
    /// Backward-pass check against central finite differences.
    Gradcheck {
        #[command(flatten)]
        common: Common,
        /// Inject a fault at `dW[i,j]` (e.g. `--corrupt 1,2`); the check
        /// must locate it.
        #[arg(long, value_parser = parse_index_pair)]
        corrupt: Option<(usize, usize)>,
    },
    /// Fit the memory infidelity model to (n, k, infidelity) CSV points.
    QramFit {
        #[command(flatten)]
        common: Common,
        /// Input CSV of n,k,infidelity rows.
        #[arg(long)]
        input: PathBuf,
        /// Also run the two-stage procedure (per-k fit, then linear in k).
        #[arg(long)]
        two_stage: bool,
        /// Address size the fit extrapolates to.
        #[arg(long, default_value_t = 30.0)]
        target_n: f64,
    },
    /// Closed-form overhead model curves.
    OverheadReport(Common),
}

fn parse_index_pair(s: &str) -> Result<(usize, usize), String> {
    let parts: Vec<&str> = s.split(',').collect();
    if parts.len() != 2 {
        return Err("expected two comma-separated indices, e.g. 1,2".into());
    }
    let i = parts[0].trim().parse().map_err(|e| format!("{e}"))?;
    let j = parts[1].trim().parse().map_err(|e| format!("{e}"))?;
    Ok((i, j))
}

fn require_config(common: &Common) -> CmdResult<&PathBuf> {
    common
        .config
        .as_ref()
        .ok_or_else(|| commands::invalid_msg("this command requires --config"))
}

fn emit(table: &Table, common: &Common, config_path: Option<&PathBuf>) -> CmdResult<()> {
    let _ = config_path; // sweep-style commands resolve [output] themselves
    table
        .emit(common.format, common.out.as_deref())
        .map_err(CmdError::Runtime)?;
    Ok(())
}

fn run(cli: Cli) -> CmdResult<u8> {
    match cli.command {
        Command::DcdSweep(common) => {
            let path = require_config(&common)?;
            let file: config::SweepFile = config::parse_toml(path).map_err(commands::invalid)?;
            let mode = config::resolve_noise_mode(common.noise, &file.noise)
                .map_err(commands::invalid)?;
            let seed = config::resolve_seed(common.seed, &file.noise);
            let table = commands::dcd_sweep::run(&file, mode, seed, common.jobs)?;
            let out = common.out.clone().or(file.output.path.clone());
            table
                .emit(common.format, out.as_deref())
                .map_err(CmdError::Runtime)?;
            Ok(0)
        }
        Command::TomoSweep(common) => {
            let path = require_config(&common)?;
            let file: config::SweepFile = config::parse_toml(path).map_err(commands::invalid)?;
            let mode = config::resolve_noise_mode(common.noise, &file.noise)
                .map_err(commands::invalid)?;
            let seed = config::resolve_seed(common.seed, &file.noise);
            let table = commands::tomo_sweep::run(&file, mode, seed, common.jobs)?;
            let out = common.out.clone().or(file.output.path.clone());
            table
                .emit(common.format, out.as_deref())
                .map_err(CmdError::Runtime)?;
            Ok(0)
        }
        Command::Block(common) => {
            let path = require_config(&common)?;
            let file: config::BlockFile = config::parse_toml(path).map_err(commands::invalid)?;
            let seed = config::resolve_seed(common.seed, &file.noise);
            let table = commands::block::run(&file, common.noise, seed, common.jobs)?;
            let out = common.out.clone().or(file.output.path.clone());
            table
                .emit(common.format, out.as_deref())
                .map_err(CmdError::Runtime)?;
            Ok(0)
        }
        Command::Gradcheck { common, corrupt } => {
            let file: config::GradcheckFile = match &common.config {
                Some(path) => config::parse_toml(path).map_err(commands::invalid)?,
                None => config::GradcheckFile {
                    gradcheck: Default::default(),
                    noise: Default::default(),
                    output: Default::default(),
                },
            };
            let seed = config::resolve_seed(common.seed, &file.noise);
            let outcome = commands::gradcheck::run(&file, seed, corrupt)?;
            let text = match common.format {
                OutputFormat::Csv => outcome.report.clone(),
                OutputFormat::Json => format!(
                    "{}\n",
                    serde_json::to_string_pretty(&outcome.json).expect("report serializes")
                ),
            };
            let out = common.out.clone().or(file.output.path.clone());
            match out {
                Some(p) => std::fs::write(p, &text).map_err(|e| CmdError::Runtime(e.into()))?,
                None => print!("{text}"),
            }
            Ok(if outcome.passed { 0 } else { 2 })
        }
        Command::QramFit {
            common,
            input,
            two_stage,
            target_n,
        } => {
            let table = commands::qram_fit::run(&input, two_stage, target_n)?;
            emit(&table, &common, None)?;
            Ok(0)
        }
        Command::OverheadReport(common) => {
            let path = require_config(&common)?;
            let file: config::OverheadFile =
                config::parse_toml(path).map_err(commands::invalid)?;
            let table = commands::overhead_report::run(&file)?;
            let out = common.out.clone().or(file.output.path.clone());
            table
                .emit(common.format, out.as_deref())
                .map_err(CmdError::Runtime)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli) {
        Ok(code) => ExitCode::from(code),
        Err(CmdError::Validation(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
        Err(CmdError::Runtime(e)) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
