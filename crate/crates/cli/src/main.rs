// SPDX-License-Identifier: Apache-2.0

//! `spin-transfer`: chain geometry, transfer traces, parameter sweeps,
//! window analysis and the full-space cross-check from one binary.

mod commands;
mod config;
mod exit;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use crate::config::RunConfig;
use crate::exit::CliError;

#[derive(Parser, Debug)]
#[command(name = "spin-transfer", version, about = "Excitation transfer along dipolar spin chains")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Write node coordinates, one `x y` pair per line.
    Chain(RunArgs),
    /// Transfer probability trace (or every site with --sites).
    Evolve(RunArgs),
    /// Scan a parameter grid; writes CSV plus a JSON sidecar next to --out.
    Sweep {
        #[command(flatten)]
        args: RunArgs,
        /// Refine the grid argmax and report it on stderr.
        #[arg(long)]
        refine: bool,
    },
    /// J_M, deviation ratios and the minimal window for every M.
    Approx(RunArgs),
    /// Recompute the three published optima and check them.
    Table1 {
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare reduced dynamics against the full 2^N space on random chains.
    OracleCheck(RunArgs),
}

/// Every flag is also a config-file key of the same name.
#[derive(clap::Args, Debug, Default)]
struct RunArgs {
    /// Flat `key = value` file applied before the flags.
    #[arg(long)]
    config: Option<PathBuf>,
    /// zigzag | alternating | file
    #[arg(long)]
    chain: Option<String>,
    /// Number of nodes (maximum N for oracle-check).
    #[arg(long)]
    n: Option<String>,
    /// Zigzag offset Y.
    #[arg(long)]
    y: Option<String>,
    /// Alternating bond length, 0 < alpha < 2.
    #[arg(long)]
    alpha: Option<String>,
    /// Geometry file for --chain file.
    #[arg(long)]
    geometry: Option<String>,
    /// Field angle to the chain axis, radians.
    #[arg(long)]
    chi: Option<String>,
    /// Interaction window: an integer, `all` or `auto`.
    #[arg(long)]
    m: Option<String>,
    /// Registration window T.
    #[arg(long = "t-max")]
    t_max: Option<String>,
    /// Tolerance for the minimal window.
    #[arg(long)]
    epsilon: Option<String>,
    /// `lo:hi:count` or a comma-separated list of times.
    #[arg(long = "tau-grid")]
    tau_grid: Option<String>,
    /// Emit every site probability instead of the last node only.
    #[arg(long)]
    sites: bool,
    /// Output file (stdout when absent).
    #[arg(long)]
    out: Option<String>,
    /// Worker threads for sweep.
    #[arg(long)]
    workers: Option<String>,
    /// Seed for randomized checks.
    #[arg(long)]
    seed: Option<String>,
    /// Sweep axis `name:lo:hi:count` with name Y, chi or alpha; repeatable.
    #[arg(long)]
    grid: Vec<String>,
    /// zigzag-time | alternating-time
    #[arg(long)]
    mode: Option<String>,
    /// Random instances for oracle-check.
    #[arg(long)]
    instances: Option<String>,
    /// Random times per oracle-check instance.
    #[arg(long)]
    taus: Option<String>,
    /// Print the resolved configuration in config-file form and exit.
    #[arg(long = "dump-config")]
    dump_config: bool,
}

impl RunArgs {
    fn resolve(&self) -> Result<RunConfig, CliError> {
        let mut config = RunConfig::default();
        if let Some(path) = &self.config {
            let text = std::fs::read_to_string(path)
                .map_err(|e| CliError::usage(format!("cannot read {}: {e}", path.display())))?;
            config.apply_text(&text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))?;
        }
        let single = [
            ("chain", &self.chain),
            ("n", &self.n),
            ("y", &self.y),
            ("alpha", &self.alpha),
            ("geometry", &self.geometry),
            ("chi", &self.chi),
            ("m", &self.m),
            ("t-max", &self.t_max),
            ("epsilon", &self.epsilon),
            ("tau-grid", &self.tau_grid),
            ("out", &self.out),
            ("workers", &self.workers),
            ("seed", &self.seed),
            ("mode", &self.mode),
            ("instances", &self.instances),
            ("taus", &self.taus),
        ];
        for (key, value) in single {
            if let Some(v) = value {
                config.set(key, v).map_err(|e| CliError::usage(format!("--{e}")))?;
            }
        }
        if self.sites {
            config.sites = true;
        }
        if !self.grid.is_empty() {
            // Flags replace axes from the config file rather than adding to them.
            config.grid.clear();
            for g in &self.grid {
                config.set("grid", g).map_err(|e| CliError::usage(format!("--{e}")))?;
            }
        }
        Ok(config)
    }
}

fn run(cli: Cli) -> Result<(), CliError> {
    let args = match &cli.command {
        Command::Chain(a) | Command::Evolve(a) | Command::Approx(a) | Command::OracleCheck(a) => Some(a),
        Command::Sweep { args, .. } => Some(args),
        Command::Table1 { .. } => None,
    };
    if let Some(a) = args.filter(|a| a.dump_config) {
        print!("{}", a.resolve()?.serialize());
        return Ok(());
    }
    match cli.command {
        Command::Chain(args) => commands::chain(&args.resolve()?),
        Command::Evolve(args) => commands::evolve(&args.resolve()?),
        Command::Sweep { args, refine } => commands::sweep_cmd(&args.resolve()?, refine),
        Command::Approx(args) => commands::approx(&args.resolve()?),
        Command::Table1 { out } => commands::table1(out.as_deref()),
        Command::OracleCheck(args) => commands::oracle_check(&args.resolve()?),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(exit::USAGE),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
