//! Command-line front end: `simulate`, `fit`, `summarize`, `replicate`.
//! All logic lives in the library; this binary only parses arguments and
//! maps errors to exit codes (2 input, 3 numerical).

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use ctmsm::commands::{
    fit_command, replicate_command, simulate_command, summarize_command, CommandOpts, Scenario,
};
use ctmsm::config::RunConfig;
use ctmsm::Error;

#[derive(Parser)]
#[command(
    name = "ctmsm",
    about = "Bayesian multi-state models for panel data",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct Common {
    /// Output directory for generated files.
    #[arg(long, default_value = "ctmsm-out")]
    out: PathBuf,
    /// Override the seed from the configuration file.
    #[arg(long)]
    seed: Option<u64>,
    /// Worker threads (values above 1 enable parallel updates).
    #[arg(long)]
    threads: Option<usize>,
    /// Suppress progress output.
    #[arg(long)]
    quiet: bool,
}

impl Common {
    fn opts(&self) -> CommandOpts {
        CommandOpts {
            out_dir: self.out.clone(),
            seed: self.seed,
            threads: self.threads,
            quiet: self.quiet,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Simulate a panel dataset from a configured true model.
    Simulate {
        /// Configuration file with [model], [simulate] and [truth] sections.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Fit a model to a panel CSV file.
    Fit {
        /// Panel data CSV (columns id,time,state,end_kind).
        #[arg(long)]
        data: PathBuf,
        /// Configuration file with at least a [model] section.
        #[arg(long)]
        config: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Recompute the summary table from a stored draws CSV.
    Summarize {
        /// Draws CSV produced by `fit`.
        #[arg(long)]
        data: PathBuf,
        #[command(flatten)]
        common: Common,
    },
    /// Run a simulation-study scenario end to end and aggregate it.
    Replicate {
        /// Scenario: sm-death-unknown, sm-death-known, or im.
        #[arg(value_parser = parse_scenario)]
        scenario: Scenario,
        /// Individuals per replicate.
        #[arg(long, default_value_t = 100)]
        n: usize,
        /// Number of simulated data sets.
        #[arg(long, default_value_t = 20)]
        replicates: usize,
        /// Sampler iterations per replicate.
        #[arg(long, default_value_t = 5000)]
        iterations: usize,
        #[command(flatten)]
        common: Common,
    },
}

fn parse_scenario(s: &str) -> Result<Scenario, String> {
    s.parse().map_err(|e: Error| e.to_string())
}

fn run(cli: Cli) -> Result<(), Error> {
    match cli.command {
        Command::Simulate { config, common } => {
            let config = RunConfig::load(&config)?;
            simulate_command(&config, &common.opts())?;
        }
        Command::Fit {
            data,
            config,
            common,
        } => {
            let config = RunConfig::load(&config)?;
            fit_command(&data, &config, &common.opts())?;
        }
        Command::Summarize { data, common } => {
            summarize_command(&data, &common.opts())?;
        }
        Command::Replicate {
            scenario,
            n,
            replicates,
            iterations,
            common,
        } => {
            let seed = common.seed.unwrap_or(1);
            replicate_command(scenario, n, replicates, iterations, seed, &common.opts())?;
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error kind={} exit={}: {e}", e.kind(), e.exit_code());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
