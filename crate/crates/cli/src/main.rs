use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::Result;
use clap::{Args, Parser, Subcommand};

use cargohitch::dispatch::Strategy;
use cargohitch_cli::{compare, gen_demand, simulate, validate, RunOptions};

/// Mobility-on-demand fleet simulator with passenger/parcel cargo-hitching.
#[derive(Parser)]
#[command(name = "cargohitch", version)]
struct Cli {
    /// More log output (-v info, -vv debug).
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config file.
    config: PathBuf,
    /// Comma-separated replication seeds, overriding the config.
    #[arg(long, value_delimiter = ',')]
    seed_list: Option<Vec<u64>>,
    /// Learning passes per replication, overriding the config.
    #[arg(long)]
    iterations: Option<u32>,
    /// Output directory, overriding the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Replace an existing output directory.
    #[arg(long)]
    force: bool,
}

impl RunArgs {
    fn options(&self) -> RunOptions {
        RunOptions {
            seeds: self.seed_list.clone(),
            iterations: self.iterations,
            out: self.out.clone(),
            force: self.force,
        }
    }
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario over all seeds.
    Simulate(RunArgs),
    /// Run the scenario under several strategies and tabulate the differences.
    Compare {
        #[command(flatten)]
        run: RunArgs,
        /// Strategies to compare; the first is the reference column.
        #[arg(long, value_delimiter = ',', default_value = "BASE,SHR,SHR_IDL,SHR_RIDL")]
        strategies: Vec<Strategy>,
    },
    /// Write the scenario's requests to a CSV file.
    GenDemand {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long)]
        force: bool,
    },
    /// Check the config and every input file.
    Validate { config: PathBuf },
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Simulate(args) => {
            let dir = simulate(&args.config, &args.options())?;
            println!("results written to {}", dir.display());
        }
        Command::Compare { run, strategies } => {
            let dir = compare(&run.config, &strategies, &run.options())?;
            println!("comparison written to {}", dir.display());
        }
        Command::GenDemand { config, out, force } => {
            let n = gen_demand(&config, &out, force)?;
            println!("{n} requests written to {}", out.display());
        }
        Command::Validate { config } => println!("{}", validate(&config)?),
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let level = match cli.verbose {
        0 => "warn",
        1 => "info",
        _ => "debug",
    };
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or(level)).init();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::FAILURE
        }
    }
}
