//! `vstat`: kernel inspection, expansion building, decomposition,
//! simulation, bound evaluation, calibration, and report emission over one
//! self-describing JSON config. Flags only override config keys.
//!
//! Exit codes: 0 success, 1 validation/usage error, 2 numeric or resource
//! error. `VSTAT_THREADS` caps the worker pool.

mod commands;

use clap::{Parser, Subcommand};
use std::path::PathBuf;
use std::process::ExitCode;

#[derive(Parser)]
#[command(
    name = "vstat",
    about = "Dependent V-statistics: feature expansions, decompositions, tail bounds",
    version
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, clap::Args)]
struct ConfigArgs {
    /// Path to the JSON experiment config.
    #[arg(long)]
    config: PathBuf,
    /// Override a top-level config key, e.g. --set R=500 or
    /// --set nList=[128,256]. Values parse as JSON, falling back to string.
    #[arg(long = "set", value_name = "KEY=VALUE")]
    overrides: Vec<String>,
    /// Override the master seed.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Print a kernel's catalog entry: base value, transform mass, flags.
    KernelInfo {
        /// Registry name: gaussian | cauchy | laplacian | hat | cosine.
        name: String,
        /// Kernel order.
        #[arg(long, default_value_t = 2)]
        m: usize,
        /// Argument dimension.
        #[arg(long, default_value_t = 1)]
        d: usize,
    },
    /// Build a feature expansion and measure its uniform error.
    Approx(ConfigArgs),
    /// Hoeffding-decompose the configured kernel and check degeneracy.
    Decompose(ConfigArgs),
    /// Generate a sample path and write it as CSV.
    Simulate(ConfigArgs),
    /// Evaluate tail-bound constants and write the bound curve.
    Bound(ConfigArgs),
    /// Run a tail experiment and calibrate the bound constant.
    Calibrate(ConfigArgs),
    /// Full pipeline: calibrate, check dominance across n, scaling study.
    Report(ConfigArgs),
}

fn main() -> ExitCode {
    if let Ok(threads) = std::env::var("VSTAT_THREADS") {
        if let Ok(n) = threads.parse::<usize>() {
            let _ = rayon::ThreadPoolBuilder::new()
                .num_threads(n.max(1))
                .build_global();
        }
    }
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // clap defaults to exit code 2; the contract here is 1 for any
            // usage problem, with help/version staying successful
            use clap::error::ErrorKind;
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    let result = match cli.command {
        Command::KernelInfo { name, m, d } => commands::kernel_info(&name, m, d),
        Command::Approx(args) => commands::approx(&args.config, &args.overrides, args.seed),
        Command::Decompose(args) => commands::decompose(&args.config, &args.overrides, args.seed),
        Command::Simulate(args) => commands::simulate(&args.config, &args.overrides, args.seed),
        Command::Bound(args) => commands::bound(&args.config, &args.overrides, args.seed),
        Command::Calibrate(args) => commands::calibrate(&args.config, &args.overrides, args.seed),
        Command::Report(args) => commands::report(&args.config, &args.overrides, args.seed),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
