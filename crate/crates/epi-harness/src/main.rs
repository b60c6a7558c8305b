use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use epi_harness::{execute, parse_config_with, Mode, Overrides};

#[derive(Parser)]
#[command(name = "epi", version, about = "Metapopulation epidemic simulation and limit verification")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Replicate simulations: trajectory panels and ensemble summary.
    Simulate(Args),
    /// Deterministic fluid limit on the grid.
    Fluid(Args),
    /// Gaussian fluctuation ensemble and driver covariances.
    Fclt(Args),
    /// Ensemble means against the fluid limit.
    VerifyFlln(Args),
    /// Scaled fluctuation variances against the Gaussian limit.
    VerifyFclt(Args),
    /// Transition kernel table.
    Kernels(Args),
}

#[derive(clap::Args)]
struct Args {
    #[arg(long, value_name = "FILE")]
    config: PathBuf,
    /// Base seed, replacing run.base_seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Output directory, replacing run.out_dir.
    #[arg(long, alias = "out-dir", value_name = "DIR")]
    out: Option<PathBuf>,
    /// Worker threads (default: all cores).
    #[arg(long)]
    threads: Option<usize>,
    /// Replicate count, replacing run.M.
    #[arg(long)]
    replicates: Option<usize>,
    /// Output grid step, replacing run.output_dt.
    #[arg(long)]
    grid_dt: Option<f64>,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Simulate(a) => (Mode::Simulate, a),
        Command::Fluid(a) => (Mode::Fluid, a),
        Command::Fclt(a) => (Mode::Fclt, a),
        Command::VerifyFlln(a) => (Mode::VerifyFlln, a),
        Command::VerifyFclt(a) => (Mode::VerifyFclt, a),
        Command::Kernels(a) => (Mode::Kernels, a),
    };
    if let Some(t) = args.threads {
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(t).build_global() {
            eprintln!("VALIDATION: --threads: {e}");
            return ExitCode::from(2);
        }
    }
    let over = Overrides {
        mode: Some(mode),
        seed: args.seed,
        out_dir: args.out,
        replicates: args.replicates,
        output_dt: args.grid_dt,
    };
    let result = parse_config_with(&args.config, &over).and_then(|spec| execute(&spec));
    match result {
        Ok(o) => {
            println!("{}", o.summary);
            match o.passed {
                Some(false) => ExitCode::from(1),
                _ => ExitCode::SUCCESS,
            }
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
