use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use pqsp_cli::{load_config, run, Mode};

/// Positive solutions of the radial (p,q)-Laplacian Schrödinger–Poisson system by
/// monotone fixed-point iteration.
#[derive(Parser)]
#[command(name = "pqsp", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// TOML run configuration.
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides the configuration.
    #[arg(long, env = "PQSP_OUTPUT_DIR")]
    out: Option<PathBuf>,
    /// Seed for every randomized estimate; overrides the configuration.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Solve once and write solution.csv, convergence.csv and report.json.
    Solve(Common),
    /// Run the property suite and write verify.json.
    Verify(Common),
    /// Estimate the ball certificate and write certificate.json.
    Certificate(Common),
    /// Solve for several λ and write one report each plus sweep-summary.csv.
    Sweep(Common),
    /// Run the mode named in the configuration.
    Run(Common),
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let (mode, args) = match cli.command {
        Command::Solve(a) => (Some(Mode::Solve), a),
        Command::Verify(a) => (Some(Mode::Verify), a),
        Command::Certificate(a) => (Some(Mode::Certificate), a),
        Command::Sweep(a) => (Some(Mode::Sweep), a),
        Command::Run(a) => (None, a),
    };
    let mut cfg = match load_config(&args.config) {
        Ok(c) => c,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(e.exit_code());
        }
    };
    if let Some(m) = mode {
        cfg.mode = m;
    }
    if let Some(s) = args.seed {
        cfg.seed = s;
    }
    let out = args.out.unwrap_or_else(|| cfg.output.directory.clone());
    match run(&cfg, &out) {
        Ok(outcome) => {
            println!("{}", outcome.summary);
            for f in &outcome.files {
                println!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
