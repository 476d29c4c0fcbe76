use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gridmdp::config::parse_config;
use gridmdp::experiment::{run_experiment, Command, Overrides};
use gridmdp::Error;

#[derive(Parser)]
#[command(
    name = "gridmdp",
    version,
    about = "Optimal price-taking policies for smart loads"
)]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Solve for the optimal policy and write policy.csv
    Solve(RunArgs),
    /// Solve and analyse the long-run behaviour of the policy
    Analyze(RunArgs),
    /// Analyse and cross-check with a Monte Carlo run
    Simulate(RunArgs),
    /// Check the configuration and exit
    Validate(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON experiment configuration
    #[arg(long)]
    config: PathBuf,
    /// Output directory (overrides output.directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Use this fixed action instead of the optimal policy, e.g. `keep`
    #[arg(long)]
    baseline_policy: Option<String>,
    /// Discount factor (overrides solver.gamma)
    #[arg(long)]
    gamma: Option<f64>,
    /// Monte Carlo seed (overrides analysis.monte_carlo.seed)
    #[arg(long)]
    seed: Option<u64>,
}

fn run(command: Command, args: RunArgs) -> Result<(), Error> {
    let text = std::fs::read_to_string(&args.config).map_err(|source| Error::Io {
        path: args.config.clone(),
        source,
    })?;
    let overrides = Overrides {
        out: args.out,
        gamma: args.gamma,
        seed: args.seed,
        baseline_policy: args.baseline_policy,
    };
    let config = parse_config(&text)?.with_overrides(&overrides)?;
    if command == Command::Validate {
        println!("{}: ok", args.config.display());
        return Ok(());
    }
    let dir = config
        .output
        .directory
        .clone()
        .ok_or_else(|| Error::Config {
            field: "output.directory".into(),
            reason: "no output directory; pass --out or set output.directory".into(),
        })?;

    let experiment = run_experiment(&config, command, overrides.baseline_policy.as_deref())?;
    for path in experiment.emit_tables(&dir)? {
        println!("wrote {}", path.display());
    }
    for (metric, value) in experiment.summary() {
        println!("{metric:<30} {value}");
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, args) = match cli.command {
        Sub::Solve(a) => (Command::Solve, a),
        Sub::Analyze(a) => (Command::Analyze, a),
        Sub::Simulate(a) => (Command::Simulate, a),
        Sub::Validate(a) => (Command::Validate, a),
    };
    match run(command, args) {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("gridmdp: {err}");
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
