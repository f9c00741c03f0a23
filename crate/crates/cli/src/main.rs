use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use fpplab::{CliError, Overrides};
use fpplab_core::experiments::ExperimentKind;

#[derive(Parser)]
#[command(name = "fpplab", version, about = "First passage percolation on sparse Erdos-Renyi graphs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Print the limit constants for a given lambda.
    Theory {
        #[arg(long)]
        lambda: f64,
        #[arg(long)]
        json: bool,
    },
    /// Hopcount central limit theorem on G(n, lambda/n).
    HopcountClt(RunArgs),
    /// Centred typical weight against its limit law.
    WeightLimit(RunArgs),
    /// Dense regime lambda_n -> infinity.
    Dense(RunArgs),
    /// Connection time of two branching processes.
    CollisionTime(RunArgs),
    /// Graph FPP against the thinned marked branching process.
    ThinningEquivalence(RunArgs),
    /// Extremal shortest-weight paths over an n ladder.
    Extrema(RunArgs),
    /// Generation and split time of a branching process conditioned to survive.
    TreeClt(RunArgs),
}

#[derive(Args)]
struct RunArgs {
    /// JSON config; flags below override its values.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    reps: Option<usize>,
    #[arg(long)]
    n: Option<usize>,
    #[arg(long)]
    lambda: Option<f64>,
    /// Output directory (default: $FPPLAB_OUT, else fpplab-out).
    #[arg(long)]
    out: Option<PathBuf>,
    /// Worker threads.
    #[arg(long)]
    threads: Option<usize>,
    /// Print the report JSON instead of the check summary.
    #[arg(long)]
    json: bool,
}

fn run_experiment(kind: ExperimentKind, args: RunArgs) -> Result<bool, CliError> {
    let overrides = Overrides {
        seed: args.seed,
        reps: args.reps,
        n: args.n,
        lambda: args.lambda,
    };
    let config = match &args.config {
        Some(path) => fpplab::parse_config_file(path, Some(kind), &overrides)?,
        None => fpplab::config_from_flags(kind, &overrides)?,
    };
    let out = fpplab::output_dir(args.out);
    let outcome = fpplab::run_to_dir(&config, &out, args.config.as_deref(), args.threads)?;
    if args.json {
        print!("{}", outcome.report.to_json());
    } else {
        print!("{}", fpplab::check_summary(&outcome.report));
        for f in &outcome.files {
            println!("wrote {}", f.display());
        }
    }
    Ok(outcome.report.passed())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let kind = match cli.command {
        Command::Theory { lambda, json } => {
            return match fpplab::theory_output(lambda, json) {
                Ok(s) => {
                    print!("{s}");
                    ExitCode::SUCCESS
                }
                Err(e) => {
                    eprintln!("error: {e}");
                    ExitCode::from(1)
                }
            };
        }
        Command::HopcountClt(a) => (ExperimentKind::HopcountClt, a),
        Command::WeightLimit(a) => (ExperimentKind::WeightLimit, a),
        Command::Dense(a) => (ExperimentKind::Dense, a),
        Command::CollisionTime(a) => (ExperimentKind::CollisionTime, a),
        Command::ThinningEquivalence(a) => (ExperimentKind::ThinningEquivalence, a),
        Command::Extrema(a) => (ExperimentKind::Extrema, a),
        Command::TreeClt(a) => (ExperimentKind::TreeClt, a),
    };
    match run_experiment(kind.0, kind.1) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
