use clap::{Parser, Subcommand};
use foboson::cli::{dispatch, Command, RunConfig};
use std::path::PathBuf;
use std::process::ExitCode;

/// Exact and numerical calculus for bosonization charts on elliptic curves.
///
/// Every subcommand prints a JSON report with "schemaVersion": 1 and exits
/// with status 0 exactly when all checks in the run pass. The environment
/// variable FOBOSON_TOL overrides the floating-point tolerances.
#[derive(Parser)]
#[command(name = "foboson", version, about)]
struct Cli {
    #[command(subcommand)]
    command: CliCommand,

    /// Write the JSON report to a file instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
}

#[derive(Subcommand)]
enum CliCommand {
    /// Full continued-fraction report for a coprime pair (n, k).
    Contfrac {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
    },
    /// Endomorphism-dimension identity: the pairwise sum must equal n.
    DimEnd {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
    },
    /// Determinant line bundle degrees and their sum identity.
    Degrees {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
    },
    /// Block sizes and dimensions of the image descriptor.
    Image {
        #[arg(long)]
        n: u64,
        #[arg(long)]
        k: u64,
    },
    /// Bracket matrix on a seeded random chart, with structure checks.
    Bracket {
        #[arg(long)]
        n_points: usize,
        /// Modular parameter as "a+bi" text, e.g. "i" or "0.3+1.1i".
        #[arg(long)]
        tau: String,
        #[arg(long)]
        seed: u64,
        /// Include the full matrix in the report.
        #[arg(long)]
        emit_matrix: bool,
    },
    /// Jacobiator sweep over all coordinate triples of random charts.
    Jacobi {
        #[arg(long)]
        n_points: usize,
        #[arg(long)]
        tau: String,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Log-canonical change of variables: primed brackets must vanish.
    PrimeCheck {
        #[arg(long)]
        n_points: usize,
        #[arg(long)]
        tau: String,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// All chain-level checks on random exact-rational chains.
    DgVerify {
        /// Comma-separated dimensions, e.g. 2,3,2.
        #[arg(long, value_delimiter = ',')]
        dims: Vec<usize>,
        #[arg(long)]
        trials: u64,
        #[arg(long)]
        seed: u64,
    },
    /// Exact invariants over every coprime pair up to a bound.
    Sweep {
        #[arg(long)]
        max_n: u64,
    },
}

impl From<CliCommand> for Command {
    fn from(c: CliCommand) -> Self {
        match c {
            CliCommand::Contfrac { n, k } => Command::Contfrac { n, k },
            CliCommand::DimEnd { n, k } => Command::DimEnd { n, k },
            CliCommand::Degrees { n, k } => Command::Degrees { n, k },
            CliCommand::Image { n, k } => Command::Image { n, k },
            CliCommand::Bracket {
                n_points,
                tau,
                seed,
                emit_matrix,
            } => Command::Bracket {
                n_points,
                tau,
                seed,
                emit_matrix,
            },
            CliCommand::Jacobi {
                n_points,
                tau,
                trials,
                seed,
            } => Command::Jacobi {
                n_points,
                tau,
                trials,
                seed,
            },
            CliCommand::PrimeCheck {
                n_points,
                tau,
                trials,
                seed,
            } => Command::PrimeCheck {
                n_points,
                tau,
                trials,
                seed,
            },
            CliCommand::DgVerify { dims, trials, seed } => Command::DgVerify { dims, trials, seed },
            CliCommand::Sweep { max_n } => Command::Sweep { max_n },
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let tolerance_override = match std::env::var("FOBOSON_TOL") {
        Ok(text) => match text.trim().parse::<f64>() {
            Ok(v) if v >= 0.0 => Some(v),
            _ => {
                eprintln!("FOBOSON_TOL must be a nonnegative number, got {text:?}");
                return ExitCode::from(2);
            }
        },
        Err(_) => None,
    };
    let config = RunConfig {
        command: cli.command.into(),
        tolerance_override,
        output: cli.out,
    };
    let outcome = dispatch(&config);
    if let Some(path) = &config.output {
        if let Err(err) = std::fs::write(path, &outcome.report) {
            eprintln!("failed to write {}: {err}", path.display());
            return ExitCode::from(1);
        }
    } else {
        print!("{}", outcome.report);
    }
    ExitCode::from(outcome.status.clamp(0, 255) as u8)
}
