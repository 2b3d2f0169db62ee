//! `caustyk`: causal types, membership, signalling and comb decomposition
//! from the command line.
//!
//! Exit codes: 0 pass, 1 fail, 2 usage error, 3 numerical inconsistency.

mod io;
mod verbs;

use std::fmt;
use std::path::PathBuf;
use std::process::ExitCode;

use caustyk::harness::laws::Budget;
use caustyk::tol::Tolerances;
use clap::{Parser, Subcommand};

use io::Format;
use verbs::Ctx;

#[derive(Debug)]
pub enum CliError {
    Usage(String),
    Numerical(String),
}

impl CliError {
    fn code(&self) -> u8 {
        match self {
            CliError::Usage(_) => 2,
            CliError::Numerical(_) => 3,
        }
    }
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Numerical(m) => write!(f, "numerical inconsistency: {m}"),
        }
    }
}

#[derive(Parser)]
#[command(name = "caustyk", version, about = "Higher-order causal types over finite-dimensional quantum theory")]
struct Cli {
    /// Encoding of matrix and Choi files.
    #[arg(long, value_enum, global = true, default_value = "json")]
    format: Format,
    /// Seed for every randomized step.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Dimensions, ranks, first-order flag, flat λ and α of a type.
    Typeinfo { ty: String },
    /// Is the matrix a state of the type?
    Member { ty: String, file: PathBuf },
    /// Is the Choi matrix a morphism between the two types?
    Morphism { source: String, target: String, file: PathBuf },
    /// Signalling class of a two-party channel, checked against `[P,Q] op [R,S]`.
    Signalling { ty: String, file: PathBuf },
    /// Split a one-way process through a mediating system.
    Decompose { ty: String, file: PathBuf },
    /// Coend equivalence of two decompositions.
    Equiv {
        first: PathBuf,
        second: PathBuf,
        /// Emit a chain of slides joining the two.
        #[arg(long)]
        certificate: bool,
    },
    /// Run the randomized law suite; one JSON line per trial.
    Laws {
        #[arg(long, default_value = "small")]
        budget: Budget,
    },
    /// Rebuild a morphism from a scripted natural transformation.
    Reconstruct {
        source: String,
        target: String,
        #[arg(long)]
        probe_script: PathBuf,
        /// Random elements audited per probe boundary.
        #[arg(long, default_value_t = 2)]
        samples: usize,
    },
}

fn run(cli: Cli) -> Result<serde_json::Value, CliError> {
    let tol = Tolerances::from_env().map_err(|e| CliError::Usage(e.to_string()))?;
    let ctx = Ctx {
        format: cli.format,
        seed: cli.seed,
        tol,
    };
    match cli.command {
        Command::Typeinfo { ty } => verbs::typeinfo(&ty),
        Command::Member { ty, file } => verbs::member(&ctx, &ty, &file),
        Command::Morphism { source, target, file } => verbs::morphism(&ctx, &source, &target, &file),
        Command::Signalling { ty, file } => verbs::signalling(&ctx, &ty, &file),
        Command::Decompose { ty, file } => verbs::decompose(&ctx, &ty, &file),
        Command::Equiv {
            first,
            second,
            certificate,
        } => verbs::equiv(&ctx, &first, &second, certificate),
        Command::Laws { budget } => verbs::laws(ctx.seed, budget),
        Command::Reconstruct {
            source,
            target,
            probe_script,
            samples,
        } => verbs::reconstruct(&ctx, &source, &target, &probe_script, samples),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let laws = matches!(cli.command, Command::Laws { .. });
    match run(cli) {
        Ok(report) => {
            let pass = report["verdict"].as_bool().unwrap_or(false);
            if laws {
                println!("{report}");
            } else {
                println!("{}", serde_json::to_string_pretty(&report).expect("serializable"));
            }
            ExitCode::from(if pass { 0 } else { 1 })
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.code())
        }
    }
}
