//! `crisis`: validate crisis-bargaining models, test and construct peaceful
//! settlements, audit mechanisms, solve for the least war-prone menu, and
//! sweep parameters.

mod commands;
mod exit;
mod input;
mod output;
mod sweep;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
    Csv,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Report format.
    #[arg(long, value_enum, default_value = "text", global = true)]
    pub format: Format,
    /// Largest admissible gain from misreporting in audits.
    #[arg(long, global = true)]
    pub tol: Option<f64>,
    /// Grid size: nodes per state (construct, solve) or cells per axis
    /// (war-region, sweep).
    #[arg(long, global = true)]
    pub grid: Option<usize>,
    /// Output file for the command's main artifact.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    /// Run grid evaluations on one thread.
    #[arg(long, global = true)]
    pub sequential: bool,
}

#[derive(Debug, Parser)]
#[command(name = "crisis", version, about = "Crisis bargaining with biased leaders and audience costs")]
struct Cli {
    #[command(flatten)]
    common: Common,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Check a model file and list every invalid field.
    Validate { model: PathBuf },
    /// Evaluate the peace-plausibility condition.
    Plausibility { model: PathBuf },
    /// Build the constant peaceful settlement, or certify that none exists.
    Construct { model: PathBuf },
    /// Audit a mechanism file against a model.
    Audit { model: PathBuf, mechanism: PathBuf },
    /// Minimize ex-ante war probability on a grid.
    Solve {
        model: PathBuf,
        /// Nodes for state 1 (defaults to --grid, then 5).
        #[arg(long)]
        n1: Option<usize>,
        /// Nodes for state 2 (defaults to --grid, then 5).
        #[arg(long)]
        n2: Option<usize>,
        /// Require settlements to exhaust the resource.
        #[arg(long)]
        strict_balance: bool,
    },
    /// Evaluate a model over a list of parameter values.
    Sweep { model: PathBuf, spec: PathBuf },
    /// Tabulate type pairs that no settlement can pacify.
    WarRegion { model: PathBuf },
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn"))
        .target(env_logger::Target::Stderr)
        .init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version go to stdout with success; usage errors take
            // the unreadable-input code so 2 stays reserved for bad models.
            let usage = e.use_stderr();
            let _ = e.print();
            return if usage { ExitCode::from(64) } else { ExitCode::SUCCESS };
        }
    };
    let c = &cli.common;
    let result = match &cli.command {
        Command::Validate { model } => commands::validate(c, model),
        Command::Plausibility { model } => commands::plausibility(c, model),
        Command::Construct { model } => commands::construct(c, model),
        Command::Audit { model, mechanism } => commands::audit(c, model, mechanism),
        Command::Solve {
            model,
            n1,
            n2,
            strict_balance,
        } => commands::solve(c, model, *n1, *n2, *strict_balance),
        Command::Sweep { model, spec } => sweep::run(c, model, spec),
        Command::WarRegion { model } => commands::war_region(c, model),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            if !matches!(f, exit::Failure::AuditFailed | exit::Failure::PeaceInfeasible) {
                eprintln!("crisis: {f}");
            }
            f.exit_code()
        }
    }
}
