//! kklab: scenario runner for the bundle-geometry laboratory.
//!
//! Exit codes: 0 success, 2 config error, 3 numerical failure.

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use kklab::scenario::{self, Command as ScnCommand, ReportFormat};

#[derive(Parser)]
#[command(name = "kklab", version, about = "Kaluza-Klein geometry laboratory")]
struct Cli {
    #[command(subcommand)]
    command: TopCommand,
}

#[derive(Args)]
struct RunArgs {
    /// Scenario config (JSON)
    #[arg(long)]
    config: PathBuf,
    /// Output directory for reports (default: current directory)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Report format, overriding the config
    #[arg(long, value_parser = ["json", "csv"])]
    format: Option<String>,
}

#[derive(Subcommand)]
enum TopCommand {
    /// Curvature pack at the requested points
    Curvature(RunArgs),
    /// Full decomposition report per point
    Decompose(RunArgs),
    /// Both routes to the reduction Jacobian
    Jacobian(RunArgs),
    /// Decomposition reports plus a residual gate (exit 3 on failure)
    VerifyIdentity(RunArgs),
    /// Reduced Hamiltonian coefficient fields
    Hamiltonian(RunArgs),
    /// Monte Carlo check of the group-averaged kernel relation
    McReduce(RunArgs),
    /// List the geometry catalog
    Catalog {
        /// Run per-entry self-validation
        #[arg(long)]
        check: bool,
    },
}

fn run(args: &RunArgs, command: ScnCommand) -> Result<(), scenario::ScenarioError> {
    let text = std::fs::read_to_string(&args.config).map_err(|e| {
        scenario::ScenarioError::Config(format!("cannot read {}: {e}", args.config.display()))
    })?;
    let format = match args.format.as_deref() {
        Some("json") => Some(ReportFormat::Json),
        Some("csv") => Some(ReportFormat::Csv),
        _ => None,
    };
    let outcome = scenario::run_scenario(&text, Some(command), args.out.as_deref(), format)?;
    println!("{}", outcome.summary);
    if let Some(path) = outcome.report_path {
        println!("report: {}", path.display());
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match &cli.command {
        TopCommand::Curvature(a) => run(a, ScnCommand::Curvature),
        TopCommand::Decompose(a) => run(a, ScnCommand::Decompose),
        TopCommand::Jacobian(a) => run(a, ScnCommand::Jacobian),
        TopCommand::VerifyIdentity(a) => run(a, ScnCommand::VerifyIdentity),
        TopCommand::Hamiltonian(a) => run(a, ScnCommand::Hamiltonian),
        TopCommand::McReduce(a) => run(a, ScnCommand::McReduce),
        TopCommand::Catalog { check } => match scenario::catalog_report(*check) {
            Ok(listing) => {
                print!("{listing}");
                Ok(())
            }
            Err(e) => Err(e),
        },
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
