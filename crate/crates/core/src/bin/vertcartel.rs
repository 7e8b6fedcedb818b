use std::fs;
use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use vertcartel::cli::{
    render, run_scenario, run_solve, CliError, Format, Overrides, Report, Scenario, EXIT_OK,
    EXIT_USAGE,
};

#[derive(Parser)]
#[command(
    name = "vertcartel",
    version,
    about = "Equilibrium and collusion analysis for vertically differentiated markets"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,

    /// Write the report here instead of standard output.
    #[arg(long, global = true)]
    out: Option<PathBuf>,

    #[arg(long, global = true, value_enum, default_value_t = OutputFormat::Json)]
    format: OutputFormat,

    /// Overrides the verifier seed in the scenario.
    #[arg(long, global = true)]
    seed: Option<u64>,

    /// Verifier pass threshold and best-response stopping tolerance.
    #[arg(long, global = true)]
    tolerance: Option<f64>,
}

#[derive(Subcommand)]
enum Command {
    /// Nash equilibrium of the scenario's market, whatever analysis it requests.
    Solve { file: PathBuf },
    /// Collusive schedule and critical discount factors.
    Collude { file: PathBuf },
    /// Parameter sweep, one row per grid point.
    Sweep { file: PathBuf },
    /// Randomised property suite.
    Verify { file: PathBuf },
    /// Whatever analysis the scenario requests.
    Run { file: PathBuf },
}

#[derive(Clone, Copy, ValueEnum)]
enum OutputFormat {
    Json,
    Csv,
}

fn execute(cli: &Cli) -> Result<Report, CliError> {
    let overrides = Overrides {
        seed: cli.seed,
        tolerance: cli.tolerance,
    };
    if let Some(t) = cli.tolerance {
        if !(t > 0.0 && t.is_finite()) {
            return Err(CliError::Schema(format!(
                "--tolerance: must be positive, got {t}"
            )));
        }
    }
    let (file, expected) = match &cli.command {
        Command::Solve { file } => {
            return Ok(run_solve(&Scenario::load(file)?, overrides));
        }
        Command::Collude { file } => (file, Some("collude")),
        Command::Sweep { file } => (file, Some("sweep")),
        Command::Verify { file } => (file, Some("verify")),
        Command::Run { file } => (file, None),
    };
    let scenario = Scenario::load(file)?;
    if let Some(kind) = expected {
        if scenario.analysis.name() != kind {
            return Err(CliError::schema(
                "analysis.kind",
                &format!("expected {kind}, found {}", scenario.analysis.name()),
            ));
        }
    }
    run_scenario(&scenario, overrides)
}

fn emit(cli: &Cli, text: &str) -> Result<(), CliError> {
    match &cli.out {
        Some(path) => {
            fs::write(path, text).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Io(e.to_string())),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() {
                EXIT_USAGE as u8
            } else {
                EXIT_OK as u8
            });
        }
    };
    let format = match cli.format {
        OutputFormat::Json => Format::Json,
        OutputFormat::Csv => Format::Csv,
    };
    let result = execute(&cli).and_then(|report| {
        emit(&cli, &render(&report, format))?;
        Ok(report)
    });
    match result {
        Ok(report) => {
            if let Some(err) = &report.status.error {
                eprintln!("{}: {}", err.kind, err.message);
            }
            ExitCode::from(report.exit_code() as u8)
        }
        Err(e) => {
            eprintln!("{e}");
            ExitCode::from(EXIT_USAGE as u8)
        }
    }
}
