use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use macroreal_cli::{
    canonical_json, oracle_csv, report_csv, run_certification, run_oracle, run_sweep, sweep_csv,
    CliError, Scenario, SweepSpec,
};
use serde_json::Value;

#[derive(Parser)]
#[command(
    name = "macroreal",
    version,
    about = "Leggett-Garg and NSIT certification of simulated experiments"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run every experiment a scenario needs and certify its checks.
    Certify(Common),
    /// Certify a scenario template over a list of parameter values.
    Sweep(Common),
    /// Dump the raw outcome tables of a scenario.
    Oracle(Common),
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Json,
    Csv,
}

#[derive(Args)]
struct Common {
    /// Scenario (or sweep) JSON file.
    input: PathBuf,
    /// Override the scenario's shot count (0 = exact).
    #[arg(long)]
    shots: Option<u64>,
    /// Override the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Write output here instead of stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long, value_enum)]
    format: Option<Format>,
}

fn read_json(path: &Path) -> Result<Value, CliError> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })?;
    serde_json::from_str(&text).map_err(|e| CliError::Parse {
        line: e.line(),
        column: e.column(),
        message: e.to_string(),
    })
}

fn overrides(v: &mut Value, args: &Common) {
    if let Value::Object(m) = v {
        if let Some(shots) = args.shots {
            m.insert("shots".into(), shots.into());
        }
        if let Some(seed) = args.seed {
            m.insert("seed".into(), seed.into());
        }
    }
}

fn emit(out: &Option<PathBuf>, text: &str) -> Result<(), CliError> {
    match out {
        Some(path) => fs::write(path, text).map_err(|e| CliError::Output {
            path: path.display().to_string(),
            message: e.to_string(),
        }),
        None => {
            print!("{text}");
            Ok(())
        }
    }
}

/// 0: all satisfied, 1: violations found.
fn run(cli: Cli) -> Result<u8, CliError> {
    match cli.command {
        Command::Certify(args) => {
            let mut v = read_json(&args.input)?;
            overrides(&mut v, &args);
            let report = run_certification(&Scenario::from_value(v)?)?;
            let text = match args.format.unwrap_or(Format::Json) {
                Format::Json => canonical_json(&report),
                Format::Csv => report_csv(&report),
            };
            emit(&args.out, &text)?;
            Ok(u8::from(!report.all_satisfied))
        }
        Command::Sweep(args) => {
            let mut v = read_json(&args.input)?;
            if let Some(t) = v.get_mut("template") {
                overrides(t, &args);
            }
            let spec: SweepSpec =
                serde_json::from_value(v).map_err(|e| CliError::Schema(e.to_string()))?;
            spec.validate()?;
            let rows = run_sweep(&spec);
            let text = match args.format.unwrap_or(Format::Csv) {
                Format::Csv => sweep_csv(&rows),
                Format::Json => canonical_json(&rows),
            };
            emit(&args.out, &text)?;
            if rows.iter().any(|r| r.error.is_some()) {
                Ok(2)
            } else {
                Ok(u8::from(
                    rows.iter().any(|r| r.all_satisfied == Some(false)),
                ))
            }
        }
        Command::Oracle(args) => {
            let mut v = read_json(&args.input)?;
            overrides(&mut v, &args);
            let experiments = run_oracle(&Scenario::from_value(v)?)?;
            let text = match args.format.unwrap_or(Format::Json) {
                Format::Json => canonical_json(&experiments),
                Format::Csv => oracle_csv(&experiments)?,
            };
            emit(&args.out, &text)?;
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
