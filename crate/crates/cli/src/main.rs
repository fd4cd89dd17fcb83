//! Command-line entry point for the omniprediction pipelines.
//!
//! Exit codes: 0 success, 1 contract violation or failed check, 2 bad
//! configuration.

mod commands;
mod config;
mod run;

use std::process::ExitCode;

use clap::{Parser, Subcommand};
use omnipred::Error;

use commands::{EvalArgs, GenArgs, RatesArgs};
use config::{ConfigError, RunArgs};
use run::Track;

#[derive(Debug, Parser)]
#[command(name = "omnipred", version, about = "Train and evaluate online and statistical omnipredictors")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Online binary omnipredictor on a grid
    RunBinaryOnline(RunArgs),
    /// Statistical binary omnipredictor, scored on held-out data
    RunBinaryStat(RunArgs),
    /// Online multiclass omnipredictor on a simplex net
    RunMulticlassOnline(RunArgs),
    /// Statistical multiclass omnipredictor, scored on held-out data
    RunMulticlassStat(RunArgs),
    /// Online multiclass omnipredictor against a union of comparator families
    RunUnion(RunArgs),
    /// Recompute metrics from a saved trace
    Eval(EvalArgs),
    /// Emit a synthetic stream as CSV
    Gen(GenArgs),
    /// Run the counterexample checks and oracle property suites
    Verify {
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Threshold calibration at T and 2T over many seeds
    Rates(RatesArgs),
}

fn error_code(e: &Error) -> u8 {
    match e {
        Error::InvalidEps(_)
        | Error::InvalidK(_)
        | Error::NetTooLarge { .. }
        | Error::UnknownLoss(_)
        | Error::UnknownFamily(_)
        | Error::UnknownRegretKind(_)
        | Error::Invalid(_)
        | Error::Io(_)
        | Error::Json(_)
        | Error::Csv(_) => 2,
        Error::AtRound { source, .. } => error_code(source),
        _ => 1,
    }
}

fn exit_code(err: &anyhow::Error) -> u8 {
    for cause in err.chain() {
        if cause.is::<ConfigError>() {
            return 2;
        }
        if let Some(e) = cause.downcast_ref::<Error>() {
            return error_code(e);
        }
    }
    1
}

fn run_pipeline(name: &str, args: &RunArgs, track: Track) -> anyhow::Result<u8> {
    let cfg = args.resolve(name, track.is_binary())?;
    let results = run::execute(&cfg, track)?;
    if let [only] = results.as_slice() {
        println!("{}", serde_json::to_string_pretty(&only.report)?);
    } else if let Some(first) = results.first() {
        println!("{}", run::csv_header(&first.report));
        for r in &results {
            println!("{}", run::csv_row(r));
        }
    }
    Ok(0)
}

fn dispatch(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::RunBinaryOnline(a) => run_pipeline("run-binary-online", &a, Track::BinaryOnline),
        Command::RunBinaryStat(a) => run_pipeline("run-binary-stat", &a, Track::BinaryStat),
        Command::RunMulticlassOnline(a) => run_pipeline("run-multiclass-online", &a, Track::MulticlassOnline),
        Command::RunMulticlassStat(a) => run_pipeline("run-multiclass-stat", &a, Track::MulticlassStat),
        Command::RunUnion(a) => run_pipeline("run-union", &a, Track::Union),
        Command::Eval(a) => {
            let report = commands::eval(&a)?;
            let text = serde_json::to_string_pretty(&report)? + "\n";
            match &a.out {
                Some(path) => std::fs::write(path, text)
                    .map_err(|e| config::config_error(format!("cannot write {}: {e}", path.display())))?,
                None => print!("{text}"),
            }
            Ok(0)
        }
        Command::Gen(a) => {
            commands::gen(&a)?;
            Ok(0)
        }
        Command::Verify { seed } => {
            let checks = commands::verify(seed);
            for c in &checks {
                println!("{} {}: {}", if c.pass { "PASS" } else { "FAIL" }, c.name, c.detail);
            }
            Ok(if checks.iter().all(|c| c.pass) { 0 } else { 1 })
        }
        Command::Rates(a) => {
            let study = commands::rates(&a)?;
            println!("{}", serde_json::to_string_pretty(&study)?);
            Ok(0)
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
