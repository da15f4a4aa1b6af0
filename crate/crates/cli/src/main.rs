//! `statgame`: runs verification scenarios and generates seeded ones.
//!
//! Exit codes: 0 when every check passes, 1 when any check fails, 2 on
//! unreadable or malformed input (the message names the offending JSON path).

mod generate;
mod report;
mod scenario;
mod suites;

use std::path::PathBuf;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Args, Parser, Subcommand};

use generate::SizeParams;
use report::Report;
use scenario::{Kind, Mode, Scenario};
use suites::RunOptions;

#[derive(Parser)]
#[command(
    name = "statgame",
    version,
    about = "Verify compositional Bayesian inference scenarios"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the suite named by a scenario file.
    Run(RunArgs),
    /// Write a seeded random scenario.
    Generate(GenerateArgs),
}

#[derive(Args)]
struct RunArgs {
    scenario: PathBuf,
    /// Write the JSON report here.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Override the scenario's seed.
    #[arg(long)]
    seed: Option<u64>,
    /// Override the scenario's arithmetic.
    #[arg(long, value_enum)]
    mode: Option<Mode>,
    /// Number of seeded random instances, replacing the scenario's count.
    #[arg(long)]
    instances: Option<usize>,
    /// Write optimizer traces as CSV here.
    #[arg(long)]
    trace: Option<PathBuf>,
    /// Suppress the human summary.
    #[arg(long)]
    quiet: bool,
}

#[derive(Args)]
struct GenerateArgs {
    #[arg(value_enum)]
    kind: Kind,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Comma-separated space sizes, e.g. 4,5,3.
    #[arg(long, value_delimiter = ',')]
    spaces: Option<Vec<usize>>,
    #[arg(long)]
    instances: Option<usize>,
    /// Heads observed (coin-mle).
    #[arg(long)]
    heads: Option<u64>,
    /// Coin flips observed (coin-mle).
    #[arg(long)]
    flips: Option<u64>,
    /// Write the scenario here instead of standard output.
    #[arg(long)]
    out: Option<PathBuf>,
}

const INPUT_ERROR: u8 = 2;

fn input_error(message: impl std::fmt::Display) -> ExitCode {
    eprintln!("error: {message}");
    ExitCode::from(INPUT_ERROR)
}

fn run(args: RunArgs) -> ExitCode {
    let start = Instant::now();
    let scenario = match Scenario::load(&args.scenario) {
        Ok(s) => s,
        Err(e) => return input_error(e),
    };
    let opts = RunOptions {
        seed: args.seed,
        mode: args.mode,
        instances: args.instances,
    };
    let outcome = match suites::run(&scenario, &opts) {
        Ok(o) => o,
        Err(e) => return input_error(e),
    };
    let elapsed = start.elapsed().as_millis() as u64;
    let seed = args.seed.unwrap_or(scenario.seed);
    let report = Report::new(&scenario, seed, &outcome, elapsed);
    if let Some(path) = &args.out {
        if let Err(e) = std::fs::write(path, report.to_json()) {
            return input_error(format!("cannot write {}: {e}", path.display()));
        }
    }
    if let Some(path) = &args.trace {
        if let Err(e) = report::write_trace(path, &outcome.traces) {
            return input_error(format!("cannot write {}: {e}", path.display()));
        }
    }
    if !args.quiet {
        let _ = report.write_summary(&mut std::io::stdout().lock());
    }
    if report.pass {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}

fn generate(args: GenerateArgs) -> ExitCode {
    let params = SizeParams {
        spaces: args.spaces,
        instances: args.instances,
        heads: args.heads,
        flips: args.flips,
    };
    let doc = match generate::generate(args.kind, args.seed, &params) {
        Ok(d) => d,
        Err(e) => return input_error(e),
    };
    let mut text = serde_json::to_string_pretty(&doc).expect("scenarios are plain data");
    text.push('\n');
    match &args.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, text) {
                return input_error(format!("cannot write {}: {e}", path.display()));
            }
        }
        None => print!("{text}"),
    }
    ExitCode::SUCCESS
}

fn main() -> ExitCode {
    match Cli::parse().command {
        Command::Run(args) => run(args),
        Command::Generate(args) => generate(args),
    }
}
