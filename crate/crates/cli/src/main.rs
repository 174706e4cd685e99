//! `sphint`: spherical integrals, rate functions and Monte-Carlo checks from
//! the command line.

mod commands;
mod report;

use std::io::Write;
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, ValueEnum};

use commands::{CliError, Command};

#[derive(Debug, Parser)]
#[command(name = "sphint", version, about = "Limits of spherical integrals and extreme-eigenvalue rate functions")]
struct Cli {
    /// Output format: a JSON run report, or CSV rows.
    #[arg(long, value_enum, default_value_t = Format::Json, global = true)]
    format: Format,
    /// Leave `wall_time` null so that reports are byte-identical across runs.
    #[arg(long, global = true)]
    no_timing: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Format {
    Json,
    Csv,
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("SPHINT_THREADS") else {
        return Ok(());
    };
    let threads: usize = value
        .trim()
        .parse()
        .ok()
        .filter(|n| *n > 0)
        .ok_or_else(|| CliError::Input(format!("SPHINT_THREADS must be a positive integer, got {value:?}")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Input(format!("cannot start {threads} worker threads: {e}")))
}

fn run(cli: Cli, argv: &[String]) -> Result<String, CliError> {
    configure_threads()?;
    let start = Instant::now();
    let outcome = cli.command.run()?;
    let elapsed = start.elapsed().as_secs_f64();
    Ok(match cli.format {
        Format::Csv => outcome.table.render(),
        Format::Json => report::render_json(argv, &outcome, (!cli.no_timing).then_some(elapsed)),
    })
}

fn main() -> ExitCode {
    let argv: Vec<String> = std::env::args().collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => {
            let code = if e.use_stderr() { 2 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match run(cli, &argv[1..]) {
        Ok(text) => {
            let mut out = std::io::stdout().lock();
            if out.write_all(text.as_bytes()).and_then(|_| out.flush()).is_err() {
                return ExitCode::from(2);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("sphint: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
