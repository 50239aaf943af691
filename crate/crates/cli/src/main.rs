//! `rogozin`: runs the inequality checks of `rogozin-core` and prints one
//! report per experiment as JSON Lines or CSV.
//!
//! Exit codes: 0 when every report is satisfied, 2 when some inequality is
//! violated, 1 on usage, input or configuration errors.

mod args;
mod commands;
mod error;
mod report;
mod sweep;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};
use error::{CliError, Result};
use report::{emit, Context, Report};

/// Runs a single, non-sweep subcommand.
pub(crate) fn run_command(cli: &Cli) -> Result<Vec<Report>> {
    let name = cli.command.name();
    macro_rules! ctx {
        ($a:expr) => {
            Context::new(name, $a, cli.seed, cli.rhs_scale, cli.timing)
        };
    }
    match &cli.command {
        Command::Constants(a) => commands::constants(&ctx!(a), a),
        Command::VerifyEpi(a) => commands::verify_epi_cmd(&mut ctx!(a), a),
        Command::GroupSup(a) => commands::group_sup(&mut ctx!(a), a),
        Command::IntEpi(a) => commands::int_epi(&mut ctx!(a), a),
        Command::RearrangeCheck(a) => commands::rearrange_check(&mut ctx!(a), a),
        Command::BllCheck(a) => commands::bll_check(&mut ctx!(a), a),
        Command::BallSlice(a) => commands::ball_slice(&ctx!(a), a),
        Command::CharfunBound(a) => commands::charfun_bound(&ctx!(a), a),
        Command::Sweep(_) => Err(CliError::Usage("sweep runs through its own entry point".into())),
    }
}

fn run(cli: &Cli) -> Result<bool> {
    let stdout = io::stdout();
    if let Command::Sweep(a) = &cli.command {
        let outcome = sweep::run(cli, a)?;
        let summary = outcome.summary.to_string();
        match &outcome.output_path {
            Some(path) => {
                let file = File::create(path).map_err(|e| CliError::Output(format!("{}: {e}", path.display())))?;
                emit(cli.format, &outcome.reports, BufWriter::new(file))?;
                writeln!(stdout.lock(), "{summary}").map_err(|e| CliError::Output(e.to_string()))?;
            }
            None => {
                emit(cli.format, &outcome.reports, BufWriter::new(stdout.lock()))?;
                match cli.format {
                    args::Format::Json => {
                        writeln!(stdout.lock(), "{summary}").map_err(|e| CliError::Output(e.to_string()))?
                    }
                    args::Format::Csv => eprintln!("{summary}"),
                }
            }
        }
        return Ok(outcome.reports.iter().all(|r| r.satisfied));
    }
    let reports = run_command(cli)?;
    emit(cli.format, &reports, BufWriter::new(stdout.lock()))?;
    Ok(reports.iter().all(|r| r.satisfied))
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(2),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(1)
        }
    }
}
