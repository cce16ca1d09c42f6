mod args;
mod commands;
mod output;

use std::ffi::OsString;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

const EXIT_VALIDATION: u8 = 2;
const EXIT_USAGE: u8 = 64;

fn configure_threads() -> Result<(), String> {
    let Ok(raw) = std::env::var("FAIRLENS_THREADS") else {
        return Ok(());
    };
    let n: usize = raw.trim().parse().map_err(|_| format!("FAIRLENS_THREADS=`{raw}` is not a count"))?;
    rayon::ThreadPoolBuilder::new().num_threads(n).build_global().map_err(|e| e.to_string())
}

/// Parses `argv`, runs the subcommand and returns the exit code.
fn run<I, T>(argv: I) -> u8
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => EXIT_USAGE,
            };
        }
    };
    let (out, result) = match &cli.command {
        Command::AuditIndividual(a) => (&a.out, commands::audit_individual(a)),
        Command::AuditGroup(a) => (&a.out, commands::audit_group(a)),
        Command::VerifyTheory(a) => (&a.out, commands::verify_theory(a)),
    };
    match result.and_then(|o| commands::finish(out, o)) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            if let fairlens::Error::Ingest { issues, .. } = &e {
                for issue in issues {
                    eprintln!("  {issue}");
                }
            }
            EXIT_VALIDATION
        }
    }
}

fn main() -> ExitCode {
    if let Err(msg) = configure_threads() {
        eprintln!("error: {msg}");
        return ExitCode::from(EXIT_USAGE);
    }
    ExitCode::from(run(std::env::args_os()))
}

#[cfg(test)]
#[path = "../tests/common/mod.rs"]
mod fixture;

#[cfg(test)]
mod tests;
