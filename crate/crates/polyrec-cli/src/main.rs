//! `polyrec`: deterministic command-line experiments over finite integer
//! sets. Same flags and seed give byte-identical artifacts.
//!
//! Exit codes: 0 success, 1 invalid configuration or unreadable input,
//! 2 a library contract was violated, 3 a resource budget was exceeded.

mod args;
mod formats;
mod output;
mod run;

use std::process::ExitCode;

use clap::Parser;
use polyrec_core::Error;

fn error_exit_code(err: &Error) -> u8 {
    match err {
        Error::Parse(_) => 1,
        Error::Resource(_) => 3,
        Error::Contract(_)
        | Error::Overflow(_)
        | Error::Precision(_)
        | Error::NotFound(_)
        | Error::Diagnostic(_) => 2,
    }
}

fn main() -> ExitCode {
    let cli = match args::Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            // Help and version render on stdout and exit clean; real flag
            // errors are configuration errors.
            let code = if e.use_stderr() { 1 } else { 0 };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    let artifact = match run::dispatch(&cli) {
        Ok(text) => text,
        Err(err) => {
            eprintln!("error: {err}");
            return ExitCode::from(error_exit_code(&err));
        }
    };
    match &cli.out {
        Some(path) => {
            if let Err(e) = std::fs::write(path, &artifact) {
                eprintln!("error: cannot write '{}': {e}", path.display());
                return ExitCode::from(1);
            }
        }
        None => print!("{artifact}"),
    }
    ExitCode::SUCCESS
}
