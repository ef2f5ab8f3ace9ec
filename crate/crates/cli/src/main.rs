//! `dpdenoise`: denoising runs, weight construction, sweeps and metrics.
//!
//! Exit status: 0 on success, 1 on runtime or I/O errors, 2 on usage or
//! configuration errors, 3 when a run did not converge and
//! `--allow-nonconverged` was not given. Errors are reported on stderr as a
//! single JSON object `{"error": <kind>, "message": <text>}`.

mod args;
mod commands;

use std::process::ExitCode;

use thiserror::Error;

#[derive(Debug, Error)]
pub enum CliError {
    #[error(transparent)]
    Core(#[from] dpdenoise_core::Error),
    #[error("{0}")]
    Usage(String),
    #[error("{0}")]
    NotConverged(String),
}

impl CliError {
    fn kind(&self) -> &'static str {
        match self {
            CliError::Core(e) => e.kind(),
            CliError::Usage(_) => "usage",
            CliError::NotConverged(_) => "not_converged",
        }
    }

    fn exit_code(&self) -> u8 {
        match self {
            CliError::Core(dpdenoise_core::Error::InvalidParameter(_)) | CliError::Usage(_) => 2,
            CliError::Core(_) => 1,
            CliError::NotConverged(_) => 3,
        }
    }
}

fn report(kind: &str, message: &str) {
    let line = serde_json::json!({ "error": kind, "message": message });
    eprintln!("{line}");
}

fn main() -> ExitCode {
    let cli = match args::parse(std::env::args_os().collect()) {
        Ok(cli) => cli,
        Err(args::ParseError::Config(e)) => {
            report(e.kind(), &e.to_string());
            return ExitCode::from(e.exit_code());
        }
        Err(args::ParseError::Clap(e)) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) {
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            if matches!(e.kind(), ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                return ExitCode::from(2);
            }
            report("usage", e.to_string().trim());
            return ExitCode::from(2);
        }
    };
    match commands::run(&cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report(e.kind(), &e.to_string());
            ExitCode::from(e.exit_code())
        }
    }
}
