//! `idi`: simulate, train, evaluate and analyze burst-level interference
//! identification.
//!
//! Exit codes: 0 success, 1 usage, 2 data error, 3 SVM non-convergence.

mod commands;
mod manifest;

use std::fmt;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use commands::{Invocation, RerunArgs};

#[derive(Parser)]
#[command(name = "idi", version, about = "Interference detection and identification from constrained RSSI sensing")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    #[command(flatten)]
    Run(Invocation),
    /// Re-run a command from its manifest and check the outputs are identical.
    Rerun(RerunArgs),
}

#[derive(Debug)]
pub enum Failure {
    Usage(String),
    Data(String),
    NonConvergence(String),
}

impl Failure {
    pub fn usage(m: impl Into<String>) -> Self {
        Failure::Usage(m.into())
    }

    pub fn data(m: impl Into<String>) -> Self {
        Failure::Data(m.into())
    }

    fn code(&self) -> u8 {
        match self {
            Failure::Usage(_) => 1,
            Failure::Data(_) => 2,
            Failure::NonConvergence(_) => 3,
        }
    }
}

impl fmt::Display for Failure {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Failure::Usage(m) | Failure::Data(m) | Failure::NonConvergence(m) => f.write_str(m),
        }
    }
}

impl From<idi_core::Error> for Failure {
    fn from(e: idi_core::Error) -> Self {
        match e {
            idi_core::Error::NonConvergence { .. } => Failure::NonConvergence(e.to_string()),
            e => Failure::Data(e.to_string()),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let result = match cli.command {
        Command::Run(inv) => commands::execute(inv).map(|_| ()),
        Command::Rerun(a) => commands::rerun(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("idi: {f}");
            ExitCode::from(f.code())
        }
    }
}
