//! `cgist`: solve penalized least-squares problems from dense text files,
//! run the synthetic MEG experiment, and evaluate prox operators and step
//! conditions.

mod args;
mod meg;
mod output;
mod solve;
mod tools;

use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command};

/// Exit codes.
pub const EXIT_CONVERGED: u8 = 0;
pub const EXIT_INPUT: u8 = 1;
pub const EXIT_CAP: u8 = 2;
pub const EXIT_DIVERGED: u8 = 3;

/// A failure with the exit code it maps to.
#[derive(Debug)]
pub struct Failure {
    pub code: u8,
    pub error: anyhow::Error,
}

impl<E: Into<anyhow::Error>> From<E> for Failure {
    fn from(e: E) -> Self {
        Failure {
            code: EXIT_INPUT,
            error: e.into(),
        }
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_INPUT } else { EXIT_CONVERGED });
        }
    };
    let result = match &cli.command {
        Command::Solve(a) => solve::run_solve(a),
        Command::Bp(a) => solve::run_bp(a),
        Command::L1c(a) => solve::run_l1c(a),
        Command::Meg(a) => meg::run_meg(a),
        Command::Prox(a) => tools::run_prox(a),
        Command::Normcheck(a) => tools::run_normcheck(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(f) => {
            eprintln!("error: {:#}", f.error);
            ExitCode::from(f.code)
        }
    }
}
