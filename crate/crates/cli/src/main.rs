//! `tomoforge`: reproducible tomography experiments from the command line.
//!
//! Exit status: 0 on success, 1 on invalid input or usage, 2 on a numerical abort
//! or a failed structural check.

mod cli;
mod output;
mod run;

use std::process::ExitCode;

fn main() -> ExitCode {
    let args: Vec<String> = std::env::args().collect();
    ExitCode::from(run::main_cli(&args))
}
