mod args;
mod commands;
mod sweep;

use std::process::ExitCode;

use clap::Parser;

use crate::args::{Cli, Command};

/// Input or parameters rejected.
pub const EXIT_INVALID: u8 = 2;
/// An invariant check or closure failed.
pub const EXIT_INVARIANT: u8 = 3;
/// The runtime bound was missed or the run did not converge.
pub const EXIT_BOUND: u8 = 4;

fn exit_code(err: &anyhow::Error) -> u8 {
    use beepsync::Error as E;
    match err.downcast_ref::<E>() {
        Some(
            E::Topology(_)
            | E::CheckpointParams { .. }
            | E::Schedule(_)
            | E::Config(_)
            | E::Argument(_)
            | E::Parse { .. }
            | E::Json(_),
        ) => EXIT_INVALID,
        Some(E::NotConstructible(_) | E::Inapplicable(_)) => EXIT_BOUND,
        _ => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::RunFast(a) => commands::run_fast(a),
        Command::RunSelfstab(a) => commands::run_selfstab(a),
        Command::RunSlots(a) => commands::run_slots(a),
        Command::AnalyzeFsm(a) => commands::analyze_fsm(a),
        Command::Sweep(a) => sweep::run(a),
    };
    match result {
        Ok(code) => ExitCode::from(code),
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
