mod args;
mod backend;
mod commands;
mod exit;
mod run;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};

fn dispatch(cli: Cli) -> anyhow::Result<u8> {
    match cli.command {
        Command::Score(a) => commands::score::score(a),
        Command::Profile(a) => commands::score::profile(a),
        Command::Pmi(a) => commands::score::pmi(a),
        Command::DiagnosePosition(a) => commands::position::run(a),
        Command::DiagnoseDirection(a) => commands::direction::run(a),
        Command::Adversarial(a) => commands::adversarial::run(a),
        Command::MetaEval(a) => commands::meta_eval::run(a),
        Command::TrainToy(a) => commands::train::run(a),
        Command::LearnWeights(a) => commands::weights::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(exit::USAGE),
            };
        }
    };
    match dispatch(cli) {
        Ok(code) => ExitCode::from(code),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit::code_for(&e))
        }
    }
}
