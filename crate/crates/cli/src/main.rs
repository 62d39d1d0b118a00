mod args;
mod commands;
mod config;
mod output;

use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use config::Config;

/// A well-formed command line whose values do not make sense together.
#[derive(Debug)]
pub struct UsageError(pub String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e:#}");
            if e.downcast_ref::<UsageError>().is_some() {
                eprintln!("run `lemurkit --help` for usage");
                ExitCode::from(1)
            } else {
                ExitCode::from(2)
            }
        }
    }
}

fn run(cli: Cli) -> anyhow::Result<ExitCode> {
    let config = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::LcsScore(a) => commands::lcs_score(&a),
        Command::Split(a) => commands::split(&a, &config),
        Command::Pairs(a) => commands::pairs(&a),
        Command::Index(a) => commands::index(&a, &config),
        Command::Search(a) => commands::search(&a, &config),
        Command::Eval(a) => commands::eval(&a, &config),
        Command::Compare(a) => commands::compare(&a),
        Command::LossCheck(a) => commands::loss_check(&a, &config),
    }?;
    Ok(ExitCode::SUCCESS)
}
