mod args;
mod cmd;
mod error;
mod settings;
mod wallet_file;

use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};
use serde_json::json;
use tracing_subscriber::filter::LevelFilter;

use args::{Cli, Command};
use cmd::{Ctx, Outcome};
use error::{exit_code_help, CliError, EXIT_OK, EXIT_USAGE};
use settings::Settings;

fn main() -> ExitCode {
    let level = if std::env::var_os("PHC_DEBUG").is_some() { LevelFilter::DEBUG } else { LevelFilter::WARN };
    tracing_subscriber::fmt()
        .with_writer(std::io::stderr)
        .with_max_level(level)
        .init();

    let command = Cli::command().after_help(exit_code_help());
    let cli = match command.try_get_matches().and_then(|m| Cli::from_arg_matches(&m)) {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { EXIT_USAGE as u8 } else { EXIT_OK as u8 });
        }
    };

    match dispatch(cli) {
        Ok(outcome) => {
            if !outcome.json.is_null() {
                println!("{}", serde_json::to_string_pretty(&outcome.json).expect("json serializes"));
            }
            if !outcome.summary.is_empty() {
                eprintln!("{}", outcome.summary);
            }
            ExitCode::SUCCESS
        }
        Err(e) => {
            eprintln!("{}", json!({ "error": e.code(), "message": e.to_string() }));
            ExitCode::from(e.exit_code() as u8)
        }
    }
}

fn dispatch(cli: Cli) -> Result<Outcome, CliError> {
    let ctx = Ctx {
        settings: Settings::load(cli.config.as_deref())?,
        params_flag: cli.params,
    };
    match cli.command {
        Command::Params(c) => cmd::params::run(&ctx, c),
        Command::Issuer(c) => cmd::issuer::run(&ctx, c),
        Command::Wallet(c) => cmd::wallet::run(&ctx, c),
        Command::Service(c) => cmd::service::run(&ctx, c),
        Command::Sim(c) => cmd::sim::run(&ctx, c),
    }
}
