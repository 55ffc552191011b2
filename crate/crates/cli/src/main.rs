mod args;
mod commands;
mod config;
mod error;

use std::ffi::OsString;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches};

use args::Cli;
use error::CliError;

fn report_error(e: &CliError, json: bool) {
    if json {
        let body = serde_json::json!({ "code": e.code(), "message": e.to_string() });
        eprintln!("{body}");
    } else {
        eprintln!("error [{}]: {e}", e.code());
    }
}

fn wants_json_errors(args: &[OsString]) -> bool {
    args.iter().any(|a| a == "--json-errors")
}

fn main() -> ExitCode {
    let mut args: Vec<OsString> = std::env::args_os().collect();
    let json = wants_json_errors(&args);
    let cmd = Cli::command();

    if let Some(path) = config::config_path(&args) {
        match config::merge_config(&cmd, args, &PathBuf::from(path)) {
            Ok(merged) => args = merged,
            Err(e) => {
                report_error(&e, json);
                return ExitCode::from(e.exit_code() as u8);
            }
        }
    }

    let matches = match cmd.try_get_matches_from(&args) {
        Ok(m) => m,
        Err(e) => {
            if !e.use_stderr() {
                // --help / --version
                let _ = e.print();
                return ExitCode::SUCCESS;
            }
            if json {
                report_error(&CliError::Usage(e.to_string().trim().to_string()), true);
            } else {
                let _ = e.print();
            }
            return ExitCode::from(2);
        }
    };
    let cli = Cli::from_arg_matches(&matches).expect("matches come from the same definition");

    let result = match cli.threads {
        Some(0) => Err(CliError::Usage("--threads must be at least 1".into())),
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))
            .and_then(|pool| pool.install(|| commands::run(cli.command))),
        None => commands::run(cli.command),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            report_error(&e, cli.json_errors);
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
