mod args;
mod commands;
mod config;
mod manifest;

use std::ffi::OsString;
use std::fmt;
use std::process::ExitCode;

use clap::{CommandFactory, FromArgMatches, Parser};

use crate::args::{Cli, Command};

const EXIT_USAGE: u8 = 2;
const EXIT_DATA: u8 = 3;

/// Bad flags, config keys or parameter values.
#[derive(Debug)]
pub struct UsageError(pub String);

impl fmt::Display for UsageError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

/// The error chain, skipping causes whose text is already shown.
fn describe(err: &anyhow::Error) -> String {
    let mut out = String::new();
    for cause in err.chain() {
        let text = cause.to_string();
        if out.contains(&text) {
            continue;
        }
        if !out.is_empty() {
            out.push_str(": ");
        }
        out.push_str(&text);
    }
    out
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.downcast_ref::<UsageError>().is_some() {
        return EXIT_USAGE;
    }
    match err.downcast_ref::<tgd::Error>() {
        Some(
            tgd::Error::Config(_)
            | tgd::Error::OutOfRange { .. }
            | tgd::Error::InvalidOperator(_)
            | tgd::Error::UnsupportedDirection(_)
            | tgd::Error::NotFound(_),
        ) => EXIT_USAGE,
        _ => EXIT_DATA,
    }
}

fn clap_exit(e: clap::Error) -> ExitCode {
    let code = e.exit_code();
    let _ = e.print();
    ExitCode::from(code as u8)
}

fn run(argv: Vec<OsString>) -> ExitCode {
    let cli = match Cli::try_parse_from(&argv) {
        Ok(cli) => cli,
        Err(e) => return clap_exit(e),
    };
    let name = cli.command.name();
    let root = Cli::command();
    let sub = root.find_subcommand(name).expect("parsed subcommand exists");

    let argv = match &cli.config {
        None => argv,
        Some(path) => {
            let sub_index = argv.iter().position(|a| a.to_str() == Some(name)).expect("subcommand in argv");
            match config::load(path).and_then(|pairs| config::merge(&argv, sub_index, sub, &pairs)) {
                Ok(merged) => merged,
                Err(e) => {
                    eprintln!("error: {}", describe(&e));
                    return ExitCode::from(exit_code(&e));
                }
            }
        }
    };
    let matches = match Cli::command().try_get_matches_from(&argv) {
        Ok(m) => m,
        Err(e) => {
            if let Some(path) = &cli.config {
                eprintln!("in config {}:", path.display());
            }
            return clap_exit(e);
        }
    };
    let cli = match Cli::from_arg_matches(&matches) {
        Ok(cli) => cli,
        Err(e) => return clap_exit(e),
    };
    let sub_matches = matches.subcommand_matches(name).expect("subcommand matched");

    if let Some(n) = cli.threads {
        if n == 0 {
            eprintln!("error: --threads must be at least 1");
            return ExitCode::from(EXIT_USAGE);
        }
        if let Err(e) = rayon::ThreadPoolBuilder::new().num_threads(n).build_global() {
            eprintln!("error: {e}");
            return ExitCode::from(EXIT_USAGE);
        }
    }

    let result = match &cli.command {
        Command::MakeOp(a) => commands::make_op(a, sub_matches),
        Command::Synth(a) => commands::synth(a, sub_matches),
        Command::Denoise(a) => commands::denoise(a, sub_matches),
        Command::Edge2d(a) => commands::edge2d(a, sub_matches),
        Command::Edge3d(a) => commands::edge3d(a, sub_matches),
        Command::Metrics(a) => commands::metrics(a, sub_matches),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {}", describe(&e));
            ExitCode::from(exit_code(&e))
        }
    }
}

fn main() -> ExitCode {
    run(std::env::args_os().collect())
}
