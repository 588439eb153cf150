mod args;
mod commands;
mod config;
mod failure;

use std::io::Write;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::Parser;

use args::{Cli, Command};
use failure::CliError;

fn run(cli: &Cli) -> Result<serde_json::Value, CliError> {
    let common = match &cli.command {
        Command::Fit(a) => &a.common,
        Command::Cv(a) => &a.common,
        Command::Simulate(a) => &a.common,
        Command::Report(a) => &a.common,
    };
    let base = commands::base(common)?;
    let explicit_out = common.out.is_some() || base.cfg.out.is_some();
    let job = || match &cli.command {
        Command::Fit(a) => commands::fit(a, &base),
        Command::Cv(a) => commands::cv(a, &base),
        Command::Simulate(a) => commands::simulate(a, &base),
        Command::Report(a) => commands::report(a, &base, explicit_out),
    };
    match base.threads {
        Some(n) => rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build()
            .map_err(|e| CliError::usage(format!("cannot start {n} threads: {e}")))?
            .install(job),
        None => job(),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion) => {
            let _ = e.print();
            return ExitCode::SUCCESS;
        }
        Err(e) => {
            let err = CliError::usage(e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            return ExitCode::from(err.exit_code() as u8);
        }
    };
    match run(&cli) {
        Ok(summary) => {
            let text = serde_json::to_string_pretty(&summary).expect("summary serializes");
            let mut stdout = std::io::stdout().lock();
            // Ignore a closed stdout pipe.
            let _ = writeln!(stdout, "{text}");
            ExitCode::SUCCESS
        }
        Err(err) => {
            eprintln!("{}", err.to_json());
            ExitCode::from(err.exit_code() as u8)
        }
    }
}
