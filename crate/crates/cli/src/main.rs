mod cli;
mod commands;
mod error;
mod io;
mod setup;

use std::process::ExitCode;

use clap::Parser;

use crate::cli::Cli;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            // Help and version go to stdout and are not errors.
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    let outcome = commands::run(&cli.command).and_then(|report| {
        print!("{report}");
        match &cli.report {
            Some(path) => io::write_file(path, &report).map(|_| ()),
            None => Ok(()),
        }
    });
    match outcome {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("varcheck: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
