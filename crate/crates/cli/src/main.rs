mod args;
mod commands;
mod render;

use std::io::{self, Write};
use std::process::ExitCode;

use clap::Parser;

use args::{Cli, Command, OutputFormat};
use commands::{run, CliError};

fn fail(e: &CliError) -> ExitCode {
    eprintln!("error[{}]: {}", e.kind, e.message);
    ExitCode::from(e.code as u8)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let outcome = match run(&cli.global, &cli.command) {
        Ok(o) => o,
        Err(e) => return fail(&e),
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    // a --write fragment replaces the report; reproduce status lines follow it
    let fragment_only = matches!(cli.command, Command::FitDe { write: true, .. });
    let written = if fragment_only {
        Ok(())
    } else {
        outcome.report.write(cli.global.output, &mut out)
    };
    let written = written.and_then(|_| match (&outcome.trailer, cli.global.output) {
        (Some(t), _) if fragment_only => out.write_all(t.as_bytes()),
        (Some(t), OutputFormat::Table) => writeln!(out).and_then(|_| out.write_all(t.as_bytes())),
        _ => Ok(()),
    });
    if let Err(e) = written.and_then(|_| out.flush()) {
        if e.kind() != io::ErrorKind::BrokenPipe {
            eprintln!("error[io]: {e}");
            return ExitCode::from(1);
        }
    }
    match &outcome.error {
        Some(e) => fail(e),
        None => ExitCode::SUCCESS,
    }
}
