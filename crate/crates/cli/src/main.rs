mod args;
mod commands;
mod corpus;
mod io;
mod report;

use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::Parser;

use args::{CheckCmd, Cli, Command, Format};

/// Check verbs produce no data, so their `--out` names the report file.
fn report_path(cli: &Cli) -> Option<PathBuf> {
    let out = match &cli.command {
        Command::Check(CheckCmd::Frontier(a)) => a.out.clone(),
        Command::Check(CheckCmd::WhitneyA(a)) => a.out.clone(),
        Command::Check(CheckCmd::Orthogonality(a)) => a.out.clone(),
        Command::Check(CheckCmd::Bundle(a)) => a.out.clone(),
        _ => None,
    };
    cli.output.report.clone().or(out)
}

fn main() -> ExitCode {
    // Usage errors are input errors; 2 is reserved for FAIL verdicts.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let mut report = match commands::run(&cli.command, cli.tol.resolve()) {
        Ok(r) => r,
        Err(e) => {
            eprintln!("svb: {e}");
            return ExitCode::from(1);
        }
    };
    if !cli.output.no_timestamp {
        report.timestamp = SystemTime::now()
            .duration_since(UNIX_EPOCH)
            .ok()
            .map(|d| d.as_secs());
    }
    let text = match cli.output.format {
        Format::Json => report.to_json(),
        Format::Text => report.to_text(),
    };
    let written = match report_path(&cli) {
        Some(p) => std::fs::write(&p, text).map_err(|e| format!("{}: {e}", p.display())),
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| e.to_string()),
    };
    if let Err(e) = written {
        eprintln!("svb: cannot write report: {e}");
        return ExitCode::from(1);
    }
    ExitCode::from(report.exit_code() as u8)
}
