mod args;
mod commands;
mod report;

use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::Parser;
use serde::Serialize;

use args::{Cli, Command, Format, OutputArgs};
use report::Tabular;

const EXIT_VALIDATION: u8 = 2;
const EXIT_CONVERGENCE: u8 = 3;
const EXIT_COMPARISON: u8 = 4;

fn emit<R: Serialize + Tabular>(report: &R, output: &OutputArgs) -> Result<()> {
    let mut sink: Box<dyn Write> = match &output.out {
        Some(path) => Box::new(BufWriter::new(
            File::create(path).with_context(|| format!("creating {}", path.display()))?,
        )),
        None => Box::new(io::stdout().lock()),
    };
    match output.format {
        Format::Json => {
            serde_json::to_writer_pretty(&mut sink, report)?;
            writeln!(sink)?;
        }
        Format::Csv => {
            let mut w = csv::WriterBuilder::new().flexible(true).from_writer(&mut sink);
            for row in report.rows() {
                w.write_record(&row)?;
            }
            w.flush()?;
        }
    }
    sink.flush()?;
    Ok(())
}

fn run(cli: &Cli) -> Result<bool> {
    match &cli.command {
        Command::Moments(a) => emit(&commands::moments(a)?, &a.output)?,
        Command::Pmf(a) => emit(&commands::pmf(a)?, &a.output)?,
        Command::Rate(a) => emit(&commands::rate(a)?, &a.output)?,
        Command::Simulate(a) => emit(&commands::simulate(a)?, &a.output)?,
        Command::Compare(a) => {
            let report = commands::compare(a)?;
            emit(&report, &a.output)?;
            return Ok(report.passed);
        }
    }
    Ok(true)
}

fn exit_code(err: &anyhow::Error) -> u8 {
    match err.downcast_ref::<cellload::Error>() {
        Some(cellload::Error::Convergence { .. } | cellload::Error::Inversion(_) | cellload::Error::Transcription { .. }) => {
            EXIT_CONVERGENCE
        }
        Some(_) => EXIT_VALIDATION,
        None => 1,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match run(&cli) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("comparison failed: at least one check is outside its tolerance");
            ExitCode::from(EXIT_COMPARISON)
        }
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(exit_code(&err))
        }
    }
}
