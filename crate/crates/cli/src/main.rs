use std::process::ExitCode;

use anyhow::Result;
use clap::Parser;

mod args;
mod commands;
mod expr;
mod output;
mod settings;

use args::{Cli, Command};
use commands::Context;
use output::Destination;
use settings::{out_dir, pick, FileConfig, Format};

fn run(cli: Cli) -> Result<bool> {
    let file = match &cli.config {
        Some(path) => FileConfig::load(path)?,
        None => FileConfig::default(),
    };
    let ctx = Context {
        dest: Destination::new(out_dir(cli.out_dir, file.out_dir.clone())),
        format: pick(cli.format, file.format, Format::Csv),
        seed: pick(cli.seed, file.seed, 0),
        file,
    };
    match cli.command {
        Command::Evolve(a) => commands::evolve::run(&ctx, a)?,
        Command::Bands(a) => commands::bands::run(&ctx, a)?,
        Command::Protocol(p) => commands::protocol::run(&ctx, p)?,
        Command::Verify(a) => return commands::verify::run(&ctx, a),
    }
    Ok(true)
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::FAILURE,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(2)
        }
    }
}
