//! `hdmm` command-line entry point. Each subcommand lives in its own module.

mod eval;
mod extract;
mod failure;
mod info;
mod meta;
mod synth;
mod train;

use std::process::ExitCode;
use std::str::FromStr;

use clap::{ArgAction, Parser, Subcommand};
use hdmm_core::depth_io::SplitRule;
use hdmm_core::hdmm::TemporalScale;

use failure::Failure;

#[derive(Debug, Parser)]
#[command(name = "hdmm", version, about = "Action recognition from depth video with hierarchical depth motion maps")]
struct Cli {
    /// More log output (-v info, -vv debug). RUST_LOG also applies.
    #[arg(short, long, action = ArgAction::Count, global = true)]
    verbose: u8,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Turn a directory of depth files into pseudo-colour motion-map images.
    Extract(extract::Args),
    /// Train one classifier per projection plane from extracted images.
    Train(train::Args),
    /// Score depth files with trained models and write a JSON report.
    Eval(eval::Args),
    /// Print the header or provenance of a depth file, model or image.
    Info(info::Args),
    /// Write a synthetic three-action dataset of moving depth blobs.
    Synth(synth::Args),
}

/// Comma-separated temporal scales, e.g. `1,5,21`.
#[derive(Debug, Clone)]
pub struct ScaleList(pub Vec<usize>);

impl FromStr for ScaleList {
    type Err = hdmm_core::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(ScaleList(TemporalScale::parse_list(s)?.iter().map(|t| t.get()).collect()))
    }
}

/// Keeps the rule and the text it was parsed from, so it can be echoed.
#[derive(Debug, Clone)]
pub struct SplitArg {
    pub text: String,
    pub rule: SplitRule,
}

impl FromStr for SplitArg {
    type Err = hdmm_core::Error;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        Ok(SplitArg {
            text: s.to_string(),
            rule: SplitRule::parse(s)?,
        })
    }
}

fn init_logging(verbose: u8) {
    let level = match verbose {
        0 => log::LevelFilter::Warn,
        1 => log::LevelFilter::Info,
        _ => log::LevelFilter::Debug,
    };
    env_logger::Builder::new()
        .filter_level(level)
        .parse_default_env()
        .format_timestamp(None)
        .init();
}

fn run(cli: Cli) -> Result<(), Failure> {
    match cli.command {
        Command::Extract(a) => extract::run(a),
        Command::Train(a) => train::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Info(a) => info::run(a),
        Command::Synth(a) => synth::run(a),
    }
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(1) } else { ExitCode::SUCCESS };
        }
    };
    init_logging(cli.verbose);
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(f) => {
            eprintln!("error: {f}");
            ExitCode::from(f.code())
        }
    }
}
