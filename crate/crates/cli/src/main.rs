//! Command-line front end for the temporal knowledge graph benchmark
//! toolkit: dataset diagnostics, baseline evaluation, corpus construction,
//! synthetic data generation, and label alignment.

mod align_cmd;
mod build;
mod diagnose;
mod errors;
mod eval;
mod flags;
mod manifest;
mod synth_cmd;

use std::process::ExitCode;

use clap::{CommandFactory, Parser, Subcommand};

#[derive(Debug, Parser)]
#[command(name = "tkgbench", version, about = "Temporal knowledge graph benchmark toolkit")]
struct Cli {
    /// Cap the worker threads used by parallel sections (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Report repeat-answer bias and distribution summaries for a dataset.
    Diagnose(diagnose::DiagnoseArgs),
    /// Score a prediction file, or the built-in baseline, on one task.
    Eval(eval::EvalArgs),
    /// Construct a dataset from a raw fact corpus.
    Build(build::BuildArgs),
    /// Generate a synthetic dataset or sweep its difficulty knobs.
    Synth(synth_cmd::SynthArgs),
    /// Resolve entity labels against Wikidata (cached, offline-capable).
    Align(align_cmd::AlignArgs),
    /// Print a machine-readable description of all flags.
    Flags,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    if let Some(n) = cli.threads {
        // Ignore the error from a second initialization: the pool can only
        // be sized once per process, and first-wins is the contract.
        let _ = rayon::ThreadPoolBuilder::new()
            .num_threads(n.max(1))
            .build_global();
    }
    let result = match &cli.command {
        Command::Diagnose(a) => diagnose::run(a),
        Command::Eval(a) => eval::run(a),
        Command::Build(a) => build::run(a),
        Command::Synth(a) => synth_cmd::run(a),
        Command::Align(a) => align_cmd::run(a),
        Command::Flags => flags::run(Cli::command()),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.code)
        }
    }
}
