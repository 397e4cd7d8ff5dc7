//! Command-line front end for the tensor-train grid-function crates:
//! encode fields, refine them to finer dyadic grids, super-resolve images,
//! synthesize compressed noise and turbulence, and analyze stored trains.
//!
//! The binary lives in `main.rs`; everything else is a library so tests can
//! drive commands in-process.

pub mod commands;
pub mod fixtures;
pub mod io;

use clap::{Parser, Subcommand};
use qtti_core::Result;

#[derive(Debug, Parser)]
#[command(
    name = "qtti",
    version,
    about = "Tensor-train grid functions: encode, refine, super-resolve, synthesize, analyze"
)]
pub struct Cli {
    /// Print wall-clock runtime lines per stage (descriptive only).
    #[arg(long, global = true)]
    pub runtime: bool,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Compress a fixture, image, or dense field into a train file.
    Encode(commands::encode::EncodeArgs),
    /// Add dyadic scales to a stored field by kernel interpolation.
    Refine(commands::refine::RefineArgs),
    /// Upscale a grayscale image through exact encoding plus refinement.
    Superres(commands::superres::SuperresArgs),
    /// Generate compressed procedural noise fields.
    Noise(commands::noise::NoiseArgs),
    /// Generate incompressible synthetic turbulence ensembles.
    Turbulence(commands::turbulence::TurbulenceArgs),
    /// Inspect a train file: stats, sampled errors, exports.
    Analyze(commands::analyze::AnalyzeArgs),
}

pub fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Encode(args) => commands::encode::run(&args, cli.runtime),
        Command::Refine(args) => commands::refine::run(&args, cli.runtime),
        Command::Superres(args) => commands::superres::run(&args, cli.runtime),
        Command::Noise(args) => commands::noise::run(&args, cli.runtime),
        Command::Turbulence(args) => commands::turbulence::run(&args, cli.runtime),
        Command::Analyze(args) => commands::analyze::run(&args, cli.runtime),
    }
}
