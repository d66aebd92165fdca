//! Command-line surface of the dwset toolkit: spec parsing, commands and reports.

pub mod commands;
pub mod error;
pub mod output;
pub mod report;
pub mod spec;

use std::path::PathBuf;

use clap::{Args, Parser, Subcommand};
use dwset::Complex64;

pub use commands::{run, Outcome};
pub use error::CliError;
pub use report::Report;

#[derive(Debug, Parser)]
#[command(name = "dwset", version, about = "Denjoy-Wolff sets of rational semigroups")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
    /// Include wall-clock timings in reports (makes reports run-dependent).
    #[arg(long, global = true)]
    pub timings: bool,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Estimate the Denjoy-Wolff set of a semigroup.
    Dw(AnalysisArgs),
    /// Check membership in the disk-preserving class and label the semigroup.
    Classify(AnalysisArgs),
    /// Group elements by Denjoy-Wolff point.
    Partition(AnalysisArgs),
    /// Run one theorem verifier.
    Verify(VerifyArgs),
    /// Sample the Julia set of a semigroup.
    Julia(JuliaArgs),
    /// Write the orbit of a point under one element as CSV.
    Orbit(OrbitArgs),
}

#[derive(Debug, Args)]
pub struct AnalysisArgs {
    /// Spec file (JSON) or a report written by this tool.
    pub spec: PathBuf,
    #[arg(long)]
    pub depth: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    /// Report destination; standard output when absent.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct VerifyArgs {
    /// thm-blaschke-fixed, thm-blaschke-parabolic, thm-b-invariance,
    /// thm-abelian-interior, thm-julia-disk or thm-conjugation.
    pub theorem: String,
    #[arg(long)]
    pub k: Option<usize>,
    /// Complex parameter as `re` or `re,im`.
    #[arg(long, value_parser = parse_complex_arg, allow_hyphen_values = true)]
    pub a: Option<Complex64>,
    #[arg(long)]
    pub r: Option<f64>,
    #[arg(long)]
    pub depth: Option<usize>,
    /// Center of the disk automorphism e^{i alpha} (z - c) / (1 - conj(c) z).
    #[arg(long, value_parser = parse_complex_arg, allow_hyphen_values = true)]
    pub c: Option<Complex64>,
    #[arg(long, allow_hyphen_values = true)]
    pub alpha: Option<f64>,
    /// Generators for the semigroup-level theorems; {z^2, z^3} when absent.
    #[arg(long)]
    pub spec: Option<PathBuf>,
    #[arg(long)]
    pub max_j: Option<usize>,
    #[arg(long)]
    pub samples: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Args)]
pub struct JuliaArgs {
    pub spec: PathBuf,
    #[arg(long)]
    pub depth: Option<usize>,
    /// Samples per element.
    #[arg(long)]
    pub points: Option<usize>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Binary PGM image of hit counts.
    #[arg(long)]
    pub out_image: Option<PathBuf>,
    /// CSV of sample points with their source words.
    #[arg(long)]
    pub out_points: Option<PathBuf>,
    /// Image width and height in pixels.
    #[arg(long, default_value_t = 512)]
    pub size: usize,
    /// Half-width of the square image window centred at 0.
    #[arg(long, default_value_t = 2.0)]
    pub extent: f64,
}

#[derive(Debug, Args)]
pub struct OrbitArgs {
    pub spec: PathBuf,
    /// One-based generator indices, outermost first, e.g. `1,2`.
    #[arg(long, default_value = "1")]
    pub word: String,
    #[arg(long, value_parser = parse_complex_arg, allow_hyphen_values = true, default_value = "0")]
    pub z0: Complex64,
    /// Number of iterations.
    #[arg(long, default_value_t = 100)]
    pub n: usize,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

/// Parses `re` or `re,im`.
pub fn parse_complex_arg(s: &str) -> Result<Complex64, String> {
    let parts: Vec<&str> = s.split(',').map(str::trim).collect();
    let num = |t: &str| t.parse::<f64>().map_err(|e| format!("`{t}`: {e}"));
    match parts.as_slice() {
        [re] => Ok(Complex64::new(num(re)?, 0.0)),
        [re, im] => Ok(Complex64::new(num(re)?, num(im)?)),
        _ => Err(format!("expected `re` or `re,im`, got `{s}`")),
    }
}
