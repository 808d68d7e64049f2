use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

mod commands;

#[derive(Parser, Debug)]
#[command(name = "snoidal", version, about = "Snoidal waves of the periodic φ⁴ equation: profiles, spectra, evolution")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Sample the wave profile and report its parameters.
    Wave(WaveArgs),
    /// Spectral report for the linearised operators and the index data.
    Spectrum(WaveArgs),
    /// Evolve the perturbed wave and write the trace.
    Evolve(EvolveArgs),
    /// Run the perturbation experiment at ε and ε/2 and report the ratios.
    Stability(EvolveArgs),
    /// Fan a batch of jobs described in a TOML file out to a worker pool.
    Sweep(SweepArgs),
}

#[derive(Copy, Clone, Debug, PartialEq, Eq, ValueEnum, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    Csv,
    Json,
}

impl Format {
    pub fn ext(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct WaveArgs {
    /// Spatial period, 0 < L < 2π.
    #[arg(long = "L", allow_negative_numbers = true)]
    #[serde(rename = "L")]
    pub period: f64,
    /// Wave speed.
    #[arg(long = "c", allow_negative_numbers = true)]
    #[serde(rename = "c")]
    pub speed: f64,
    /// Number of grid points.
    #[arg(long = "N", default_value_t = 256)]
    #[serde(rename = "N")]
    pub n: usize,
    /// Output path prefix.
    #[arg(long, default_value = "snoidal")]
    pub out: PathBuf,
    #[arg(long, value_enum, default_value_t = Format::Csv)]
    pub format: Format,
}

#[derive(Args, Debug, Clone, Serialize)]
pub struct EvolveArgs {
    #[command(flatten)]
    #[serde(flatten)]
    pub wave: WaveArgs,
    #[arg(long, default_value_t = 1e-3)]
    pub dt: f64,
    /// Final time.
    #[arg(long = "T", default_value_t = 100.0)]
    #[serde(rename = "T")]
    pub horizon: f64,
    /// Perturbation size in the energy norm.
    #[arg(long, default_value_t = 1e-3)]
    pub eps: f64,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// Record a trace sample every this many steps.
    #[arg(long, default_value_t = 100)]
    pub sample_every: usize,
    /// Evolve the zero-mean projected flow (default).
    #[arg(long, overrides_with = "unprojected")]
    #[serde(skip)]
    pub projected: bool,
    /// Evolve the full flow from data with a nonzero mean.
    #[arg(long, overrides_with = "projected")]
    #[serde(skip)]
    pub unprojected: bool,
}

impl EvolveArgs {
    pub fn is_projected(&self) -> bool {
        !self.unprojected
    }
}

#[derive(Args, Debug, Clone)]
pub struct SweepArgs {
    /// TOML job description.
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long, default_value = "sweep")]
    pub out: PathBuf,
    /// Worker threads; 0 picks the number of cores.
    #[arg(long, default_value_t = 0)]
    pub workers: usize,
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Wave(a) => commands::wave(&a),
        Command::Spectrum(a) => commands::spectrum(&a),
        Command::Evolve(a) => commands::evolve(&a),
        Command::Stability(a) => commands::stability(&a),
        Command::Sweep(a) => commands::sweep(&a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(err) => {
            eprintln!("error: {err:#}");
            ExitCode::from(commands::exit_code(&err))
        }
    }
}
