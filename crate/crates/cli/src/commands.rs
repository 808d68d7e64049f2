use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use snoidal::evolution::{format_float, mean_carrying_perturbation, random_perturbation, run_experiment, EvolutionTrace, ExperimentConfig};
use snoidal::spectral::analyze;
use snoidal::waves::ode_residual;
use snoidal::{Error, WaveParameters};

use crate::{EvolveArgs, Format, SweepArgs, WaveArgs};

pub fn exit_code(err: &anyhow::Error) -> u8 {
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(
            Error::OutOfRange { .. }
            | Error::InvalidModulus(_)
            | Error::ModulusAtBoundary { .. }
            | Error::InvalidGrid(_)
            | Error::InvalidArgument(_),
        ) => 2,
        Some(Error::IndexMismatch { .. }) => 3,
        Some(Error::BlowUp { time, .. }) => {
            eprintln!("blow-up time: {time}");
            4
        }
        _ => 1,
    }
}

fn path_with(prefix: &Path, suffix: &str) -> PathBuf {
    let mut s = prefix.as_os_str().to_owned();
    s.push(suffix);
    PathBuf::from(s)
}

fn write(path: &Path, contents: &str) -> Result<()> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
    }
    fs::write(path, contents).with_context(|| format!("writing {}", path.display()))
}

fn write_json(path: &Path, value: &impl Serialize) -> Result<()> {
    let mut s = serde_json::to_string_pretty(value)?;
    s.push('\n');
    write(path, &s)
}

fn build_wave(args: &WaveArgs) -> Result<WaveParameters> {
    Ok(WaveParameters::new(args.period, args.speed)?)
}

#[derive(Serialize)]
struct ProfileRow {
    x: f64,
    h: f64,
    dh: f64,
    d2h: f64,
}

#[derive(Serialize)]
struct WaveReport<'a> {
    config: &'a WaveArgs,
    parameters: WaveParameters,
    ode_residual: f64,
    dispersion_residual: f64,
}

pub fn wave(args: &WaveArgs) -> Result<()> {
    let w = build_wave(args)?;
    let s = w.sample(args.n)?;
    let rows: Vec<ProfileRow> = s
        .h
        .points()
        .zip(s.h.values().iter().zip(s.dh.values()).zip(s.d2h.values()))
        .map(|(x, ((&h, &dh), &d2h))| ProfileRow { x, h, dh, d2h })
        .collect();
    let profile = path_with(&args.out, &format!(".profile.{}", args.format.ext()));
    match args.format {
        Format::Csv => {
            let mut out = String::from("x,h,dh,d2h\n");
            for r in &rows {
                writeln!(out, "{}", [r.x, r.h, r.dh, r.d2h].map(format_float).join(","))?;
            }
            write(&profile, &out)?;
        }
        Format::Json => write_json(&profile, &rows)?,
    }
    let report = WaveReport {
        config: args,
        parameters: w,
        ode_residual: ode_residual(&w, args.n)?,
        dispersion_residual: w.dispersion_residual(),
    };
    write_json(&path_with(&args.out, ".wave.json"), &report)
}

#[derive(Serialize)]
struct SpectrumReport<'a> {
    config: &'a WaveArgs,
    analysis: snoidal::spectral::SpectralAnalysis,
}

pub fn spectrum(args: &WaveArgs) -> Result<()> {
    let w = build_wave(args)?;
    let analysis = analyze(&w, args.n)?;
    if args.format == Format::Csv {
        let mut out = String::from("operator,index,eigenvalue\n");
        for rep in [&analysis.l1, &analysis.lblock, &analysis.l1_constrained, &analysis.lblock_constrained] {
            let name = serde_json::to_value(rep.kind)?;
            let name = name.as_str().unwrap_or("unknown").to_owned();
            for (i, v) in rep.eigenvalues.iter().enumerate() {
                writeln!(out, "{name},{i},{}", format_float(*v))?;
            }
        }
        write(&path_with(&args.out, ".eigenvalues.csv"), &out)?;
    }
    write_json(
        &path_with(&args.out, ".spectrum.json"),
        &SpectrumReport {
            config: args,
            analysis,
        },
    )
}

#[derive(Serialize)]
struct EvolveMeta<'a> {
    config: &'a EvolveArgs,
    projected: bool,
    k: f64,
    perturbation: &'static str,
    rng: &'static str,
    blowup_factor: f64,
    samples: usize,
    max_orbit_distance: f64,
    final_orbit_distance: f64,
    energy_drift: f64,
    momentum_drift: f64,
    max_abs_mean: f64,
}

fn experiment(args: &EvolveArgs, eps: f64) -> Result<(WaveParameters, EvolutionTrace)> {
    let w = build_wave(&args.wave)?;
    let (p, q) = if args.is_projected() {
        random_perturbation(w.period, args.wave.n, args.seed)?
    } else {
        mean_carrying_perturbation(w.period, args.wave.n, args.seed)?
    };
    let cfg = ExperimentConfig {
        eps,
        horizon: args.horizon,
        dt: args.dt,
        sample_every: args.sample_every,
        projected: args.is_projected(),
        ..ExperimentConfig::default()
    };
    Ok((w, run_experiment(&w, (&p, &q), &cfg)?))
}

fn write_trace(path_prefix: &Path, format: Format, trace: &EvolutionTrace) -> Result<()> {
    let path = path_with(path_prefix, &format!(".trace.{}", format.ext()));
    match format {
        Format::Csv => write(&path, &trace.to_csv()),
        Format::Json => write_json(&path, trace),
    }
}

fn meta<'a>(args: &'a EvolveArgs, w: &WaveParameters, trace: &EvolutionTrace) -> EvolveMeta<'a> {
    EvolveMeta {
        config: args,
        projected: args.is_projected(),
        k: w.k(),
        perturbation: if args.is_projected() { "random-zero-mean" } else { "random-with-mean" },
        rng: "ChaCha8",
        blowup_factor: ExperimentConfig::default().blowup_factor,
        samples: trace.samples.len(),
        max_orbit_distance: trace.max_orbit_distance(),
        final_orbit_distance: trace.samples.last().map_or(0.0, |s| s.orbit_distance),
        energy_drift: trace.energy_drift(),
        momentum_drift: trace.momentum_drift(),
        max_abs_mean: trace.max_abs_mean(),
    }
}

pub fn evolve(args: &EvolveArgs) -> Result<()> {
    let (w, trace) = experiment(args, args.eps)?;
    write_trace(&args.wave.out, args.wave.format, &trace)?;
    write_json(&path_with(&args.wave.out, ".meta.json"), &meta(args, &w, &trace))
}

#[derive(Serialize)]
struct StabilityRun<'a> {
    eps: f64,
    max_orbit_distance: f64,
    ratio: f64,
    meta: EvolveMeta<'a>,
}

#[derive(Serialize)]
struct StabilityReport<'a> {
    runs: Vec<StabilityRun<'a>>,
    ratio_change: f64,
}

pub fn stability(args: &EvolveArgs) -> Result<()> {
    if args.eps.is_nan() || args.eps <= 0.0 {
        bail!(Error::InvalidArgument(format!("stability needs eps > 0, got {}", args.eps)));
    }
    let epsilons = [args.eps, 0.5 * args.eps];
    let (a, b) = rayon::join(|| experiment(args, epsilons[0]), || experiment(args, epsilons[1]));
    let results = [a?, b?];
    let mut runs = Vec::new();
    for (i, (eps, (w, trace))) in epsilons.iter().zip(&results).enumerate() {
        write_trace(&path_with(&args.wave.out, &format!(".eps{}", i + 1)), args.wave.format, trace)?;
        let d = trace.max_orbit_distance();
        runs.push(StabilityRun {
            eps: *eps,
            max_orbit_distance: d,
            ratio: d / eps,
            meta: meta(args, w, trace),
        });
    }
    let (r1, r2) = (runs[0].ratio, runs[1].ratio);
    let report = StabilityReport {
        ratio_change: (r1 / r2).max(r2 / r1),
        runs,
    };
    write_json(&path_with(&args.wave.out, ".stability.json"), &report)
}

#[derive(Debug, Clone, Copy, Deserialize, Serialize, PartialEq, Eq)]
#[serde(rename_all = "lowercase")]
enum SweepCommand {
    Wave,
    Spectrum,
    Evolve,
}

#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum OneOrMany {
    One(f64),
    Many(Vec<f64>),
}

impl OneOrMany {
    fn values(&self) -> Vec<f64> {
        match self {
            OneOrMany::One(v) => vec![*v],
            OneOrMany::Many(v) => v.clone(),
        }
    }
}

/// Sweep description: the Cartesian product of `L` and `c`.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
struct SweepConfig {
    command: SweepCommand,
    #[serde(rename = "L")]
    period: OneOrMany,
    c: OneOrMany,
    #[serde(rename = "N", default = "default_n")]
    n: usize,
    #[serde(default)]
    format: Option<String>,
    #[serde(default = "default_dt")]
    dt: f64,
    #[serde(rename = "T", default = "default_horizon")]
    horizon: f64,
    #[serde(default = "default_eps")]
    eps: f64,
    #[serde(default)]
    seed: u64,
    #[serde(default = "default_sample_every")]
    sample_every: usize,
    #[serde(default = "default_projected")]
    projected: bool,
}

fn default_n() -> usize {
    256
}
fn default_dt() -> f64 {
    1e-3
}
fn default_horizon() -> f64 {
    100.0
}
fn default_eps() -> f64 {
    1e-3
}
fn default_sample_every() -> usize {
    100
}
fn default_projected() -> bool {
    true
}

#[derive(Serialize)]
struct SweepRecord {
    job: usize,
    #[serde(rename = "L")]
    period: f64,
    c: f64,
    output: String,
    status: String,
    exit_code: u8,
}

pub fn sweep(args: &SweepArgs) -> Result<()> {
    let text = fs::read_to_string(&args.config).with_context(|| format!("reading {}", args.config.display()))?;
    let cfg: SweepConfig = toml::from_str(&text)
        .map_err(|e| Error::InvalidArgument(format!("sweep config {}: {e}", args.config.display())))?;
    let format = match cfg.format.as_deref() {
        None | Some("csv") => Format::Csv,
        Some("json") => Format::Json,
        Some(other) => bail!(Error::InvalidArgument(format!("unknown format {other:?}"))),
    };
    let jobs: Vec<(usize, f64, f64)> = cfg
        .period
        .values()
        .into_iter()
        .flat_map(|l| cfg.c.values().into_iter().map(move |c| (l, c)))
        .enumerate()
        .map(|(i, (l, c))| (i, l, c))
        .collect();

    let pool = rayon::ThreadPoolBuilder::new().num_threads(args.workers).build()?;
    let records: Vec<SweepRecord> = pool.install(|| {
        jobs.par_iter()
            .map(|&(job, period, speed)| {
                let out = path_with(&args.out, &format!("_{job:03}"));
                let wave = WaveArgs {
                    period,
                    speed,
                    n: cfg.n,
                    out: out.clone(),
                    format,
                };
                let result = match cfg.command {
                    SweepCommand::Wave => self::wave(&wave),
                    SweepCommand::Spectrum => spectrum(&wave),
                    SweepCommand::Evolve => evolve(&EvolveArgs {
                        wave,
                        dt: cfg.dt,
                        horizon: cfg.horizon,
                        eps: cfg.eps,
                        seed: cfg.seed,
                        sample_every: cfg.sample_every,
                        projected: cfg.projected,
                        unprojected: !cfg.projected,
                    }),
                };
                let (status, exit_code) = match &result {
                    Ok(()) => ("ok".to_owned(), 0),
                    Err(e) => (format!("{e:#}"), exit_code(e)),
                };
                SweepRecord {
                    job,
                    period,
                    c: speed,
                    output: out.display().to_string(),
                    status,
                    exit_code,
                }
            })
            .collect()
    });
    write_json(&path_with(&args.out, ".summary.json"), &records)?;
    let failed = records.iter().filter(|r| r.exit_code != 0).count();
    if failed > 0 {
        bail!("{failed} of {} sweep jobs failed; see the summary file", records.len());
    }
    Ok(())
}
