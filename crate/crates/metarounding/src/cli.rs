//! Library backing of the `meta` command-line tool.
//!
//! Each subcommand is an ordinary function over a plain argument struct,
//! so tests and downstream code can drive experiments without spawning a
//! process; the `meta` binary is a thin dispatcher over these functions.
//!
//! Conventions shared by all commands:
//!
//! - Output paths are resolved and checked before any computation starts,
//!   and files are written atomically (temp file in the same directory,
//!   then rename), so interrupted runs never leave corrupt output.
//!   Existing files are only overwritten under `--force`.
//! - Every command takes `--seed`, which falls back to the `META_SEED`
//!   environment variable and then to 0.  All randomness flows from that
//!   master seed through named deterministic streams; identical
//!   invocations produce identical results (file timings aside).
//! - Tables are UTF-8, LF-terminated CSV with a mandatory header row;
//!   structured output is JSON.  Floats print as `nan`, `inf`/`-inf`, or
//!   nine significant digits of scientific notation.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use rand::Rng;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use tempfile::NamedTempFile;
use thiserror::Error;

use crate::metaround::{metaround, MetaroundError, MetaroundingConfig, TraceRecord};
use crate::online::{
    run_fpl_baseline, run_online, LossModel, OnlineConfig, OnlineError, ProjectionMode,
    RegretLedger,
};
use crate::setcover::{GreedyOracle, SetCoverError, SetCoverInstance};

/// Errors surfaced by the command functions.
#[derive(Debug, Error)]
pub enum CliError {
    /// The output file exists and `--force` was not given.
    #[error("refusing to overwrite {path} (pass --force to allow)")]
    OutputExists { path: PathBuf },

    /// An argument combination is unusable.
    #[error("invalid argument: {detail}")]
    InvalidArgument { detail: String },

    #[error("i/o failure: {0}")]
    Io(#[from] std::io::Error),

    #[error("could not finalize output file: {0}")]
    Persist(#[from] tempfile::PersistError),

    #[error("json failure: {0}")]
    Json(#[from] serde_json::Error),

    #[error(transparent)]
    SetCover(#[from] SetCoverError),

    #[error(transparent)]
    Metaround(#[from] MetaroundError),

    #[error(transparent)]
    Online(#[from] OnlineError),
}

/// Renders a float for CSV: `nan`, signed `inf`, or `%.8e`.
fn fmt_float(v: f64) -> String {
    if v.is_nan() {
        "nan".to_string()
    } else if v == f64::INFINITY {
        "inf".to_string()
    } else if v == f64::NEG_INFINITY {
        "-inf".to_string()
    } else {
        format!("{v:.8e}")
    }
}

/// Refuses to clobber `path` unless `force` is set.  Called for every
/// output path before the command does any real work.
fn check_output(path: &Path, force: bool) -> Result<(), CliError> {
    if path.exists() && !force {
        return Err(CliError::OutputExists {
            path: path.to_path_buf(),
        });
    }
    Ok(())
}

/// Writes `bytes` to `path` atomically: a temporary file in the target
/// directory is populated first and then renamed over the destination.
fn write_atomic(path: &Path, bytes: &[u8], force: bool) -> Result<(), CliError> {
    check_output(path, force)?;
    let parent = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = NamedTempFile::new_in(parent)?;
    tmp.write_all(bytes)?;
    tmp.persist(path)?;
    Ok(())
}

fn read_instance(path: &Path) -> Result<SetCoverInstance, CliError> {
    let text = fs::read_to_string(path)?;
    let instance: SetCoverInstance = serde_json::from_str(&text)?;
    instance.validate()?;
    Ok(instance)
}

/// Arguments of `meta gen`.
#[derive(Debug, Clone, Args)]
pub struct GenArgs {
    /// Number of ground elements.
    #[arg(long)]
    pub m: usize,
    /// Number of candidate sets.
    #[arg(long)]
    pub n: usize,
    /// Probability that a set covers an element.
    #[arg(long, default_value_t = 0.3)]
    pub density: f64,
    /// Master seed (falls back to META_SEED, then 0).
    #[arg(long, env = "META_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Where to write the instance JSON; stdout when omitted.
    #[arg(long)]
    pub out_path: Option<PathBuf>,
    /// Overwrite existing output files.
    #[arg(long)]
    pub force: bool,
}

/// Generates a random instance and writes it as JSON.
pub fn cmd_gen(args: &GenArgs) -> Result<(), CliError> {
    if let Some(path) = &args.out_path {
        check_output(path, args.force)?;
    }
    let instance = SetCoverInstance::generate(args.m, args.n, args.density, args.seed)?;
    let mut text = serde_json::to_string_pretty(&instance)?;
    text.push('\n');
    match &args.out_path {
        Some(path) => write_atomic(path, text.as_bytes(), args.force)?,
        None => print!("{text}"),
    }
    Ok(())
}

/// Arguments of `meta solve`.
#[derive(Debug, Clone, Args)]
pub struct SolveArgs {
    /// Instance JSON to load.
    #[arg(long)]
    pub instance_path: PathBuf,
    /// Target excess over the empirical approximation factor.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Smoothing override; defaults to `2 ln(n) / epsilon`.
    #[arg(long)]
    pub eta: Option<f64>,
    /// Master seed (falls back to META_SEED, then 0); drives the random
    /// objective under which the fractional point is computed.
    #[arg(long, env = "META_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Where to write the per-round trace CSV; skipped when omitted.
    #[arg(long)]
    pub trace_out: Option<PathBuf>,
    /// Where to write the JSON summary; stdout when omitted.
    #[arg(long)]
    pub summary_out: Option<PathBuf>,
    /// Overwrite existing output files.
    #[arg(long)]
    pub force: bool,
}

/// Stable JSON summary of a solve run.  Contains no timings, so repeated
/// runs with one seed produce byte-identical documents.
#[derive(Debug, Clone, Serialize)]
pub struct SolveSummary {
    pub epsilon: f64,
    pub eta: f64,
    pub seed: u64,
    pub lp_value: f64,
    pub alpha_emp: f64,
    pub certified_value: f64,
    pub certificate_bound: f64,
    pub gap: f64,
    pub iterations: usize,
    pub weights: Vec<f64>,
    pub columns: Vec<Vec<u64>>,
    pub expectation: Vec<f64>,
}

fn trace_csv(trace: &[TraceRecord]) -> String {
    let mut out = String::from("k,eps_k,hstar,best_oracle,alpha_emp,ms\n");
    for r in trace {
        out.push_str(&format!(
            "{},{},{},{},{},{}\n",
            r.iteration,
            fmt_float(r.gap),
            fmt_float(r.smoothed_value),
            fmt_float(r.best_oracle_value),
            fmt_float(r.alpha_emp),
            r.elapsed_ms,
        ));
    }
    out
}

/// Loads an instance, draws a seeded random objective, solves the
/// relaxation, rounds the optimum, and writes the trace and summary.
pub fn cmd_solve(args: &SolveArgs) -> Result<SolveSummary, CliError> {
    for path in [&args.trace_out, &args.summary_out].into_iter().flatten() {
        check_output(path, args.force)?;
    }
    let instance = read_instance(&args.instance_path)?;

    let mut rng = ChaCha8Rng::seed_from_u64(args.seed);
    let cost: Vec<f64> = (0..instance.n).map(|_| rng.gen::<f64>()).collect();
    let (point, lp_value) = instance.relaxed_lp(&cost)?;

    let mut config = MetaroundingConfig::new(args.epsilon);
    config.eta = args.eta;
    let mut oracle = GreedyOracle::new(&instance);
    let result = metaround(&point, &mut oracle, &config)?;

    if let Some(path) = &args.trace_out {
        write_atomic(path, trace_csv(&result.trace).as_bytes(), args.force)?;
    }
    let summary = SolveSummary {
        epsilon: args.epsilon,
        eta: result.eta,
        seed: args.seed,
        lp_value,
        alpha_emp: result.alpha_emp,
        certified_value: result.certified_value,
        certificate_bound: result.alpha_emp + args.epsilon,
        gap: result.gap,
        iterations: result.iterations,
        weights: result.weights.clone(),
        columns: result.columns.iter().map(|c| c.entries().to_vec()).collect(),
        expectation: result.expectation(),
    };
    let mut text = serde_json::to_string_pretty(&summary)?;
    text.push('\n');
    match &args.summary_out {
        Some(path) => write_atomic(path, text.as_bytes(), args.force)?,
        None => print!("{text}"),
    }
    Ok(summary)
}

/// Which strategy `meta online` plays.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum OnlineMode {
    /// Rounding-based play: gradient descent on the fractional point,
    /// sampling from the rounded distribution each round.
    Metaround,
    /// Follow-the-perturbed-leader baseline on the same price stream.
    Fpl,
}

/// Projection choice exposed on the command line.
#[derive(Debug, Clone, Copy, PartialEq, Eq, clap::ValueEnum)]
pub enum ProjectionChoice {
    /// Euclidean projection onto the covering relaxation (default).
    Relaxed,
    /// Clamp to the unit box.
    Box,
}

impl From<ProjectionChoice> for ProjectionMode {
    fn from(choice: ProjectionChoice) -> Self {
        match choice {
            ProjectionChoice::Relaxed => ProjectionMode::RelaxedPolytope,
            ProjectionChoice::Box => ProjectionMode::Box,
        }
    }
}

/// Arguments of `meta online`.
#[derive(Debug, Clone, Args)]
pub struct OnlineArgs {
    /// Instance JSON to load.
    #[arg(long)]
    pub instance_path: PathBuf,
    /// Number of rounds to play.
    #[arg(long = "t")]
    pub t: usize,
    /// Target excess handed to the rounding engine each round.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Strategy to play.
    #[arg(long, value_enum, default_value_t = OnlineMode::Metaround)]
    pub mode: OnlineMode,
    /// Master seed (falls back to META_SEED, then 0).
    #[arg(long, env = "META_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Base gradient step size; defaults to `1 / sqrt(n)`.
    #[arg(long)]
    pub step0: Option<f64>,
    /// Projection applied after each gradient step.
    #[arg(long, value_enum, default_value_t = ProjectionChoice::Relaxed)]
    pub projection: ProjectionChoice,
    /// JSON file with a fixed price schedule (array of per-round arrays);
    /// prices are drawn uniformly at random when omitted.
    #[arg(long)]
    pub losses: Option<PathBuf>,
    /// Where to write the ledger CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Overwrite existing output files.
    #[arg(long)]
    pub force: bool,
}

fn ledger_csv(ledger: &RegretLedger) -> String {
    let mut out = String::from(
        "round,incurred,cumulative,benchmark_lp,benchmark_column,alpha_emp,meta_iters,meta_ms\n",
    );
    for r in &ledger.rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{},{}\n",
            r.round,
            fmt_float(r.incurred),
            fmt_float(r.cumulative),
            fmt_float(r.benchmark_lp),
            fmt_float(r.benchmark_column),
            fmt_float(r.alpha_emp),
            r.meta_iterations,
            r.meta_ms,
        ));
    }
    out
}

/// Plays an online experiment and writes the per-round ledger CSV.
pub fn cmd_online(args: &OnlineArgs) -> Result<RegretLedger, CliError> {
    check_output(&args.out, args.force)?;
    let instance = read_instance(&args.instance_path)?;
    let losses = match &args.losses {
        Some(path) => {
            let text = fs::read_to_string(path)?;
            LossModel::Fixed(serde_json::from_str(&text)?)
        }
        None => LossModel::IidUniform,
    };
    let config = OnlineConfig {
        horizon: args.t,
        seed: args.seed,
        step0: args.step0,
        projection: args.projection.into(),
        losses,
        rounding: MetaroundingConfig::new(args.epsilon),
    };
    let ledger = match args.mode {
        OnlineMode::Metaround => run_online(&instance, &config)?,
        OnlineMode::Fpl => run_fpl_baseline(&instance, &config)?,
    };
    write_atomic(&args.out, ledger_csv(&ledger).as_bytes(), args.force)?;
    Ok(ledger)
}

/// Arguments of `meta sweep`.
#[derive(Debug, Clone, Args)]
pub struct SweepArgs {
    /// Number of ground elements per generated instance.
    #[arg(long, default_value_t = 10)]
    pub m: usize,
    /// Set counts to sweep, comma separated.
    #[arg(long, value_delimiter = ',', required = true)]
    pub n_list: Vec<usize>,
    /// Target excess for every cell.
    #[arg(long, default_value_t = 0.1)]
    pub epsilon: f64,
    /// Instances per set count.
    #[arg(long, default_value_t = 1)]
    pub repeats: usize,
    /// Coverage density of the generated instances.
    #[arg(long, default_value_t = 0.3)]
    pub density: f64,
    /// Master seed (falls back to META_SEED, then 0); each cell receives
    /// its own seed drawn from this one.
    #[arg(long, env = "META_SEED", default_value_t = 0)]
    pub seed: u64,
    /// Worker threads; defaults to available parallelism.
    #[arg(long)]
    pub jobs: Option<usize>,
    /// Where to write the timing CSV.
    #[arg(long)]
    pub out: PathBuf,
    /// Overwrite existing output files.
    #[arg(long)]
    pub force: bool,
}

/// One sweep cell's outcome; failed cells keep NaN metrics and carry the
/// error text in `status`.
#[derive(Debug, Clone)]
pub struct SweepRow {
    pub n: usize,
    pub repeat: usize,
    pub iterations: usize,
    pub ms: u128,
    pub alpha_emp: f64,
    pub certified_value: f64,
    pub status: String,
}

/// Everything a caller needs to judge a sweep: the ordered rows and how
/// many of them failed.
#[derive(Debug, Clone)]
pub struct SweepReport {
    pub rows: Vec<SweepRow>,
    pub failures: usize,
}

/// CSV cells must stay comma- and newline-free.
fn sanitize_status(text: &str) -> String {
    text.replace(',', ";").replace(['\n', '\r'], " ")
}

fn sweep_cell(m: usize, n: usize, repeat: usize, density: f64, epsilon: f64, seed: u64) -> SweepRow {
    let begun = std::time::Instant::now();
    let outcome = (|| -> Result<(usize, f64, f64), CliError> {
        let instance = SetCoverInstance::generate(m, n, density, seed)?;
        let (point, _) = instance.relaxed_lp(&instance.cost)?;
        let mut oracle = GreedyOracle::new(&instance);
        let result = metaround(&point, &mut oracle, &MetaroundingConfig::new(epsilon))?;
        Ok((result.iterations, result.alpha_emp, result.certified_value))
    })();
    let ms = begun.elapsed().as_millis();
    match outcome {
        Ok((iterations, alpha_emp, certified_value)) => SweepRow {
            n,
            repeat,
            iterations,
            ms,
            alpha_emp,
            certified_value,
            status: "ok".to_string(),
        },
        Err(err) => SweepRow {
            n,
            repeat,
            iterations: 0,
            ms,
            alpha_emp: f64::NAN,
            certified_value: f64::NAN,
            status: sanitize_status(&err.to_string()),
        },
    }
}

fn sweep_csv(rows: &[SweepRow]) -> String {
    let mut out = String::from("n,repeat,iters,ms,alpha_emp,certified_value,status\n");
    for r in rows {
        out.push_str(&format!(
            "{},{},{},{},{},{},{}\n",
            r.n,
            r.repeat,
            r.iterations,
            r.ms,
            fmt_float(r.alpha_emp),
            fmt_float(r.certified_value),
            r.status,
        ));
    }
    out
}

/// Runs the timing sweep: for every `(n, repeat)` cell, generate an
/// instance, solve its relaxation, and round the optimum, recording
/// iterations and wall time.  Cells run in a worker pool but rows are
/// reported in `(n, repeat)` order; failed cells are recorded in their
/// row and the sweep continues.
pub fn cmd_sweep(args: &SweepArgs) -> Result<SweepReport, CliError> {
    check_output(&args.out, args.force)?;
    if args.n_list.is_empty() || args.repeats == 0 {
        return Err(CliError::InvalidArgument {
            detail: "the sweep needs at least one set count and one repeat".to_string(),
        });
    }
    // Draw one sub-seed per cell up front, in (n, repeat) order, so cell
    // seeds do not depend on scheduling.
    let mut master = ChaCha8Rng::seed_from_u64(args.seed);
    let mut cells = Vec::new();
    for &n in &args.n_list {
        for repeat in 0..args.repeats {
            cells.push((n, repeat, master.gen::<u64>()));
        }
    }

    let run_cells = || -> Vec<SweepRow> {
        use rayon::prelude::*;
        cells
            .par_iter()
            .map(|&(n, repeat, cell_seed)| {
                let row = sweep_cell(args.m, n, repeat, args.density, args.epsilon, cell_seed);
                log::info!(
                    "sweep cell n={n} repeat={repeat}: {} ({} ms)",
                    row.status,
                    row.ms
                );
                row
            })
            .collect()
    };
    let rows = match args.jobs {
        Some(jobs) => rayon::ThreadPoolBuilder::new()
            .num_threads(jobs)
            .build()
            .map_err(|e| CliError::InvalidArgument {
                detail: format!("could not build a {jobs}-thread pool: {e}"),
            })?
            .install(run_cells),
        None => run_cells(),
    };

    write_atomic(&args.out, sweep_csv(&rows).as_bytes(), args.force)?;
    let failures = rows.iter().filter(|r| r.status != "ok").count();
    Ok(SweepReport { rows, failures })
}
