//! `effhorizon`: enumerate environments, compute sample-complexity bounds,
//! run learners over seeds and compare bounds with measured sample complexity.
//!
//! Exit codes: 0 success, 2 bad flags, 3 data error, 4 cap exceeded.

mod compare;
mod inputs;
mod suite;
mod tables;

use std::fs::File;
use std::io::{self, Write};
use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, Parser, Subcommand, ValueEnum};
use effhorizon::bounds::{bound_report, CoveringVariant, ReportOptions};
use effhorizon::enumerate::{consolidate, enumerate, EnumerationConfig};
use effhorizon::envgen::{make_empty_grid, TreeSim};
use effhorizon::learners::{
    fqi_gorp_run_with, gorp_run_with, pg_gorp_run_with, plan_over_window, rmax_run, RunResult, TieBreak,
    DEFAULT_GLOBAL_SEED,
};
use effhorizon::tightbound::{tight_effective_horizon, TightConfig};
use effhorizon::{builtin, io as mdp_io, Error};
use serde::Serialize;

#[derive(Parser)]
#[command(name = "effhorizon", version, about = "Sample-complexity bounds and GORP-family learners for deterministic MDPs")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Exhaustively enumerate an environment into an MDP file.
    Enumerate(EnumerateArgs),
    /// Every closed-form bound plus the tight bound, as a JSON report.
    Bounds(BoundsArgs),
    /// A single bound family.
    Bound {
        #[command(subcommand)]
        which: BoundCommand,
    },
    /// Run a learner over seeds; one CSV row per seed.
    Run(RunArgs),
    /// Metrics for every bound column against every empirical column.
    Compare(CompareArgs),
    /// Bounds, learners and metrics for every environment in a manifest.
    Suite(SuiteArgs),
}

#[derive(Args)]
struct EnumerateArgs {
    /// Built-in environment name (`empty_grid_N<n>` or any analytical family).
    #[arg(long)]
    env: String,
    #[arg(long)]
    horizon: Option<usize>,
    /// Output file; `.json` selects the JSON mirror.
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = effhorizon::envgen::DEFAULT_MAX_STATES)]
    max_states: usize,
    /// Keep bisimilar states separate.
    #[arg(long)]
    raw: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Covering {
    Sa,
    Sat,
}

#[derive(Args)]
struct BoundsArgs {
    /// MDP file or built-in name.
    #[arg(long)]
    mdp: String,
    #[arg(long)]
    horizon: Option<usize>,
    /// `uniform` or a JSON policy file.
    #[arg(long, default_value = "uniform")]
    expl: String,
    /// k range for the tight bound, e.g. `1..3`.
    #[arg(long, value_parser = parse_k_range, default_value = "1..3")]
    k: RangeInclusive<usize>,
    #[arg(long)]
    no_tight: bool,
    #[arg(long, value_enum, default_value_t = Covering::Sa)]
    covering: Covering,
    /// JSON report path; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Also append the report as a bounds.csv row (header written if new).
    #[arg(long)]
    csv: Option<PathBuf>,
}

#[derive(Subcommand)]
enum BoundCommand {
    /// Tight effective horizon: `min_k k + log_A m_k`.
    Tight(TightArgs),
}

#[derive(Args)]
struct TightArgs {
    #[arg(long)]
    mdp: String,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, value_parser = parse_k_range, default_value = "1..3")]
    k: RangeInclusive<usize>,
    #[arg(long, default_value = "uniform")]
    expl: String,
    #[arg(long, default_value_t = effhorizon::tightbound::DEFAULT_PARTITION)]
    partition: usize,
    #[arg(long, default_value_t = 100.0)]
    max_log10_m: f64,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Clone, Copy, ValueEnum)]
enum Algorithm {
    Gorp,
    PgGorp,
    FqiGorp,
    PlanWindow,
    Rmax,
}

#[derive(Clone, Copy, ValueEnum)]
enum Tie {
    Lowest,
    Random,
}

#[derive(Args)]
struct RunArgs {
    #[arg(value_enum)]
    algorithm: Algorithm,
    #[arg(long)]
    mdp: String,
    #[arg(long)]
    horizon: Option<usize>,
    #[arg(long, default_value = "uniform")]
    expl: String,
    #[arg(long, default_value_t = 1)]
    k: usize,
    #[arg(long, default_value_t = 1)]
    m: u64,
    /// Planning window for `plan-window`; defaults to the horizon.
    #[arg(long)]
    w: Option<usize>,
    #[arg(long, default_value_t = 101)]
    seeds: u64,
    #[arg(long, default_value_t = DEFAULT_GLOBAL_SEED)]
    global_seed: u64,
    /// Argmax tie rule for GORP.
    #[arg(long, value_enum, default_value_t = Tie::Lowest)]
    tie: Tie,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct CompareArgs {
    /// CSV with a `name` column and `bound_*` columns (log10 timesteps).
    #[arg(long)]
    bounds: PathBuf,
    /// CSV with a `name` column and `empirical_*` columns; empty = not converged.
    #[arg(long)]
    empirical: PathBuf,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SuiteArgs {
    #[arg(long)]
    manifest: PathBuf,
    /// One row per MDP; stdout when omitted.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Metrics JSON over the suite rows.
    #[arg(long)]
    metrics: Option<PathBuf>,
    /// GORP success fraction per (k, m) for learning-curve plots.
    #[arg(long)]
    curves: Option<PathBuf>,
    /// Full bound reports, one JSON array.
    #[arg(long)]
    reports: Option<PathBuf>,
}

/// Flag values that parse but make no sense together.
#[derive(Debug)]
struct UsageError(String);

impl std::fmt::Display for UsageError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for UsageError {}

fn usage(msg: impl Into<String>) -> anyhow::Error {
    UsageError(msg.into()).into()
}

fn parse_k_range(s: &str) -> std::result::Result<RangeInclusive<usize>, String> {
    let (lo, hi) = match s.split_once("..") {
        Some((lo, hi)) => (lo, hi.trim_start_matches('=')),
        None => (s, s),
    };
    let lo: usize = lo.trim().parse().map_err(|_| format!("bad k range {s:?}"))?;
    let hi: usize = hi.trim().parse().map_err(|_| format!("bad k range {s:?}"))?;
    if lo == 0 || lo > hi {
        return Err(format!("k range {s:?} must satisfy 1 ≤ lo ≤ hi"));
    }
    Ok(lo..=hi)
}

fn writer(path: Option<&Path>) -> Result<Box<dyn Write>> {
    Ok(match path {
        Some(p) => Box::new(io::BufWriter::new(File::create(p).with_context(|| format!("creating {}", p.display()))?)),
        None => Box::new(io::stdout().lock()),
    })
}

fn write_json<T: Serialize>(value: &T, path: Option<&Path>) -> Result<()> {
    let mut w = writer(path)?;
    serde_json::to_writer_pretty(&mut w, value)?;
    writeln!(w)?;
    w.flush()?;
    Ok(())
}

fn cmd_enumerate(args: &EnumerateArgs) -> Result<()> {
    let spec = builtin::parse(&args.env)?;
    let horizon = args.horizon.unwrap_or(spec.horizon);
    let config = EnumerationConfig { max_states: args.max_states, ..EnumerationConfig::new(horizon) };
    let e = if spec.family == "empty_grid" {
        if spec.size < 3 {
            return Err(usage("empty_grid needs N ≥ 3"));
        }
        enumerate(&make_empty_grid(spec.size), &config)?
    } else {
        enumerate(&TreeSim::new(builtin::build(&spec)?), &config)?
    };
    let mdp = if args.raw { e.mdp.clone() } else { consolidate(&e.mdp, &e.keys).0 };
    if args.out.extension().is_some_and(|x| x == "json") {
        mdp_io::save_json(&mdp, &args.out)?;
    } else {
        mdp_io::save(&mdp, &args.out)?;
    }
    println!(
        "{}: {} blob states, {} stored states (horizon {horizon}) -> {}",
        args.env,
        e.num_blob_states(),
        mdp.num_states,
        args.out.display()
    );
    Ok(())
}

fn cmd_bounds(args: &BoundsArgs) -> Result<()> {
    let mdp = inputs::load_mdp(&args.mdp, args.horizon)?;
    let expl = inputs::load_policy(&args.expl, &mdp)?;
    let opts = ReportOptions {
        tight_k: (!args.no_tight).then(|| args.k.clone()),
        covering: match args.covering {
            Covering::Sa => CoveringVariant::Sa,
            Covering::Sat => CoveringVariant::Sat,
        },
        ..ReportOptions::default()
    };
    let report = bound_report(&args.mdp, &mdp, &expl, &opts)?;
    if let Some(path) = &args.csv {
        let fresh = !path.exists();
        let file = std::fs::OpenOptions::new().create(true).append(true).open(path)?;
        let mut w = csv::Writer::from_writer(file);
        if fresh {
            w.write_record(tables::bounds_header())?;
        }
        w.write_record(tables::bound_cells(&report))?;
        w.flush()?;
    }
    write_json(&report, args.out.as_deref())
}

#[derive(Serialize)]
struct TightReport<'a> {
    mdp: &'a str,
    k_min: usize,
    k_max: usize,
    result: Option<effhorizon::tightbound::TightResult>,
}

fn cmd_tight(args: &TightArgs) -> Result<()> {
    let mdp = inputs::load_mdp(&args.mdp, args.horizon)?;
    let expl = inputs::load_policy(&args.expl, &mdp)?;
    if args.partition < 2 {
        return Err(usage("partition must be at least 2"));
    }
    let config = TightConfig { partition: args.partition, max_log10_m: args.max_log10_m, ..TightConfig::default() };
    let result = tight_effective_horizon(&mdp, &expl, args.k.clone(), &config)?;
    if result.is_none() {
        eprintln!("no k in {}..={} reaches a failure bound below 1/2", args.k.start(), args.k.end());
    }
    write_json(&TightReport { mdp: &args.mdp, k_min: *args.k.start(), k_max: *args.k.end(), result }, args.out.as_deref())
}

fn cmd_run(args: &RunArgs) -> Result<()> {
    let mdp = inputs::load_mdp(&args.mdp, args.horizon)?;
    let expl = inputs::load_policy(&args.expl, &mdp)?;
    if args.m == 0 {
        return Err(usage("--m must be at least 1"));
    }
    if args.k == 0 || args.k > mdp.horizon.max(1) {
        return Err(usage(format!("--k must lie in 1..={}", mdp.horizon.max(1))));
    }
    let w = args.w.unwrap_or(mdp.horizon);
    if matches!(args.algorithm, Algorithm::PlanWindow) && (w == 0 || w > mdp.horizon) {
        return Err(usage(format!("--w must lie in 1..={}", mdp.horizon)));
    }
    let tie = match args.tie {
        Tie::Lowest => TieBreak::Lowest,
        Tie::Random => TieBreak::Random,
    };
    let one = |seed: u64| -> Result<RunResult> {
        Ok(match args.algorithm {
            Algorithm::Gorp => gorp_run_with(&mdp, &expl, args.k, args.m, seed, tie, args.global_seed)?,
            Algorithm::PgGorp => pg_gorp_run_with(&mdp, &expl, args.m, seed, args.global_seed)?,
            Algorithm::FqiGorp => fqi_gorp_run_with(&mdp, &expl, args.k, args.m, seed, args.global_seed)?,
            Algorithm::PlanWindow => RunResult { seed, ..plan_over_window(&mdp, w)? },
            Algorithm::Rmax => RunResult { seed, ..rmax_run(&mdp) },
        })
    };
    let mut out = csv::Writer::from_writer(writer(args.out.as_deref())?);
    out.write_record(tables::RUN_COLUMNS)?;
    let mut wins = 0;
    for seed in 0..args.seeds {
        let r = one(seed)?;
        wins += r.success as u64;
        out.write_record([r.seed.to_string(), r.success.to_string(), r.timesteps.to_string(), r.ret.to_string()])?;
        out.flush()?;
    }
    eprintln!("{wins}/{} runs returned an optimal policy", args.seeds);
    Ok(())
}

fn cmd_compare(args: &CompareArgs) -> Result<()> {
    let bounds = compare::Table::read(&args.bounds)?;
    let empirical = compare::Table::read(&args.empirical)?;
    write_json(&compare::compare(&bounds, &empirical)?, args.out.as_deref())
}

fn cmd_suite(args: &SuiteArgs) -> Result<()> {
    let manifest = suite::Manifest::read(&args.manifest)?;
    if manifest.envs.is_empty() {
        bail!("manifest lists no environments");
    }
    let results = suite::run_suite(&manifest, args.curves.is_some())?;
    let rows: Vec<Vec<String>> = results
        .iter()
        .map(|r| {
            let mut row = tables::bound_cells(&r.report);
            row.extend([r.gorp, r.window, r.rmax].map(tables::empirical_cell));
            row
        })
        .collect();
    let mut buf = csv::Writer::from_writer(Vec::new());
    buf.write_record(tables::suite_header())?;
    for row in &rows {
        buf.write_record(row)?;
    }
    let bytes = buf.into_inner().map_err(|e| anyhow!("{e}"))?;
    let mut out = writer(args.out.as_deref())?;
    out.write_all(&bytes)?;
    out.flush()?;
    drop(out);

    if let Some(path) = &args.metrics {
        let table = compare::Table::from_reader(bytes.as_slice(), "suite rows")?;
        write_json(&compare::compare(&table, &table)?, Some(path))?;
    }
    if let Some(path) = &args.curves {
        let mut w = csv::Writer::from_path(path)?;
        w.write_record(["name", "learner", "m", "timesteps", "success_fraction"])?;
        for r in &results {
            for c in &r.curves {
                w.write_record([
                    r.report.name.clone(),
                    c.learner.clone(),
                    c.m.to_string(),
                    c.timesteps.to_string(),
                    c.success_fraction.to_string(),
                ])?;
            }
        }
        w.flush()?;
    }
    if let Some(path) = &args.reports {
        let reports: Vec<_> = results.iter().map(|r| &r.report).collect();
        write_json(&reports, Some(path))?;
    }
    Ok(())
}

fn exit_code(err: &anyhow::Error) -> u8 {
    if err.chain().any(|e| e.is::<UsageError>()) {
        return 2;
    }
    match err.chain().find_map(|e| e.downcast_ref::<Error>()) {
        Some(Error::CapExceeded { .. } | Error::SequenceCap { .. }) => 4,
        _ => 3,
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = inputs::configure_workers().and_then(|()| match &cli.command {
        Command::Enumerate(a) => cmd_enumerate(a),
        Command::Bounds(a) => cmd_bounds(a),
        Command::Bound { which: BoundCommand::Tight(a) } => cmd_tight(a),
        Command::Run(a) => cmd_run(a),
        Command::Compare(a) => cmd_compare(a),
        Command::Suite(a) => cmd_suite(a),
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(exit_code(&e))
        }
    }
}
