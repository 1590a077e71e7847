//! Manifest-driven pipeline: bounds, learners and metrics for many MDPs.

use std::path::Path;

use anyhow::{bail, Context, Result};
use effhorizon::bounds::{bound_report, BoundReport, ReportOptions};
use effhorizon::learners::{
    empirical_sample_complexity, gorp_success_fraction, Empirical, GorpRunner, RmaxRunner, WindowRunner,
    DEFAULT_GLOBAL_SEED,
};
use effhorizon::tightbound::sequence_count;
use effhorizon::{Policy, TabularMdp};
use rayon::prelude::*;
use serde::Deserialize;

use crate::inputs::{load_mdp, load_policy};

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    #[serde(default = "default_global_seed")]
    pub global_seed: u64,
    #[serde(rename = "env")]
    pub envs: Vec<EnvEntry>,
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EnvEntry {
    /// Built-in name or MDP file path.
    pub name: String,
    pub horizon: Option<usize>,
    #[serde(default = "default_expl")]
    pub expl: String,
    /// Inclusive `[k_min, k_max]` for the tight bound and GORP.
    #[serde(default = "default_k")]
    pub k: [usize; 2],
    #[serde(default = "default_seeds")]
    pub seeds: usize,
    /// Largest per-run GORP budget, log10 timesteps.
    #[serde(default = "default_budget")]
    pub budget_log10: f64,
}

fn default_global_seed() -> u64 {
    DEFAULT_GLOBAL_SEED
}

fn default_expl() -> String {
    "uniform".into()
}

fn default_k() -> [usize; 2] {
    [1, 3]
}

fn default_seeds() -> usize {
    21
}

fn default_budget() -> f64 {
    6.0
}

impl Manifest {
    pub fn read(path: &Path) -> Result<Manifest> {
        let text = std::fs::read_to_string(path).with_context(|| format!("reading {}", path.display()))?;
        let manifest: Manifest = toml::from_str(&text).with_context(|| format!("parsing {}", path.display()))?;
        for e in &manifest.envs {
            if e.k[0] == 0 || e.k[0] > e.k[1] {
                bail!("{}: k range {:?} must satisfy 1 ≤ k_min ≤ k_max", e.name, e.k);
            }
            if e.seeds.is_multiple_of(2) {
                bail!("{}: seed count must be odd so the median is a run", e.name);
            }
        }
        Ok(manifest)
    }
}

pub struct CurvePoint {
    pub learner: String,
    pub m: u64,
    pub timesteps: u128,
    pub success_fraction: f64,
}

pub struct EnvResult {
    pub report: BoundReport,
    pub gorp: Option<Empirical>,
    pub window: Option<Empirical>,
    pub rmax: Option<Empirical>,
    pub curves: Vec<CurvePoint>,
}

/// `m = 1, 2, 4, …` while `T²·A^k·m` stays within the budget.
fn m_ladder(mdp: &TabularMdp, k: usize, budget_log10: f64) -> Vec<u64> {
    let per_m = 2.0 * (mdp.horizon.max(1) as f64).log10() + k as f64 * (mdp.num_actions as f64).log10();
    (0..63).map(|i| 1u64 << i).take_while(|&m| per_m + (m as f64).log10() <= budget_log10 + 1e-12).collect()
}

fn best_of(results: impl IntoIterator<Item = Empirical>) -> Option<Empirical> {
    let all: Vec<Empirical> = results.into_iter().collect();
    if all.is_empty() {
        return None;
    }
    Some(
        all.iter()
            .filter_map(|e| match e {
                Empirical::Converged { median_timesteps } => Some(*median_timesteps),
                Empirical::NotConverged => None,
            })
            .min()
            .map_or(Empirical::NotConverged, |n| Empirical::Converged { median_timesteps: n }),
    )
}

pub fn run_env(entry: &EnvEntry, global_seed: u64, with_curves: bool) -> Result<EnvResult> {
    let mdp = load_mdp(&entry.name, entry.horizon)?;
    let expl: Policy = load_policy(&entry.expl, &mdp)?;
    let k_hi = entry.k[1].min(mdp.horizon.max(1));
    let opts = ReportOptions { tight_k: Some(entry.k[0]..=k_hi), ..ReportOptions::default() };
    let report = bound_report(&entry.name, &mdp, &expl, &opts).with_context(|| format!("bounds for {}", entry.name))?;
    let seeds: Vec<u64> = (0..entry.seeds as u64).collect();

    let mut gorp = Vec::new();
    let mut curves = Vec::new();
    if mdp.horizon > 0 {
        for k in entry.k[0]..=k_hi {
            if sequence_count(mdp.num_actions, k, effhorizon::learners::LEARNER_SEQUENCE_CAP).is_err() {
                continue;
            }
            let ms = m_ladder(&mdp, k, entry.budget_log10);
            if ms.is_empty() {
                continue;
            }
            if with_curves {
                for &m in &ms {
                    curves.push(CurvePoint {
                        learner: format!("gorp_k{k}"),
                        m,
                        timesteps: (mdp.horizon * mdp.horizon) as u128 * (mdp.num_actions as u128).pow(k as u32) * m as u128,
                        success_fraction: gorp_success_fraction(&mdp, &expl, k, m, &seeds)?,
                    });
                }
            }
            let runner = GorpRunner { mdp: &mdp, expl: &expl, k, ms, global_seed };
            gorp.push(empirical_sample_complexity(&runner, &seeds)?);
        }
    }
    let (window, rmax) = if mdp.horizon > 0 {
        let window_levels = WindowRunner { mdp: &mdp };
        let window = match empirical_sample_complexity(&window_levels, &[0]) {
            Ok(e) => Some(e),
            Err(effhorizon::Error::SequenceCap { .. }) => Some(Empirical::NotConverged),
            Err(e) => return Err(e.into()),
        };
        (window, Some(empirical_sample_complexity(&RmaxRunner { mdp: &mdp }, &[0])?))
    } else {
        (None, None)
    };
    Ok(EnvResult { report, gorp: best_of(gorp), window, rmax, curves })
}

/// Runs every manifest entry, in parallel across MDPs; output order follows the manifest.
pub fn run_suite(manifest: &Manifest, with_curves: bool) -> Result<Vec<EnvResult>> {
    manifest.envs.par_iter().map(|e| run_env(e, manifest.global_seed, with_curves)).collect()
}
