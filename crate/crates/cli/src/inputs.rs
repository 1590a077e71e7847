//! Resolving MDP and policy arguments: files first, then built-in names.

use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use effhorizon::builtin::{self, BuiltinSpec};
use effhorizon::{io, Policy, TabularMdp};

pub const CACHE_DIR_VAR: &str = "EFFHORIZON_CACHE_DIR";
pub const WORKERS_VAR: &str = "EFFHORIZON_WORKERS";

/// Loads `spec` as an MDP file if it exists, otherwise builds the named
/// built-in. `horizon` overrides the stored or default horizon.
pub fn load_mdp(spec: &str, horizon: Option<usize>) -> Result<TabularMdp> {
    let path = Path::new(spec);
    if path.is_file() {
        let mut mdp = io::load(path).with_context(|| format!("reading {spec}"))?;
        if let Some(t) = horizon {
            mdp.horizon = t;
        }
        return Ok(mdp);
    }
    let mut parsed = builtin::parse(spec)?;
    if let Some(t) = horizon {
        parsed.horizon = t;
    }
    build_cached(&parsed)
}

fn canonical_name(spec: &BuiltinSpec) -> String {
    format!("{}_T{}_A{}_H{}_N{}", spec.family, spec.horizon, spec.num_actions, spec.period, spec.size)
}

/// Enumerated environments are cached under `$EFFHORIZON_CACHE_DIR` when set;
/// analytical families are cheap and always rebuilt.
fn build_cached(spec: &BuiltinSpec) -> Result<TabularMdp> {
    let cache: Option<PathBuf> = std::env::var_os(CACHE_DIR_VAR)
        .filter(|_| spec.family == "empty_grid")
        .map(|dir| Path::new(&dir).join(format!("{}.mdp", canonical_name(spec))));
    if let Some(file) = &cache {
        if file.is_file() {
            return io::load(file).with_context(|| format!("reading cached {}", file.display()));
        }
    }
    let mdp = builtin::build(spec)?;
    if let Some(file) = &cache {
        if let Some(dir) = file.parent() {
            std::fs::create_dir_all(dir).with_context(|| format!("creating {}", dir.display()))?;
        }
        io::save(&mdp, file).with_context(|| format!("writing {}", file.display()))?;
    }
    Ok(mdp)
}

/// `uniform` or a JSON policy file.
pub fn load_policy(spec: &str, mdp: &TabularMdp) -> Result<Policy> {
    if spec == "uniform" {
        return Ok(Policy::uniform(mdp.num_actions));
    }
    let text = std::fs::read_to_string(spec).with_context(|| format!("reading policy {spec}"))?;
    let policy: Policy = serde_json::from_str(&text).with_context(|| format!("parsing policy {spec}"))?;
    if policy.num_actions() != mdp.num_actions {
        bail!("policy {spec} has {} actions, the MDP has {}", policy.num_actions(), mdp.num_actions);
    }
    let problems = policy.validate();
    if !problems.is_empty() {
        bail!("policy {spec} is invalid: {}", problems.join("; "));
    }
    Ok(policy)
}

/// Applies `$EFFHORIZON_WORKERS` to the global thread pool.
pub fn configure_workers() -> Result<()> {
    if let Ok(v) = std::env::var(WORKERS_VAR) {
        let n: usize = v.parse().with_context(|| format!("{WORKERS_VAR}={v} is not a count"))?;
        rayon::ThreadPoolBuilder::new().num_threads(n).build_global()?;
    }
    Ok(())
}
