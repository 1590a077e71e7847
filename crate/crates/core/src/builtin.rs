//! Named built-in environments: `<family>[_T<n>][_A<n>][_H<n>][_N<n>]`.
//!
//! Families: `needle_chain`, `dense_chain`, `delayed_chain`, `adversarial`,
//! `lowerbound`, `distractor`, `empty_grid`. `H` is the lower-bound period and
//! `N` the grid side length. Defaults: `T=10, A=2, H=2, N=5`, except
//! `empty_grid` whose horizon defaults to 100.

use crate::envgen::{self, make_empty_grid};
use crate::enumerate::{enumerate_consolidated, EnumerationConfig};
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

pub const FAMILIES: [&str; 7] = [
    "needle_chain",
    "dense_chain",
    "delayed_chain",
    "adversarial",
    "lowerbound",
    "distractor",
    "empty_grid",
];

/// One instance per family, sized so every bound and learner runs in seconds.
pub const STANDARD: [&str; 7] = [
    "needle_chain_T10_A2",
    "dense_chain_T10_A2",
    "delayed_chain_T10_A2",
    "adversarial_T4_A2",
    "lowerbound_T12_A2_H3",
    "distractor_T10_A2",
    "empty_grid_N5_T100",
];

#[derive(Clone, Debug, PartialEq, Eq)]
pub struct BuiltinSpec {
    pub family: &'static str,
    pub horizon: usize,
    pub num_actions: usize,
    pub period: usize,
    pub size: usize,
}

pub fn parse(name: &str) -> Result<BuiltinSpec> {
    let unknown = || Error::UnknownEnv(name.to_string());
    let family = FAMILIES
        .iter()
        .filter(|f| name == **f || name.starts_with(&format!("{f}_")))
        .max_by_key(|f| f.len())
        .copied()
        .ok_or_else(unknown)?;
    let mut spec = BuiltinSpec {
        family,
        horizon: if family == "empty_grid" { 100 } else { 10 },
        num_actions: if family == "empty_grid" { 3 } else { 2 },
        period: 2,
        size: 5,
    };
    let rest = &name[family.len()..];
    for part in rest.split('_').skip(1) {
        let (tag, digits) = part.split_at(1.min(part.len()));
        let value: usize = digits.parse().map_err(|_| unknown())?;
        match tag {
            "T" => spec.horizon = value,
            "A" if family != "empty_grid" => spec.num_actions = value,
            "H" => spec.period = value,
            "N" => spec.size = value,
            _ => return Err(unknown()),
        }
    }
    Ok(spec)
}

pub fn build(spec: &BuiltinSpec) -> Result<TabularMdp> {
    let (t, a) = (spec.horizon, spec.num_actions);
    match spec.family {
        "needle_chain" => envgen::make_needle_chain(t, a, &vec![a.saturating_sub(1); t]),
        "dense_chain" => envgen::make_dense_chain(t, a),
        "delayed_chain" => envgen::make_delayed_chain(t, a),
        "adversarial" => envgen::make_adversarial_kt(t, a),
        "lowerbound" => envgen::make_lowerbound_periodic(t, a, spec.period, 0),
        "distractor" => envgen::make_distractor(t, a),
        "empty_grid" => {
            if spec.size < 3 {
                return Err(Error::Invalid("empty_grid needs N ≥ 3".into()));
            }
            enumerate_consolidated(&make_empty_grid(spec.size), &EnumerationConfig::new(t))
        }
        _ => unreachable!(),
    }
}

/// Resolves a built-in name to its MDP.
pub fn resolve(name: &str) -> Result<TabularMdp> {
    build(&parse(name)?)
}
