//! Tight effective-horizon bounds: per-node choice-probability bounds,
//! LP aggregation, a failure-probability recursion over optimal-reachable
//! states, and a search over the rollout count `m`.

mod cdf;
mod lp;
mod stats;

pub use cdf::{
    applicable, bennett, binomial, choice_prob_bounds, normal_cdf, riemann_generic, Bernstein, BerryEsseen, CdfBounds,
    ChoiceProbBounds, Method, BINOMIAL_MAX_M, DEFAULT_PARTITION, SMALL_SEQUENCE_COUNT,
};
pub use lp::{aggregate_failure_lp, LpValue};
pub use stats::{
    decode_sequence, return_stats, sequence_count, ExplorationStats, ReturnDistStats, DEFAULT_SEQUENCE_CAP,
};

use std::collections::BTreeMap;
use std::ops::RangeInclusive;

use rayon::prelude::*;
use serde::Serialize;

use crate::bounds::Count;
use crate::dp::{argmax_set, optimal_q_with, optimal_state_sets};
use crate::error::{Error, Result};
use crate::mdp::{Policy, TabularMdp};

#[derive(Clone, Debug)]
pub struct TightConfig {
    pub partition: usize,
    pub sequence_cap: usize,
    pub max_log10_m: f64,
    pub rel_precision: f64,
    pub methods: Vec<Method>,
}

impl Default for TightConfig {
    fn default() -> Self {
        TightConfig {
            partition: DEFAULT_PARTITION,
            sequence_cap: DEFAULT_SEQUENCE_CAP,
            max_log10_m: 100.0,
            rel_precision: 0.01,
            methods: Method::ALL.to_vec(),
        }
    }
}

struct Node {
    stats: Vec<ReturnDistStats>,
    /// Per first action: index of the child node if the action is optimal.
    child: Vec<Option<usize>>,
}

/// Per-node outcome at one `m`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct NodeEval {
    pub value: f64,
    pub method: Option<Method>,
    pub infeasible: bool,
}

/// The optimal-reachable tree for one `k`, with sequence statistics cached so
/// that evaluating a new `m` only redoes the CDF bounds.
pub struct FailureModel {
    k: usize,
    num_actions: usize,
    levels: Vec<Vec<Node>>,
    config: TightConfig,
}

impl FailureModel {
    pub fn new(mdp: &TabularMdp, expl: &Policy, k: usize, config: &TightConfig) -> Result<Self> {
        if k == 0 {
            return Err(Error::Invalid("k must be at least 1".into()));
        }
        sequence_count(mdp.num_actions, k, config.sequence_cap)?;
        let reach = mdp.reachability();
        let qstar = optimal_q_with(mdp, reach.clone());
        let sopt = optimal_state_sets(mdp, &qstar);
        let expl_stats = ExplorationStats::with_reach(mdp, reach, expl)?;
        let horizon = sopt.len();
        let mut levels = Vec::with_capacity(horizon);
        for t in 0..horizon {
            let mut level = Vec::with_capacity(sopt[t].len());
            for &s in &sopt[t] {
                let opt = argmax_set(qstar.get(t, s).expect("reachable"));
                let mut child = vec![None; mdp.num_actions];
                if t + 1 < horizon {
                    for a in opt {
                        let n = mdp.next(s, a);
                        child[a] = Some(sopt[t + 1].binary_search(&n).expect("optimal successor"));
                    }
                } else {
                    for a in opt {
                        child[a] = Some(usize::MAX);
                    }
                }
                let stats = expl_stats.sequence_stats(mdp, t, s, k, config.sequence_cap)?;
                level.push(Node { stats, child });
            }
            levels.push(level);
        }
        Ok(FailureModel { k, num_actions: mdp.num_actions, levels, config: config.clone() })
    }

    pub fn k(&self) -> usize {
        self.k
    }

    pub fn node_count(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }

    /// Upper bound on the probability that GORP with this `k` and `m`
    /// returns a suboptimal policy.
    pub fn failure(&self, m: f64) -> f64 {
        self.evaluate(m).0
    }

    /// Root failure bound plus how often each method won a node.
    pub fn evaluate(&self, m: f64) -> (f64, BTreeMap<Method, usize>) {
        let mut usage = BTreeMap::new();
        if self.levels.is_empty() {
            return (0.0, usage);
        }
        let per_first = self.num_actions.pow(self.k as u32 - 1);
        let mut below: Vec<f64> = Vec::new();
        for level in self.levels.iter().rev() {
            let evals: Vec<NodeEval> = level
                .par_iter()
                .map(|node| {
                    let first: Vec<f64> = node
                        .child
                        .iter()
                        .map(|c| match c {
                            None => 1.0,
                            Some(usize::MAX) => 0.0,
                            Some(j) => below[*j],
                        })
                        .collect();
                    let coeffs: Vec<f64> = (0..node.stats.len()).map(|i| first[i / per_first]).collect();
                    self.node_value(&node.stats, &coeffs, m)
                })
                .collect();
            for e in &evals {
                if let Some(meth) = e.method {
                    *usage.entry(meth).or_insert(0) += 1;
                }
            }
            below = evals.into_iter().map(|e| e.value).collect();
        }
        (below[0], usage)
    }

    fn node_value(&self, stats: &[ReturnDistStats], coeffs: &[f64], m: f64) -> NodeEval {
        node_failure(stats, coeffs, m, self.k, &self.config)
    }
}

/// Smallest LP value over the applicable methods; equal coefficients short-circuit.
pub fn node_failure(stats: &[ReturnDistStats], coeffs: &[f64], m: f64, k: usize, config: &TightConfig) -> NodeEval {
    let cmin = coeffs.iter().copied().fold(f64::INFINITY, f64::min);
    let cmax = coeffs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if cmax - cmin <= 0.0 {
        return NodeEval { value: cmin, method: None, infeasible: false };
    }
    // With every lattice point in the partition the binomial sums are the exact
    // strict/weak win probabilities, so the Riemann constructions cannot beat it.
    let exact_binomial = config.methods.contains(&Method::Binomial)
        && m < config.partition as f64
        && applicable(stats, m, k, Method::Binomial).is_ok();
    let mut best = NodeEval { value: 1.0, method: None, infeasible: true };
    for &method in &config.methods {
        if exact_binomial && matches!(method, Method::Bernstein | Method::BerryEsseen) {
            continue;
        }
        if applicable(stats, m, k, method).is_err() {
            continue;
        }
        let b = choice_prob_bounds(stats, m, k, method, config.partition).expect("applicability checked");
        let lp = aggregate_failure_lp(coeffs, &b.p_lo, &b.p_hi);
        if best.method.is_none() || lp.value < best.value {
            best = NodeEval { value: lp.value.min(1.0), method: Some(method), infeasible: lp.infeasible };
        }
        if best.value <= cmin {
            break;
        }
    }
    best
}

/// Failure-probability bound for GORP with parameters `(k, m)`.
pub fn failure_probability(mdp: &TabularMdp, expl: &Policy, k: usize, m: f64) -> Result<f64> {
    Ok(FailureModel::new(mdp, expl, k, &TightConfig::default())?.failure(m))
}

/// Smallest `m` (up to the configured relative precision) with failure bound
/// below 1/2: probe `m = 1`, gallop by squaring, then bisect (arithmetically
/// on integers up to 10^6, geometrically above).
pub fn search_min_m(failure: impl Fn(f64) -> f64, config: &TightConfig) -> Option<f64> {
    let ok = |m: f64| failure(m) < 0.5;
    if ok(1.0) {
        return Some(1.0);
    }
    let cap = 10f64.powf(config.max_log10_m);
    if cap < 2.0 {
        return None;
    }
    let mut lo = 1.0;
    let mut hi = 2.0;
    loop {
        if ok(hi) {
            break;
        }
        if hi >= cap {
            return None;
        }
        lo = hi;
        hi = (hi * hi).min(cap);
    }
    loop {
        let mid = if hi <= 1e6 {
            if hi - lo <= 1.0 {
                break;
            }
            ((lo + hi) / 2.0).floor()
        } else {
            if hi / lo <= 1.0 + config.rel_precision {
                break;
            }
            let g = (lo * hi).sqrt();
            if g <= 1e6 {
                g.round()
            } else {
                g
            }
        };
        if mid <= lo || mid >= hi {
            break;
        }
        if ok(mid) {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    Some(hi)
}

#[derive(Clone, Debug, Serialize)]
pub struct KResult {
    pub k: usize,
    pub m: Option<f64>,
    pub h: Option<f64>,
    pub skipped: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct TightResult {
    pub k: usize,
    pub m: f64,
    pub h: f64,
    pub n: Count,
    pub per_k: Vec<KResult>,
}

/// `H = min_k (k + log_A m_k)` over `k_range`, with `N = T² A^H`.
///
/// Returns `Ok(None)` when no `k` reaches a failure bound below 1/2 within
/// the `m` cap.
pub fn tight_effective_horizon(
    mdp: &TabularMdp,
    expl: &Policy,
    k_range: RangeInclusive<usize>,
    config: &TightConfig,
) -> Result<Option<TightResult>> {
    if k_range.is_empty() || *k_range.start() == 0 {
        return Err(Error::Invalid("k range must be nonempty and start at 1".into()));
    }
    let a_n = mdp.num_actions;
    let horizon = mdp.horizon;
    let mut per_k = Vec::new();
    let mut best: Option<(usize, f64, f64)> = None;
    for k in k_range {
        // H_k ≥ k, and improving on the best H needs m < A^(H − k)
        let mut k_config = config.clone();
        if let Some((_, _, best_h)) = best {
            if a_n == 1 || k as f64 >= best_h {
                per_k.push(KResult { k, m: None, h: None, skipped: Some(format!("cannot improve on H = {best_h}")) });
                continue;
            }
            k_config.max_log10_m = config.max_log10_m.min((best_h - k as f64) * (a_n as f64).log10());
        }
        let model = match FailureModel::new(mdp, expl, k, config) {
            Ok(model) => model,
            Err(e @ Error::SequenceCap { .. }) => {
                per_k.push(KResult { k, m: None, h: None, skipped: Some(e.to_string()) });
                continue;
            }
            Err(e) => return Err(e),
        };
        let m = search_min_m(|m| model.failure(m), &k_config);
        let h = m.map(|m| if a_n > 1 { k as f64 + m.ln() / (a_n as f64).ln() } else { k as f64 });
        if let (Some(m), Some(h)) = (m, h) {
            if best.is_none_or(|(_, _, bh)| h < bh) {
                best = Some((k, m, h));
            }
        }
        per_k.push(KResult { k, m, h, skipped: None });
    }
    if per_k.iter().all(|r| r.skipped.is_some()) {
        return Err(Error::SequenceCap { count: u128::MAX, limit: config.sequence_cap });
    }
    Ok(best.map(|(k, m, h)| TightResult { k, m, h, n: crate::bounds::gorp_bound(horizon, a_n, h), per_k }))
}
