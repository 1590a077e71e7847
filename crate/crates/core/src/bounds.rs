//! Closed-form sample-complexity bounds and the per-MDP bound report.

use std::ops::RangeInclusive;

use serde::Serialize;

use crate::dp::{self, GapEntry};
use crate::error::{Error, Result};
use crate::mdp::{row_max, Policy, TabularMdp};
use crate::tightbound::{self, TightConfig, TightResult};

const LOG10_2_POW_63: f64 = 18.964_889_726_830_81;

/// A timestep count carried as `log10`, with the integer value when it is below 2^63.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Count {
    pub log10: f64,
    pub raw: Option<u64>,
}

impl Count {
    pub fn from_u128(v: u128) -> Self {
        Count { log10: (v as f64).log10(), raw: u64::try_from(v).ok().filter(|&x| x < 1 << 63) }
    }

    /// From a log10 value; the raw value is rounded when within 1e-9 of an
    /// integer, else rounded up.
    pub fn from_log10(l: f64) -> Self {
        let raw = if l < LOG10_2_POW_63 - 1e-9 {
            let v = 10f64.powf(l);
            let r = v.round();
            Some(if (v - r).abs() <= 1e-9 * v.max(1.0) { r } else { v.ceil() } as u64)
        } else {
            None
        };
        Count { log10: l, raw }
    }
}

fn pow_u128(base: usize, exp: usize) -> Option<u128> {
    (base as u128).checked_pow(u32::try_from(exp).ok()?)
}

/// Exhaustive-search bound `T·⌈A^T/2⌉`.
pub fn worst_case_bound(num_actions: usize, horizon: usize) -> Count {
    if let Some(p) = pow_u128(num_actions, horizon) {
        if let Some(v) = (p.div_ceil(2)).checked_mul(horizon as u128) {
            return Count::from_u128(v);
        }
    }
    Count::from_log10((horizon as f64).log10() + horizon as f64 * (num_actions as f64).log10() - 2f64.log10())
}

/// `T²·A^H`.
pub fn gorp_bound(horizon: usize, num_actions: usize, h: f64) -> Count {
    if h >= 0.0 && h.fract() == 0.0 {
        if let Some(p) = pow_u128(num_actions, h as usize) {
            if let Some(v) = p.checked_mul((horizon * horizon) as u128) {
                return Count::from_u128(v);
            }
        }
    }
    Count::from_log10(2.0 * (horizon as f64).log10() + h * (num_actions as f64).log10())
}

/// `S·A·T`.
pub fn ucb_bound(mdp: &TabularMdp) -> Count {
    Count::from_u128(mdp.num_states as u128 * mdp.num_actions as u128 * mdp.horizon as u128)
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum CoveringVariant {
    /// `⌈ln(2SA) / min max_t μ⌉`.
    Sa,
    /// `⌈ln(2SAT) / min max_t μ⌉`.
    Sat,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct CoveringLength {
    pub l_lower: f64,
    /// `None` when some stored pair is never visited.
    pub l_upper: Option<f64>,
    pub n: Option<Count>,
    pub min_total_occupancy: f64,
    pub min_max_occupancy: f64,
}

/// Covering-length bounds from the occupancy measure of `expl`.
///
/// The minimum runs over every action at every state reachable within the
/// horizon; `S` is the stored state count. Natural logarithms.
pub fn covering_length_bounds(mdp: &TabularMdp, expl: &Policy, variant: CoveringVariant) -> Result<CoveringLength> {
    let occ = dp::occupancy(mdp, expl)?;
    let reach = occ.reach.clone();
    let mut min_sum = f64::INFINITY;
    let mut min_max = f64::INFINITY;
    for s in reach.all_states() {
        for a in 0..mdp.num_actions {
            let (mut sum, mut max) = (0.0f64, 0.0f64);
            for t in 0..reach.horizon() {
                let mu = occ.get(t, s, a);
                sum += mu;
                max = max.max(mu);
            }
            min_sum = min_sum.min(sum);
            min_max = min_max.min(max);
        }
    }
    let sa = (mdp.num_states * mdp.num_actions) as f64;
    let numer = match variant {
        CoveringVariant::Sa => (2.0 * sa).ln(),
        CoveringVariant::Sat => (2.0 * sa * mdp.horizon as f64).ln(),
    };
    let l_lower = if min_sum > 0.0 { 2f64.ln() / (2.0 * min_sum) } else { f64::INFINITY };
    let l_upper = (min_max > 0.0).then(|| (numer / min_max).ceil());
    let n = l_upper.map(|l| Count::from_log10((mdp.horizon as f64).log10() + l.log10()));
    Ok(CoveringLength { l_lower, l_upper, n, min_total_occupancy: min_sum, min_max_occupancy: min_max })
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct EpwBound {
    pub w: usize,
    pub n: Count,
}

/// `T²·A^W` with `W` the effective planning window.
pub fn epw_bound(mdp: &TabularMdp) -> EpwBound {
    let w = dp::epw(mdp);
    EpwBound { w, n: gorp_bound(mdp.horizon, mdp.num_actions, w as f64) }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct Thm4Bound {
    pub k: usize,
    /// `log10 m`; `m` itself may exceed f64 range on long needles.
    pub m_log10: f64,
    pub m: Option<f64>,
    pub h: f64,
    pub n: Count,
}

fn check_nonnegative(mdp: &TabularMdp) -> Result<()> {
    for s in 0..mdp.num_states {
        for a in 0..mdp.num_actions {
            if mdp.reward(s, a) < 0.0 {
                return Err(Error::NegativeReward { state: s, action: a });
            }
        }
    }
    Ok(())
}

/// `m = ⌈6 ln(2TA^k) · max Q^k·V*/Δ²⌉` over optimal-reachable states with a
/// gap, `H_k = k + log_A m`, `N = T²A^k m`.
pub fn theorem4_bound(mdp: &TabularMdp, expl: &Policy, k: usize) -> Result<Thm4Bound> {
    check_nonnegative(mdp)?;
    let reach = mdp.reachability();
    let qstar = dp::optimal_q_with(mdp, reach.clone());
    let qk = dp::q_k(mdp, expl, k)?;
    if !dp::greedy_policies_optimal(mdp, &qk, &qstar) {
        return Err(Error::NotSolvable { k });
    }
    let sopt = dp::optimal_state_sets(mdp, &qstar);
    let gaps = dp::gaps(&qk);
    let mut best_ln = f64::NEG_INFINITY;
    for (t, states) in sopt.iter().enumerate() {
        for &s in states {
            let GapEntry::Gap(delta) = gaps.get(t, s).expect("reachable") else { continue };
            let qmax = row_max(qk.get(t, s).expect("reachable"));
            let vstar = qstar.max(t, s).expect("reachable");
            let ln_ratio = qmax.ln() + vstar.ln() - 2.0 * delta.ln();
            best_ln = best_ln.max(ln_ratio);
        }
    }
    let a = mdp.num_actions as f64;
    let ln_factor = (6.0 * ((2.0 * mdp.horizon as f64).ln() + k as f64 * a.ln())).ln();
    let ln_m_real = ln_factor + best_ln;
    let (m, m_ln) = if ln_m_real < 700.0 {
        let m = ln_m_real.exp().ceil().max(1.0);
        (Some(m), m.ln())
    } else {
        (None, ln_m_real)
    };
    let h = if mdp.num_actions > 1 { k as f64 + m_ln / a.ln() } else { k as f64 };
    let n = Count::from_log10(2.0 * (mdp.horizon as f64).log10() + k as f64 * a.log10() + m_ln / std::f64::consts::LN_10);
    Ok(Thm4Bound { k, m_log10: m_ln / std::f64::consts::LN_10, m, h, n })
}

/// Goal set of a goal MDP, or the first failed clause of the definition.
pub fn goal_states(mdp: &TabularMdp) -> Result<Vec<bool>> {
    let mut goal = vec![false; mdp.num_states];
    for s in 0..mdp.num_states {
        for a in 0..mdp.num_actions {
            let r = mdp.reward(s, a);
            if r != 0.0 && r != 1.0 {
                return Err(Error::NotGoalMdp(format!("reward {r} at (s={s}, a={a}) is neither 0 nor 1")));
            }
            if r == 1.0 {
                goal[mdp.next(s, a)] = true;
            }
        }
    }
    for g in (0..mdp.num_states).filter(|&g| goal[g]) {
        for a in 0..mdp.num_actions {
            if mdp.next(g, a) != g || mdp.reward(g, a) != 0.0 {
                return Err(Error::NotGoalMdp(format!("goal state {g} is not absorbing with zero reward")));
            }
        }
    }
    for s in (0..mdp.num_states).filter(|&s| !goal[s]) {
        for a in 0..mdp.num_actions {
            if goal[mdp.next(s, a)] && mdp.reward(s, a) != 1.0 {
                return Err(Error::NotGoalMdp(format!("entering the goal from (s={s}, a={a}) pays no reward")));
            }
        }
    }
    Ok(goal)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct GoalBound {
    pub p: f64,
    pub h: f64,
    pub n: Count,
}

/// `p = min Q^expl` over reachable `(t,s,a)` with `Q* = 1`; `H = 1 + log_A(ln(2T)/p)`.
pub fn goal_mdp_bound(mdp: &TabularMdp, expl: &Policy) -> Result<GoalBound> {
    goal_states(mdp)?;
    let reach = mdp.reachability();
    let qstar = dp::optimal_q_with(mdp, reach.clone());
    let qexpl = dp::policy_q_with(mdp, reach.clone(), expl)?;
    let mut p = f64::INFINITY;
    for t in 0..reach.horizon() {
        for (i, _) in reach.level(t).iter().enumerate() {
            let star = qstar.row_at(t, i);
            let ex = qexpl.row_at(t, i);
            for a in 0..mdp.num_actions {
                if (star[a] - 1.0).abs() <= 1e-12 {
                    p = p.min(ex[a]);
                }
            }
        }
    }
    if !p.is_finite() || p <= 0.0 {
        return Err(Error::NotGoalMdp("no reachable state-action pair can reach the goal with positive probability".into()));
    }
    let a = mdp.num_actions as f64;
    let h = 1.0 + ((2.0 * mdp.horizon as f64).ln() / p).ln() / a.ln();
    Ok(GoalBound { p, h, n: gorp_bound(mdp.horizon, mdp.num_actions, h) })
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct BoundMeta {
    pub min_k: Option<usize>,
    pub thm4_k: Option<usize>,
    pub thm4_m_log10: Option<f64>,
    pub tight_k: Option<usize>,
    pub tight_m: Option<f64>,
    pub tight_h: Option<f64>,
    pub w: usize,
    pub l_lower: Option<f64>,
    pub l_upper: Option<f64>,
    pub mu_min: Option<f64>,
    pub goal_p: Option<f64>,
    pub goal_h: Option<f64>,
    pub thm4_h: Option<f64>,
    pub notes: Vec<String>,
}

/// All bounds for one MDP (log10 timesteps plus raw values where representable).
#[derive(Clone, Debug, Serialize)]
pub struct BoundReport {
    pub name: String,
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub worst_case: Count,
    pub ucb: Count,
    pub covering_length_tl: Option<Count>,
    pub epw_bound: Count,
    pub thm4_bound: Option<Count>,
    pub tight_bound: Option<Count>,
    pub goal_bound: Option<Count>,
    pub meta: BoundMeta,
}

#[derive(Clone, Debug)]
pub struct ReportOptions {
    /// `None` skips the tight bound.
    pub tight_k: Option<RangeInclusive<usize>>,
    pub tight: TightConfig,
    pub covering: CoveringVariant,
}

impl Default for ReportOptions {
    fn default() -> Self {
        ReportOptions { tight_k: Some(1..=3), tight: TightConfig::default(), covering: CoveringVariant::Sa }
    }
}

pub fn bound_report(name: &str, mdp: &TabularMdp, expl: &Policy, opts: &ReportOptions) -> Result<BoundReport> {
    let mut meta = BoundMeta::default();
    let min_k = dp::min_k_qvi(mdp, expl, mdp.horizon.max(1))?;
    meta.min_k = min_k;

    let covering = covering_length_bounds(mdp, expl, opts.covering)?;
    meta.l_lower = covering.l_lower.is_finite().then_some(covering.l_lower);
    meta.l_upper = covering.l_upper;
    meta.mu_min = Some(covering.min_max_occupancy);

    let epw = epw_bound(mdp);
    meta.w = epw.w;

    let thm4 = match min_k {
        Some(k) => match theorem4_bound(mdp, expl, k) {
            Ok(b) => {
                meta.thm4_k = Some(k);
                meta.thm4_m_log10 = Some(b.m_log10);
                meta.thm4_h = Some(b.h);
                Some(b.n)
            }
            Err(e) => {
                meta.notes.push(format!("thm4 bound: {e}"));
                None
            }
        },
        None => None,
    };

    let goal = match goal_mdp_bound(mdp, expl) {
        Ok(g) => {
            meta.goal_p = Some(g.p);
            meta.goal_h = Some(g.h);
            Some(g.n)
        }
        Err(_) => None,
    };

    let tight = match &opts.tight_k {
        Some(range) => {
            let range = *range.start()..=(*range.end()).min(mdp.horizon.max(1));
            match tightbound::tight_effective_horizon(mdp, expl, range, &opts.tight) {
                Ok(Some(TightResult { k, m, h, n, .. })) => {
                    meta.tight_k = Some(k);
                    meta.tight_m = Some(m);
                    meta.tight_h = Some(h);
                    Some(n)
                }
                Ok(None) => {
                    meta.notes.push("tight bound: no k reached failure < 1/2".into());
                    None
                }
                Err(e) => {
                    meta.notes.push(format!("tight bound: {e}"));
                    None
                }
            }
        }
        None => None,
    };

    Ok(BoundReport {
        name: name.to_string(),
        num_states: mdp.num_states,
        num_actions: mdp.num_actions,
        horizon: mdp.horizon,
        worst_case: worst_case_bound(mdp.num_actions, mdp.horizon),
        ucb: ucb_bound(mdp),
        covering_length_tl: covering.n,
        epw_bound: epw.n,
        thm4_bound: thm4,
        tight_bound: tight,
        goal_bound: goal,
        meta,
    })
}
