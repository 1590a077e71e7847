//! Exact backward/forward dynamic programming over reachable states.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::mdp::{row_max, Policy, QLabel, QTable, Reachability, TabularMdp};

/// Relative tolerance used when deciding whether two Q values tie.
pub const TIE_RTOL: f64 = 1e-12;

#[inline]
pub fn tie_tol(max: f64) -> f64 {
    TIE_RTOL * max.abs().max(1.0)
}

#[inline]
pub fn in_argmax(max: f64, v: f64) -> bool {
    v >= max - tie_tol(max)
}

pub fn argmax_set(row: &[f64]) -> Vec<usize> {
    let m = row_max(row);
    (0..row.len()).filter(|&a| in_argmax(m, row[a])).collect()
}

/// Lowest-index maximiser.
pub fn argmax_first(row: &[f64]) -> usize {
    let m = row_max(row);
    (0..row.len()).find(|&a| in_argmax(m, row[a])).unwrap_or(0)
}

/// `Q^π` by backward induction; rows exist only for reachable `(t, s)`.
pub fn policy_q(mdp: &TabularMdp, policy: &Policy) -> Result<QTable> {
    policy_q_with(mdp, mdp.reachability(), policy)
}

pub fn policy_q_with(mdp: &TabularMdp, reach: Arc<Reachability>, policy: &Policy) -> Result<QTable> {
    let a_n = mdp.num_actions;
    let horizon = reach.horizon();
    let mut q = QTable::new(QLabel::Policy, reach.clone(), a_n);
    for t in (0..horizon).rev() {
        let mut level = vec![0.0; reach.level(t).len() * a_n];
        for (i, &s) in reach.level(t).iter().enumerate() {
            for a in 0..a_n {
                let mut v = mdp.reward(s, a);
                if t + 1 < horizon {
                    let n = mdp.next(s, a);
                    if !policy.is_defined(t + 1, n) {
                        return Err(Error::MissingPolicyRow { t: t + 1, state: n });
                    }
                    let row = q.get(t + 1, n).expect("successor reachable");
                    let ev: f64 = (0..a_n).map(|b| policy.prob(t + 1, n, b) * row[b]).sum();
                    v += mdp.discount * ev;
                }
                level[i * a_n + a] = v;
            }
        }
        q.level_mut(t).copy_from_slice(&level);
    }
    Ok(q)
}

/// One Q-value-iteration step: `Q'_t(s,a) = R(s,a) + γ max_b Q_{t+1}(f(s,a), b)`.
pub fn qvi_step(mdp: &TabularMdp, q: &QTable) -> QTable {
    let reach = q.reach().clone();
    let a_n = mdp.num_actions;
    let horizon = reach.horizon();
    let label = match q.label {
        QLabel::Iterate(k) => QLabel::Iterate(k + 1),
        QLabel::Policy | QLabel::Reward => QLabel::Iterate(2),
        QLabel::Optimal => QLabel::Optimal,
    };
    let mut out = QTable::new(label, reach.clone(), a_n);
    for t in 0..horizon {
        let level = out.level_mut(t);
        for (i, &s) in reach.level(t).iter().enumerate() {
            for a in 0..a_n {
                let mut v = mdp.reward(s, a);
                if t + 1 < horizon {
                    v += mdp.discount * q.max(t + 1, mdp.next(s, a)).expect("successor reachable");
                }
                level[i * a_n + a] = v;
            }
        }
    }
    out
}

/// Table holding `Q_t(s,a) = R(s,a)` on reachable entries.
pub fn reward_q(mdp: &TabularMdp, reach: Arc<Reachability>) -> QTable {
    let a_n = mdp.num_actions;
    let mut q = QTable::new(QLabel::Reward, reach.clone(), a_n);
    for t in 0..reach.horizon() {
        let level = q.level_mut(t);
        for (i, &s) in reach.level(t).iter().enumerate() {
            for a in 0..a_n {
                level[i * a_n + a] = mdp.reward(s, a);
            }
        }
    }
    q
}

pub fn optimal_q(mdp: &TabularMdp) -> QTable {
    optimal_q_with(mdp, mdp.reachability())
}

pub fn optimal_q_with(mdp: &TabularMdp, reach: Arc<Reachability>) -> QTable {
    let a_n = mdp.num_actions;
    let horizon = reach.horizon();
    let mut q = QTable::new(QLabel::Optimal, reach.clone(), a_n);
    for t in (0..horizon).rev() {
        let mut level = vec![0.0; reach.level(t).len() * a_n];
        for (i, &s) in reach.level(t).iter().enumerate() {
            for a in 0..a_n {
                let mut v = mdp.reward(s, a);
                if t + 1 < horizon {
                    v += mdp.discount * q.max(t + 1, mdp.next(s, a)).expect("successor reachable");
                }
                level[i * a_n + a] = v;
            }
        }
        q.level_mut(t).copy_from_slice(&level);
    }
    q
}

/// Optimal return from the start state (0 for an empty horizon).
pub fn optimal_return(mdp: &TabularMdp) -> f64 {
    if mdp.horizon == 0 {
        return 0.0;
    }
    optimal_q(mdp).max(0, mdp.start_state).unwrap_or(0.0)
}

/// States visited by some optimal policy, per timestep.
pub fn optimal_state_sets(mdp: &TabularMdp, qstar: &QTable) -> Vec<Vec<usize>> {
    let horizon = qstar.horizon();
    let mut out = Vec::with_capacity(horizon);
    if horizon == 0 {
        return out;
    }
    let mut cur = vec![mdp.start_state];
    for t in 0..horizon {
        let mut next = Vec::new();
        if t + 1 < horizon {
            for &s in &cur {
                for a in argmax_set(qstar.get(t, s).expect("reachable")) {
                    next.push(mdp.next(s, a));
                }
            }
            next.sort_unstable();
            next.dedup();
        }
        out.push(std::mem::replace(&mut cur, next));
    }
    out
}

/// True iff every policy acting greedily on `qk` is optimal.
///
/// Walks forward from the start state over all greedy actions, requiring at
/// every visited `(t, s)` that the greedy set of `qk` lies inside the greedy set
/// of `Q*`. States off this walk cannot affect any greedy policy's return.
pub fn greedy_policies_optimal(mdp: &TabularMdp, qk: &QTable, qstar: &QTable) -> bool {
    let horizon = qk.horizon();
    let mut cur = vec![mdp.start_state];
    for t in 0..horizon {
        let mut next = Vec::new();
        for &s in &cur {
            let row = qk.get(t, s).expect("reachable");
            let star = qstar.get(t, s).expect("reachable");
            let star_max = row_max(star);
            for a in argmax_set(row) {
                if !in_argmax(star_max, star[a]) {
                    return false;
                }
                if t + 1 < horizon {
                    next.push(mdp.next(s, a));
                }
            }
        }
        next.sort_unstable();
        next.dedup();
        cur = next;
    }
    true
}

/// `Q^k`, with `Q^1 = Q^expl` and `Q^{i+1} = QVI(Q^i)`.
pub fn q_k(mdp: &TabularMdp, expl: &Policy, k: usize) -> Result<QTable> {
    assert!(k >= 1, "k starts at 1");
    let mut q = policy_q(mdp, expl)?;
    q.label = QLabel::Iterate(1);
    for _ in 1..k {
        q = qvi_step(mdp, &q);
    }
    Ok(q)
}

/// Smallest `k ≤ k_max` for which the MDP is k-QVI-solvable under `expl`.
pub fn min_k_qvi(mdp: &TabularMdp, expl: &Policy, k_max: usize) -> Result<Option<usize>> {
    let reach = mdp.reachability();
    if reach.horizon() == 0 {
        return Ok(Some(1));
    }
    let qstar = optimal_q_with(mdp, reach.clone());
    let mut q = policy_q_with(mdp, reach, expl)?;
    q.label = QLabel::Iterate(1);
    for k in 1..=k_max {
        if greedy_policies_optimal(mdp, &q, &qstar) {
            return Ok(Some(k));
        }
        q = qvi_step(mdp, &q);
    }
    Ok(None)
}

pub fn is_k_qvi_solvable(mdp: &TabularMdp, expl: &Policy, k: usize) -> Result<bool> {
    let qstar = optimal_q(mdp);
    Ok(greedy_policies_optimal(mdp, &q_k(mdp, expl, k)?, &qstar))
}

/// Effective planning window: smallest W with greedy-on-`Q^W` optimal, where
/// `Q^1 = R`. Always at most `T`.
pub fn epw(mdp: &TabularMdp) -> usize {
    let reach = mdp.reachability();
    let horizon = reach.horizon();
    if horizon == 0 {
        return 1;
    }
    let qstar = optimal_q_with(mdp, reach.clone());
    let mut q = reward_q(mdp, reach);
    for w in 1..horizon {
        if greedy_policies_optimal(mdp, &q, &qstar) {
            return w;
        }
        q = qvi_step(mdp, &q);
    }
    horizon
}

#[derive(Clone, Copy, Debug, PartialEq)]
pub enum GapEntry {
    Gap(f64),
    AllTie,
}

/// Per reachable `(t, s)` gap between the best and best non-argmax Q values.
#[derive(Clone, Debug)]
pub struct GapTable {
    reach: Arc<Reachability>,
    entries: Vec<Vec<GapEntry>>,
}

impl GapTable {
    pub fn get(&self, t: usize, s: usize) -> Option<GapEntry> {
        let i = self.reach.index(t, s)?;
        Some(self.entries[t][i])
    }
}

pub fn gap_of(row: &[f64]) -> GapEntry {
    let m = row_max(row);
    let second = row
        .iter()
        .copied()
        .filter(|&v| !in_argmax(m, v))
        .fold(f64::NEG_INFINITY, f64::max);
    if second == f64::NEG_INFINITY {
        GapEntry::AllTie
    } else {
        GapEntry::Gap(m - second)
    }
}

pub fn gaps(q: &QTable) -> GapTable {
    let reach = q.reach().clone();
    let entries = (0..reach.horizon())
        .map(|t| (0..reach.level(t).len()).map(|i| gap_of(q.row_at(t, i))).collect())
        .collect();
    GapTable { reach, entries }
}

/// `μ_t(s,a)` stored per reachable `(t, s)`; `terminal_mass[t]` is the share of
/// `μ_t` sitting on terminal states.
#[derive(Clone, Debug)]
pub struct OccupancyTable {
    pub reach: Arc<Reachability>,
    pub num_actions: usize,
    pub mu: Vec<Vec<f64>>,
    pub terminal_mass: Vec<f64>,
}

impl OccupancyTable {
    pub fn get(&self, t: usize, s: usize, a: usize) -> f64 {
        match self.reach.index(t, s) {
            Some(i) => self.mu[t][i * self.num_actions + a],
            None => 0.0,
        }
    }

    pub fn total(&self, t: usize) -> f64 {
        self.mu[t].iter().sum()
    }
}

pub fn occupancy(mdp: &TabularMdp, policy: &Policy) -> Result<OccupancyTable> {
    let reach = mdp.reachability();
    let a_n = mdp.num_actions;
    let horizon = reach.horizon();
    let mut mu = Vec::with_capacity(horizon);
    let mut terminal_mass = Vec::with_capacity(horizon);
    let mut dist = vec![0.0; reach.level(0).len().max(1)];
    if horizon > 0 {
        dist[0] = 1.0;
    }
    for t in 0..horizon {
        let level = reach.level(t);
        let mut m = vec![0.0; level.len() * a_n];
        let mut term = 0.0;
        let mut next = if t + 1 < horizon { vec![0.0; reach.level(t + 1).len()] } else { Vec::new() };
        for (i, &s) in level.iter().enumerate() {
            let d = dist[i];
            if d == 0.0 {
                continue;
            }
            if !policy.is_defined(t, s) {
                return Err(Error::MissingPolicyRow { t, state: s });
            }
            if mdp.is_terminal(s) {
                term += d;
            }
            for a in 0..a_n {
                let p = d * policy.prob(t, s, a);
                m[i * a_n + a] = p;
                if t + 1 < horizon && p > 0.0 {
                    let j = reach.index(t + 1, mdp.next(s, a)).expect("successor reachable");
                    next[j] += p;
                }
            }
        }
        mu.push(m);
        terminal_mass.push(term);
        dist = next;
    }
    Ok(OccupancyTable { reach, num_actions: a_n, mu, terminal_mass })
}
