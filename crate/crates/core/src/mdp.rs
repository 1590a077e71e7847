//! Deterministic tabular MDPs, policies and time-indexed Q tables.

use std::fmt;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

/// A deterministic finite-horizon MDP with dense integer states and actions.
///
/// `transitions` and `rewards` are row-major `S × A` tables. Terminal states
/// self-loop with zero reward under every action.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TabularMdp {
    pub num_states: usize,
    pub num_actions: usize,
    pub horizon: usize,
    pub start_state: usize,
    pub discount: f64,
    pub terminal_flags: Vec<bool>,
    pub transitions: Vec<usize>,
    pub rewards: Vec<f64>,
}

impl TabularMdp {
    /// Builds an MDP with every state self-looping at zero reward.
    pub fn empty(num_states: usize, num_actions: usize, horizon: usize, start_state: usize) -> Self {
        let mut transitions = Vec::with_capacity(num_states * num_actions);
        for s in 0..num_states {
            transitions.extend(std::iter::repeat_n(s, num_actions));
        }
        TabularMdp {
            num_states,
            num_actions,
            horizon,
            start_state,
            discount: 1.0,
            terminal_flags: vec![false; num_states],
            transitions,
            rewards: vec![0.0; num_states * num_actions],
        }
    }

    #[inline]
    pub fn next(&self, s: usize, a: usize) -> usize {
        self.transitions[s * self.num_actions + a]
    }

    #[inline]
    pub fn reward(&self, s: usize, a: usize) -> f64 {
        self.rewards[s * self.num_actions + a]
    }

    #[inline]
    pub fn is_terminal(&self, s: usize) -> bool {
        self.terminal_flags[s]
    }

    pub fn set(&mut self, s: usize, a: usize, next: usize, reward: f64) {
        let i = s * self.num_actions + a;
        self.transitions[i] = next;
        self.rewards[i] = reward;
    }

    /// Marks `s` terminal and rewrites its row as a zero-reward self-loop.
    pub fn make_terminal(&mut self, s: usize) {
        self.terminal_flags[s] = true;
        for a in 0..self.num_actions {
            self.set(s, a, s, 0.0);
        }
    }

    pub fn max_reward(&self) -> f64 {
        self.rewards.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn min_reward(&self) -> f64 {
        self.rewards.iter().copied().fold(f64::INFINITY, f64::min)
    }

    /// Discounted return of an action sequence played from the start state.
    pub fn rollout_return(&self, actions: &[usize]) -> f64 {
        let mut s = self.start_state;
        let mut total = 0.0;
        let mut scale = 1.0;
        for &a in actions.iter().take(self.horizon) {
            total += scale * self.reward(s, a);
            scale *= self.discount;
            s = self.next(s, a);
        }
        total
    }

    pub fn reachability(&self) -> Arc<Reachability> {
        Arc::new(Reachability::compute(self))
    }
}

#[derive(Clone, Debug, PartialEq)]
pub enum ViolationKind {
    ZeroStates,
    ZeroActions,
    StartOutOfRange,
    BadDiscount,
    TableSize,
    TransitionOutOfRange,
    NonFiniteReward,
    TerminalNotSelfLoop,
    TerminalReward,
}

/// One failed invariant; `state`/`action` name the offending pair when there is one.
#[derive(Clone, Debug, PartialEq)]
pub struct Violation {
    pub kind: ViolationKind,
    pub state: Option<usize>,
    pub action: Option<usize>,
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{:?}", self.kind)?;
        match (self.state, self.action) {
            (Some(s), Some(a)) => write!(f, " at (s={s}, a={a})"),
            (Some(s), None) => write!(f, " at s={s}"),
            _ => Ok(()),
        }
    }
}

/// Checks every structural invariant; an empty list means the MDP is well formed.
pub fn validate(mdp: &TabularMdp) -> Vec<Violation> {
    let mut out = Vec::new();
    let global = |kind| Violation { kind, state: None, action: None };
    if mdp.num_states == 0 {
        out.push(global(ViolationKind::ZeroStates));
    }
    if mdp.num_actions == 0 {
        out.push(global(ViolationKind::ZeroActions));
    }
    if mdp.start_state >= mdp.num_states {
        out.push(global(ViolationKind::StartOutOfRange));
    }
    if !(mdp.discount > 0.0 && mdp.discount <= 1.0) {
        out.push(global(ViolationKind::BadDiscount));
    }
    let n = mdp.num_states * mdp.num_actions;
    if mdp.transitions.len() != n || mdp.rewards.len() != n || mdp.terminal_flags.len() != mdp.num_states {
        out.push(global(ViolationKind::TableSize));
        return out;
    }
    for s in 0..mdp.num_states {
        for a in 0..mdp.num_actions {
            let at = |kind| Violation { kind, state: Some(s), action: Some(a) };
            let next = mdp.next(s, a);
            let r = mdp.reward(s, a);
            if next >= mdp.num_states {
                out.push(at(ViolationKind::TransitionOutOfRange));
            }
            if !r.is_finite() {
                out.push(at(ViolationKind::NonFiniteReward));
            }
            if mdp.terminal_flags[s] {
                if next != s {
                    out.push(at(ViolationKind::TerminalNotSelfLoop));
                }
                if r != 0.0 {
                    out.push(at(ViolationKind::TerminalReward));
                }
            }
        }
    }
    out
}

/// Potential function over states used for reward shaping.
#[derive(Clone, Debug, PartialEq)]
pub struct ShapingPotential {
    pub phi: Vec<f64>,
}

/// Returns a copy with `R'(s,a) = R(s,a) + γ Φ(f(s,a)) − Φ(s)`; terminal rows stay at zero.
pub fn apply_shaping(mdp: &TabularMdp, potential: &ShapingPotential) -> TabularMdp {
    assert_eq!(potential.phi.len(), mdp.num_states, "potential must cover every state");
    let mut out = mdp.clone();
    for s in 0..mdp.num_states {
        if mdp.is_terminal(s) {
            continue;
        }
        for a in 0..mdp.num_actions {
            let next = mdp.next(s, a);
            out.rewards[s * mdp.num_actions + a] =
                mdp.reward(s, a) + mdp.discount * potential.phi[next] - potential.phi[s];
        }
    }
    out
}

/// Exploration or learned policy, indexed by 0-based timestep.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Policy {
    Uniform {
        num_actions: usize,
    },
    /// `probs` is a row-major `T × S × A` table. An all-zero row means the
    /// policy is undefined at that `(t, s)`.
    Stochastic {
        horizon: usize,
        num_states: usize,
        num_actions: usize,
        probs: Vec<f64>,
    },
    /// `actions` is a row-major `T × S` table; `usize::MAX` marks an undefined entry.
    Deterministic {
        horizon: usize,
        num_states: usize,
        num_actions: usize,
        actions: Vec<usize>,
    },
}

pub const NO_ACTION: usize = usize::MAX;

impl Policy {
    pub fn uniform(num_actions: usize) -> Self {
        Policy::Uniform { num_actions }
    }

    pub fn num_actions(&self) -> usize {
        match self {
            Policy::Uniform { num_actions }
            | Policy::Stochastic { num_actions, .. }
            | Policy::Deterministic { num_actions, .. } => *num_actions,
        }
    }

    pub fn prob(&self, t: usize, s: usize, a: usize) -> f64 {
        match self {
            Policy::Uniform { num_actions } => 1.0 / *num_actions as f64,
            Policy::Stochastic { num_states, num_actions, probs, .. } => {
                probs[(t * num_states + s) * num_actions + a]
            }
            Policy::Deterministic { num_states, actions, .. } => {
                if actions[t * num_states + s] == a {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn is_defined(&self, t: usize, s: usize) -> bool {
        match self {
            Policy::Uniform { .. } => true,
            Policy::Stochastic { horizon, num_states, num_actions, probs } => {
                if t >= *horizon || s >= *num_states {
                    return false;
                }
                let base = (t * num_states + s) * num_actions;
                probs[base..base + num_actions].iter().any(|&p| p > 0.0)
            }
            Policy::Deterministic { horizon, num_states, actions, .. } => {
                t < *horizon && s < *num_states && actions[t * num_states + s] != NO_ACTION
            }
        }
    }

    pub fn sample<R: Rng + ?Sized>(&self, t: usize, s: usize, rng: &mut R) -> usize {
        match self {
            Policy::Uniform { num_actions } => rng.gen_range(0..*num_actions),
            Policy::Stochastic { num_states, num_actions, probs, .. } => {
                let base = (t * num_states + s) * num_actions;
                let row = &probs[base..base + num_actions];
                let u: f64 = rng.gen::<f64>() * row.iter().sum::<f64>();
                let mut acc = 0.0;
                let mut last = 0;
                for (a, &p) in row.iter().enumerate() {
                    if p > 0.0 {
                        acc += p;
                        last = a;
                        if u < acc {
                            return a;
                        }
                    }
                }
                last
            }
            Policy::Deterministic { num_states, actions, .. } => actions[t * num_states + s],
        }
    }

    /// Row-sum and range checks; returns human-readable problems.
    pub fn validate(&self) -> Vec<String> {
        let mut out = Vec::new();
        match self {
            Policy::Uniform { num_actions } => {
                if *num_actions == 0 {
                    out.push("uniform policy over zero actions".into());
                }
            }
            Policy::Stochastic { horizon, num_states, num_actions, probs } => {
                if probs.len() != horizon * num_states * num_actions {
                    out.push(format!("probability table has {} entries, expected {}", probs.len(), horizon * num_states * num_actions));
                    return out;
                }
                for (row_idx, row) in probs.chunks(*num_actions).enumerate() {
                    let (t, s) = (row_idx / num_states, row_idx % num_states);
                    if row.iter().any(|&p| p < 0.0 || !p.is_finite()) {
                        out.push(format!("negative or non-finite probability at t={t}, s={s}"));
                    }
                    let sum: f64 = row.iter().sum();
                    if sum != 0.0 && (sum - 1.0).abs() > 1e-9 {
                        out.push(format!("row at t={t}, s={s} sums to {sum}"));
                    }
                }
            }
            Policy::Deterministic { horizon, num_states, num_actions, actions } => {
                if actions.len() != horizon * num_states {
                    out.push(format!("action table has {} entries, expected {}", actions.len(), horizon * num_states));
                    return out;
                }
                for (i, &a) in actions.iter().enumerate() {
                    if a != NO_ACTION && a >= *num_actions {
                        out.push(format!("action {a} out of range at t={}, s={}", i / num_states, i % num_states));
                    }
                }
            }
        }
        out
    }
}

/// States reachable at each timestep `t ∈ [0, T)` from the start state, sorted.
#[derive(Clone, Debug, PartialEq)]
pub struct Reachability {
    levels: Vec<Vec<usize>>,
}

impl Reachability {
    pub fn compute(mdp: &TabularMdp) -> Self {
        let mut levels = Vec::with_capacity(mdp.horizon);
        if mdp.horizon == 0 {
            return Reachability { levels };
        }
        let mut mark = vec![usize::MAX; mdp.num_states];
        let mut cur = vec![mdp.start_state];
        for t in 0..mdp.horizon {
            if t + 1 < mdp.horizon {
                let mut next = Vec::new();
                for &s in &cur {
                    for a in 0..mdp.num_actions {
                        let n = mdp.next(s, a);
                        if mark[n] != t {
                            mark[n] = t;
                            next.push(n);
                        }
                    }
                }
                next.sort_unstable();
                levels.push(std::mem::replace(&mut cur, next));
            } else {
                levels.push(std::mem::take(&mut cur));
            }
        }
        Reachability { levels }
    }

    pub fn horizon(&self) -> usize {
        self.levels.len()
    }

    pub fn level(&self, t: usize) -> &[usize] {
        &self.levels[t]
    }

    #[inline]
    pub fn index(&self, t: usize, s: usize) -> Option<usize> {
        self.levels.get(t)?.binary_search(&s).ok()
    }

    /// Union of all levels, sorted.
    pub fn all_states(&self) -> Vec<usize> {
        let mut all: Vec<usize> = self.levels.iter().flatten().copied().collect();
        all.sort_unstable();
        all.dedup();
        all
    }

    pub fn total_entries(&self) -> usize {
        self.levels.iter().map(Vec::len).sum()
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum QLabel {
    Policy,
    Iterate(usize),
    Optimal,
    Reward,
}

/// Time-indexed Q values stored only at reachable `(t, s)`; other entries are unset.
#[derive(Clone, Debug)]
pub struct QTable {
    pub label: QLabel,
    reach: Arc<Reachability>,
    num_actions: usize,
    values: Vec<Vec<f64>>,
}

impl QTable {
    pub fn new(label: QLabel, reach: Arc<Reachability>, num_actions: usize) -> Self {
        let values = (0..reach.horizon())
            .map(|t| vec![0.0; reach.level(t).len() * num_actions])
            .collect();
        QTable { label, reach, num_actions, values }
    }

    pub fn reach(&self) -> &Arc<Reachability> {
        &self.reach
    }

    pub fn horizon(&self) -> usize {
        self.values.len()
    }

    pub fn num_actions(&self) -> usize {
        self.num_actions
    }

    pub fn get(&self, t: usize, s: usize) -> Option<&[f64]> {
        let i = self.reach.index(t, s)?;
        Some(&self.values[t][i * self.num_actions..(i + 1) * self.num_actions])
    }

    pub fn value(&self, t: usize, s: usize, a: usize) -> Option<f64> {
        self.get(t, s).map(|row| row[a])
    }

    /// `max_a Q_t(s, a)`, i.e. the state value.
    pub fn max(&self, t: usize, s: usize) -> Option<f64> {
        self.get(t, s).map(row_max)
    }

    /// Row for the `i`-th reachable state of level `t`.
    pub fn row_at(&self, t: usize, i: usize) -> &[f64] {
        &self.values[t][i * self.num_actions..(i + 1) * self.num_actions]
    }

    pub fn level_mut(&mut self, t: usize) -> &mut [f64] {
        &mut self.values[t]
    }

    pub fn level_values(&self, t: usize) -> &[f64] {
        &self.values[t]
    }
}

pub fn row_max(row: &[f64]) -> f64 {
    row.iter().copied().fold(f64::NEG_INFINITY, f64::max)
}
