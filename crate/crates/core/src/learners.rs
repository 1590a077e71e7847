//! Executable learners on tabular MDPs and empirical sample-complexity estimation.
//!
//! Every episode is charged `T` timesteps, even when it reaches an absorbing
//! terminal state early.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::Serialize;

use crate::dp::{self, in_argmax};
use crate::error::{Error, Result};
use crate::mdp::{row_max, Policy, TabularMdp};
use crate::tightbound::{decode_sequence, sequence_count};

pub const DEFAULT_GLOBAL_SEED: u64 = 0x00C0_FFEE;
/// Cap on enumerated action sequences per iteration.
pub const LEARNER_SEQUENCE_CAP: usize = 1 << 20;

/// Private RNG for one run: the global seed picks the key, the run index the stream.
pub fn run_rng(global_seed: u64, run_index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(global_seed);
    rng.set_stream(run_index);
    rng
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RunResult {
    /// Learned deterministic action per timestep.
    pub actions: Vec<usize>,
    pub timesteps: u128,
    pub success: bool,
    pub ret: f64,
    pub seed: u64,
    /// Q-table entries consulted without any observation (FQI-GORP only).
    pub coverage_gaps: usize,
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq)]
pub enum TieBreak {
    #[default]
    Lowest,
    Random,
}

fn pick<R: Rng>(values: &[f64], tie: TieBreak, rng: &mut R) -> usize {
    let m = row_max(values);
    match tie {
        TieBreak::Lowest => (0..values.len()).find(|&i| in_argmax(m, values[i])).unwrap_or(0),
        TieBreak::Random => {
            let ties: Vec<usize> = (0..values.len()).filter(|&i| in_argmax(m, values[i])).collect();
            ties[rng.gen_range(0..ties.len())]
        }
    }
}

pub fn returns_match(ret: f64, optimal: f64) -> bool {
    (ret - optimal).abs() <= 1e-9 * optimal.abs().max(1.0)
}

fn finish(mdp: &TabularMdp, actions: Vec<usize>, timesteps: u128, seed: u64, coverage_gaps: usize) -> RunResult {
    let ret = mdp.rollout_return(&actions);
    let success = returns_match(ret, dp::optimal_return(mdp));
    RunResult { actions, timesteps, success, ret, seed, coverage_gaps }
}

/// Discounted reward-to-go from `(t, s)`, playing `forced` first and `expl` after.
fn sample_return<R: Rng>(mdp: &TabularMdp, expl: &Policy, t0: usize, s0: usize, forced: &[usize], rng: &mut R) -> f64 {
    let mut s = s0;
    let mut g = 0.0;
    let mut scale = 1.0;
    for t in t0..mdp.horizon {
        if mdp.is_terminal(s) {
            break;
        }
        let a = match forced.get(t - t0) {
            Some(&a) => a,
            None => expl.sample(t, s, rng),
        };
        g += scale * mdp.reward(s, a);
        scale *= mdp.discount;
        s = mdp.next(s, a);
    }
    g
}

fn state_after(mdp: &TabularMdp, prefix: &[usize]) -> usize {
    prefix.iter().fold(mdp.start_state, |s, &a| mdp.next(s, a))
}

/// GORP: at each timestep, estimate every `k`-action sequence from `m`
/// rollouts (learned prefix, sequence, then `expl`) and commit to the first
/// action of the best one. Uses `T²·A^k·m` timesteps.
pub fn gorp_run(mdp: &TabularMdp, expl: &Policy, k: usize, m: u64, seed: u64) -> Result<RunResult> {
    gorp_run_with(mdp, expl, k, m, seed, TieBreak::Lowest, DEFAULT_GLOBAL_SEED)
}

pub fn gorp_run_with(
    mdp: &TabularMdp,
    expl: &Policy,
    k: usize,
    m: u64,
    seed: u64,
    tie: TieBreak,
    global_seed: u64,
) -> Result<RunResult> {
    if k == 0 || m == 0 {
        return Err(Error::Invalid("GORP needs k ≥ 1 and m ≥ 1".into()));
    }
    let a_n = mdp.num_actions;
    let count = sequence_count(a_n, k, LEARNER_SEQUENCE_CAP)?;
    let horizon = mdp.horizon;
    let mut rng = run_rng(global_seed, seed);
    let mut learned = Vec::with_capacity(horizon);
    let mut seq = vec![0usize; k];
    let mut q_hat = vec![0.0; count];
    for i in 0..horizon {
        let s_i = state_after(mdp, &learned);
        for (idx, q) in q_hat.iter_mut().enumerate() {
            decode_sequence(idx, a_n, &mut seq);
            let total: f64 = (0..m).map(|_| sample_return(mdp, expl, i, s_i, &seq, &mut rng)).sum();
            *q = total / m as f64;
        }
        let best = pick(&q_hat, tie, &mut rng);
        learned.push(best / a_n.pow(k as u32 - 1));
    }
    let timesteps = horizon as u128 * horizon as u128 * count as u128 * m as u128;
    Ok(finish(mdp, learned, timesteps, seed, 0))
}

/// PG-GORP: importance-weighted one-step policy-gradient estimate from `m`
/// on-policy episodes per timestep. Uses `T²·m` timesteps.
pub fn pg_gorp_run(mdp: &TabularMdp, expl: &Policy, m: u64, seed: u64) -> Result<RunResult> {
    pg_gorp_run_with(mdp, expl, m, seed, DEFAULT_GLOBAL_SEED)
}

pub fn pg_gorp_run_with(mdp: &TabularMdp, expl: &Policy, m: u64, seed: u64, global_seed: u64) -> Result<RunResult> {
    if m == 0 {
        return Err(Error::Invalid("PG-GORP needs m ≥ 1".into()));
    }
    let a_n = mdp.num_actions;
    let horizon = mdp.horizon;
    let mut rng = run_rng(global_seed, seed);
    let mut learned = Vec::with_capacity(horizon);
    for i in 0..horizon {
        let s_i = state_after(mdp, &learned);
        for a in 0..a_n {
            if expl.prob(i, s_i, a) <= 0.0 {
                return Err(Error::ZeroProbability { t: i, state: s_i, action: a });
            }
        }
        let mut grad = vec![0.0; a_n];
        for _ in 0..m {
            let a = expl.sample(i, s_i, &mut rng);
            let g = sample_return(mdp, expl, i, s_i, &[a], &mut rng);
            grad[a] += g / expl.prob(i, s_i, a);
        }
        for v in &mut grad {
            *v /= m as f64;
        }
        learned.push(pick(&grad, TieBreak::Lowest, &mut rng));
    }
    let timesteps = horizon as u128 * horizon as u128 * m as u128;
    Ok(finish(mdp, learned, timesteps, seed, 0))
}

/// FQI-GORP: `A^k·m` exploration episodes per timestep, tabular regression of
/// the reward-to-go at step `i + k − 1`, then `k − 1` fitted backups down to
/// step `i`. Unobserved entries count as 0 and are tallied in `coverage_gaps`.
pub fn fqi_gorp_run(mdp: &TabularMdp, expl: &Policy, k: usize, m: u64, seed: u64) -> Result<RunResult> {
    fqi_gorp_run_with(mdp, expl, k, m, seed, DEFAULT_GLOBAL_SEED)
}

pub fn fqi_gorp_run_with(
    mdp: &TabularMdp,
    expl: &Policy,
    k: usize,
    m: u64,
    seed: u64,
    global_seed: u64,
) -> Result<RunResult> {
    if k == 0 || m == 0 {
        return Err(Error::Invalid("FQI-GORP needs k ≥ 1 and m ≥ 1".into()));
    }
    let a_n = mdp.num_actions;
    let count = sequence_count(a_n, k, LEARNER_SEQUENCE_CAP)? as u64;
    let horizon = mdp.horizon;
    let gamma = mdp.discount;
    let mut rng = run_rng(global_seed, seed);
    let mut learned = Vec::with_capacity(horizon);
    let mut gaps = 0usize;
    for i in 0..horizon {
        let s_i = state_after(mdp, &learned);
        let last = (i + k - 1).min(horizon - 1);
        // per (t, s, a): observed reward and successor, plus regression targets at `last`
        let mut seen: HashMap<(usize, usize, usize), (f64, usize)> = HashMap::new();
        let mut targets: HashMap<(usize, usize), (f64, u64)> = HashMap::new();
        let mut traj: Vec<(usize, usize, f64)> = Vec::with_capacity(horizon - i);
        for _ in 0..count * m {
            traj.clear();
            let mut s = s_i;
            for t in i..horizon {
                let a = expl.sample(t, s, &mut rng);
                let r = mdp.reward(s, a);
                let n = mdp.next(s, a);
                if t <= last {
                    seen.insert((t, s, a), (r, n));
                }
                traj.push((s, a, r));
                s = n;
            }
            let (s_last, a_last, _) = traj[last - i];
            let mut g = 0.0;
            let mut scale = 1.0;
            for &(_, _, r) in &traj[last - i..] {
                g += scale * r;
                scale *= gamma;
            }
            let e = targets.entry((s_last, a_last)).or_insert((0.0, 0));
            e.0 += g;
            e.1 += 1;
        }

        let mut q_next: HashMap<usize, Vec<Option<f64>>> = HashMap::new();
        for (&(s, a), &(sum, n)) in &targets {
            q_next.entry(s).or_insert_with(|| vec![None; a_n])[a] = Some(sum / n as f64);
        }
        for t in (i..last).rev() {
            let mut q_t: HashMap<usize, Vec<Option<f64>>> = HashMap::new();
            for (&(tt, s, a), &(r, n)) in &seen {
                if tt != t {
                    continue;
                }
                let cont = match q_next.get(&n) {
                    Some(row) => {
                        gaps += row.iter().filter(|v| v.is_none()).count();
                        row.iter().map(|v| v.unwrap_or(0.0)).fold(f64::NEG_INFINITY, f64::max)
                    }
                    None => {
                        gaps += a_n;
                        0.0
                    }
                };
                q_t.entry(s).or_insert_with(|| vec![None; a_n])[a] = Some(r + gamma * cont);
            }
            q_next = q_t;
        }
        let row = q_next.get(&s_i).cloned().unwrap_or_else(|| vec![None; a_n]);
        gaps += row.iter().filter(|v| v.is_none()).count();
        let values: Vec<f64> = row.iter().map(|v| v.unwrap_or(0.0)).collect();
        learned.push(pick(&values, TieBreak::Lowest, &mut rng));
    }
    let timesteps = horizon as u128 * horizon as u128 * count as u128 * m as u128;
    Ok(finish(mdp, learned, timesteps, seed, gaps))
}

/// Deterministic lookahead: score each `A^W` sequence by its rewards inside
/// the window only and commit to the best first action (lowest index on ties).
pub fn plan_over_window(mdp: &TabularMdp, w: usize) -> Result<RunResult> {
    if w == 0 {
        return Err(Error::Invalid("window must be at least 1".into()));
    }
    let a_n = mdp.num_actions;
    let count = sequence_count(a_n, w, LEARNER_SEQUENCE_CAP)?;
    let horizon = mdp.horizon;
    let mut learned = Vec::with_capacity(horizon);
    let mut seq = vec![0usize; w];
    let mut scores = vec![0.0; count];
    for i in 0..horizon {
        let s_i = state_after(mdp, &learned);
        for (idx, score) in scores.iter_mut().enumerate() {
            decode_sequence(idx, a_n, &mut seq);
            let mut s = s_i;
            let mut total = 0.0;
            let mut scale = 1.0;
            for (j, &a) in seq.iter().enumerate() {
                if i + j >= horizon {
                    break;
                }
                total += scale * mdp.reward(s, a);
                scale *= mdp.discount;
                s = mdp.next(s, a);
            }
            *score = total;
        }
        learned.push(dp::argmax_first(&scores) / a_n.pow(w as u32 - 1));
    }
    let timesteps = horizon as u128 * horizon as u128 * count as u128;
    Ok(finish(mdp, learned, timesteps, 0, 0))
}

/// Finite-horizon plan on the optimistic model: unknown pairs self-loop with reward `r_max`.
fn plan_model(mdp: &TabularMdp, known: &[Option<(usize, f64)>], r_max: f64) -> Vec<Vec<f64>> {
    let (s_n, a_n, horizon) = (mdp.num_states, mdp.num_actions, mdp.horizon);
    let mut q = vec![vec![0.0; s_n * a_n]; horizon];
    let mut v_next = vec![0.0; s_n];
    for t in (0..horizon).rev() {
        let mut v = vec![f64::NEG_INFINITY; s_n];
        for s in 0..s_n {
            for a in 0..a_n {
                let (n, r) = known[s * a_n + a].unwrap_or((s, r_max));
                let val = r + mdp.discount * v_next[n];
                q[t][s * a_n + a] = val;
                v[s] = v[s].max(val);
            }
        }
        v_next = v;
    }
    q
}

/// R-max with a known reward ceiling: optimistic model, replanned after every
/// timestep on which the model changed. Before each episode the current plan
/// is simulated on the model; if it touches no unknown pair it is returned.
pub fn rmax_run(mdp: &TabularMdp) -> RunResult {
    let (a_n, horizon) = (mdp.num_actions, mdp.horizon);
    let r_max = mdp.max_reward();
    let mut known: Vec<Option<(usize, f64)>> = vec![None; mdp.num_states * a_n];
    let mut q = plan_model(mdp, &known, r_max);
    let mut episodes: u128 = 0;
    let max_episodes = (mdp.num_states * a_n) as u128 + 1;
    loop {
        let mut s = mdp.start_state;
        let mut plan = Vec::with_capacity(horizon);
        let mut touches_unknown = false;
        for t in 0..horizon {
            let a = dp::argmax_first(&q[t][s * a_n..(s + 1) * a_n]);
            plan.push(a);
            match known[s * a_n + a] {
                Some((n, _)) => s = n,
                None => {
                    touches_unknown = true;
                    break;
                }
            }
        }
        if !touches_unknown || episodes >= max_episodes {
            plan.resize(horizon, 0);
            return finish(mdp, plan, episodes * horizon as u128, 0, 0);
        }
        episodes += 1;
        let mut s = mdp.start_state;
        for t in 0..horizon {
            let a = dp::argmax_first(&q[t][s * a_n..(s + 1) * a_n]);
            let n = mdp.next(s, a);
            if known[s * a_n + a].is_none() {
                known[s * a_n + a] = Some((n, mdp.reward(s, a)));
                q = plan_model(mdp, &known, r_max);
            }
            s = n;
        }
    }
}

/// A learner whose budget is a ladder of levels (e.g. increasing `m`).
pub trait BudgetedRunner: Sync {
    fn levels(&self) -> usize;
    fn run(&self, level: usize, seed: u64) -> Result<RunResult>;
}

pub struct GorpRunner<'a> {
    pub mdp: &'a TabularMdp,
    pub expl: &'a Policy,
    pub k: usize,
    pub ms: Vec<u64>,
    pub global_seed: u64,
}

impl BudgetedRunner for GorpRunner<'_> {
    fn levels(&self) -> usize {
        self.ms.len()
    }

    fn run(&self, level: usize, seed: u64) -> Result<RunResult> {
        gorp_run_with(self.mdp, self.expl, self.k, self.ms[level], seed, TieBreak::Lowest, self.global_seed)
    }
}

pub struct WindowRunner<'a> {
    pub mdp: &'a TabularMdp,
}

impl BudgetedRunner for WindowRunner<'_> {
    fn levels(&self) -> usize {
        self.mdp.horizon
    }

    fn run(&self, level: usize, _seed: u64) -> Result<RunResult> {
        plan_over_window(self.mdp, level + 1)
    }
}

pub struct RmaxRunner<'a> {
    pub mdp: &'a TabularMdp,
}

impl BudgetedRunner for RmaxRunner<'_> {
    fn levels(&self) -> usize {
        1
    }

    fn run(&self, _level: usize, _seed: u64) -> Result<RunResult> {
        Ok(rmax_run(self.mdp))
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Empirical {
    Converged { median_timesteps: u128 },
    NotConverged,
}

impl Empirical {
    pub fn log10(&self) -> Option<f64> {
        match self {
            Empirical::Converged { median_timesteps } => Some((*median_timesteps as f64).log10()),
            Empirical::NotConverged => None,
        }
    }
}

/// Median over seeds of the timesteps used at the lowest succeeding budget level.
pub fn empirical_sample_complexity(runner: &dyn BudgetedRunner, seeds: &[u64]) -> Result<Empirical> {
    if seeds.is_empty() || seeds.len().is_multiple_of(2) {
        return Err(Error::Invalid("empirical sample complexity needs an odd number of seeds".into()));
    }
    let mut per_seed: Vec<Option<u128>> = seeds
        .par_iter()
        .map(|&seed| {
            for level in 0..runner.levels() {
                let r = runner.run(level, seed)?;
                if r.success {
                    return Ok(Some(r.timesteps));
                }
            }
            Ok(None)
        })
        .collect::<Result<_>>()?;
    per_seed.sort_by_key(|v| v.unwrap_or(u128::MAX));
    Ok(match per_seed[seeds.len() / 2] {
        Some(n) => Empirical::Converged { median_timesteps: n },
        None => Empirical::NotConverged,
    })
}

pub fn gorp_success_fraction(mdp: &TabularMdp, expl: &Policy, k: usize, m: u64, seeds: &[u64]) -> Result<f64> {
    let wins: Vec<bool> = seeds
        .par_iter()
        .map(|&s| gorp_run(mdp, expl, k, m, s).map(|r| r.success))
        .collect::<Result<_>>()?;
    Ok(wins.iter().filter(|&&w| w).count() as f64 / seeds.len() as f64)
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct MinM {
    pub m: u64,
    pub h: f64,
}

/// Smallest `m` with at least half the seeds succeeding: doubling, then
/// binary refinement. `Ok(None)` if even `cap` fails.
pub fn empirical_min_m(mdp: &TabularMdp, expl: &Policy, k: usize, seeds: &[u64], cap: u64) -> Result<Option<MinM>> {
    let ok = |m: u64| gorp_success_fraction(mdp, expl, k, m, seeds).map(|f| f >= 0.5);
    let mut hi = 1u64;
    while !ok(hi)? {
        if hi >= cap {
            return Ok(None);
        }
        hi = (hi * 2).min(cap);
    }
    let mut lo = hi / 2;
    while hi - lo > 1 {
        let mid = lo + (hi - lo) / 2;
        if ok(mid)? {
            hi = mid;
        } else {
            lo = mid;
        }
    }
    let a = mdp.num_actions as f64;
    let h = if mdp.num_actions > 1 { k as f64 + (hi as f64).ln() / a.ln() } else { k as f64 };
    Ok(Some(MinM { m: hi, h }))
}

pub const DEFAULT_MIN_M_CAP: u64 = 1 << 20;
