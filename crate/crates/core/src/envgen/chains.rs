//! Chain-shaped MDP families, generated directly in consolidated form.
//!
//! Each family keeps one state per timestep on its rewarding path plus an
//! absorbing zero-reward "dead" state `D` and a terminal state `X`. Where a
//! family has a single distinguished action it is `A − 1`, so lowest-index
//! tie-breaking never picks it by accident.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::DEFAULT_MAX_STATES;
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

fn check_cap(states: usize) -> Result<()> {
    if states > DEFAULT_MAX_STATES {
        return Err(Error::CapExceeded { limit: DEFAULT_MAX_STATES, frontier: states });
    }
    Ok(())
}

fn require(cond: bool, msg: &str) -> Result<()> {
    if cond {
        Ok(())
    } else {
        Err(Error::Invalid(msg.into()))
    }
}

/// Path states `0..T`, then `D = T`, `X = T + 1`. Every action defaults to `D`.
fn path_skeleton(horizon: usize, num_actions: usize, extra: usize) -> TabularMdp {
    let n = horizon + 2 + extra;
    let mut mdp = TabularMdp::empty(n, num_actions, horizon, 0);
    let dead = horizon;
    for s in 0..horizon {
        for a in 0..num_actions {
            mdp.set(s, a, dead, 0.0);
        }
    }
    mdp.make_terminal(horizon + 1);
    mdp
}

/// Only `target` pays: reward 1 on its final action, 0 everywhere else.
pub fn make_needle_chain(horizon: usize, num_actions: usize, target: &[usize]) -> Result<TabularMdp> {
    require(horizon >= 1 && num_actions >= 1, "needle chain needs T ≥ 1 and A ≥ 1")?;
    require(target.len() == horizon, "target sequence must have length T")?;
    require(target.iter().all(|&a| a < num_actions), "target actions must lie in [0, A)")?;
    check_cap(horizon + 2)?;
    let mut mdp = path_skeleton(horizon, num_actions, 0);
    let term = horizon + 1;
    for (t, &a) in target.iter().enumerate() {
        if t + 1 < horizon {
            mdp.set(t, a, t + 1, 0.0);
        } else {
            mdp.set(t, a, term, 1.0);
        }
    }
    Ok(mdp)
}

/// Action `A − 1` pays 1 and stays on the path; anything else falls into `D`.
pub fn make_dense_chain(horizon: usize, num_actions: usize) -> Result<TabularMdp> {
    require(horizon >= 1 && num_actions >= 1, "dense chain needs T ≥ 1 and A ≥ 1")?;
    check_cap(horizon + 2)?;
    let mut mdp = path_skeleton(horizon, num_actions, 0);
    let best = num_actions - 1;
    for t in 0..horizon {
        let next = if t + 1 < horizon { t + 1 } else { horizon + 1 };
        mdp.set(t, best, next, 1.0);
    }
    Ok(mdp)
}

/// The dense chain with every reward deferred to the last timestep.
///
/// Leaving the path after `j` correct actions enters a counter state that
/// pays `j` on the final step; staying on the path pays `T`.
pub fn make_delayed_chain(horizon: usize, num_actions: usize) -> Result<TabularMdp> {
    require(horizon >= 1 && num_actions >= 1, "delayed chain needs T ≥ 1 and A ≥ 1")?;
    let counters = horizon.saturating_sub(1) * horizon.saturating_sub(2) / 2;
    check_cap(horizon + 2 + counters)?;
    let mut mdp = path_skeleton(horizon, num_actions, counters);
    let dead = horizon;
    let term = horizon + 1;
    let best = num_actions - 1;

    // counter state for (timestep t, count c), 1 ≤ c, c + 1 ≤ t ≤ T − 1
    let mut index = vec![vec![usize::MAX; horizon]; horizon];
    let mut next_id = horizon + 2;
    for c in 1..horizon.saturating_sub(1) {
        for t in c + 1..horizon {
            index[t][c] = next_id;
            next_id += 1;
        }
    }
    for c in 1..horizon.saturating_sub(1) {
        for t in c + 1..horizon {
            let s = index[t][c];
            for a in 0..num_actions {
                if t + 1 < horizon {
                    mdp.set(s, a, index[t + 1][c], 0.0);
                } else {
                    mdp.set(s, a, term, c as f64);
                }
            }
        }
    }
    for t in 0..horizon {
        for a in 0..num_actions {
            if a == best {
                if t + 1 < horizon {
                    mdp.set(t, a, t + 1, 0.0);
                } else {
                    mdp.set(t, a, term, horizon as f64);
                }
            } else if t + 1 == horizon {
                mdp.set(t, a, term, t as f64);
            } else if t == 0 {
                mdp.set(t, a, dead, 0.0);
            } else {
                mdp.set(t, a, index[t + 1][t], 0.0);
            }
        }
    }
    Ok(mdp)
}

/// Needle on the all-`(A − 1)` sequence plus a first-step action 0 paying 3/4.
///
/// Greedy-on-`Q^k` takes the 3/4 exit for every `k < T`.
pub fn make_adversarial_kt(horizon: usize, num_actions: usize) -> Result<TabularMdp> {
    require(horizon >= 2 && num_actions >= 2, "adversarial MDP needs T ≥ 2 and A ≥ 2")?;
    let mut mdp = make_needle_chain(horizon, num_actions, &vec![num_actions - 1; horizon])?;
    mdp.set(0, 0, horizon, 0.75);
    Ok(mdp)
}

/// Hidden action sequence used by [`make_lowerbound_periodic`] for a given seed.
pub fn lowerbound_hidden_sequence(horizon: usize, num_actions: usize, seed: u64) -> Vec<usize> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..horizon).map(|_| rng.gen_range(0..num_actions)).collect()
}

/// A hidden sequence that pays 1 at every timestep `t` (1-based) divisible by
/// `H`; any deviation falls into `D`. Optimal return `⌊T/H⌋`.
pub fn make_lowerbound_periodic(horizon: usize, num_actions: usize, period: usize, seed: u64) -> Result<TabularMdp> {
    require(period >= 1 && period <= horizon, "lower-bound MDP needs 1 ≤ H ≤ T")?;
    require(num_actions >= 1, "lower-bound MDP needs A ≥ 1")?;
    check_cap(horizon + 2)?;
    let hidden = lowerbound_hidden_sequence(horizon, num_actions, seed);
    let mut mdp = path_skeleton(horizon, num_actions, 0);
    for (t, &a) in hidden.iter().enumerate() {
        let r = if (t + 1) % period == 0 { 1.0 } else { 0.0 };
        let next = if t + 1 < horizon { t + 1 } else { horizon + 1 };
        mdp.set(t, a, next, r);
    }
    Ok(mdp)
}

/// Two paths from the start: action 0 pays 1 every step (return `T`), action
/// `A − 1` pays nothing until a final `T − 1`. Other actions fall into `D`.
///
/// States: start `0`, left `1..T`, right `T..2T−1`, `D = 2T − 1`, `X = 2T`.
pub fn make_distractor(horizon: usize, num_actions: usize) -> Result<TabularMdp> {
    require(horizon >= 2 && num_actions >= 2, "distractor needs T ≥ 2 and A ≥ 2")?;
    check_cap(2 * horizon + 1)?;
    let n = 2 * horizon + 1;
    let dead = 2 * horizon - 1;
    let term = 2 * horizon;
    let left = |t: usize| if t == 0 { 0 } else { t };
    let right = |t: usize| if t == 0 { 0 } else { horizon - 1 + t };
    let mut mdp = TabularMdp::empty(n, num_actions, horizon, 0);
    mdp.make_terminal(term);
    for s in 0..dead {
        for a in 0..num_actions {
            mdp.set(s, a, dead, 0.0);
        }
    }
    let right_action = num_actions - 1;
    for t in 0..horizon {
        let last = t + 1 == horizon;
        mdp.set(left(t), 0, if last { term } else { left(t + 1) }, 1.0);
        if t == 0 {
            mdp.set(0, right_action, right(1), 0.0);
        } else {
            let r = if last { (horizon - 1) as f64 } else { 0.0 };
            mdp.set(right(t), right_action, if last { term } else { right(t + 1) }, r);
        }
    }
    Ok(mdp)
}
