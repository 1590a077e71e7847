//! Independent oracles shared by the integration tests and the acceptance runner.
//!
//! Nothing here calls into the dynamic-programming, LP or enumeration code of
//! the library; the oracles only read raw MDP tables.

#![allow(dead_code)]

use std::collections::{HashMap, HashSet, VecDeque};

use effhorizon::TabularMdp;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

/// Every action sequence of length `len` over `a` actions, first action most significant.
pub fn all_sequences(a: usize, len: usize) -> Vec<Vec<usize>> {
    let mut out = vec![Vec::new()];
    for _ in 0..len {
        out = out
            .into_iter()
            .flat_map(|p| {
                (0..a).map(move |x| {
                    let mut q = p.clone();
                    q.push(x);
                    q
                })
            })
            .collect();
    }
    out
}

/// Return of an open-loop action sequence from `start`, read straight off the tables.
pub fn raw_return(mdp: &TabularMdp, start: usize, actions: &[usize]) -> f64 {
    let a_n = mdp.num_actions;
    let mut s = start;
    let mut g = 0.0;
    let mut scale = 1.0;
    for &a in actions {
        g += scale * mdp.rewards[s * a_n + a];
        scale *= mdp.discount;
        s = mdp.transitions[s * a_n + a];
    }
    g
}

/// Returns of all `A^T` trajectories from the start state.
pub fn trajectory_returns(mdp: &TabularMdp) -> Vec<(Vec<usize>, f64)> {
    all_sequences(mdp.num_actions, mdp.horizon)
        .into_iter()
        .map(|seq| {
            let g = raw_return(mdp, mdp.start_state, &seq);
            (seq, g)
        })
        .collect()
}

pub fn brute_optimal_return(mdp: &TabularMdp) -> f64 {
    trajectory_returns(mdp).into_iter().map(|(_, g)| g).fold(f64::NEG_INFINITY, f64::max)
}

/// Uniform-random Q at the start state for first action `a`: the mean over all
/// equally likely continuations.
pub fn brute_random_q_start(mdp: &TabularMdp, a: usize) -> f64 {
    let tails = all_sequences(mdp.num_actions, mdp.horizon - 1);
    let n = tails.len() as f64;
    tails
        .into_iter()
        .map(|mut tail| {
            tail.insert(0, a);
            raw_return(mdp, mdp.start_state, &tail)
        })
        .sum::<f64>()
        / n
}

/// Sequences whose return is within `tol` of the best.
pub fn optimal_sequences(mdp: &TabularMdp, tol: f64) -> HashSet<Vec<usize>> {
    let all = trajectory_returns(mdp);
    let best = all.iter().map(|(_, g)| *g).fold(f64::NEG_INFINITY, f64::max);
    all.into_iter().filter(|(_, g)| *g >= best - tol).map(|(s, _)| s).collect()
}

/// Exhaustive bounded-variable LP: every vertex has at most one coordinate
/// strictly inside its box, so enumerate the free coordinate and the bound
/// pattern of the rest.
pub fn vertex_lp(c: &[f64], lo: &[f64], hi: &[f64]) -> Option<f64> {
    let n = c.len();
    let mut best: Option<f64> = None;
    for free in 0..n {
        for mask in 0u32..(1 << (n - 1)) {
            let mut p = vec![0.0; n];
            let mut bit = 0;
            let mut rest = 0.0;
            for i in 0..n {
                if i == free {
                    continue;
                }
                p[i] = if mask >> bit & 1 == 1 { hi[i] } else { lo[i] };
                rest += p[i];
                bit += 1;
            }
            p[free] = 1.0 - rest;
            if p[free] < lo[free] - 1e-12 || p[free] > hi[free] + 1e-12 {
                continue;
            }
            let v: f64 = c.iter().zip(&p).map(|(a, b)| a * b).sum();
            best = Some(best.map_or(v, |b: f64| b.max(v)));
        }
    }
    best
}

/// Binomial pmf by repeated convolution of Bernoulli trials.
pub fn binomial_pmf_by_convolution(m: usize, p: f64) -> Vec<f64> {
    let mut pmf = vec![1.0];
    for _ in 0..m {
        let mut next = vec![0.0; pmf.len() + 1];
        for (j, &v) in pmf.iter().enumerate() {
            next[j] += v * (1.0 - p);
            next[j + 1] += v * p;
        }
        pmf = next;
    }
    pmf
}

/// `(P(X > Y), P(X ≥ Y))` for independent binomial counts with pmfs `px`, `py`.
pub fn strict_and_weak_win(px: &[f64], py: &[f64]) -> (f64, f64) {
    let mut strict = 0.0;
    let mut weak = 0.0;
    for (i, &a) in px.iter().enumerate() {
        for (j, &b) in py.iter().enumerate() {
            if i > j {
                strict += a * b;
            }
            if i >= j {
                weak += a * b;
            }
        }
    }
    (strict, weak)
}

/// Number of classes of the coarsest bisimulation, by pairwise elimination.
pub fn bisimulation_class_count(mdp: &TabularMdp, keys: &[Vec<u8>]) -> usize {
    let n = mdp.num_states;
    let a_n = mdp.num_actions;
    let mut eq = vec![vec![false; n]; n];
    for i in 0..n {
        for j in 0..n {
            eq[i][j] = keys[i] == keys[j]
                && mdp.terminal_flags[i] == mdp.terminal_flags[j]
                && (0..a_n).all(|a| mdp.rewards[i * a_n + a] == mdp.rewards[j * a_n + a]);
        }
    }
    loop {
        let mut changed = false;
        for i in 0..n {
            for j in 0..n {
                if eq[i][j]
                    && !(0..a_n).all(|a| eq[mdp.transitions[i * a_n + a]][mdp.transitions[j * a_n + a]])
                {
                    eq[i][j] = false;
                    changed = true;
                }
            }
        }
        if !changed {
            break;
        }
    }
    let mut seen = vec![false; n];
    let mut classes = 0;
    for i in 0..n {
        if !seen[i] {
            classes += 1;
            for j in 0..n {
                if eq[i][j] {
                    seen[j] = true;
                }
            }
        }
    }
    classes
}

/// Grid dynamics written out from scratch: `(x, y, dir)`, 0 = +x, 1 = +y.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash)]
pub struct Pose {
    pub x: i32,
    pub y: i32,
    pub dir: i32,
}

/// Step in an `n × n` room with walls on the border and the goal at `(n−2, n−2)`;
/// returns the next pose and whether the goal was entered.
pub fn grid_step(n: i32, p: Pose, action: usize) -> (Pose, bool) {
    match action {
        0 => (Pose { dir: (p.dir + 3) % 4, ..p }, false),
        1 => (Pose { dir: (p.dir + 1) % 4, ..p }, false),
        _ => {
            let (dx, dy) = [(1, 0), (0, 1), (-1, 0), (0, -1)][p.dir as usize];
            let (x, y) = (p.x + dx, p.y + dy);
            if x <= 0 || y <= 0 || x >= n - 1 || y >= n - 1 {
                (p, false)
            } else {
                (Pose { x, y, ..p }, x == n - 2 && y == n - 2)
            }
        }
    }
}

/// Non-goal poses reachable from the start by depth-first search.
pub fn grid_reachable(n: i32) -> HashSet<Pose> {
    let start = Pose { x: 1, y: 1, dir: 0 };
    let mut seen = HashSet::from([start]);
    let mut stack = vec![start];
    while let Some(p) = stack.pop() {
        for a in 0..3 {
            let (q, goal) = grid_step(n, p, a);
            if !goal && seen.insert(q) {
                stack.push(q);
            }
        }
    }
    seen
}

/// Actions to the goal from every non-goal pose, by backward breadth-first search.
pub fn grid_goal_distances(n: i32) -> HashMap<Pose, usize> {
    let poses: Vec<Pose> = grid_reachable(n).into_iter().collect();
    let mut dist = HashMap::new();
    let mut queue = VecDeque::new();
    for &p in &poses {
        if (0..3).any(|a| grid_step(n, p, a).1) {
            dist.insert(p, 1);
            queue.push_back(p);
        }
    }
    while let Some(q) = queue.pop_front() {
        let d = dist[&q];
        for &p in &poses {
            if !dist.contains_key(&p) && (0..3).any(|a| grid_step(n, p, a) == (q, false)) {
                dist.insert(p, d + 1);
                queue.push_back(p);
            }
        }
    }
    dist
}

/// Random MDP with `states` states; rewards in `[−1, 1]` or `[0, 1]`.
pub fn random_mdp(rng: &mut ChaCha8Rng, states: usize, actions: usize, horizon: usize, nonnegative: bool) -> TabularMdp {
    let mut mdp = TabularMdp::empty(states, actions, horizon, 0);
    for s in 0..states {
        for a in 0..actions {
            let r = if nonnegative { rng.gen_range(0.0..1.0) } else { rng.gen_range(-1.0..1.0) };
            let next = rng.gen_range(0..states);
            mdp.set(s, a, next, (r * 8.0f64).round() / 8.0);
        }
    }
    mdp
}

/// Random layered MDP: every trajectory ends in the terminal state `X = S − 1`,
/// either by an early terminal transition or on the last step.
pub fn random_layered_mdp(rng: &mut ChaCha8Rng, width: usize, actions: usize, horizon: usize) -> TabularMdp {
    let states = 1 + width * (horizon - 1) + 1;
    let x = states - 1;
    let mut mdp = TabularMdp::empty(states, actions, horizon, 0);
    let layer = |t: usize| -> Vec<usize> {
        if t == 0 {
            vec![0]
        } else if t >= horizon {
            vec![x]
        } else {
            (1 + (t - 1) * width..1 + t * width).collect()
        }
    };
    for t in 0..horizon {
        let next = layer(t + 1);
        for s in layer(t) {
            for a in 0..actions {
                let n = if rng.gen_bool(0.1) { x } else { next[rng.gen_range(0..next.len())] };
                let r = rng.gen_range(0..4) as f64 / 2.0;
                mdp.set(s, a, n, r);
            }
        }
    }
    mdp.make_terminal(x);
    mdp
}

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}
