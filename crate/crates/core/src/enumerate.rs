//! Exhaustive enumeration of a simulator into a tabular MDP, and state consolidation.

use std::collections::HashMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use crate::envgen::{Simulator, Step};
use crate::error::{Error, Result};
use crate::mdp::TabularMdp;

#[derive(Clone, Debug)]
pub struct EnumerationConfig {
    pub max_states: usize,
    pub worker_count: usize,
    pub horizon: usize,
    /// Fraction of stored transitions re-simulated after enumeration.
    pub verify_fraction: f64,
}

impl EnumerationConfig {
    pub fn new(horizon: usize) -> Self {
        EnumerationConfig {
            max_states: crate::envgen::DEFAULT_MAX_STATES,
            worker_count: rayon::current_num_threads(),
            horizon,
            verify_fraction: 0.01,
        }
    }
}

/// Enumerated MDP plus the simulator blob and observation key behind each state.
///
/// Two sink states may be appended: a terminal state `X` for every terminal
/// transition, and an absorbing non-terminal state for successors first seen
/// at depth `T` (never acted in within the horizon). Sinks have empty blobs.
#[derive(Clone, Debug)]
pub struct Enumerated {
    pub mdp: TabularMdp,
    pub blobs: Vec<Vec<u8>>,
    pub keys: Vec<Vec<u8>>,
    pub depths: Vec<usize>,
    pub terminal_sink: Option<usize>,
    pub frontier_sink: Option<usize>,
}

impl Enumerated {
    /// Number of states that came from simulator blobs (sinks excluded).
    pub fn num_blob_states(&self) -> usize {
        self.blobs.len() - self.terminal_sink.is_some() as usize - self.frontier_sink.is_some() as usize
    }
}

enum Target {
    Terminal,
    Frontier,
    State(usize),
}

/// Breadth-first enumeration of every blob reachable in fewer than `T` steps.
///
/// Each BFS level is stepped in parallel; new blobs are then registered in
/// level order, so state indices are the first-visit order of a sequential BFS
/// regardless of worker count.
pub fn enumerate<S: Simulator>(sim: &S, config: &EnumerationConfig) -> Result<Enumerated> {
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(config.worker_count.max(1))
        .build()
        .map_err(|e| Error::Invalid(e.to_string()))?;
    pool.install(|| enumerate_inner(sim, config))
}

fn enumerate_inner<S: Simulator>(sim: &S, config: &EnumerationConfig) -> Result<Enumerated> {
    let a_n = sim.num_actions();
    let horizon = config.horizon;
    let start = sim.initial_state();

    if horizon == 0 {
        let key = sim.observation_key(&start);
        return Ok(Enumerated {
            mdp: TabularMdp::empty(1, a_n, 0, 0),
            blobs: vec![start],
            keys: vec![key],
            depths: vec![0],
            terminal_sink: None,
            frontier_sink: None,
        });
    }

    let mut registry: HashMap<Vec<u8>, usize> = HashMap::new();
    let mut blobs: Vec<Vec<u8>> = vec![start.clone()];
    let mut depths = vec![0usize];
    let mut edges: Vec<Vec<(Target, f64)>> = Vec::new();
    registry.insert(start, 0);

    let mut level_begin = 0;
    let mut depth = 0;
    while level_begin < blobs.len() {
        let level_end = blobs.len();
        let stepped: Vec<Vec<Step>> = blobs[level_begin..level_end]
            .par_iter()
            .map(|b| (0..a_n).map(|a| sim.step(b, a)).collect())
            .collect();
        for steps in stepped {
            let mut row = Vec::with_capacity(a_n);
            for st in steps {
                let target = if st.terminal {
                    Target::Terminal
                } else if let Some(&id) = registry.get(&st.next) {
                    Target::State(id)
                } else if depth + 1 < horizon {
                    let id = blobs.len();
                    if id >= config.max_states {
                        return Err(Error::CapExceeded { limit: config.max_states, frontier: id - level_end + 1 });
                    }
                    registry.insert(st.next.clone(), id);
                    blobs.push(st.next);
                    depths.push(depth + 1);
                    Target::State(id)
                } else {
                    Target::Frontier
                };
                row.push((target, st.reward));
            }
            edges.push(row);
        }
        level_begin = level_end;
        depth += 1;
    }
    drop(registry);

    let n_blob = blobs.len();
    let uses = |pred: fn(&Target) -> bool| edges.iter().flatten().any(|(t, _)| pred(t));
    let mut next_id = n_blob;
    let terminal_sink = uses(|t| matches!(t, Target::Terminal)).then(|| {
        next_id += 1;
        next_id - 1
    });
    let frontier_sink = uses(|t| matches!(t, Target::Frontier)).then(|| {
        next_id += 1;
        next_id - 1
    });

    let mut mdp = TabularMdp::empty(next_id, a_n, horizon, 0);
    for (s, row) in edges.iter().enumerate() {
        for (a, (target, r)) in row.iter().enumerate() {
            let n = match target {
                Target::Terminal => terminal_sink.unwrap(),
                Target::Frontier => frontier_sink.unwrap(),
                Target::State(id) => *id,
            };
            mdp.set(s, a, n, *r);
        }
    }
    let mut keys: Vec<Vec<u8>> = blobs.par_iter().map(|b| sim.observation_key(b)).collect();
    if let Some(x) = terminal_sink {
        mdp.make_terminal(x);
        blobs.push(Vec::new());
        keys.push(b"\xffterminal".to_vec());
        depths.push(horizon);
    }
    if frontier_sink.is_some() {
        blobs.push(Vec::new());
        keys.push(b"\xfffrontier".to_vec());
        depths.push(horizon);
    }

    let out = Enumerated { mdp, blobs, keys, depths, terminal_sink, frontier_sink };
    verify_replay(sim, &out, config.verify_fraction)?;
    Ok(out)
}

/// Re-steps a random sample of stored transitions and checks they agree.
fn verify_replay<S: Simulator>(sim: &S, e: &Enumerated, fraction: f64) -> Result<()> {
    let n_blob = e.num_blob_states();
    let a_n = e.mdp.num_actions;
    let total = n_blob * a_n;
    if total == 0 || fraction <= 0.0 {
        return Ok(());
    }
    let count = ((total as f64 * fraction).ceil() as usize).clamp(1, total);
    let mut rng = ChaCha8Rng::seed_from_u64(0x5eed);
    let picks: Vec<usize> = (0..count).map(|_| rng.gen_range(0..total)).collect();
    let lookup: HashMap<&[u8], usize> = e.blobs[..n_blob].iter().enumerate().map(|(i, b)| (b.as_slice(), i)).collect();
    picks.par_iter().try_for_each(|&p| {
        let (s, a) = (p / a_n, p % a_n);
        let st = sim.step(&e.blobs[s], a);
        let stored_next = e.mdp.next(s, a);
        let next_ok = if st.terminal {
            Some(stored_next) == e.terminal_sink
        } else {
            match lookup.get(st.next.as_slice()) {
                Some(&id) => id == stored_next,
                None => Some(stored_next) == e.frontier_sink,
            }
        };
        if next_ok && st.reward.to_bits() == e.mdp.reward(s, a).to_bits() {
            Ok(())
        } else {
            Err(Error::Nondeterministic { depth: e.depths[s], action: a })
        }
    })
}

/// Coarsest partition whose blocks agree on observation key, terminal flag,
/// per-action rewards and per-action successor blocks; returns the quotient
/// and the map from old to new state indices.
///
/// Blocks are numbered by the first state that falls into them, so an already
/// minimal MDP comes back with the identity mapping.
pub fn consolidate(mdp: &TabularMdp, keys: &[Vec<u8>]) -> (TabularMdp, Vec<usize>) {
    assert_eq!(keys.len(), mdp.num_states, "one observation key per state");
    let a_n = mdp.num_actions;
    let mut block = vec![0usize; mdp.num_states];
    let mut count = {
        let mut ids: HashMap<(&[u8], bool, Vec<u64>), usize> = HashMap::new();
        for s in 0..mdp.num_states {
            let rewards = (0..a_n).map(|a| (mdp.reward(s, a) + 0.0).to_bits()).collect();
            let next = ids.len();
            block[s] = *ids.entry((keys[s].as_slice(), mdp.is_terminal(s), rewards)).or_insert(next);
        }
        ids.len()
    };
    loop {
        let mut ids: HashMap<Vec<usize>, usize> = HashMap::new();
        let mut refined = vec![0usize; mdp.num_states];
        for s in 0..mdp.num_states {
            let mut sig = Vec::with_capacity(a_n + 1);
            sig.push(block[s]);
            sig.extend((0..a_n).map(|a| block[mdp.next(s, a)]));
            let next = ids.len();
            refined[s] = *ids.entry(sig).or_insert(next);
        }
        let new_count = ids.len();
        block = refined;
        if new_count == count {
            break;
        }
        count = new_count;
    }

    let mut rep = vec![usize::MAX; count];
    for s in 0..mdp.num_states {
        if rep[block[s]] == usize::MAX {
            rep[block[s]] = s;
        }
    }
    let mut out = TabularMdp::empty(count, a_n, mdp.horizon, block[mdp.start_state]);
    out.discount = mdp.discount;
    for (b, &s) in rep.iter().enumerate() {
        out.terminal_flags[b] = mdp.is_terminal(s);
        for a in 0..a_n {
            out.set(b, a, block[mdp.next(s, a)], mdp.reward(s, a));
        }
    }
    (out, block)
}

/// Enumerates, then consolidates using the simulator's observation keys.
pub fn enumerate_consolidated<S: Simulator>(sim: &S, config: &EnumerationConfig) -> Result<TabularMdp> {
    let e = enumerate(sim, config)?;
    Ok(consolidate(&e.mdp, &e.keys).0)
}
