mod common;

use std::collections::HashSet;
use std::sync::atomic::{AtomicUsize, Ordering};
use std::sync::Arc;

use effhorizon::builtin::{self, FAMILIES};
use effhorizon::dp;
use effhorizon::enumerate::{consolidate, enumerate, enumerate_consolidated, EnumerationConfig};
use effhorizon::envgen::{make_empty_grid, make_needle_chain, Simulator, Step, TreeSim};
use effhorizon::{Error, Policy, TabularMdp};
use proptest::prelude::*;

#[test]
fn grid_states_match_an_independent_search() {
    for n in [4, 5, 6] {
        let e = enumerate(&make_empty_grid(n), &EnumerationConfig::new(100)).unwrap();
        let oracle = common::grid_reachable(n as i32);
        let ours: HashSet<common::Pose> = e.blobs[..e.num_blob_states()]
            .iter()
            .map(|b| common::Pose { x: b[0] as i32, y: b[1] as i32, dir: b[2] as i32 })
            .collect();
        assert_eq!(ours, oracle, "n={n}");
        assert!(e.terminal_sink.is_some());
        assert!(e.frontier_sink.is_none(), "every pose is seen well before T = 100");
    }
}

#[test]
fn empty_5x5_covers_every_interior_pose() {
    let e = enumerate(&make_empty_grid(5), &EnumerationConfig::new(100)).unwrap();
    // 3 × 3 interior minus the goal cell, four orientations each
    assert_eq!(e.num_blob_states(), 8 * 4);
    let mdp = builtin::resolve("empty_grid").unwrap();
    assert_eq!(mdp.num_states, 33);
    assert!(effhorizon::bounds::goal_states(&mdp).is_ok());
}

#[test]
fn grid_optimal_values_match_breadth_first_distances() {
    let n = 5;
    let e = enumerate(&make_empty_grid(n), &EnumerationConfig::new(12)).unwrap();
    let dist = common::grid_goal_distances(n as i32);
    let start = common::Pose { x: 1, y: 1, dir: 0 };
    assert_eq!(dist[&start], 5, "forward, forward, turn right, forward, forward");
    let qstar = dp::optimal_q(&e.mdp);
    for t in 0..12 {
        for &s in qstar.reach().level(t) {
            if s >= e.num_blob_states() {
                continue;
            }
            let b = &e.blobs[s];
            let pose = common::Pose { x: b[0] as i32, y: b[1] as i32, dir: b[2] as i32 };
            let want = if dist[&pose] <= 12 - t { 1.0 } else { 0.0 };
            assert_eq!(qstar.max(t, s), Some(want), "t={t} {pose:?}");
        }
    }
}

#[test]
fn needle_tree_has_seven_decision_states() {
    let needle = make_needle_chain(3, 2, &[1, 1, 1]).unwrap();
    let e = enumerate(&TreeSim::new(needle), &EnumerationConfig::new(3)).unwrap();
    assert_eq!(e.num_blob_states(), 7);
    assert_eq!(e.depths[..7], [0, 1, 1, 2, 2, 2, 2]);
    // the rewarded leaf terminates; the other leaves reach the horizon
    assert!(e.terminal_sink.is_some() && e.frontier_sink.is_some());
    assert_eq!(e.mdp.num_states, 9);
}

#[test]
fn zero_horizon_is_a_single_state() {
    let e = enumerate(&make_empty_grid(5), &EnumerationConfig::new(0)).unwrap();
    assert_eq!(e.mdp.num_states, 1);
    assert_eq!(e.blobs, vec![vec![1, 1, 0]]);
}

#[test]
fn worker_count_does_not_change_the_result() {
    let sim = TreeSim::new(builtin::resolve("distractor_T5_A3").unwrap());
    let mut one = EnumerationConfig::new(5);
    one.worker_count = 1;
    let mut four = one.clone();
    four.worker_count = 4;
    let a = enumerate(&sim, &one).unwrap();
    let b = enumerate(&sim, &four).unwrap();
    assert_eq!(a.mdp, b.mdp);
    assert_eq!(a.blobs, b.blobs);
}

#[test]
fn cap_is_enforced() {
    let mut cfg = EnumerationConfig::new(100);
    cfg.max_states = 10;
    assert!(matches!(enumerate(&make_empty_grid(5), &cfg), Err(Error::CapExceeded { limit: 10, .. })));
}

/// Pays a different reward every time it is stepped.
#[derive(Clone)]
struct Flaky(Arc<AtomicUsize>);

impl Simulator for Flaky {
    fn num_actions(&self) -> usize {
        2
    }

    fn initial_state(&self) -> Vec<u8> {
        vec![0]
    }

    fn step(&self, state: &[u8], action: usize) -> Step {
        let k = self.0.fetch_add(1, Ordering::SeqCst);
        Step { next: vec![state[0].saturating_add(action as u8)], reward: k as f64, terminal: false }
    }
}

#[test]
fn nondeterminism_is_detected() {
    let mut cfg = EnumerationConfig::new(4);
    cfg.verify_fraction = 1.0;
    assert!(matches!(enumerate(&Flaky(Arc::default()), &cfg), Err(Error::Nondeterministic { .. })));
}

#[test]
fn needle_tree_consolidates_to_the_bisimulation_quotient() {
    for (t, a) in [(3, 2), (3, 3), (4, 2)] {
        let needle = make_needle_chain(t, a, &vec![a - 1; t]).unwrap();
        let e = enumerate(&TreeSim::new(needle.clone()), &EnumerationConfig::new(t)).unwrap();
        let uniform = vec![Vec::new(); e.mdp.num_states];
        let (quotient, map) = consolidate(&e.mdp, &uniform);
        assert_eq!(quotient.num_states, common::bisimulation_class_count(&e.mdp, &uniform), "T={t} A={a}");
        assert_eq!(map.len(), e.mdp.num_states);
        assert_eq!(dp::optimal_return(&quotient), 1.0);
    }
    // T=3, A=2: three on-path decision states, one dead class, the terminal and the frontier sink
    let needle = make_needle_chain(3, 2, &[1, 1, 1]).unwrap();
    let e = enumerate(&TreeSim::new(needle), &EnumerationConfig::new(3)).unwrap();
    let (quotient, _) = consolidate(&e.mdp, &vec![Vec::new(); e.mdp.num_states]);
    assert_eq!(quotient.num_states, common::bisimulation_class_count(&e.mdp, &vec![Vec::new(); 9]));
}

#[test]
fn minimal_mdp_maps_to_itself() {
    let mdp = builtin::resolve("dense_chain_T6_A3").unwrap();
    let keys: Vec<Vec<u8>> = (0..mdp.num_states).map(|s| vec![s as u8]).collect();
    let (quotient, map) = consolidate(&mdp, &keys);
    assert_eq!(map, (0..mdp.num_states).collect::<Vec<_>>());
    assert_eq!(quotient, mdp);
}

#[test]
fn twin_states_merge() {
    let mut mdp = TabularMdp::empty(4, 2, 3, 0);
    mdp.set(0, 0, 1, 0.0);
    mdp.set(0, 1, 2, 0.0);
    mdp.set(1, 0, 3, 1.0);
    mdp.set(2, 0, 3, 1.0);
    mdp.make_terminal(3);
    let (quotient, map) = consolidate(&mdp, &vec![Vec::new(); 4]);
    assert_eq!(quotient.num_states, 3);
    assert_eq!(map[1], map[2]);
}

fn values_preserved(original: &TabularMdp, quotient: &TabularMdp) {
    assert!((dp::optimal_return(original) - dp::optimal_return(quotient)).abs() < 1e-10);
    let a_n = original.num_actions;
    let q0 = dp::policy_q(original, &Policy::uniform(a_n)).unwrap();
    let q1 = dp::policy_q(quotient, &Policy::uniform(a_n)).unwrap();
    let r0 = q0.get(0, original.start_state).unwrap();
    let r1 = q1.get(0, quotient.start_state).unwrap();
    for a in 0..a_n {
        assert!((r0[a] - r1[a]).abs() < 1e-10);
    }
}

#[test]
fn consolidation_preserves_values_on_builtins() {
    for family in FAMILIES.iter().filter(|f| **f != "empty_grid") {
        let mdp = builtin::resolve(&format!("{family}_T6")).unwrap();
        let tree = enumerate_consolidated(&TreeSim::new(mdp.clone()), &EnumerationConfig::new(6)).unwrap();
        values_preserved(&mdp, &tree);
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn random_trees_consolidate_soundly(seed in any::<u64>(), s in 1usize..5, a in 2usize..4, t in 1usize..6) {
        let mdp = common::random_mdp(&mut common::rng(seed), s, a, t, false);
        let e = enumerate(&TreeSim::new(mdp.clone()), &EnumerationConfig::new(t)).unwrap();
        let (quotient, map) = consolidate(&e.mdp, &e.keys);
        values_preserved(&mdp, &quotient);
        values_preserved(&e.mdp, &quotient);
        prop_assert!(quotient.num_states <= e.mdp.num_states);
        // merged states really are interchangeable
        for i in 0..e.mdp.num_states {
            for act in 0..a {
                let j = map[i];
                prop_assert_eq!(quotient.next(j, act), map[e.mdp.next(i, act)]);
                prop_assert_eq!(quotient.reward(j, act), e.mdp.reward(i, act));
            }
        }
        if e.mdp.num_states <= 40 {
            prop_assert_eq!(quotient.num_states, common::bisimulation_class_count(&e.mdp, &e.keys));
        }
    }
}
