mod common;

use effhorizon::builtin::{self, FAMILIES};
use effhorizon::dp;
use effhorizon::envgen::{
    lowerbound_hidden_sequence, make_adversarial_kt, make_delayed_chain, make_dense_chain, make_distractor,
    make_lowerbound_periodic, make_needle_chain,
};
use effhorizon::mdp::validate;
use effhorizon::{Policy, TabularMdp};

fn chains(t: usize, a: usize) -> Vec<(&'static str, TabularMdp)> {
    let mut out = vec![
        ("needle", make_needle_chain(t, a, &vec![a - 1; t]).unwrap()),
        ("dense", make_dense_chain(t, a).unwrap()),
        ("delayed", make_delayed_chain(t, a).unwrap()),
        ("lowerbound", make_lowerbound_periodic(t, a, 1 + t / 3, 7).unwrap()),
    ];
    if t >= 2 {
        out.push(("adversarial", make_adversarial_kt(t, a).unwrap()));
        out.push(("distractor", make_distractor(t, a).unwrap()));
    }
    out
}

#[test]
fn every_generator_output_validates() {
    for t in 1..=8 {
        for a in 2..=3 {
            for (name, mdp) in chains(t, a) {
                assert!(validate(&mdp).is_empty(), "{name} T={t} A={a}: {:?}", validate(&mdp));
            }
        }
    }
    for family in FAMILIES {
        assert!(validate(&builtin::resolve(family).unwrap()).is_empty(), "{family}");
    }
}

#[test]
fn needle_t3_matches_brute_force() {
    let mdp = make_needle_chain(3, 2, &[0, 0, 0]).unwrap();
    assert_eq!(common::brute_optimal_return(&mdp), 1.0);
    let returns = common::trajectory_returns(&mdp);
    let random_start_value = returns.iter().map(|(_, g)| g).sum::<f64>() / returns.len() as f64;
    assert_eq!(random_start_value, 1.0 / 8.0);
    assert_eq!(dp::optimal_return(&mdp), 1.0);
    let q = dp::policy_q(&mdp, &Policy::uniform(2)).unwrap();
    let v: f64 = q.get(0, 0).unwrap().iter().sum::<f64>() / 2.0;
    assert_eq!(v, 1.0 / 8.0);
}

#[test]
fn single_step_needle() {
    let mdp = make_needle_chain(1, 2, &[1]).unwrap();
    assert_eq!(mdp.num_states, 3);
    assert_eq!(dp::optimal_return(&mdp), 1.0);
}

#[test]
fn needle_pays_only_on_its_target() {
    for (t, a) in [(3, 2), (4, 3), (6, 4), (12, 2)] {
        let target: Vec<usize> = (0..t).map(|i| (i * 7 + 1) % a).collect();
        let mdp = make_needle_chain(t, a, &target).unwrap();
        for (seq, g) in common::trajectory_returns(&mdp) {
            assert_eq!(g, if seq == target { 1.0 } else { 0.0 });
        }
    }
}

#[test]
fn needle_is_one_qvi_solvable() {
    for (t, a) in [(3, 2), (6, 3), (10, 2)] {
        let mdp = make_needle_chain(t, a, &vec![a - 1; t]).unwrap();
        assert_eq!(dp::min_k_qvi(&mdp, &Policy::uniform(a), t).unwrap(), Some(1));
    }
}

#[test]
fn dense_chain_examples() {
    let mdp = make_dense_chain(5, 2).unwrap();
    assert_eq!(dp::optimal_return(&mdp), 5.0);
    assert_eq!(dp::epw(&mdp), 1);
    let small = make_dense_chain(2, 2).unwrap();
    assert_eq!(common::brute_random_q_start(&small, 1), 1.5);
    let q = dp::policy_q(&small, &Policy::uniform(2)).unwrap();
    assert_eq!(q.value(0, 0, 1), Some(1.5));
}

#[test]
fn delayed_chain_examples() {
    for t in [3, 5, 8] {
        let mdp = make_delayed_chain(t, 2).unwrap();
        assert_eq!(dp::epw(&mdp), t);
        assert_eq!(dp::optimal_return(&mdp), t as f64);
    }
    // same random-policy Q at the start as the dense chain
    let delayed = make_delayed_chain(3, 2).unwrap();
    let dense = make_dense_chain(3, 2).unwrap();
    for a in 0..2 {
        assert_eq!(common::brute_random_q_start(&delayed, a), common::brute_random_q_start(&dense, a));
    }
    // every trajectory earns what it earns on the dense chain, just later
    for t in 1..=6 {
        for a in 2..=3 {
            let delayed = make_delayed_chain(t, a).unwrap();
            let dense = make_dense_chain(t, a).unwrap();
            for (seq, g) in common::trajectory_returns(&delayed) {
                assert_eq!(g, common::raw_return(&dense, 0, &seq), "T={t} A={a} {seq:?}");
            }
        }
    }
}

#[test]
fn delayed_chain_state_count() {
    for t in 1..=10 {
        let mdp = make_delayed_chain(t, 2).unwrap();
        let counters = (t.saturating_sub(1)) * t.saturating_sub(2) / 2;
        assert_eq!(mdp.num_states, t + 2 + counters);
    }
}

#[test]
fn adversarial_examples() {
    let mdp = make_adversarial_kt(4, 2).unwrap();
    let expl = Policy::uniform(2);
    assert_eq!(dp::min_k_qvi(&mdp, &expl, 4).unwrap(), Some(4));
    assert_eq!(common::brute_optimal_return(&mdp), 1.0);
    // greedy on the random-policy Q exits with 3/4
    let q1 = dp::q_k(&mdp, &expl, 1).unwrap();
    let greedy = dp::argmax_first(q1.get(0, 0).unwrap());
    let mut actions = vec![greedy];
    actions.extend(std::iter::repeat_n(1, 3));
    assert_eq!(mdp.rollout_return(&actions), 0.75);
    // Q^i_1(s₁, needle action) = A^{−(T−i)} for i < T
    for i in 1..4 {
        let qi = dp::q_k(&mdp, &expl, i).unwrap();
        assert_eq!(qi.value(0, 0, 1), Some(2f64.powi(-(4 - i as i32))), "i={i}");
    }
}

#[test]
fn lowerbound_examples() {
    for (t, a, h) in [(8, 2, 2), (12, 2, 3), (9, 3, 3), (7, 2, 7)] {
        let mdp = make_lowerbound_periodic(t, a, h, 11).unwrap();
        assert_eq!(common::brute_optimal_return(&mdp), (t / h) as f64);
        let hidden = lowerbound_hidden_sequence(t, a, 11);
        assert_eq!(mdp.rollout_return(&hidden), (t / h) as f64);
    }
    // H = T is a needle on the hidden sequence
    let mdp = make_lowerbound_periodic(5, 3, 5, 4).unwrap();
    let needle = make_needle_chain(5, 3, &lowerbound_hidden_sequence(5, 3, 4)).unwrap();
    assert_eq!(mdp, needle);
}

#[test]
fn distractor_examples() {
    for t in 2..=6 {
        let mdp = make_distractor(t, 2).unwrap();
        let expl = Policy::uniform(2);
        assert_eq!(dp::min_k_qvi(&mdp, &expl, t).unwrap(), Some(1));
        assert_eq!(dp::epw(&mdp), 1);
        assert_eq!(dp::optimal_return(&mdp), t as f64);
        assert_eq!(mdp.rollout_return(&vec![1; t]), (t - 1) as f64);
    }
    let mdp = make_distractor(2, 2).unwrap();
    let q = dp::policy_q(&mdp, &Policy::uniform(2)).unwrap();
    for a in 0..2 {
        assert_eq!(q.value(0, 0, a), Some(common::brute_random_q_start(&mdp, a)));
    }
    // left: 1 + (1 + 0)/2 = 1.5; right: (1 + 0)/2 = 0.5
    assert_eq!(q.get(0, 0).unwrap(), &[1.5, 0.5]);
}

#[test]
fn chain_families_stay_small() {
    // delayed is excluded: its counter states grow quadratically in T
    for t in 1..=10 {
        for a in 2..=3 {
            for (name, mdp) in chains(t, a) {
                if name != "delayed" {
                    assert!(mdp.num_states <= 2 * t * a + 2, "{name} T={t} A={a}: {}", mdp.num_states);
                }
            }
        }
    }
}

#[test]
fn generator_errors() {
    assert!(make_needle_chain(3, 2, &[0, 0]).is_err());
    assert!(make_needle_chain(3, 2, &[0, 2, 0]).is_err());
    assert!(make_adversarial_kt(1, 2).is_err());
    assert!(make_lowerbound_periodic(3, 2, 4, 0).is_err());
    assert!(make_distractor(1, 2).is_err());
    assert!(builtin::resolve("nope").is_err());
    assert!(builtin::resolve("dense_chain_X3").is_err());
}

#[test]
fn builtin_names_parse_parameters() {
    let spec = builtin::parse("lowerbound_T12_A3_H4").unwrap();
    assert_eq!((spec.family, spec.horizon, spec.num_actions, spec.period), ("lowerbound", 12, 3, 4));
    let mdp = builtin::resolve("dense_chain_T7_A4").unwrap();
    assert_eq!((mdp.horizon, mdp.num_actions), (7, 4));
}
