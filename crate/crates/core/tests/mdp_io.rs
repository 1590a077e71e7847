mod common;

use effhorizon::builtin::{self, FAMILIES};
use effhorizon::io::{from_bytes, load, save, save_json, to_bytes, to_json};
use effhorizon::mdp::{apply_shaping, validate, ShapingPotential, ViolationKind};
use effhorizon::{Error, Policy, TabularMdp};
use proptest::prelude::*;

fn two_state() -> TabularMdp {
    let mut mdp = TabularMdp::empty(2, 2, 3, 0);
    mdp.set(0, 0, 1, 1.0);
    mdp.set(0, 1, 0, 0.5);
    mdp.make_terminal(1);
    mdp
}

#[test]
fn well_formed_mdp_has_no_violations() {
    assert!(validate(&two_state()).is_empty());
}

#[test]
fn out_of_range_transition_is_reported_once() {
    let mut mdp = two_state();
    mdp.transitions[1] = 2;
    let v = validate(&mdp);
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].kind, ViolationKind::TransitionOutOfRange);
    assert_eq!((v[0].state, v[0].action), (Some(0), Some(1)));
}

#[test]
fn terminal_with_reward_breaks_the_contract() {
    let mut mdp = two_state();
    mdp.rewards[2 + 1] = 0.5;
    let v = validate(&mdp);
    assert_eq!(v.len(), 1);
    assert_eq!(v[0].kind, ViolationKind::TerminalReward);
}

#[test]
fn zero_potential_leaves_rewards_unchanged() {
    let mdp = two_state();
    let shaped = apply_shaping(&mdp, &ShapingPotential { phi: vec![0.0; 2] });
    assert_eq!(shaped.rewards, mdp.rewards);
}

#[test]
fn constant_potential_cancels_without_discount() {
    let mdp = builtin::resolve("dense_chain_T5").unwrap();
    let shaped = apply_shaping(&mdp, &ShapingPotential { phi: vec![3.25; mdp.num_states] });
    assert_eq!(shaped.rewards, mdp.rewards);
}

#[test]
fn distance_potential_shifts_by_one_per_step() {
    // states 0, 1, 2 (goal) in a row; action 0 moves right, action 1 moves left
    let mut mdp = TabularMdp::empty(3, 2, 4, 0);
    mdp.set(0, 0, 1, 0.0);
    mdp.set(0, 1, 0, 0.0);
    mdp.set(1, 0, 2, 1.0);
    mdp.set(1, 1, 0, 0.0);
    mdp.make_terminal(2);
    let phi = vec![-2.0, -1.0, 0.0];
    let shaped = apply_shaping(&mdp, &ShapingPotential { phi: phi.clone() });
    // hand computed Φ(f(s,a)) − Φ(s)
    assert_eq!(shaped.reward(0, 0), 1.0);
    assert_eq!(shaped.reward(0, 1), 0.0);
    assert_eq!(shaped.reward(1, 0), 2.0);
    assert_eq!(shaped.reward(1, 1), -1.0);
    assert_eq!(shaped.reward(2, 0), 0.0);
}

#[test]
fn every_builtin_round_trips() {
    for family in FAMILIES {
        let mdp = builtin::resolve(family).unwrap();
        assert_eq!(from_bytes(&to_bytes(&mdp)).unwrap(), mdp, "{family}");
        assert_eq!(from_bytes(to_json(&mdp).unwrap().as_bytes()).unwrap(), mdp, "{family} json");
    }
}

#[test]
fn truncated_file_is_a_size_error() {
    let bytes = to_bytes(&two_state());
    for cut in [4, 20, bytes.len() - 1] {
        assert!(matches!(from_bytes(&bytes[..cut]), Err(Error::SizeMismatch(_))), "cut at {cut}");
    }
}

#[test]
fn wrong_magic_is_a_format_error() {
    let mut bytes = to_bytes(&two_state());
    bytes[0] ^= 0xff;
    assert!(matches!(from_bytes(&bytes), Err(Error::BadMagic)));
}

#[test]
fn files_round_trip_on_disk() {
    let dir = std::env::temp_dir().join(format!("effhorizon-io-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let mdp = builtin::resolve("distractor_T4").unwrap();
    save(&mdp, dir.join("m.bin")).unwrap();
    save_json(&mdp, dir.join("m.json")).unwrap();
    assert_eq!(load(dir.join("m.bin")).unwrap(), mdp);
    assert_eq!(load(dir.join("m.json")).unwrap(), mdp);
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn uniform_policy_is_valid_and_sums_to_one() {
    let p = Policy::uniform(3);
    assert!(p.validate().is_empty());
    let total: f64 = (0..3).map(|a| p.prob(0, 0, a)).sum();
    assert!((total - 1.0).abs() < 1e-15);
}

fn arb_mdp() -> impl Strategy<Value = TabularMdp> {
    (1usize..6, 1usize..4, 0usize..6, any::<u64>()).prop_map(|(s, a, t, seed)| {
        let mut rng = common::rng(seed);
        let mut mdp = common::random_mdp(&mut rng, s, a, t, false);
        if s > 1 && seed % 2 == 0 {
            mdp.make_terminal(s - 1);
        }
        mdp
    })
}

proptest! {
    #[test]
    fn random_mdps_validate_and_round_trip(mdp in arb_mdp()) {
        prop_assert!(validate(&mdp).is_empty());
        prop_assert_eq!(&from_bytes(&to_bytes(&mdp)).unwrap(), &mdp);
        prop_assert_eq!(&from_bytes(to_json(&mdp).unwrap().as_bytes()).unwrap(), &mdp);
    }

    #[test]
    fn any_truncation_is_rejected(mdp in arb_mdp(), frac in 0.0f64..1.0) {
        let bytes = to_bytes(&mdp);
        let cut = ((bytes.len() as f64) * frac) as usize;
        prop_assert!(from_bytes(&bytes[..cut]).is_err());
    }
}
