use effhorizon::bounds::{
    bound_report, covering_length_bounds, epw_bound, goal_mdp_bound, gorp_bound, theorem4_bound, ucb_bound,
    worst_case_bound, Count, CoveringVariant, ReportOptions,
};
use effhorizon::builtin::{self, FAMILIES};
use effhorizon::envgen::{make_dense_chain, make_needle_chain};
use effhorizon::{dp, tightbound, Error, Policy, TabularMdp};

fn close(a: f64, b: f64, tol: f64) -> bool {
    (a - b).abs() <= tol
}

#[test]
fn worst_case_examples() {
    assert_eq!(worst_case_bound(2, 1).raw, Some(1));
    assert_eq!(worst_case_bound(2, 10).raw, Some(5120));
    let big = worst_case_bound(3, 50);
    assert_eq!(big.raw, None);
    // 50 · ⌈3^50 / 2⌉ ≈ 1.79e25
    assert!(close(big.log10, (50.0f64 * 3f64.powi(50) / 2.0).log10(), 1e-12));
    assert!(close(10f64.powf(big.log10) / 1.79e25, 1.0, 0.01));
}

#[test]
fn gorp_bound_examples() {
    assert_eq!(gorp_bound(10, 2, 3.0).raw, Some(800));
    assert_eq!(gorp_bound(7, 3, 0.0).raw, Some(49));
    let grid = gorp_bound(100, 3, 1.64);
    assert!(close(10f64.powf(grid.log10), 1e4 * 3f64.powf(1.64), 1e-6));
    assert!(close(10f64.powf(grid.log10) / 6.1e4, 1.0, 0.01));
}

#[test]
fn ucb_examples() {
    let mdp = TabularMdp::empty(8, 2, 3, 0);
    assert_eq!(ucb_bound(&mdp).raw, Some(48));
}

#[test]
fn covering_length_examples() {
    let bandit = TabularMdp::empty(1, 2, 1, 0);
    let c = covering_length_bounds(&bandit, &Policy::uniform(2), CoveringVariant::Sa).unwrap();
    assert_eq!(c.l_upper, Some(3.0));
    assert_eq!(c.n.unwrap().raw, Some(3));
    assert!(close(c.l_lower, 2f64.ln(), 1e-15));

    let mdp = make_dense_chain(3, 2).unwrap();
    let pi = Policy::Deterministic { horizon: 3, num_states: mdp.num_states, num_actions: 2, actions: vec![1; 3 * mdp.num_states] };
    let c = covering_length_bounds(&mdp, &pi, CoveringVariant::Sa).unwrap();
    assert_eq!(c.l_upper, None);
    assert!(c.n.is_none());

    let c = covering_length_bounds(&mdp, &Policy::uniform(2), CoveringVariant::Sa).unwrap();
    assert!(c.l_lower.is_finite() && c.l_lower <= c.l_upper.unwrap());
    let with_t = covering_length_bounds(&mdp, &Policy::uniform(2), CoveringVariant::Sat).unwrap();
    assert!(with_t.l_upper.unwrap() >= c.l_upper.unwrap());
}

#[test]
fn covering_bounds_are_ordered_on_builtins() {
    for family in FAMILIES {
        let mdp = builtin::resolve(family).unwrap();
        let c = covering_length_bounds(&mdp, &Policy::uniform(mdp.num_actions), CoveringVariant::Sa).unwrap();
        if let Some(upper) = c.l_upper {
            assert!(c.l_lower <= upper, "{family}");
        }
    }
}

#[test]
fn epw_bound_examples() {
    assert_eq!(epw_bound(&make_dense_chain(50, 2).unwrap()).n.raw, Some(5000));
    assert_eq!(epw_bound(&make_needle_chain(3, 2, &[1, 1, 1]).unwrap()).n.raw, Some(72));
    let delayed = builtin::resolve("delayed_chain_T50").unwrap();
    let b = epw_bound(&delayed);
    assert_eq!(b.w, 50);
    assert!(close(b.n.log10, 2.0 * 50f64.log10() + 50.0 * 2f64.log10(), 1e-9));
}

/// `k + log_A ⌈6 ln(2TA^k) · ratio⌉`, computed directly.
fn thm4_h(t: usize, a: usize, k: usize, ratio: f64) -> f64 {
    let af = a as f64;
    let m = (6.0 * (2.0 * t as f64 * af.powi(k as i32)).ln() * ratio).ceil();
    k as f64 + m.ln() / af.ln()
}

#[test]
fn theorem4_needle() {
    for (t, a) in [(10, 2), (20, 2), (8, 4)] {
        let mdp = make_needle_chain(t, a, &vec![a - 1; t]).unwrap();
        let b = theorem4_bound(&mdp, &Policy::uniform(a), 1).unwrap();
        // worst node is the start: Q = Δ = A^{−(T−1)}, V* = 1
        let want = thm4_h(t, a, 1, (a as f64).powi(t as i32 - 1));
        assert!(close(b.h, want, 1e-9), "T={t} A={a}: {} vs {want}", b.h);
        assert!(b.h >= (t - 1) as f64);
    }
}

#[test]
fn theorem4_dense() {
    let mdp = make_dense_chain(50, 2).unwrap();
    let b = theorem4_bound(&mdp, &Policy::uniform(2), 1).unwrap();
    assert!(b.h <= 1.0 + (50.0f64 * 2.0).log2() + (6.0 * 200f64.ln()).log2());
    assert!(b.h <= 11.0);
}

#[test]
fn theorem4_errors() {
    let adv = builtin::resolve("adversarial_T4").unwrap();
    assert!(matches!(theorem4_bound(&adv, &Policy::uniform(2), 1), Err(Error::NotSolvable { k: 1 })));
    let mut neg = make_dense_chain(3, 2).unwrap();
    neg.rewards[0] = -1.0;
    assert!(matches!(theorem4_bound(&neg, &Policy::uniform(2), 1), Err(Error::NegativeReward { .. })));
}

#[test]
fn theorem4_without_gaps_uses_one_rollout() {
    let mut flat = TabularMdp::empty(1, 2, 3, 0);
    flat.set(0, 0, 0, 1.0);
    flat.set(0, 1, 0, 1.0);
    let b = theorem4_bound(&flat, &Policy::uniform(2), 1).unwrap();
    assert_eq!(b.m, Some(1.0));
    assert_eq!(b.h, 1.0);
}

#[test]
fn goal_bound_examples() {
    let grid = builtin::resolve("empty_grid").unwrap();
    let g = goal_mdp_bound(&grid, &Policy::uniform(3)).unwrap();
    assert!(close(g.p, 3f64.powi(-6), 1e-15));
    assert!(close(g.h, 8.52, 0.3));

    for (t, a) in [(5, 2), (6, 3)] {
        let mdp = make_needle_chain(t, a, &vec![0; t]).unwrap();
        let g = goal_mdp_bound(&mdp, &Policy::uniform(a)).unwrap();
        assert!(close(g.p, (a as f64).powi(-(t as i32 - 1)), 1e-15));
        let af = a as f64;
        assert!(close(g.h, t as f64 + (2.0 * t as f64).ln().ln() / af.ln(), 1e-9));
    }

    let mut half = make_needle_chain(3, 2, &[0, 0, 0]).unwrap();
    half.rewards[2 * 2] = 0.5;
    assert!(matches!(goal_mdp_bound(&half, &Policy::uniform(2)), Err(Error::NotGoalMdp(_))));
    assert!(goal_mdp_bound(&make_dense_chain(3, 2).unwrap(), &Policy::uniform(2)).is_err());
}

#[test]
fn count_keeps_raw_values_below_two_to_the_63() {
    assert_eq!(Count::from_u128(1 << 62).raw, Some(1 << 62));
    assert_eq!(Count::from_u128(1 << 63).raw, None);
    assert_eq!(Count::from_log10(3.0).raw, Some(1000));
    assert_eq!(Count::from_log10(30.0).raw, None);
}

#[test]
fn tight_never_exceeds_theorem4_on_builtins() {
    for family in FAMILIES {
        let mdp = builtin::resolve(family).unwrap();
        let expl = Policy::uniform(mdp.num_actions);
        let Some(k) = dp::min_k_qvi(&mdp, &expl, mdp.horizon).unwrap() else { continue };
        let Ok(thm4) = theorem4_bound(&mdp, &expl, k) else { continue };
        let tight = tightbound::tight_effective_horizon(&mdp, &expl, k..=k, &Default::default()).unwrap().unwrap();
        assert!(tight.h <= thm4.h + 1e-9, "{family}: {} > {}", tight.h, thm4.h);
    }
}

#[test]
fn worst_case_dominates_short_effective_horizons() {
    for family in FAMILIES {
        let mdp = builtin::resolve(family).unwrap();
        let (t, a) = (mdp.horizon, mdp.num_actions);
        let expl = Policy::uniform(a);
        let Some(r) = tightbound::tight_effective_horizon(&mdp, &expl, 1..=2, &Default::default()).unwrap() else { continue };
        if r.h <= t as f64 - 2.0 * (t as f64).ln() / (a as f64).ln() {
            assert!(worst_case_bound(a, t).log10 >= r.n.log10, "{family}");
        }
    }
}

#[test]
fn report_covers_every_bound() {
    let mdp = builtin::resolve("empty_grid").unwrap();
    let r = bound_report("empty_grid", &mdp, &Policy::uniform(3), &ReportOptions::default()).unwrap();
    assert!(r.thm4_bound.is_some() && r.tight_bound.is_some() && r.goal_bound.is_some());
    assert!(r.covering_length_tl.is_some());
    assert_eq!(r.meta.min_k, Some(1));
    assert_eq!(r.ucb.raw, Some(33 * 3 * 100));
    let json = serde_json::to_value(&r).unwrap();
    assert!(json["tight_bound"]["log10"].as_f64().unwrap() >= 0.0);
    for c in [r.worst_case, r.ucb, r.epw_bound] {
        assert!(c.log10.is_finite() && c.log10 >= 0.0);
    }
}
