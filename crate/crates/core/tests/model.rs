use proptest::prelude::*;
use scheme_lab::analytic::fgm_performance;
use scheme_lab::model::{
    agent_period1_decision, evaluate_scheme, iid_performance_value, performance_iid,
    period1_threshold_iid, upper_bound,
};
use scheme_lab::{Budget, CostKernel, FgmParameter, GridDensity, RewardRule};

/// Feasible rule from unit-interval fractions.
fn rule_from(w: f64, fz: f64, fx: f64, fy: f64) -> RewardRule {
    let z = w * fz;
    let x = (w - z) * fx;
    RewardRule::new(x, w * fy, z, Budget::new(w).unwrap()).unwrap()
}

fn kernels() -> Vec<CostKernel> {
    let grid =
        GridDensity::from_density_fn(24, |a, b| 1.0 + 0.6 * (1.0 - 2.0 * a) * (1.0 - 2.0 * b))
            .unwrap();
    vec![
        CostKernel::Iid,
        CostKernel::fgm(-1.0).unwrap(),
        CostKernel::fgm(0.5).unwrap(),
        CostKernel::purely_sufficient(0.35).unwrap(),
        CostKernel::purely_sufficient(0.5).unwrap(),
        CostKernel::purely_sustained(0.6).unwrap(),
        CostKernel::purely_sustained(1.0).unwrap(),
        CostKernel::Grid(grid),
    ]
}

#[test]
fn worked_examples() {
    let w = Budget::new(0.8).unwrap();
    let e = evaluate_scheme(
        &CostKernel::Iid,
        &RewardRule::new(0.0, 0.0, 0.8, w).unwrap(),
    )
    .unwrap();
    // Threshold w²/2 and performance c(1 + w).
    assert!((e.performance - 0.32 * 1.8).abs() < 1e-9);
    assert_eq!(upper_bound(Budget::new(1.2).unwrap()), 2.0);
}

#[test]
fn trivial_budget_performs_twice() {
    let r = RewardRule::new(0.0, 0.0, 1.5, Budget::new(1.5).unwrap()).unwrap();
    assert_eq!(
        evaluate_scheme(&CostKernel::Iid, &r).unwrap().performance,
        2.0
    );
    assert_eq!(performance_iid(&r).performance, 2.0);
}

#[test]
fn zero_budget_is_zero() {
    let r = RewardRule::new(0.0, 0.0, 0.0, Budget::new(0.0).unwrap()).unwrap();
    for k in kernels() {
        let e = evaluate_scheme(&k, &r).unwrap();
        assert_eq!(e.performance, 0.0);
        assert!(e.participation_set.is_empty());
    }
}

#[test]
fn infeasible_rules_rejected() {
    let w = Budget::new(0.5).unwrap();
    assert!(RewardRule::new(0.3, 0.2, 0.3, w).is_err());
    assert!(RewardRule::new(0.1, 0.6, 0.1, w).is_err());
    assert!(RewardRule::new(-0.1, 0.2, 0.1, w).is_err());
    assert!(Budget::new(-1.0).is_err());
    assert!(Budget::new(f64::NAN).is_err());
}

#[test]
fn quadrature_matches_iid_closed_form() {
    // 100 rules from a fixed low-discrepancy sequence.
    let mut worst: f64 = 0.0;
    for i in 0..100 {
        let t = i as f64;
        let frac = |a: f64| (0.5 + t * a).fract();
        let r = rule_from(
            0.02 + 1.55 * frac(0.618_033_988_7),
            frac(0.754_877_666),
            frac(0.569_840_29),
            frac(0.438_156_5),
        );
        let q = evaluate_scheme(&CostKernel::Iid, &r).unwrap().performance;
        worst = worst.max((q - performance_iid(&r).performance).abs());
    }
    assert!(worst <= 1e-6, "max deviation {worst}");
}

#[test]
fn quadrature_matches_fgm_closed_form() {
    for &theta in &[-1.0, -0.4, 0.3, 1.0] {
        let k = CostKernel::fgm(theta).unwrap();
        let th = FgmParameter::new(theta).unwrap();
        for &w in &[0.2, 0.6, 0.95, 1.3] {
            for &(fz, fx, fy) in &[
                (0.0, 1.0, 1.0),
                (1.0, 0.0, 0.0),
                (0.3, 0.8, 0.9),
                (0.6, 0.5, 0.2),
            ] {
                let r = rule_from(w, fz, fx, fy);
                let q = evaluate_scheme(&k, &r).unwrap();
                let c = fgm_performance(&r, th);
                assert!(
                    (q.performance - c.performance).abs() < 1e-7,
                    "{theta} {w} {q:?} {c:?}"
                );
                assert!((q.period1_mass - c.period1_mass).abs() < 1e-9);
            }
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn performance_within_upper_bound(w in 0.0..1.6f64, fz in 0.0..=1.0f64, fx in 0.0..=1.0f64, fy in 0.0..=1.0f64) {
        let r = rule_from(w, fz, fx, fy);
        let cap = upper_bound(r.budget());
        for k in kernels() {
            let e = evaluate_scheme(&k, &r).unwrap();
            prop_assert!(e.performance >= -1e-12);
            prop_assert!(e.performance <= cap + 1e-6, "{} {:?} {}", k.description(), r, e.performance);
        }
    }

    #[test]
    fn no_second_reward_caps_performance(w in 0.0..1.6f64, fx in 0.0..=1.0f64, fy in 0.0..=1.0f64) {
        let r = rule_from(w, 0.0, fx, fy);
        for k in kernels() {
            prop_assert!(evaluate_scheme(&k, &r).unwrap().performance <= 1.0 + 1e-6);
        }
    }

    #[test]
    fn spending_the_slack_on_z_never_hurts(w in 0.0..1.6f64, fz in 0.0..=1.0f64, fx in 0.0..=1.0f64, fy in 0.0..=1.0f64) {
        let r = rule_from(w, fz, fx, fy);
        let before = iid_performance_value(r.x(), r.y(), r.z());
        let after = iid_performance_value(r.x(), r.y(), w - r.x());
        prop_assert!(after >= before - 1e-9);
    }

    #[test]
    fn period1_decision_is_a_threshold(w in 0.0..1.6f64, fz in 0.0..=1.0f64, fx in 0.0..=1.0f64, fy in 0.0..=1.0f64, c in 0.0..=1.0f64, c2 in 0.0..=1.0f64) {
        let r = rule_from(w, fz, fx, fy);
        let (lo, hi) = if c <= c2 { (c, c2) } else { (c2, c) };
        if agent_period1_decision(&CostKernel::Iid, &r, hi).unwrap() {
            prop_assert!(agent_period1_decision(&CostKernel::Iid, &r, lo).unwrap());
        }
        let t = period1_threshold_iid(&r);
        if (c - t).abs() > 1e-9 {
            prop_assert_eq!(agent_period1_decision(&CostKernel::Iid, &r, c).unwrap(), c <= t);
        }
    }
}
