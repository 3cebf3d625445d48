use scheme_lab::analytic::{fgm_sufficient_performance, optimal_rule_iid};
use scheme_lab::montecarlo::{compare_to_analytic, compare_to_analytic_with, simulate};
use scheme_lab::{Budget, CostKernel, FgmParameter, RewardRule};

fn rule(x: f64, y: f64, z: f64, w: f64) -> RewardRule {
    RewardRule::new(x, y, z, Budget::new(w).unwrap()).unwrap()
}

#[test]
fn sustained_example() {
    let k = CostKernel::purely_sustained(0.9).unwrap();
    let r = simulate(&k, &rule(0.0, 0.0, 0.9, 0.9), 1_000_000, 7).unwrap();
    assert!((r.estimate - 1.8).abs() <= 3.0 * r.stderr, "{r:?}");
    assert_eq!(r.counts.period1_only + r.counts.period2_only, 0);
}

#[test]
fn iid_example() {
    let r = simulate(&CostKernel::Iid, &rule(0.4, 0.4, 0.0, 0.4), 1_000_000, 8).unwrap();
    assert!((r.estimate - 0.592).abs() <= 3.0 * r.stderr, "{r:?}");
    assert_eq!(r.counts.total(), 1_000_000);
}

#[test]
fn fgm_sufficient_comparison() {
    let cmp =
        compare_to_analytic(&CostKernel::fgm(-1.0).unwrap(), &rule(0.5, 0.5, 0.0, 0.5)).unwrap();
    let closed = fgm_sufficient_performance(0.5, FgmParameter::new(-1.0).unwrap()).unwrap();
    assert!((cmp.analytic - closed.performance).abs() < 1e-9);
    assert!(cmp.z_score.abs() <= 3.0, "{cmp:?}");
}

#[test]
fn sufficient_kernel_comparison() {
    let cmp = compare_to_analytic(
        &CostKernel::purely_sufficient(0.4).unwrap(),
        &rule(0.4, 0.4, 0.0, 0.4),
    )
    .unwrap();
    assert!((cmp.analytic - 0.8).abs() < 1e-6);
    assert!(cmp.z_score.abs() <= 3.0, "{cmp:?}");
}

#[test]
fn dual_optimum_comparison() {
    let opt = optimal_rule_iid(Budget::new(1.0).unwrap()).unwrap();
    for r in &opt.rules {
        let cmp = compare_to_analytic(&CostKernel::Iid, r).unwrap();
        assert!((cmp.analytic - 29.0 / 27.0).abs() < 1e-7);
        assert!(cmp.z_score.abs() <= 3.0, "{cmp:?}");
    }
}

#[test]
fn regression_grid_z_scores() {
    let kernels = [
        CostKernel::Iid,
        CostKernel::fgm(-1.0).unwrap(),
        CostKernel::fgm(0.6).unwrap(),
        CostKernel::purely_sufficient(0.3).unwrap(),
        CostKernel::purely_sustained(0.7).unwrap(),
    ];
    let rules = [
        rule(0.5, 0.5, 0.0, 0.5),
        rule(0.0, 0.0, 0.7, 0.7),
        rule(0.6, 0.9, 0.3, 0.9),
        rule(0.2, 0.15, 0.1, 0.3),
        rule(0.0, 0.2, 1.2, 1.2),
    ];
    let mut seed = 40;
    for k in &kernels {
        for r in &rules {
            seed += 1;
            let cmp = compare_to_analytic_with(k, r, 200_000, seed).unwrap();
            assert!(
                cmp.z_score.abs() <= 4.0,
                "{} {r:?}: {cmp:?}",
                k.description()
            );
        }
    }
}

#[test]
fn thread_count_does_not_change_result() {
    let k = CostKernel::fgm(0.3).unwrap();
    let r = rule(0.3, 0.6, 0.3, 0.6);
    let one = rayon::ThreadPoolBuilder::new()
        .num_threads(1)
        .build()
        .unwrap();
    let four = rayon::ThreadPoolBuilder::new()
        .num_threads(4)
        .build()
        .unwrap();
    let a = one.install(|| simulate(&k, &r, 100_003, 17)).unwrap();
    let b = four.install(|| simulate(&k, &r, 100_003, 17)).unwrap();
    assert_eq!(a, b);
}

#[test]
fn report_carries_dependence_summary() {
    let k = CostKernel::fgm(1.0).unwrap();
    let r = simulate(&k, &rule(0.2, 0.2, 0.0, 0.2), 20_000, 3)
        .unwrap()
        .with_dependence(&k)
        .unwrap();
    let d = r.dependence.unwrap();
    assert_eq!((d.n, d.seed), (20_000, 3));
    assert!((d.spearman - 1.0 / 3.0).abs() < 0.03);
}
