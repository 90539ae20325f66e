use oco_lt::algorithms::{
    doubling_run, run, Aggregation, AlgoConfig, LagrangianKind, RunTrace, Variant,
};
use oco_lt::metrics::{max_violation_after, summarize};
use oco_lt::oracle::{best_fixed, SolveOptions};
use oco_lt::problems::{
    dispatch_problem, doubly_stochastic_problem, synthetic_demand, toy_problem, DispatchParams,
};
use proptest::prelude::*;

fn same_bits(a: &RunTrace, b: &RunTrace) -> bool {
    let bits = |v: &[f64]| v.iter().map(|x| x.to_bits()).collect::<Vec<_>>();
    a.rows.len() == b.rows.len()
        && a.rows.iter().zip(&b.rows).all(|(r, s)| {
            r.t == s.t
                && bits(&r.x) == bits(&s.x)
                && bits(&r.lambda) == bits(&s.lambda)
                && bits(&r.constraints) == bits(&s.constraints)
                && r.loss.to_bits() == s.loss.to_bits()
        })
}

#[test]
fn runs_are_bit_reproducible() {
    let problems = [
        toy_problem().unwrap(),
        doubly_stochastic_problem(3).unwrap(),
        dispatch_problem(DispatchParams::with_demand(synthetic_demand(1, 5))).unwrap(),
    ];
    for p in &problems {
        for v in Variant::ALL {
            if v == Variant::StrongClippedOgd && p.strong_convexity.is_none() {
                continue;
            }
            let cfg = AlgoConfig::new(v, 300);
            let a = run(p, &cfg, 11).unwrap();
            let b = run(p, &cfg, 11).unwrap();
            assert!(same_bits(&a, &b), "{} {:?}", p.name, v);
        }
    }
    let toy = &problems[0];
    let cfg = AlgoConfig::new(Variant::ClippedOgd, 300);
    assert!(!same_bits(
        &run(toy, &cfg, 1).unwrap(),
        &run(toy, &cfg, 2).unwrap()
    ));
}

#[test]
fn toy_violation_vanishes_after_burn_in() {
    let toy = toy_problem().unwrap();
    let trace = run(&toy, &AlgoConfig::new(Variant::ClippedOgd, 8000), 0).unwrap();
    let late = max_violation_after(&trace.rows, 800);
    assert!(late <= 0.05, "{late}");
}

#[test]
fn doubling_regret_within_constant_of_fixed() {
    let toy = toy_problem().unwrap();
    let total = 4095;
    let factor = 2f64.sqrt() / (2f64.sqrt() - 1.0) * 1.5;
    for seed in 0..3 {
        let offline = best_fixed(&toy, seed, total, &SolveOptions::default())
            .unwrap()
            .total;
        let fixed = summarize(
            &run(&toy, &AlgoConfig::new(Variant::ClippedOgd, total), seed).unwrap(),
            offline,
        )
        .unwrap()
        .positive_regret();
        let doubled = summarize(
            &doubling_run(
                &toy,
                |h| AlgoConfig::new(Variant::ClippedOgd, h),
                total,
                seed,
            )
            .unwrap(),
            offline,
        )
        .unwrap()
        .positive_regret();
        assert!(
            doubled <= factor * fixed.max(1.0),
            "seed {seed}: {doubled} vs {fixed}"
        );
    }
}

fn variants() -> impl Strategy<Value = Variant> {
    prop::sample::select(Variant::ALL.to_vec())
}

fn aggregations() -> impl Strategy<Value = Aggregation> {
    prop::sample::select(vec![
        Aggregation::PerConstraint,
        Aggregation::Max,
        Aggregation::LogSumExp,
    ])
}

fn lagrangians() -> impl Strategy<Value = LagrangianKind> {
    prop::sample::select(vec![LagrangianKind::Clipped, LagrangianKind::Plain])
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(48))]

    #[test]
    fn iterates_stay_in_ball_and_duals_nonnegative(
        variant in variants(),
        agg in aggregations(),
        kind in lagrangians(),
        seed in 0..1000u64,
        horizon in 1..400usize,
        which in 0..2usize,
    ) {
        let p = if which == 0 { toy_problem().unwrap() } else { doubly_stochastic_problem(3).unwrap() };
        prop_assume!(variant != Variant::StrongClippedOgd || p.strong_convexity.is_some());
        let baseline = matches!(variant, Variant::MahdaviOgd | Variant::Aogd);
        let kind = if baseline { kind } else { LagrangianKind::Clipped };
        let cfg = AlgoConfig::new(variant, horizon).with_aggregation(agg).with_lagrangian(kind);
        let trace = run(&p, &cfg, seed).unwrap();
        prop_assert_eq!(trace.len(), horizon);
        for row in &trace.rows {
            prop_assert!(row.x.norm() <= p.radius());
            prop_assert!(row.lambda.iter().all(|&l| l >= 0.0 && l.is_finite()));
        }
    }
}

#[cfg(not(feature = "fault-injection"))]
#[test]
fn dual_identity_check_passes() {
    let (id, name, f) = oco_lt::validation::CHECKS[0];
    let out = oco_lt::validation::run_check(id, name, f);
    assert!(out.verdict.passed, "{}", out.verdict.detail);
}

/// With the dual update corrupted the identity check must notice.
#[cfg(feature = "fault-injection")]
#[test]
fn dual_identity_check_catches_corruption() {
    let (id, name, f) = oco_lt::validation::CHECKS[0];
    let out = oco_lt::validation::run_check(id, name, f);
    assert!(!out.verdict.passed, "{}", out.verdict.detail);
}
