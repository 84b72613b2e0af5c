use alloc::vec;
use alloc::vec::Vec;

use super::*;
use crate::problems;

fn ball_trace() -> RunTrace {
    let p = problems::make_ball_example(1.0, 1.0).unwrap();
    let cfg = StepConfig::new(2, 4.0)
        .unwrap()
        .with_regularization(8.0)
        .unwrap()
        .with_inner_tolerance(1e-12)
        .unwrap();
    let stop = StopRule {
        max_iters: 30,
        ..Default::default()
    };
    run_rctm(&p, &[1.0, 0.0], &cfg, &stop).unwrap()
}

#[test]
fn region_threshold_examples() {
    let r = region_thresholds(2, 2.0, 1.0, 1.0, 2.0).unwrap();
    assert!((r.q_threshold - 2.0 / 9.0).abs() < 1e-15);
    assert!((r.g_threshold - 2.0 / 3.0).abs() < 1e-15);
    // σ → cσ scales the gap threshold by c^{(p+1)/(p−q+1)}
    let c: f64 = 1.7;
    let s = region_thresholds(2, 2.0, c, 1.0, 2.0).unwrap();
    assert!((s.q_threshold / r.q_threshold - c.powf(3.0)).abs() < 1e-12);
    assert!(region_thresholds(2, 3.0, 1.0, 1.0, 2.0).is_err());
    assert!(region_thresholds(2, 2.5, 1.0, 1.0, 2.0).unwrap().q_threshold > 0.0);
}

#[test]
fn condition_number_examples() {
    assert!((condition_number(2, 2.0, 1.0, 1.0, 1.0) - 0.75).abs() < 1e-15);
    assert_eq!(condition_number(2, 2.0, 1.0, 1.0, 0.0), 0.0);
    let a = condition_number(3, 2.5, 2.0, 0.4, 1.3);
    let b = condition_number(3, 2.5, 2.0, 0.8, 1.3);
    assert!((a / b - 2.0).abs() < 1e-12);
}

#[test]
fn count_formulas() {
    // ω = 0 → K = ⌈log(gap₀/ε)⌉ + 1
    assert_eq!(linear_iteration_count(2, 0.0, 1.0, (-3.5f64).exp()), 5);
    assert_eq!(linear_iteration_count(2, 1.0, 1.0, 2.0), 1);
    // q = 2, p = 2, ω = 1: ⌈4·(4·1)^{1}⌉ + 2
    assert_eq!(region_entry_count(2, 2.0, 1.0), 18);
    assert!((sublinear_bound(2, 1.0, 1.0, 2) - 3.0 * 16.0 / 2.0).abs() < 1e-12);
}

#[test]
fn log_slope_recovers_power_law() {
    let pairs: Vec<(f64, f64)> = [1e-2, 1e-3, 1e-5].iter().map(|&g| (g, 3.0 * g * g)).collect();
    assert!((log_slope(&pairs).unwrap() - 2.0).abs() < 1e-12);
    assert_eq!(log_slope(&pairs[..1]), None);
    assert_eq!(log_slope(&[(1e-3, 1e-6), (1e-3, 1e-7)]), None);
}

#[test]
fn start_at_minimizer_stops_immediately() {
    let p = problems::make_ball_example(1.0, 1.0).unwrap();
    let cfg = StepConfig::new(2, 4.0).unwrap();
    let t = run_rctm(&p, &[0.0, -1.0], &cfg, &StopRule::default()).unwrap();
    assert_eq!(t.iterations(), 0);
    assert_eq!(t.records.len(), 1);
    assert!(t.last().eta <= 1e-12);
}

#[test]
fn ball_example_converges_to_known_minimizer() {
    let t = ball_trace();
    assert!(t.iterations() <= 30);
    let last = &t.last().x;
    let err = ((last[0]).powi(2) + (last[1] + 1.0).powi(2)).sqrt();
    assert!(err <= 1e-8, "{last:?}");
    assert_eq!(t.records.len(), t.iterations() + 1);
    assert!(verify_steps(&t).passed());
    let local = verify_local_rates(&t);
    assert!(local.verification.passed(), "{:?}", local.verification.violations().collect::<Vec<_>>());
    assert!(local.verification.count(Inequality::SubgradientRate) > 0);
    let global = verify_global_rates(&t, 1e-8);
    assert!(global.verification.passed(), "{:?}", global.verification.violations().collect::<Vec<_>>());
}

#[test]
fn power_quadratic_decreases_monotonically() {
    let p = problems::make_power_quadratic(1, 1.0, 0.25, vec![0.5]).unwrap();
    let cfg = StepConfig::new(2, 1.0).unwrap();
    let t = run_rctm(&p, &[1.5], &cfg, &StopRule::default()).unwrap();
    assert!(t.iterations() >= 2);
    for w in t.records.windows(2) {
        assert!(w[1].f_value <= w[0].f_value);
    }
    assert!(verify_trace(&t, 1e-8).passed());
}

#[test]
fn corrupted_values_break_the_gap_rate() {
    let mut t = ball_trace();
    let k = t.records.len() - 2;
    t.records[k].f_value += 0.0;
    t.records[k + 1].f_value += 0.5;
    let local = verify_local_rates(&t);
    assert!(local.verification.violations_of(Inequality::LocalGapRate) > 0);
}

#[test]
fn oracle_calls_grow_by_one_per_step() {
    let t = ball_trace();
    for (k, r) in t.records.iter().enumerate() {
        assert_eq!(r.oracle_calls, k);
    }
}

#[test]
fn logsumexp_satisfies_sublinear_bound() {
    let p = problems::make_logsumexp_ball(6, 3, 2.0).unwrap();
    let cfg = StepConfig::new(2, p.lipschitz(2).unwrap()).unwrap();
    let stop = StopRule {
        max_iters: 40,
        ..Default::default()
    };
    let (fs, gap) = reference_optimum(&p, &p.default_start, &cfg, &stop).unwrap();
    let mut t = run_rctm(&p, &p.default_start, &cfg, &stop).unwrap();
    t.set_reference_optimum(fs, gap);
    assert!(gap < 1e-9, "{gap}");
    let g = verify_global_rates(&t, 1e-8);
    assert!(g.verification.count(Inequality::SublinearRate) > 0);
    assert!(g.verification.count(Inequality::SublinearRecurrence) > 0);
    assert!(g.verification.passed(), "{:?}", g.verification.violations().collect::<Vec<_>>());
}

#[test]
fn failure_keeps_partial_trace() {
    let p = problems::make_ball_example(1.0, 1.0).unwrap();
    let cfg = StepConfig::new(2, 4.0)
        .unwrap()
        .with_max_inner_iterations(1)
        .unwrap();
    let err = run_rctm(&p, &[1.0, 0.0], &cfg, &StopRule::default()).unwrap_err();
    assert!(matches!(err.error, Error::NonConvergence { .. }));
    assert_eq!(err.partial.records.len(), 1);
    assert!(run_rctm(&p, &[0.0, -1.5], &cfg, &StopRule::default()).is_err());
}

#[test]
fn pooled_order_combines_runs() {
    let a = LocalRateReport {
        verification: Verification::new(),
        regions: None,
        regression_pairs: vec![(1e-2, 1e-4)],
        empirical_order: None,
        theoretical_order: Some(2.0),
    };
    let mut b = a.clone();
    b.regression_pairs = vec![(1e-4, 1e-8)];
    assert!((pooled_order(&[a, b]).unwrap() - 2.0).abs() < 1e-12);
}
