use alloc::vec;
use alloc::vec::Vec;

use proptest::prelude::*;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use super::*;
use crate::problems::{self, Problem};
use crate::report::Inequality;

/// ½⟨Qx, x⟩ + ⟨c, x⟩
struct Quadratic {
    q: Matrix,
    c: Vec<f64>,
}

impl SmoothFunction for Quadratic {
    fn dim(&self) -> usize {
        self.c.len()
    }
    fn value(&self, x: &[f64]) -> f64 {
        0.5 * linalg::dot(&self.q.mul_vec(x), x) + linalg::dot(&self.c, x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        linalg::add(&self.q.mul_vec(x), &self.c)
    }
    fn hessian_apply(&self, _: &[f64], v: &[f64]) -> Vec<f64> {
        self.q.mul_vec(v)
    }
    fn third_apply(&self, x: &[f64], _: &[f64]) -> Vec<f64> {
        vec![0.0; x.len()]
    }
}

/// x⁴/12 in one dimension.
struct QuarticTwelfth;

impl SmoothFunction for QuarticTwelfth {
    fn dim(&self) -> usize {
        1
    }
    fn value(&self, x: &[f64]) -> f64 {
        x[0].powi(4) / 12.0
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        vec![x[0].powi(3) / 3.0]
    }
    fn hessian_apply(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        vec![x[0] * x[0] * v[0]]
    }
    fn third_apply(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        vec![2.0 * x[0] * h[0] * h[0]]
    }
}

fn bisect(mut lo: f64, mut hi: f64, f: impl Fn(f64) -> f64) -> f64 {
    let sign_lo = f(lo) > 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if (f(mid) > 0.0) == sign_lo {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

fn half_square() -> Quadratic {
    Quadratic {
        q: Matrix::identity(1),
        c: vec![0.0],
    }
}

fn view<'a>(f: &'a dyn SmoothFunction, h: &'a CompositePart, m: &'a Metric) -> StepProblem<'a> {
    StepProblem {
        function: f,
        composite: h,
        metric: m,
    }
}

fn random_spd(n: usize, rng: &mut ChaCha8Rng, shift: f64) -> Matrix {
    let a = Matrix::from_columns_of(n, |_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect());
    let mut m = Matrix::zeros(n);
    for i in 0..n {
        for j in 0..n {
            let s: f64 = (0..n).map(|k| a.get(k, i) * a.get(k, j)).sum();
            m.set(i, j, s + if i == j { shift } else { 0.0 });
        }
    }
    m
}

#[test]
fn one_dimensional_step_matches_closed_form() {
    let f = half_square();
    let h = CompositePart::zero(1);
    let m = Metric::identity(1);
    let cfg = StepConfig::new(2, 0.0)
        .unwrap()
        .with_regularization(1.0)
        .unwrap();
    // φ′(t) = 1 + t + t|t|/2 on the offset t = T − x
    let oracle = 1.0 + bisect(-3.0, 0.0, |t| 1.0 + t + 0.5 * t * t.abs());
    assert!((oracle - (2.0 - 3f64.sqrt())).abs() < 1e-12);
    for s in [Subsolver::Secular, Subsolver::FirstOrder] {
        let out = solve_step(&view(&f, &h, &m), &[1.0], &cfg.with_subsolver(s)).unwrap();
        assert!((out.point[0] - 0.267949).abs() < 1e-6);
        assert!((out.point[0] - (2.0 - 3f64.sqrt())).abs() < 1e-10, "{s:?} {:?}", out.point);
    }
}

#[test]
fn zero_lipschitz_skips_lemma_checks() {
    let f = half_square();
    let h = CompositePart::zero(1);
    let m = Metric::identity(1);
    let cfg = StepConfig::new(2, 0.0).unwrap().with_regularization(1.0).unwrap();
    let out = solve_step(&view(&f, &h, &m), &[1.0], &cfg).unwrap();
    let v = verify_step(&out.certificate, None);
    assert!(v.passed());
    assert!(v.was_skipped(Inequality::StepDecrease));
    assert_eq!(v.count(Inequality::StepGradientBound), 1);
    assert!(out.certificate.lemma_rhs().is_none());
}

#[test]
fn secular_examples() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    let n = 4;
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-2.0..2.0)).collect();
    let f = Quadratic {
        q: Matrix::identity(n),
        c: c.clone(),
    };
    let h = CompositePart::zero(n);
    let m = Metric::identity(n);
    let hreg = 3.0;
    let cfg = StepConfig::new(2, 0.0)
        .unwrap()
        .with_regularization(hreg)
        .unwrap()
        .with_subsolver(Subsolver::Secular);
    let x = vec![0.0; n];
    let out = solve_step(&view(&f, &h, &m), &x, &cfg).unwrap();
    // r(1 + Hr/2) = ‖g‖
    let g = linalg::norm2(&c);
    let r = bisect(0.0, g, |r| r * (1.0 + 0.5 * hreg * r) - g);
    let r_closed = (-1.0 + (1.0 + 2.0 * hreg * g).sqrt()) / hreg;
    assert!((r - r_closed).abs() < 1e-12);
    for i in 0..n {
        let expect = -c[i] / (1.0 + 0.5 * hreg * r);
        assert!((out.point[i] - expect).abs() < 1e-12);
    }

    // ∇f = 0 → d = 0
    let f0 = Quadratic {
        q: Matrix::identity(n),
        c: vec![0.0; n],
    };
    let out = solve_step(&view(&f0, &h, &m), &x, &cfg).unwrap();
    assert_eq!(out.point, x);
}

#[test]
fn vanishing_regularization_gives_newton_step() {
    let mut rng = ChaCha8Rng::seed_from_u64(11);
    let n = 5;
    let q = random_spd(n, &mut rng, 0.5);
    let c: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let f = Quadratic { q: q.clone(), c };
    let h = CompositePart::zero(n);
    let m = Metric::identity(n);
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let newton = linalg::sub(&x, &Cholesky::factor(&q).unwrap().solve(&f.gradient(&x)));
    for hreg in [1e-6, 1e-9, 0.0] {
        let cfg = StepConfig::new(2, 0.0).unwrap().with_regularization(hreg).unwrap();
        let out = solve_step(&view(&f, &h, &m), &x, &cfg).unwrap();
        let err = linalg::norm2(&linalg::sub(&out.point, &newton));
        assert!(err <= 10.0 * hreg + 1e-10, "{hreg} {err}");
    }
}

#[test]
fn fixed_point_at_minimizer() {
    let ball = problems::make_ball_example(1.0, 1.0).unwrap();
    let cfg = StepConfig::new(2, 4.0).unwrap();
    let out = solve_step(&ball.step_problem(), &[0.0, -1.0], &cfg).unwrap();
    assert_eq!(out.point, vec![0.0, -1.0]);
    assert_eq!(out.certificate.inner_iterations, 0);
    let pq = problems::make_power_quadratic(3, 1.0, 1.0, vec![0.5, -0.2, 0.1]).unwrap();
    let cfg = StepConfig::new(2, 4.0).unwrap();
    let out = solve_step(&pq.step_problem(), &[0.5, -0.2, 0.1], &cfg).unwrap();
    assert_eq!(out.point, vec![0.5, -0.2, 0.1]);
}

#[test]
fn regularization_below_threshold_is_rejected() {
    let cfg = StepConfig::new(2, 4.0).unwrap();
    assert!(matches!(cfg.with_regularization(7.9), Err(Error::Config(_))));
    assert!(cfg.with_regularization(8.0).is_ok());
    assert!(StepConfig::new(4, 1.0).is_err());
    let mut bad = cfg;
    bad.regularization = 1.0;
    let ball = problems::make_ball_example(1.0, 1.0).unwrap();
    assert!(matches!(
        solve_step(&ball.step_problem(), &[1.0, 0.0], &bad),
        Err(Error::Config(_))
    ));
}

#[test]
fn anchor_outside_domain_is_rejected() {
    let ball = problems::make_ball_example(1.0, 1.0).unwrap();
    let cfg = StepConfig::new(2, 4.0).unwrap();
    assert!(matches!(
        solve_step(&ball.step_problem(), &[0.0, -1.5], &cfg),
        Err(Error::Domain(_))
    ));
}

#[test]
fn iteration_cap_reports_nonconvergence() {
    let ball = problems::make_ball_example(1.0, 1.0).unwrap();
    let cfg = StepConfig::new(2, 4.0)
        .unwrap()
        .with_max_inner_iterations(2)
        .unwrap();
    match solve_step(&ball.step_problem(), &[1.0, 0.0], &cfg) {
        Err(Error::NonConvergence { iterations, best, .. }) => {
            assert_eq!(iterations, 2);
            assert_eq!(best.len(), 2);
        }
        other => panic!("{other:?}"),
    }
}

#[test]
fn ball_example_step_certificate() {
    let ball = problems::make_ball_example(1.0, 1.0).unwrap();
    let cfg = StepConfig::new(2, 4.0)
        .unwrap()
        .with_regularization(8.0)
        .unwrap()
        .with_inner_tolerance(1e-10)
        .unwrap();
    let out = solve_step(&ball.step_problem(), &[1.0, 0.0], &cfg).unwrap();
    let v = verify_step(&out.certificate, None);
    assert!(v.passed(), "{v:?}");
    for ineq in [
        Inequality::StepGradientBound,
        Inequality::StepDecrease,
        Inequality::StepDecreaseAtP,
    ] {
        assert!(v.worst_margin(ineq).unwrap() > 0.0, "{ineq}");
    }
    assert!(ball.composite.contains(&out.point, &ball.metric));
}

#[test]
fn random_quadratic_gradient_bound_with_synthetic_constant() {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let n = 6;
    let f = Quadratic {
        q: random_spd(n, &mut rng, 0.1),
        c: (0..n).map(|_| rng.random_range(-1.0..1.0)).collect(),
    };
    let h = CompositePart::zero(n);
    let m = Metric::identity(n);
    let cfg = StepConfig::new(2, 1.0).unwrap().with_regularization(2.0).unwrap();
    let x: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let out = solve_step(&view(&f, &h, &m), &x, &cfg).unwrap();
    let v = verify_step(&out.certificate, None);
    assert_eq!(v.violations_of(Inequality::StepGradientBound), 0);
}

fn random_power_problem(rng: &mut ChaCha8Rng, n: usize, dense: bool) -> Problem {
    let anchor: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let s2 = rng.random_range(0.1..2.0);
    let s3 = rng.random_range(0.1..2.0);
    if dense {
        let b = random_spd(n, rng, 0.5);
        problems::make_power_quadratic_in(Metric::dense(b).unwrap(), s2, s3, anchor).unwrap()
    } else {
        problems::make_power_quadratic(n, s2, s3, anchor).unwrap()
    }
}

#[test]
fn secular_and_first_order_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(21);
    for i in 0..50 {
        let n = 2 + i % 7;
        let p = random_power_problem(&mut rng, n, i % 3 == 0);
        let x = p.sample_point(&mut rng);
        let l = p.lipschitz(2).unwrap();
        let cfg = StepConfig::new(2, l).unwrap().with_inner_tolerance(1e-12).unwrap();
        let a = solve_step(&p.step_problem(), &x, &cfg.with_subsolver(Subsolver::Secular)).unwrap();
        let b = solve_step(&p.step_problem(), &x, &cfg.with_subsolver(Subsolver::FirstOrder)).unwrap();
        let gap = p.metric.distance(&a.point, &b.point);
        assert!(gap <= 1e-8, "instance {i}: {gap}");
    }
}

/// Value of the regularized model written out independently.
fn brute_model(p: &Problem, x: &[f64], hreg: f64, y: &[f64]) -> f64 {
    let f = p.function();
    let d = linalg::sub(y, x);
    let r = linalg::norm2(&d);
    f.value(x)
        + linalg::dot(&f.gradient(x), &d)
        + 0.5 * linalg::dot(&f.hessian_apply(x, &d), &d)
        + hreg / 6.0 * r * r * r
}

fn grid_minimizer(p: &Problem, x: &[f64], hreg: f64) -> Vec<f64> {
    // polar grid so the disk becomes the box ρ ∈ [0, 1], θ ∈ [−π, π]
    let point = |rho: f64, th: f64| [rho * th.cos(), rho * th.sin()];
    let (mut rho, mut th) = (0.5, 0.0);
    let (mut hr, mut ht) = (0.5, core::f64::consts::PI);
    for round in 0..40 {
        let mut best = (f64::INFINITY, rho, th);
        for i in 0..=40 {
            for j in 0..=80 {
                let r = (rho + hr * (i as f64 / 20.0 - 1.0)).clamp(0.0, 1.0);
                let t = th + ht * (j as f64 / 40.0 - 1.0);
                let v = brute_model(p, x, hreg, &point(r, t));
                if v < best.0 {
                    best = (v, r, t);
                }
            }
        }
        (rho, th) = (best.1, best.2);
        if round > 0 {
            hr *= 0.5;
            ht *= 0.5;
        }
    }
    point(rho, th).to_vec()
}

#[test]
fn composite_steps_match_grid_refinement() {
    let mut rng = ChaCha8Rng::seed_from_u64(4);
    for _ in 0..20 {
        let s2 = rng.random_range(0.2..2.0);
        let s3 = rng.random_range(0.2..2.0);
        let p = problems::make_ball_example(s2, s3).unwrap();
        let x = p.sample_point(&mut rng);
        let cfg = StepConfig::new(2, 4.0 * s3).unwrap();
        let out = solve_step(&p.step_problem(), &x, &cfg).unwrap();
        let grid = grid_minimizer(&p, &x, cfg.regularization);
        let err = linalg::norm2(&linalg::sub(&out.point, &grid));
        assert!(
            err < 1e-4,
            "{x:?} {:?} {grid:?} {} {} {:?}",
            out.point,
            brute_model(&p, &x, cfg.regularization, &out.point),
            brute_model(&p, &x, cfg.regularization, &grid),
            out.certificate
        );
    }
}

#[test]
fn first_order_with_zero_gradient_returns_anchor() {
    let p = problems::make_power_quadratic(2, 1.0, 1.0, vec![0.3, 0.2]).unwrap();
    let mut ball = p;
    ball.composite = CompositePart::ball(2, 1.0).unwrap();
    let cfg = StepConfig::new(2, 4.0)
        .unwrap()
        .with_subsolver(Subsolver::FirstOrder);
    let out = solve_step(&ball.step_problem(), &[0.3, 0.2], &cfg).unwrap();
    assert_eq!(out.point, vec![0.3, 0.2]);
}

#[test]
fn bregman_one_dimensional_quartic() {
    let f = QuarticTwelfth;
    let h = CompositePart::zero(1);
    let m = Metric::identity(1);
    let cfg = StepConfig::new(3, 2.0).unwrap().with_inner_tolerance(1e-13).unwrap();
    assert_eq!(cfg.resolved_subsolver(&h), Subsolver::Bregman);
    let out = solve_step(&view(&f, &h, &m), &[1.0], &cfg).unwrap();
    // φ′(d) = 1/3 + d + d² + (H/6)d³ with H = 6
    let d = bisect(-2.0, 0.0, |d| 1.0 / 3.0 + d + d * d + d * d * d);
    assert!((out.point[0] - (1.0 + d)).abs() < 1e-8, "{} {}", out.point[0], 1.0 + d);
}

#[test]
fn bregman_on_quadratic_returns_anchor_at_minimizer() {
    let f = Quadratic {
        q: Matrix::identity(3),
        c: vec![0.0; 3],
    };
    let h = CompositePart::zero(3);
    let m = Metric::identity(3);
    let cfg = StepConfig::new(3, 0.0).unwrap().with_subsolver(Subsolver::Bregman);
    let out = solve_step(&view(&f, &h, &m), &[0.0; 3], &cfg).unwrap();
    assert_eq!(out.point, vec![0.0; 3]);
}

#[test]
fn bregman_and_first_order_agree() {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    for i in 0..20 {
        let anchor: Vec<f64> = (0..5).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut p = problems::make_power_quartic(5, rng.random_range(0.2..1.0), rng.random_range(0.2..2.0), anchor)
            .unwrap();
        if i % 2 == 1 {
            p.composite = CompositePart::ball(5, 1.0).unwrap();
        }
        let x = p.sample_point(&mut rng);
        let x = p.composite.prox(&x, 1.0, &p.metric).unwrap();
        let cfg = StepConfig::new(3, p.lipschitz(3).unwrap())
            .unwrap()
            .with_inner_tolerance(1e-11)
            .unwrap();
        let a = solve_step(&p.step_problem(), &x, &cfg.with_subsolver(Subsolver::Bregman)).unwrap();
        let b = solve_step(&p.step_problem(), &x, &cfg.with_subsolver(Subsolver::FirstOrder)).unwrap();
        let gap = linalg::norm2(&linalg::sub(&a.point, &b.point));
        assert!(gap < 1e-6, "instance {i}: {gap}");
    }
}

#[test]
fn subproblem_is_convex_along_trajectory() {
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    let problems = [
        problems::make_ball_example(1.0, 1.0).unwrap(),
        problems::make_power_quartic(4, 1.0, 1.0, vec![0.1, 0.2, 0.3, 0.4]).unwrap(),
        problems::make_logsumexp_ball(4, 7, 1.0).unwrap(),
    ];
    for p in &problems {
        for degree in [2, 3] {
            let Ok(l) = p.lipschitz(degree) else { continue };
            let cfg = StepConfig::new(degree, l).unwrap();
            let x = p.sample_point(&mut rng);
            let out = solve_step(&p.step_problem(), &x, &cfg).unwrap();
            let (probed, failed) =
                model_convexity_probe(&p.step_problem(), &x, &cfg, &out.trajectory).unwrap();
            assert!(probed > 0);
            assert_eq!(failed, 0, "{} p={degree}", p.name);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn ball_steps_are_certified(a in -1.0f64..1.0, b in -1.0f64..1.0, s2 in 0.1f64..3.0, s3 in 0.1f64..3.0) {
        let p = problems::make_ball_example(s2, s3).unwrap();
        let x = p.composite.prox(&[a, b], 1.0, &p.metric).unwrap();
        let cfg = StepConfig::new(2, 4.0 * s3).unwrap();
        let out = solve_step(&p.step_problem(), &x, &cfg).unwrap();
        let v = verify_step(&out.certificate, None);
        prop_assert!(v.passed(), "{:?}", v.violations().collect::<Vec<_>>());
        prop_assert!(p.composite.contains(&out.point, &p.metric));
    }

    #[test]
    fn quartic_steps_are_certified(seed in 0u64..1000, s4 in 0.1f64..3.0) {
        let anchor = problems::seeded_anchor(4, seed);
        let p = problems::make_power_quartic(4, 0.5, s4, anchor).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let x = p.sample_point(&mut rng);
        let cfg = StepConfig::new(3, p.lipschitz(3).unwrap()).unwrap();
        let out = solve_step(&p.step_problem(), &x, &cfg).unwrap();
        let v = verify_step(&out.certificate, None);
        prop_assert!(v.passed(), "{:?}", v.violations().collect::<Vec<_>>());
    }

    #[test]
    fn near_stationary_anchor_barely_moves(seed in 0u64..1000) {
        let anchor = problems::seeded_anchor(3, seed);
        let p = problems::make_power_quadratic(3, 1.0, 1.0, anchor.clone()).unwrap();
        let cfg = StepConfig::new(2, 4.0).unwrap();
        let x: Vec<f64> = anchor.iter().map(|v| v + 1e-11).collect();
        prop_assert!(p.eta(&x).unwrap().to_f64() <= 1e-10);
        let out = solve_step(&p.step_problem(), &x, &cfg).unwrap();
        let tol = out.certificate.inner_tolerance;
        prop_assert!(p.metric.distance(&out.point, &x) <= 10.0 * tol);
    }
}

#[test]
fn model_gradient_matches_value_differences() {
    let p = problems::make_power_quartic(3, 1.0, 1.0, problems::seeded_anchor(3, 9)).unwrap();
    let x = p.default_start.clone();
    let model = RegularizedModel {
        taylor: TaylorModel::new(p.function(), &x, 3).unwrap(),
        metric: &p.metric,
        composite: &p.composite,
        regularization: 18.0,
    };
    let y = [x[0] - 0.3, x[1] + 0.2, x[2] - 0.1];
    let g = model.gradient(&y);
    for i in 0..3 {
        let (mut a, mut b) = (y, y);
        a[i] += 1e-6;
        b[i] -= 1e-6;
        let fd = (model.value(&a) - model.value(&b)) / 2e-6;
        assert!((fd - g[i]).abs() < 1e-6 * g[i].abs().max(1.0), "{i}: {fd} vs {}", g[i]);
    }
}
