//! Test problems with analytically known constants.

use alloc::boxed::Box;
use alloc::string::{String, ToString};
use alloc::vec;
use alloc::vec::Vec;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::composite::{CompositeKind, CompositePart, Extended};
use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::math;
use crate::metric::Metric;
use crate::oracle::{
    check_derivatives, check_taylor_residuals, DerivativeReport, SmoothFunction, SmoothOracle,
    TaylorReport, UniformConvexity, FD_TOLERANCE,
};
use crate::report::{Inequality, Verification};

/// `f(x) = σ₂/2 s² + 2σ₃/3 s³ + σ₄/4 s⁴` with `s = ‖x − c‖`.
#[derive(Debug, Clone)]
pub struct PowerFunction {
    pub center: Vec<f64>,
    pub sigma2: f64,
    pub sigma3: f64,
    pub sigma4: f64,
    pub metric: Metric,
}

impl PowerFunction {
    fn parts(&self, x: &[f64]) -> (Vec<f64>, f64) {
        let u = linalg::sub(x, &self.center);
        let bu = self.metric.apply(&u);
        let s = math::sqrt(linalg::dot(&bu, &u).max(0.0));
        (bu, s)
    }
}

impl SmoothFunction for PowerFunction {
    fn dim(&self) -> usize {
        self.center.len()
    }

    fn value(&self, x: &[f64]) -> f64 {
        let (_, s) = self.parts(x);
        let s2 = s * s;
        0.5 * self.sigma2 * s2 + 2.0 * self.sigma3 / 3.0 * s2 * s + 0.25 * self.sigma4 * s2 * s2
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (bu, s) = self.parts(x);
        let r = self.sigma2 + 2.0 * self.sigma3 * s + self.sigma4 * s * s;
        linalg::scaled(&bu, r)
    }

    fn hessian_apply(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let (bu, s) = self.parts(x);
        let bv = self.metric.apply(v);
        let buv = linalg::dot(&bu, v);
        let mut out = linalg::scaled(&bv, self.sigma2 + 2.0 * self.sigma3 * s + self.sigma4 * s * s);
        let mut coef = 2.0 * self.sigma4 * buv;
        if s > 0.0 {
            coef += 2.0 * self.sigma3 * buv / s;
        }
        linalg::axpy(coef, &bu, &mut out);
        out
    }

    fn third_apply(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        let (bu, s) = self.parts(x);
        let bh = self.metric.apply(h);
        let buh = linalg::dot(&bu, h);
        let hh = linalg::dot(&bh, h);
        let mut out = linalg::scaled(&bh, 4.0 * self.sigma4 * buh);
        let mut coef_u = 2.0 * self.sigma4 * hh;
        if s > 0.0 {
            linalg::axpy(4.0 * self.sigma3 * buh / s, &bh, &mut out);
            coef_u += 2.0 * self.sigma3 * (hh / s - buh * buh / (s * s * s));
        }
        linalg::axpy(coef_u, &bu, &mut out);
        out
    }
}

/// `f(x) = log Σᵢ exp(⟨aᵢ, x⟩ − bᵢ)`.
#[derive(Debug, Clone)]
pub struct LogSumExp {
    pub rows: Vec<Vec<f64>>,
    pub offsets: Vec<f64>,
}

impl LogSumExp {
    fn weights(&self, x: &[f64]) -> (f64, Vec<f64>) {
        let z: Vec<f64> = self
            .rows
            .iter()
            .zip(&self.offsets)
            .map(|(a, b)| linalg::dot(a, x) - b)
            .collect();
        let m = z.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let e: Vec<f64> = z.iter().map(|zi| math::exp(zi - m)).collect();
        let total: f64 = e.iter().sum();
        (m + math::ln(total), e.into_iter().map(|v| v / total).collect())
    }

    fn combine(&self, coef: &[f64]) -> Vec<f64> {
        let mut out = vec![0.0; self.dim()];
        for (a, c) in self.rows.iter().zip(coef) {
            linalg::axpy(*c, a, &mut out);
        }
        out
    }

    fn project(&self, v: &[f64]) -> Vec<f64> {
        self.rows.iter().map(|a| linalg::dot(a, v)).collect()
    }

    /// `max ‖aᵢ‖_*` in the metric.
    pub fn row_scale(&self, metric: &Metric) -> f64 {
        self.rows
            .iter()
            .map(|a| metric.dual(a))
            .fold(0.0, f64::max)
    }
}

impl SmoothFunction for LogSumExp {
    fn dim(&self) -> usize {
        self.rows.first().map_or(0, Vec::len)
    }

    fn value(&self, x: &[f64]) -> f64 {
        self.weights(x).0
    }

    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        let (_, pi) = self.weights(x);
        self.combine(&pi)
    }

    fn hessian_apply(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        let (_, pi) = self.weights(x);
        let w = self.project(v);
        let mean = linalg::dot(&pi, &w);
        let coef: Vec<f64> = pi.iter().zip(&w).map(|(p, wi)| p * (wi - mean)).collect();
        self.combine(&coef)
    }

    fn third_apply(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        let (_, pi) = self.weights(x);
        let w = self.project(h);
        let mean = linalg::dot(&pi, &w);
        let c: Vec<f64> = w.iter().map(|wi| (wi - mean) * (wi - mean)).collect();
        let var = linalg::dot(&pi, &c);
        let coef: Vec<f64> = pi.iter().zip(&c).map(|(p, ci)| p * (ci - var)).collect();
        self.combine(&coef)
    }
}

/// Radius `D` of the initial level set `{x : F(x) ≤ F(x₀)}` around `x*`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum LevelSetRadius {
    /// A bound valid for every start in `dom h`.
    Fixed(f64),
    /// Radial objectives: the level set is the ball of radius `‖x₀ − x*‖`.
    DistanceFromStart,
}

#[derive(Debug)]
pub struct Problem {
    pub name: String,
    pub seed: Option<u64>,
    pub smooth: SmoothOracle,
    pub composite: CompositePart,
    pub metric: Metric,
    pub known_minimizer: Option<Vec<f64>>,
    pub known_optimal_value: Option<f64>,
    pub level_set: Option<LevelSetRadius>,
    pub default_start: Vec<f64>,
}

impl Problem {
    pub fn dim(&self) -> usize {
        self.smooth.dim()
    }

    pub fn function(&self) -> &dyn SmoothFunction {
        self.smooth.function.as_ref()
    }

    pub fn lipschitz(&self, degree: usize) -> Result<f64> {
        self.smooth.lipschitz(degree)
    }

    /// Default `(q, σ_q)` pair, if the smooth part is uniformly convex.
    pub fn uniform_convexity(&self) -> Option<UniformConvexity> {
        self.smooth.uniform_convexity.first().copied()
    }

    /// `F(x) = f(x) + h(x)`.
    pub fn objective(&self, x: &[f64]) -> Extended {
        match self.composite.value(x, &self.metric) {
            Extended::Finite(h) => Extended::Finite(self.function().value(x) + h),
            Extended::Infinite => Extended::Infinite,
        }
    }

    /// `η(x)`.
    pub fn eta(&self, x: &[f64]) -> Result<Extended> {
        check_dim(self.dim(), x.len())?;
        let g = self.function().gradient(x);
        self.composite.minimal_subgradient_norm(&g, x, &self.metric)
    }

    pub fn level_set_radius(&self, x0: &[f64]) -> Option<f64> {
        match self.level_set? {
            LevelSetRadius::Fixed(d) => Some(d),
            LevelSetRadius::DistanceFromStart => self
                .known_minimizer
                .as_ref()
                .map(|xs| self.metric.distance(x0, xs)),
        }
    }

    /// A seeded random point of `dom h` near the region of interest.
    pub fn sample_point(&self, rng: &mut ChaCha8Rng) -> Vec<f64> {
        let n = self.dim();
        let (center, radius) = match self.composite.kind {
            CompositeKind::BallIndicator { radius } => (vec![0.0; n], radius),
            _ => (
                self.known_minimizer
                    .clone()
                    .unwrap_or_else(|| self.default_start.clone()),
                2.0,
            ),
        };
        loop {
            let u: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
            let nu = self.metric.norm(&u);
            if nu <= 1.0 && nu > 0.0 {
                return linalg::add_scaled(&center, radius, &u);
            }
        }
    }

    /// Derivative and Taylor-residual checks at `points` seeded random points,
    /// for every degree with a finite Lipschitz constant.
    pub fn check_oracle(&self, points: usize, seed: u64) -> Result<OracleHealth> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut health = OracleHealth {
            problem: self.name.clone(),
            points,
            worst_derivatives: DerivativeReport::default(),
            taylor: Vec::new(),
        };
        for i in 0..points {
            let x = self.sample_point(&mut rng);
            let y = self.sample_point(&mut rng);
            let v: Vec<f64> = (0..self.dim()).map(|_| rng.random_range(-1.0..1.0)).collect();
            let rep = check_derivatives(self.function(), &x, 3, seed.wrapping_add(i as u64))?;
            let w = &mut health.worst_derivatives;
            w.trials += rep.trials;
            w.gradient_error = w.gradient_error.max(rep.gradient_error);
            w.hessian_error = w.hessian_error.max(rep.hessian_error);
            w.third_error = w.third_error.max(rep.third_error);
            for degree in [2usize, 3] {
                if let Ok(l) = self.lipschitz(degree) {
                    let t = check_taylor_residuals(
                        self.function(),
                        &self.metric,
                        degree,
                        l,
                        &x,
                        &y,
                        &v,
                    )?;
                    health.taylor.push((degree, t));
                }
            }
        }
        Ok(health)
    }

    /// Monotonicity of `∇f` with every advertised `(q, σ_q)` on random pairs.
    /// `0 ∈ ∂h` everywhere on `dom h` for the catalog, so `∇f` is a valid
    /// choice of subgradient of `F`.
    pub fn check_uniform_convexity(&self, pairs: usize, seed: u64) -> Verification {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let mut out = Verification::new();
        if self.smooth.uniform_convexity.is_empty() {
            out.skip(Inequality::UniformConvexity, "problem advertises no uniform convexity");
            return out;
        }
        let f = self.function();
        for i in 0..pairs {
            let x = self.sample_point(&mut rng);
            let y = self.sample_point(&mut rng);
            let lhs = linalg::dot(
                &linalg::sub(&f.gradient(&x), &f.gradient(&y)),
                &linalg::sub(&x, &y),
            );
            let r = self.metric.distance(&x, &y);
            for uc in &self.smooth.uniform_convexity {
                let rhs = uc.modulus * math::powf(r, uc.degree);
                // stored as rhs ≤ lhs
                out.record(
                    Inequality::UniformConvexity,
                    Some(i),
                    rhs,
                    lhs,
                    1e-12 * lhs.abs().max(1.0),
                );
            }
        }
        out
    }
}

/// Aggregate of [`Problem::check_oracle`].
#[derive(Debug, Clone)]
pub struct OracleHealth {
    pub problem: String,
    pub points: usize,
    pub worst_derivatives: DerivativeReport,
    pub taylor: Vec<(usize, TaylorReport)>,
}

impl OracleHealth {
    pub fn passed(&self) -> bool {
        self.worst_derivatives.passes(FD_TOLERANCE) && self.taylor.iter().all(|(_, t)| t.passed())
    }

    pub fn taylor_violations(&self) -> usize {
        self.taylor.iter().filter(|(_, t)| !t.passed()).count()
    }
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v > 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(alloc::format!("{name} must be positive")))
    }
}

fn nonnegative(name: &str, v: f64) -> Result<()> {
    if v >= 0.0 && v.is_finite() {
        Ok(())
    } else {
        Err(Error::config(alloc::format!("{name} must be nonnegative")))
    }
}

/// Uniform-convexity modulus of `σ₂/2 s² + 2σ₃/3 s³` for degree `q ∈ [2, 3]`.
pub fn interpolated_modulus(sigma2: f64, sigma3: f64, q: f64) -> f64 {
    let nu = q - 2.0;
    math::powf(sigma2, 1.0 - nu) * math::powf(sigma3, nu)
}

/// The constrained two-dimensional example: `f(x) = σ₂/2‖x − x̄‖² +
/// 2σ₃/3‖x − x̄‖³` with `x̄ = (0, −2)` over the unit disk.
pub fn make_ball_example(sigma2: f64, sigma3: f64) -> Result<Problem> {
    positive("sigma2", sigma2)?;
    positive("sigma3", sigma3)?;
    let metric = Metric::identity(2);
    let function = PowerFunction {
        center: vec![0.0, -2.0],
        sigma2,
        sigma3,
        sigma4: 0.0,
        metric: metric.clone(),
    };
    Ok(Problem {
        name: "ball-example".to_string(),
        seed: None,
        smooth: SmoothOracle {
            function: Box::new(function),
            lipschitz_second: Some(4.0 * sigma3),
            lipschitz_third: None,
            uniform_convexity: vec![
                UniformConvexity {
                    degree: 2.0,
                    modulus: sigma2,
                },
                UniformConvexity {
                    degree: 2.5,
                    modulus: interpolated_modulus(sigma2, sigma3, 2.5),
                },
                UniformConvexity {
                    degree: 3.0,
                    modulus: sigma3,
                },
            ],
        },
        composite: CompositePart::ball(2, 1.0)?,
        metric,
        known_minimizer: Some(vec![0.0, -1.0]),
        known_optimal_value: Some(0.5 * sigma2 + 2.0 * sigma3 / 3.0),
        level_set: Some(LevelSetRadius::Fixed(2.0)),
        default_start: vec![1.0, 0.0],
    })
}

/// Replaces the default `(q, σ_q)` by the degree-`q` modulus of the ball
/// example, `q ∈ [2, 3]`.
pub fn select_ball_convexity(problem: &mut Problem, sigma2: f64, sigma3: f64, q: f64) -> Result<()> {
    if !(2.0..=3.0).contains(&q) {
        return Err(Error::config("ball example is uniformly convex for q in [2, 3]"));
    }
    problem.smooth.uniform_convexity.insert(
        0,
        UniformConvexity {
            degree: q,
            modulus: interpolated_modulus(sigma2, sigma3, q),
        },
    );
    Ok(())
}

fn power_problem(
    name: &str,
    metric: Metric,
    anchor: Vec<f64>,
    sigma2: f64,
    sigma3: f64,
    sigma4: f64,
) -> Result<Problem> {
    if anchor.is_empty() {
        return Err(Error::config("dimension must be at least 1"));
    }
    check_dim(metric.dim(), anchor.len())?;
    let n = anchor.len();
    let function = PowerFunction {
        center: anchor.clone(),
        sigma2,
        sigma3,
        sigma4,
        metric: metric.clone(),
    };
    let mut uc = Vec::new();
    if sigma2 > 0.0 {
        uc.push(UniformConvexity {
            degree: 2.0,
            modulus: sigma2,
        });
    }
    if sigma3 > 0.0 && sigma4 == 0.0 {
        uc.push(UniformConvexity {
            degree: 3.0,
            modulus: sigma3,
        });
    }
    let (l2, l3) = match (sigma3 > 0.0, sigma4 > 0.0) {
        (_, false) => (Some(4.0 * sigma3), (sigma3 == 0.0).then_some(0.0)),
        (false, true) => (None, Some(6.0 * sigma4)),
        (true, true) => (None, None),
    };
    let scale = 1.0 / math::sqrt(n as f64);
    let direction: Vec<f64> = (0..n).map(|_| scale).collect();
    let unit = metric.norm(&direction);
    let default_start = linalg::add_scaled(&anchor, 1.0 / unit, &direction);
    Ok(Problem {
        name: name.to_string(),
        seed: None,
        smooth: SmoothOracle {
            function: Box::new(function),
            lipschitz_second: l2,
            lipschitz_third: l3,
            uniform_convexity: uc,
        },
        composite: CompositePart::zero(n),
        metric,
        known_minimizer: Some(anchor),
        known_optimal_value: Some(0.0),
        level_set: Some(LevelSetRadius::DistanceFromStart),
        default_start,
    })
}

/// Unconstrained `σ₂/2‖x − c‖² + 2σ₃/3‖x − c‖³`, minimized at `c` with `F* = 0`.
pub fn make_power_quadratic(dim: usize, sigma2: f64, sigma3: f64, anchor: Vec<f64>) -> Result<Problem> {
    make_power_quadratic_in(Metric::identity(dim), sigma2, sigma3, anchor)
}

/// [`make_power_quadratic`] in an arbitrary metric.
pub fn make_power_quadratic_in(
    metric: Metric,
    sigma2: f64,
    sigma3: f64,
    anchor: Vec<f64>,
) -> Result<Problem> {
    nonnegative("sigma2", sigma2)?;
    nonnegative("sigma3", sigma3)?;
    power_problem("power-quadratic", metric, anchor, sigma2, sigma3, 0.0)
}

/// Unconstrained `σ₂/2‖x − c‖² + σ₄/4‖x − c‖⁴`. Its third derivative is
/// Lipschitz with `L₃ = 6σ₄`, so it serves degree-three runs.
pub fn make_power_quartic(dim: usize, sigma2: f64, sigma4: f64, anchor: Vec<f64>) -> Result<Problem> {
    make_power_quartic_in(Metric::identity(dim), sigma2, sigma4, anchor)
}

pub fn make_power_quartic_in(
    metric: Metric,
    sigma2: f64,
    sigma4: f64,
    anchor: Vec<f64>,
) -> Result<Problem> {
    nonnegative("sigma2", sigma2)?;
    positive("sigma4", sigma4)?;
    power_problem("power-quartic", metric, anchor, sigma2, 0.0, sigma4)
}

/// The power quadratic plus a weighted ℓ1 part. The minimizer is not known
/// in closed form.
pub fn make_power_quadratic_l1(
    dim: usize,
    sigma2: f64,
    sigma3: f64,
    anchor: Vec<f64>,
    weight: f64,
) -> Result<Problem> {
    let mut p = make_power_quadratic(dim, sigma2, sigma3, anchor)?;
    p.name = "power-quadratic-l1".to_string();
    p.composite = CompositePart::l1(dim, weight)?;
    p.known_minimizer = None;
    p.known_optimal_value = None;
    p.level_set = None;
    Ok(p)
}

/// Seeded anchor with coordinates in `[-1, 1]`.
pub fn seeded_anchor(dim: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect()
}

fn logsumexp_problem(name: &str, lse: LogSumExp, radius: f64, seed: Option<u64>) -> Result<Problem> {
    let n = lse.dim();
    let metric = Metric::identity(n);
    let alpha = lse.row_scale(&metric);
    let mut start = vec![0.0; n];
    start[0] = 0.9 * radius;
    Ok(Problem {
        name: name.to_string(),
        seed,
        smooth: SmoothOracle {
            function: Box::new(lse),
            // cumulant bounds for values in [-α‖h‖, α‖h‖]
            lipschitz_second: Some(2.0 * alpha * alpha * alpha),
            lipschitz_third: Some(4.0 * alpha * alpha * alpha * alpha),
            uniform_convexity: Vec::new(),
        },
        composite: CompositePart::ball(n, radius)?,
        metric,
        known_minimizer: None,
        known_optimal_value: None,
        level_set: Some(LevelSetRadius::Fixed(2.0 * radius)),
        default_start: start,
    })
}

/// Log-sum-exp of `2·dim` seeded affine terms over a ball of the given radius.
pub fn make_logsumexp_ball(dim: usize, data_seed: u64, radius: f64) -> Result<Problem> {
    if dim < 2 {
        return Err(Error::config("log-sum-exp problems need dim >= 2"));
    }
    positive("radius", radius)?;
    let mut rng = ChaCha8Rng::seed_from_u64(data_seed);
    let m = 2 * dim;
    let rows: Vec<Vec<f64>> = (0..m)
        .map(|_| (0..dim).map(|_| rng.random_range(-1.0..1.0)).collect())
        .collect();
    let offsets: Vec<f64> = (0..m).map(|_| rng.random_range(-1.0..1.0)).collect();
    logsumexp_problem("logsumexp-ball", LogSumExp { rows, offsets }, radius, Some(data_seed))
}

/// Log-sum-exp of the `2·dim` terms `±x⁽ʲ⁾`, minimized at the origin with
/// `F* = log(2·dim)`.
pub fn make_logsumexp_symmetric(dim: usize, radius: f64) -> Result<Problem> {
    if dim < 2 {
        return Err(Error::config("log-sum-exp problems need dim >= 2"));
    }
    positive("radius", radius)?;
    let mut rows = Vec::with_capacity(2 * dim);
    for j in 0..dim {
        for s in [1.0, -1.0] {
            let mut a = vec![0.0; dim];
            a[j] = s;
            rows.push(a);
        }
    }
    let offsets = vec![0.0; 2 * dim];
    let mut p = logsumexp_problem("logsumexp-symmetric", LogSumExp { rows, offsets }, radius, None)?;
    p.known_minimizer = Some(vec![0.0; dim]);
    p.known_optimal_value = Some(math::ln(2.0 * dim as f64));
    Ok(p)
}
