//! Smooth-part oracles, the Taylor model of degree `p` and oracle self-checks.

use alloc::boxed::Box;
use alloc::vec;
use alloc::vec::Vec;
use core::cell::Cell;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Matrix};
use crate::math::{self, factorial};
use crate::metric::Metric;
use crate::report::Inequality;

/// Derivatives of the smooth part `f` up to third order.
///
/// The third derivative is only exposed in directional form: `third_apply`
/// returns the dual vector `D³f(x)[h]²`, and `third_bilinear` the dual vector
/// `D³f(x)[h, v]`.
pub trait SmoothFunction {
    fn dim(&self) -> usize;

    fn value(&self, x: &[f64]) -> f64;

    fn gradient(&self, x: &[f64]) -> Vec<f64>;

    fn hessian_apply(&self, x: &[f64], v: &[f64]) -> Vec<f64>;

    fn third_apply(&self, x: &[f64], h: &[f64]) -> Vec<f64>;

    /// Full Hessian matrix, assembled from Hessian-vector products.
    fn hessian(&self, x: &[f64]) -> Matrix {
        let mut m = Matrix::from_columns_of(self.dim(), |e| self.hessian_apply(x, e));
        m.symmetrize();
        m
    }

    /// `D³f(x)[h, v]` by polarization of the directional form.
    fn third_bilinear(&self, x: &[f64], h: &[f64], v: &[f64]) -> Vec<f64> {
        let nh = linalg::norm2(h);
        let nv = linalg::norm2(v);
        if nh == 0.0 || nv == 0.0 {
            return vec![0.0; h.len()];
        }
        // rescale v to the size of h before polarizing
        let s = nh / nv;
        let sv = linalg::scaled(v, s);
        let plus = self.third_apply(x, &linalg::add(h, &sv));
        let minus = self.third_apply(x, &linalg::sub(h, &sv));
        plus.iter()
            .zip(&minus)
            .map(|(a, b)| (a - b) / (4.0 * s))
            .collect()
    }
}

/// Per-order evaluation counts of a [`CountingOracle`].
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OracleCounts {
    pub value: u64,
    pub gradient: u64,
    pub hessian: u64,
    pub third: u64,
}

/// Wraps a function and counts evaluations of every derivative order. One
/// full Hessian assembly counts as a single Hessian evaluation.
pub struct CountingOracle<'a> {
    inner: &'a dyn SmoothFunction,
    value: Cell<u64>,
    gradient: Cell<u64>,
    hessian: Cell<u64>,
    third: Cell<u64>,
}

impl core::fmt::Debug for CountingOracle<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("CountingOracle")
            .field("counts", &self.counts())
            .finish()
    }
}

impl<'a> CountingOracle<'a> {
    pub fn new(inner: &'a dyn SmoothFunction) -> Self {
        Self {
            inner,
            value: Cell::new(0),
            gradient: Cell::new(0),
            hessian: Cell::new(0),
            third: Cell::new(0),
        }
    }

    pub fn counts(&self) -> OracleCounts {
        OracleCounts {
            value: self.value.get(),
            gradient: self.gradient.get(),
            hessian: self.hessian.get(),
            third: self.third.get(),
        }
    }
}

fn bump(c: &Cell<u64>) {
    c.set(c.get() + 1);
}

impl SmoothFunction for CountingOracle<'_> {
    fn dim(&self) -> usize {
        self.inner.dim()
    }
    fn value(&self, x: &[f64]) -> f64 {
        bump(&self.value);
        self.inner.value(x)
    }
    fn gradient(&self, x: &[f64]) -> Vec<f64> {
        bump(&self.gradient);
        self.inner.gradient(x)
    }
    fn hessian_apply(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        bump(&self.hessian);
        self.inner.hessian_apply(x, v)
    }
    fn hessian(&self, x: &[f64]) -> Matrix {
        bump(&self.hessian);
        self.inner.hessian(x)
    }
    fn third_apply(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
        bump(&self.third);
        self.inner.third_apply(x, h)
    }
    fn third_bilinear(&self, x: &[f64], h: &[f64], v: &[f64]) -> Vec<f64> {
        bump(&self.third);
        self.inner.third_bilinear(x, h, v)
    }
}

/// Uniform convexity of degree `q` with modulus `sigma`:
/// `⟨G_x − G_y, x − y⟩ ≥ σ‖x − y‖^q`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct UniformConvexity {
    pub degree: f64,
    pub modulus: f64,
}

/// A smooth part together with its analytic constants.
pub struct SmoothOracle {
    pub function: Box<dyn SmoothFunction + Send + Sync>,
    /// Lipschitz constant of the second derivative, when finite.
    pub lipschitz_second: Option<f64>,
    /// Lipschitz constant of the third derivative, when finite.
    pub lipschitz_third: Option<f64>,
    /// Every `(q, σ_q)` pair the function satisfies; the first is the default.
    pub uniform_convexity: Vec<UniformConvexity>,
}

impl core::fmt::Debug for SmoothOracle {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("SmoothOracle")
            .field("dim", &self.function.dim())
            .field("lipschitz_second", &self.lipschitz_second)
            .field("lipschitz_third", &self.lipschitz_third)
            .field("uniform_convexity", &self.uniform_convexity)
            .finish()
    }
}

impl SmoothOracle {
    pub fn dim(&self) -> usize {
        self.function.dim()
    }

    /// `L_p` for `p ∈ {2, 3}`.
    pub fn lipschitz(&self, degree: usize) -> Result<f64> {
        let l = match degree {
            2 => self.lipschitz_second,
            3 => self.lipschitz_third,
            _ => return Err(Error::config("degree must be 2 or 3")),
        };
        l.ok_or_else(|| {
            Error::config(alloc::format!(
                "this smooth part has no finite Lipschitz constant for degree {degree}"
            ))
        })
    }

    /// Highest degree with a finite Lipschitz constant.
    pub fn max_degree(&self) -> usize {
        if self.lipschitz_third.is_some() {
            3
        } else {
            2
        }
    }
}

/// Degree-`p` Taylor polynomial `Ω_p(f, x; ·)` anchored at `x`.
pub struct TaylorModel<'a> {
    function: &'a dyn SmoothFunction,
    degree: usize,
    anchor: Vec<f64>,
    value: f64,
    gradient: Vec<f64>,
    hessian: Matrix,
}

impl core::fmt::Debug for TaylorModel<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("TaylorModel")
            .field("degree", &self.degree)
            .field("anchor", &self.anchor)
            .field("value", &self.value)
            .finish()
    }
}

impl<'a> TaylorModel<'a> {
    pub fn new(function: &'a dyn SmoothFunction, anchor: &[f64], degree: usize) -> Result<Self> {
        check_dim(function.dim(), anchor.len())?;
        if !(2..=3).contains(&degree) {
            return Err(Error::config("Taylor model degree must be 2 or 3"));
        }
        Ok(Self {
            function,
            degree,
            anchor: anchor.to_vec(),
            value: function.value(anchor),
            gradient: function.gradient(anchor),
            hessian: function.hessian(anchor),
        })
    }

    pub fn degree(&self) -> usize {
        self.degree
    }
    pub fn anchor(&self) -> &[f64] {
        &self.anchor
    }
    pub fn anchor_value(&self) -> f64 {
        self.value
    }
    pub fn anchor_gradient(&self) -> &[f64] {
        &self.gradient
    }
    pub fn anchor_hessian(&self) -> &Matrix {
        &self.hessian
    }
    pub fn function(&self) -> &'a dyn SmoothFunction {
        self.function
    }

    fn offset(&self, y: &[f64]) -> Vec<f64> {
        linalg::sub(y, &self.anchor)
    }

    pub fn value_at(&self, y: &[f64]) -> f64 {
        let d = self.offset(y);
        let hd = self.hessian.mul_vec(&d);
        let mut v = self.value + linalg::dot(&self.gradient, &d) + 0.5 * linalg::dot(&hd, &d);
        if self.degree == 3 {
            let t = self.function.third_apply(&self.anchor, &d);
            v += linalg::dot(&t, &d) / 6.0;
        }
        v
    }

    pub fn gradient_at(&self, y: &[f64]) -> Vec<f64> {
        let d = self.offset(y);
        let mut g = linalg::add(&self.gradient, &self.hessian.mul_vec(&d));
        if self.degree == 3 {
            let t = self.function.third_apply(&self.anchor, &d);
            linalg::axpy(0.5, &t, &mut g);
        }
        g
    }

    pub fn hessian_apply(&self, y: &[f64], v: &[f64]) -> Vec<f64> {
        let mut out = self.hessian.mul_vec(v);
        if self.degree == 3 {
            let d = self.offset(y);
            let t = self.function.third_bilinear(&self.anchor, &d, v);
            linalg::axpy(1.0, &t, &mut out);
        }
        out
    }

    /// Model Hessian at `y` as a dense matrix.
    pub fn hessian_at(&self, y: &[f64]) -> Matrix {
        if self.degree == 2 {
            return self.hessian.clone();
        }
        let mut m = Matrix::from_columns_of(self.anchor.len(), |e| self.hessian_apply(y, e));
        m.symmetrize();
        m
    }
}

fn random_direction(rng: &mut ChaCha8Rng, n: usize) -> Vec<f64> {
    let mut h: Vec<f64> = (0..n).map(|_| rng.random_range(-1.0..1.0)).collect();
    let nh = linalg::norm2(&h);
    if nh > 0.0 {
        h.iter_mut().for_each(|v| *v /= nh);
    }
    h
}

/// Finite-difference step of the derivative self-check.
pub const FD_STEP: f64 = 1e-5;
/// Tolerance on the scaled finite-difference mismatch.
pub const FD_TOLERANCE: f64 = 1e-5;

/// Worst finite-difference mismatch per derivative order.
#[derive(Debug, Clone, Copy, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct DerivativeReport {
    pub trials: usize,
    pub gradient_error: f64,
    pub hessian_error: f64,
    pub third_error: f64,
}

impl DerivativeReport {
    pub fn passes(&self, tol: f64) -> bool {
        self.failures(tol).is_empty()
    }

    /// Names of the derivative orders whose mismatch exceeds `tol`.
    pub fn failures(&self, tol: f64) -> Vec<&'static str> {
        let mut out = Vec::new();
        if !(self.gradient_error <= tol) {
            out.push("gradient");
        }
        if !(self.hessian_error <= tol) {
            out.push("hessian");
        }
        if !(self.third_error <= tol) {
            out.push("third derivative");
        }
        out
    }
}

/// Central differences of `f` against `∇f`, of `∇f` against `∇²f·h`, and of
/// `∇²f·h` against `D³f[h]²`, along `trials` seeded random unit directions.
/// Errors are scaled by `max(1, |analytic|)`.
pub fn check_derivatives(
    f: &dyn SmoothFunction,
    x: &[f64],
    trials: usize,
    seed: u64,
) -> Result<DerivativeReport> {
    check_dim(f.dim(), x.len())?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let eps = FD_STEP;
    let mut report = DerivativeReport {
        trials,
        ..Default::default()
    };
    for _ in 0..trials {
        let h = random_direction(&mut rng, x.len());
        let xp = linalg::add_scaled(x, eps, &h);
        let xm = linalg::add_scaled(x, -eps, &h);

        let fd = (f.value(&xp) - f.value(&xm)) / (2.0 * eps);
        let an = linalg::dot(&f.gradient(x), &h);
        report.gradient_error = report.gradient_error.max((fd - an).abs() / an.abs().max(1.0));

        let fd = linalg::scaled(&linalg::sub(&f.gradient(&xp), &f.gradient(&xm)), 0.5 / eps);
        let an = f.hessian_apply(x, &h);
        let err = linalg::max_abs(&linalg::sub(&fd, &an)) / linalg::max_abs(&an).max(1.0);
        report.hessian_error = report.hessian_error.max(err);

        let fd = linalg::scaled(
            &linalg::sub(&f.hessian_apply(&xp, &h), &f.hessian_apply(&xm, &h)),
            0.5 / eps,
        );
        let an = f.third_apply(x, &h);
        let err = linalg::max_abs(&linalg::sub(&fd, &an)) / linalg::max_abs(&an).max(1.0);
        report.third_error = report.third_error.max(err);
    }
    Ok(report)
}

/// Multiplicative slack on the Taylor residual bounds.
pub const TAYLOR_SLACK: f64 = 1e-8;
/// Absolute rounding allowance, relative to the magnitude of the compared quantity.
pub const TAYLOR_ROUNDING: f64 = 1e-12;

/// Residuals of the degree-`p` Taylor model against the bounds implied by a
/// Lipschitz `p`-th derivative.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct TaylorReport {
    pub distance: f64,
    pub value_residual: f64,
    pub value_bound: f64,
    pub gradient_residual: f64,
    pub gradient_bound: f64,
    pub hessian_residual: f64,
    pub hessian_bound: f64,
    pub violations: Vec<Inequality>,
}

impl TaylorReport {
    pub fn passed(&self) -> bool {
        self.violations.is_empty()
    }
}

/// Checks `|f(y) − Ω_p(y)|`, `‖∇f(y) − ∇Ω_p(y)‖_*` and, along `v`,
/// `‖(∇²f(y) − ∇²Ω_p(y))v‖_*` against `L_p / (p+1−j)! · ‖y − x‖^{p+1−j}`.
pub fn check_taylor_residuals(
    f: &dyn SmoothFunction,
    metric: &Metric,
    degree: usize,
    lipschitz: f64,
    x: &[f64],
    y: &[f64],
    v: &[f64],
) -> Result<TaylorReport> {
    check_dim(f.dim(), y.len())?;
    check_dim(f.dim(), v.len())?;
    let model = TaylorModel::new(f, x, degree)?;
    let p = degree;
    let r = metric.distance(y, x);

    let fy = f.value(y);
    let value_residual = (fy - model.value_at(y)).abs();
    let value_bound = lipschitz / factorial(p + 1) * math::powi(r, (p + 1) as i32);

    let gy = f.gradient(y);
    let gradient_residual = metric.dual(&linalg::sub(&gy, &model.gradient_at(y)));
    let gradient_bound = lipschitz / factorial(p) * math::powi(r, p as i32);

    let hy = f.hessian_apply(y, v);
    let hessian_residual = metric.dual(&linalg::sub(&hy, &model.hessian_apply(y, v)));
    let hessian_bound =
        lipschitz / factorial(p - 1) * math::powi(r, (p - 1) as i32) * metric.norm(v);

    let within = |res: f64, bound: f64, scale: f64| {
        res <= bound * (1.0 + TAYLOR_SLACK) + TAYLOR_ROUNDING * scale.max(1.0)
    };
    let mut violations = Vec::new();
    if !within(value_residual, value_bound, fy.abs()) {
        violations.push(Inequality::TaylorValue);
    }
    if !within(gradient_residual, gradient_bound, metric.dual(&gy)) {
        violations.push(Inequality::TaylorGradient);
    }
    if !within(hessian_residual, hessian_bound, metric.dual(&hy)) {
        violations.push(Inequality::TaylorHessian);
    }
    Ok(TaylorReport {
        distance: r,
        value_residual,
        value_bound,
        gradient_residual,
        gradient_bound,
        hessian_residual,
        hessian_bound,
        violations,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    /// f(x) = c·x⁴ in one dimension.
    struct Quartic1d(f64);
    impl SmoothFunction for Quartic1d {
        fn dim(&self) -> usize {
            1
        }
        fn value(&self, x: &[f64]) -> f64 {
            self.0 * x[0].powi(4)
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            vec![4.0 * self.0 * x[0].powi(3)]
        }
        fn hessian_apply(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
            vec![12.0 * self.0 * x[0] * x[0] * v[0]]
        }
        fn third_apply(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
            vec![24.0 * self.0 * x[0] * h[0] * h[0]]
        }
    }

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
        fn hessian_apply(&self, _x: &[f64], v: &[f64]) -> Vec<f64> {
            self.q.mul_vec(v)
        }
        fn third_apply(&self, _x: &[f64], h: &[f64]) -> Vec<f64> {
            vec![0.0; h.len()]
        }
    }

    fn quadratic() -> Quadratic {
        Quadratic {
            q: Matrix::from_rows(&[vec![2.0, 0.5], vec![0.5, 1.0]]).unwrap(),
            c: vec![1.0, -1.0],
        }
    }

    #[test]
    fn model_at_anchor_reproduces_function() {
        let f = Quartic1d(1.0);
        for p in [2, 3] {
            let m = TaylorModel::new(&f, &[1.3], p).unwrap();
            assert_eq!(m.value_at(&[1.3]), f.value(&[1.3]));
            assert_eq!(m.gradient_at(&[1.3]), f.gradient(&[1.3]));
        }
    }

    #[test]
    fn quartic_expansion_values() {
        let f = Quartic1d(1.0);
        let m2 = TaylorModel::new(&f, &[1.0], 2).unwrap();
        // 1 + 4·1 + ½·12·1
        assert!((m2.value_at(&[2.0]) - 11.0).abs() < 1e-14);
        assert!((m2.gradient_at(&[2.0])[0] - 16.0).abs() < 1e-14);
        let m3 = TaylorModel::new(&f, &[1.0], 3).unwrap();
        assert!((m3.hessian_apply(&[2.0], &[1.0])[0] - 36.0).abs() < 1e-12);
        // p = 3 Hessian at the anchor is just ∇²f
        assert!((m3.hessian_apply(&[1.0], &[1.0])[0] - 12.0).abs() < 1e-12);
        assert!((m2.hessian_apply(&[5.0], &[2.0])[0] - 24.0).abs() < 1e-12);
    }

    #[test]
    fn quadratic_is_its_own_model() {
        let f = quadratic();
        let m = TaylorModel::new(&f, &[0.3, -0.7], 2).unwrap();
        for y in [[1.0, 2.0], [-3.0, 0.5], [10.0, -10.0]] {
            assert!((m.value_at(&y) - f.value(&y)).abs() < 1e-12);
            let d = linalg::sub(&m.gradient_at(&y), &f.gradient(&y));
            assert!(linalg::norm2(&d) < 1e-12);
        }
        let half = TaylorModel::new(&Quartic1d(0.0), &[0.0], 2).unwrap();
        assert_eq!(half.value_at(&[3.0]), 0.0);
    }

    #[test]
    fn model_derivatives_agree_with_finite_differences() {
        let f = Quartic1d(0.7);
        let m = TaylorModel::new(&f, &[0.9], 3).unwrap();
        let y = 1.6;
        let eps = FD_STEP;
        let fd = (m.value_at(&[y + eps]) - m.value_at(&[y - eps])) / (2.0 * eps);
        assert!((fd - m.gradient_at(&[y])[0]).abs() < 1e-6);
        let fd = (m.gradient_at(&[y + eps])[0] - m.gradient_at(&[y - eps])[0]) / (2.0 * eps);
        assert!((fd - m.hessian_apply(&[y], &[1.0])[0]).abs() < 1e-6);
    }

    #[test]
    fn quadratic_derivative_check_is_exact() {
        let f = quadratic();
        let rep = check_derivatives(&f, &[0.4, -1.2], 10, 3).unwrap();
        assert!(rep.gradient_error < 1e-8, "{rep:?}");
        assert!(rep.hessian_error < 1e-8, "{rep:?}");
        assert!(rep.third_error < 1e-8, "{rep:?}");
    }

    struct WrongGradient(Quadratic);
    impl SmoothFunction for WrongGradient {
        fn dim(&self) -> usize {
            self.0.dim()
        }
        fn value(&self, x: &[f64]) -> f64 {
            self.0.value(x)
        }
        fn gradient(&self, x: &[f64]) -> Vec<f64> {
            linalg::scaled(&self.0.gradient(x), 1.1)
        }
        fn hessian_apply(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
            self.0.hessian_apply(x, v)
        }
        fn third_apply(&self, x: &[f64], h: &[f64]) -> Vec<f64> {
            self.0.third_apply(x, h)
        }
    }

    #[test]
    fn wrong_gradient_is_flagged() {
        let f = WrongGradient(quadratic());
        let rep = check_derivatives(&f, &[0.4, -1.2], 5, 1).unwrap();
        assert!(rep.failures(FD_TOLERANCE).contains(&"gradient"));
    }

    #[test]
    fn quadratic_taylor_residuals_vanish() {
        let f = quadratic();
        let b = Metric::identity(2);
        let rep = check_taylor_residuals(&f, &b, 2, 0.0, &[1.0, 1.0], &[-2.0, 3.0], &[0.3, 0.1])
            .unwrap();
        assert!(rep.passed());
        assert!(rep.value_residual < 1e-12 && rep.gradient_residual < 1e-12);
    }

    #[test]
    fn understated_lipschitz_constant_is_reported() {
        // x⁴ on [0, 2]: third derivative 24x, Lipschitz constant 24
        let f = Quartic1d(1.0);
        let b = Metric::identity(1);
        let ok = check_taylor_residuals(&f, &b, 2, 48.0, &[0.5], &[1.5], &[1.0]).unwrap();
        assert!(ok.passed(), "{ok:?}");
        let bad = check_taylor_residuals(&f, &b, 3, 1.0, &[0.5], &[1.5], &[1.0]).unwrap();
        assert!(bad.violations.contains(&Inequality::TaylorValue));
        let inflated = check_taylor_residuals(&f, &b, 3, 240.0, &[0.5], &[1.5], &[1.0]).unwrap();
        assert!(inflated.passed());
        assert!(inflated.value_bound - inflated.value_residual > 0.0);
    }

    #[test]
    fn counting_oracle_counts_each_order_once() {
        let f = quadratic();
        let c = CountingOracle::new(&f);
        let x = [0.1, 0.2];
        c.value(&x);
        assert_eq!(c.counts().value, 1);
        c.gradient(&x);
        assert_eq!(c.counts().gradient, 1);
        c.hessian(&x);
        assert_eq!(c.counts().hessian, 1);
        c.hessian_apply(&x, &x);
        assert_eq!(c.counts().hessian, 2);
        c.third_apply(&x, &x);
        assert_eq!(
            c.counts(),
            OracleCounts {
                value: 1,
                gradient: 1,
                hessian: 2,
                third: 1
            }
        );
    }
}
