//! One regularized composite tensor step
//! `T = argmin_y Ω_p(f, x; y) + H/(p+1)!‖y − x‖^{p+1} + h(y)`
//! with its subgradient `F′(T)` and certificate.

mod bregman;
mod certificate;
mod first_order;
mod secular;

use alloc::vec::Vec;

use crate::composite::CompositePart;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Cholesky, Matrix};
use crate::math;
use crate::metric::Metric;
use crate::oracle::{SmoothFunction, TaylorModel};

pub use certificate::{
    lemma_constant, lemma_constant_at_p, verify_step, StepCertificate, CERTIFICATE_SLACK,
};
pub(crate) use certificate::{
    GRADIENT_ROUNDING,
};

/// Inner solver for the step subproblem.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum Subsolver {
    /// Secular for `p = 2, h = 0`, Bregman for `p = 3`, first-order otherwise.
    Auto,
    Secular,
    FirstOrder,
    Bregman,
}

impl Subsolver {
    pub fn name(self) -> &'static str {
        match self {
            Subsolver::Auto => "auto",
            Subsolver::Secular => "secular",
            Subsolver::FirstOrder => "first_order",
            Subsolver::Bregman => "bregman",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [
            Subsolver::Auto,
            Subsolver::Secular,
            Subsolver::FirstOrder,
            Subsolver::Bregman,
        ]
        .into_iter()
        .find(|v| v.name() == s)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepConfig {
    pub degree: usize,
    /// `L_p` of the smooth part.
    pub lipschitz: f64,
    /// `H`.
    pub regularization: f64,
    pub subsolver: Subsolver,
    /// Dual-norm target for a model subgradient at `T`; `None` selects
    /// `1e-10·max(1, ‖∇f(x)‖_*)` per step.
    pub inner_tolerance: Option<f64>,
    pub max_inner_iterations: usize,
}

pub const DEFAULT_MAX_INNER: usize = 10_000;

impl StepConfig {
    /// `H = pL_p`.
    pub fn new(degree: usize, lipschitz: f64) -> Result<Self> {
        if !(2..=3).contains(&degree) {
            return Err(Error::config("degree must be 2 or 3"));
        }
        if !(lipschitz >= 0.0 && lipschitz.is_finite()) {
            return Err(Error::config("Lipschitz constant must be finite and nonnegative"));
        }
        Ok(Self {
            degree,
            lipschitz,
            regularization: degree as f64 * lipschitz,
            subsolver: Subsolver::Auto,
            inner_tolerance: None,
            max_inner_iterations: DEFAULT_MAX_INNER,
        })
    }

    pub fn with_regularization(mut self, h: f64) -> Result<Self> {
        let min = self.degree as f64 * self.lipschitz;
        if !(h.is_finite() && h >= min * (1.0 - 1e-12)) {
            return Err(Error::config(alloc::format!(
                "H = {h} is below p·L_p = {min}; the step subproblem would be nonconvex"
            )));
        }
        self.regularization = h;
        Ok(self)
    }

    pub fn with_subsolver(mut self, s: Subsolver) -> Self {
        self.subsolver = s;
        self
    }

    pub fn with_inner_tolerance(mut self, tol: f64) -> Result<Self> {
        if !(tol > 0.0) {
            return Err(Error::config("inner tolerance must be positive"));
        }
        self.inner_tolerance = Some(tol);
        Ok(self)
    }

    pub fn with_max_inner_iterations(mut self, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(Error::config("max inner iterations must be positive"));
        }
        self.max_inner_iterations = n;
        Ok(self)
    }

    /// `β = H / L_p`, undefined for `L_p = 0`.
    pub fn beta(&self) -> Option<f64> {
        (self.lipschitz > 0.0).then(|| self.regularization / self.lipschitz)
    }

    /// The subsolver `Auto` resolves to for this composite part.
    pub fn resolved_subsolver(&self, composite: &CompositePart) -> Subsolver {
        match self.subsolver {
            Subsolver::Auto => {
                if self.degree == 2 && composite.is_zero() {
                    Subsolver::Secular
                } else if self.degree == 3 {
                    Subsolver::Bregman
                } else {
                    Subsolver::FirstOrder
                }
            }
            s => s,
        }
    }
}

/// The data a step needs: smooth part, composite part and metric.
#[derive(Clone, Copy)]
pub struct StepProblem<'a> {
    pub function: &'a dyn SmoothFunction,
    pub composite: &'a CompositePart,
    pub metric: &'a Metric,
}

impl core::fmt::Debug for StepProblem<'_> {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        f.debug_struct("StepProblem")
            .field("dim", &self.function.dim())
            .field("composite", self.composite)
            .finish()
    }
}

impl crate::problems::Problem {
    pub fn step_problem(&self) -> StepProblem<'_> {
        StepProblem {
            function: self.function(),
            composite: &self.composite,
            metric: &self.metric,
        }
    }
}

/// Smooth part of the step subproblem,
/// `φ(y) = Ω_p(f, x; y) + H/(p+1)!‖y − x‖^{p+1}`.
pub(crate) struct RegularizedModel<'a> {
    pub taylor: TaylorModel<'a>,
    pub metric: &'a Metric,
    pub composite: &'a CompositePart,
    pub regularization: f64,
}

impl RegularizedModel<'_> {
    pub fn degree(&self) -> usize {
        self.taylor.degree()
    }

    pub fn anchor(&self) -> &[f64] {
        self.taylor.anchor()
    }

    fn reg_coef(&self) -> f64 {
        self.regularization / math::factorial(self.degree())
    }

    #[cfg(test)]
    pub fn value(&self, y: &[f64]) -> f64 {
        let r = self.metric.distance(y, self.anchor());
        self.taylor.value_at(y)
            + self.regularization / math::factorial(self.degree() + 1)
                * math::powi(r, self.degree() as i32 + 1)
    }

    pub fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let d = linalg::sub(y, self.anchor());
        let r = self.metric.norm(&d);
        let mut g = self.taylor.gradient_at(y);
        let coef = self.reg_coef() * math::powi(r, self.degree() as i32 - 1);
        linalg::axpy(coef, &self.metric.apply(&d), &mut g);
        g
    }

    pub fn hessian_apply(&self, y: &[f64], v: &[f64]) -> Vec<f64> {
        let d = linalg::sub(y, self.anchor());
        let bd = self.metric.apply(&d);
        let r = self.metric.norm(&d);
        let p = self.degree() as i32;
        let mut out = self.taylor.hessian_apply(y, v);
        let c = self.reg_coef();
        linalg::axpy(c * math::powi(r, p - 1), &self.metric.apply(v), &mut out);
        if r > 0.0 {
            let k = c * (p - 1) as f64 * math::powi(r, p - 3) * linalg::dot(&bd, v);
            linalg::axpy(k, &bd, &mut out);
        }
        out
    }

    pub fn hessian(&self, y: &[f64]) -> Matrix {
        let mut m = Matrix::from_columns_of(y.len(), |e| self.hessian_apply(y, e));
        m.symmetrize();
        m
    }
}

/// Subsolver output: a point of `dom h` and an exact subgradient of `h` there.
#[derive(Debug, Clone)]
pub(crate) struct InnerSolution {
    pub point: Vec<f64>,
    pub h_subgradient: Vec<f64>,
    pub residual: f64,
    pub iterations: usize,
    pub trajectory: Vec<Vec<f64>>,
}

/// Keeps a thinned copy of the inner iterates.
pub(crate) fn keep_iterate(trajectory: &mut Vec<Vec<f64>>, t: usize, y: &[f64]) {
    if trajectory.len() < 40 && (t < 10 || t % 50 == 0) {
        trajectory.push(y.to_vec());
    }
}

#[derive(Debug, Clone)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepOutcome {
    pub point: Vec<f64>,
    pub gradient: Vec<f64>,
    /// `h′(T)`, an exact subgradient of `h` at `T`.
    pub h_subgradient: Vec<f64>,
    /// `F′(T) = ∇f(T) + h′(T)`.
    pub fprime: Vec<f64>,
    pub subsolver: Subsolver,
    pub certificate: StepCertificate,
    /// Sampled inner iterates, for the convexity probe.
    pub trajectory: Vec<Vec<f64>>,
}

/// Default inner tolerance `1e-10·max(1, ‖∇f(x)‖_*)`.
pub fn default_inner_tolerance(gradient_dual_norm: f64) -> f64 {
    1e-10 * gradient_dual_norm.max(1.0)
}

/// Computes `T_H(x)`, builds `F′(T)` and its certificate.
pub fn solve_step(problem: &StepProblem<'_>, x: &[f64], config: &StepConfig) -> Result<StepOutcome> {
    let f = problem.function;
    check_dim(f.dim(), x.len())?;
    check_dim(problem.metric.dim(), x.len())?;
    let p = config.degree;
    if !(2..=3).contains(&p) {
        return Err(Error::config("degree must be 2 or 3"));
    }
    if config.regularization < p as f64 * config.lipschitz * (1.0 - 1e-12) {
        return Err(Error::config("H must be at least p·L_p"));
    }
    let fx = match problem.composite.value(x, problem.metric).finite() {
        Some(h) => f.value(x) + h,
        None => return Err(Error::domain("step anchor lies outside dom h")),
    };
    let subsolver = config.resolved_subsolver(problem.composite);
    if subsolver == Subsolver::Secular && (p != 2 || !problem.composite.is_zero()) {
        return Err(Error::config("the secular subsolver needs p = 2 and h = 0"));
    }
    if subsolver == Subsolver::Bregman && p != 3 {
        return Err(Error::config("the Bregman subsolver needs p = 3"));
    }
    let model = RegularizedModel {
        taylor: TaylorModel::new(f, x, p)?,
        metric: problem.metric,
        composite: problem.composite,
        regularization: config.regularization,
    };
    let g0 = problem.metric.dual(model.taylor.anchor_gradient());
    let tol = config
        .inner_tolerance
        .unwrap_or_else(|| default_inner_tolerance(g0));
    let grad_x = model.taylor.anchor_gradient();
    let at_anchor = problem
        .composite
        .minimal_subgradient(grad_x, x, problem.metric)
        .ok()
        .flatten()
        .filter(|v| problem.metric.dual(v) <= tol);
    let sol = match (at_anchor, subsolver) {
        (Some(v), _) => InnerSolution {
            point: x.to_vec(),
            h_subgradient: linalg::sub(&v, grad_x),
            residual: problem.metric.dual(&v),
            iterations: 0,
            trajectory: alloc::vec![x.to_vec()],
        },
        (None, Subsolver::Secular) => secular::solve(&model, tol)?,
        (None, Subsolver::FirstOrder) => first_order::solve(&model, tol, config.max_inner_iterations)?,
        (None, Subsolver::Bregman) => bregman::solve(&model, tol, config.max_inner_iterations)?,
        (None, Subsolver::Auto) => unreachable!("resolved above"),
    };
    if !(sol.residual <= tol) {
        return Err(Error::NonConvergence {
            iterations: sol.iterations,
            residual: sol.residual,
            best: sol.point,
        });
    }
    let t = sol.point;
    let gradient = f.gradient(&t);
    let fprime = linalg::add(&gradient, &sol.h_subgradient);
    let ft = f.value(&t) + problem.composite.value(&t, problem.metric).to_f64();
    let d = linalg::sub(x, &t);
    let certificate = StepCertificate {
        degree: p,
        lipschitz: config.lipschitz,
        regularization: config.regularization,
        step_norm: problem.metric.norm(&d),
        fprime_norm: problem.metric.dual(&fprime),
        inner_product: linalg::dot(&fprime, &d),
        residual: sol.residual,
        inner_tolerance: tol,
        inner_iterations: sol.iterations,
        value_before: fx,
        value_after: ft,
        gradient_scale: g0.max(problem.metric.dual(&gradient)),
    };
    Ok(StepOutcome {
        point: t,
        gradient,
        h_subgradient: sol.h_subgradient,
        fprime,
        subsolver,
        certificate,
        trajectory: sol.trajectory,
    })
}

/// Whether the regularized-model Hessian at each point passes the shifted
/// Cholesky test `∇²φ(y) + 1e-8·max(1, ‖∇²φ(y)‖)·B ≻ 0`. Returns the number
/// of points probed and the number that failed.
pub fn model_convexity_probe(
    problem: &StepProblem<'_>,
    x: &[f64],
    config: &StepConfig,
    points: &[Vec<f64>],
) -> Result<(usize, usize)> {
    let model = RegularizedModel {
        taylor: TaylorModel::new(problem.function, x, config.degree)?,
        metric: problem.metric,
        composite: problem.composite,
        regularization: config.regularization,
    };
    let b = problem.metric.matrix();
    let mut failed = 0;
    for y in points.iter().take(20) {
        let m = model.hessian(y);
        let scale = m.rows().iter().flatten().fold(0.0f64, |a, v| a.max(v.abs()));
        let shifted = m.add_scaled(1e-8 * scale.max(1.0), &b);
        if Cholesky::factor(&shifted).is_err() {
            failed += 1;
        }
    }
    Ok((points.len().min(20), failed))
}

#[cfg(test)]
mod tests;
