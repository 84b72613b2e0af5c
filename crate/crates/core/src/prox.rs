//! Inexact proximal point method with tensor-step inner loops.
//!
//! Outer step `k` minimizes `Φ_{k+1} = a_{k+1}F + ½‖· − x_k‖²` by repeated
//! tensor steps started at `x_k` until `‖Φ′_{k+1}(z_t)‖_* ≤ δ_{k+1}`, with
//! `δ_k = c/k^s` and `a_{k+1}` chosen so that `x_k` lies in the superlinear
//! region of `Φ_{k+1}`.

use alloc::string::String;
use alloc::vec::Vec;

use crate::composite::CompositePart;
use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Matrix};
use crate::math::{self, factorial};
use crate::metric::Metric;
use crate::oracle::SmoothFunction;
use crate::problems::Problem;
use crate::report::{Inequality, Verification};
use crate::step::{solve_step, StepCertificate, StepConfig, StepProblem, Subsolver};

const RELATIVE_SLACK: f64 = 1e-8;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProxConfig {
    pub degree: usize,
    /// `c` in `δ_k = c/k^s`.
    pub c: f64,
    /// `s` in `δ_k = c/k^s`.
    pub s: f64,
    /// Target gap `ε` for the averaged-rate checks.
    pub epsilon: f64,
    pub max_outer: usize,
    /// Inner step cap per outer step when `t_k` is unavailable.
    pub max_inner: usize,
    /// Stop once `‖F′(x_k)‖_*` falls to this value.
    pub fprime_tol: f64,
    pub subsolver: Subsolver,
    pub inner_tolerance: Option<f64>,
    pub max_subsolver_iterations: usize,
}

impl ProxConfig {
    pub fn new(degree: usize) -> Result<Self> {
        if !(2..=3).contains(&degree) {
            return Err(Error::config("degree must be 2 or 3"));
        }
        Ok(Self {
            degree,
            c: 1.0,
            s: 2.0,
            epsilon: 1e-6,
            max_outer: 50,
            max_inner: 100,
            fprime_tol: 1e-12,
            subsolver: Subsolver::Auto,
            inner_tolerance: None,
            max_subsolver_iterations: crate::step::DEFAULT_MAX_INNER,
        })
    }

    pub fn validate(&self) -> Result<()> {
        if !(2..=3).contains(&self.degree) {
            return Err(Error::config("degree must be 2 or 3"));
        }
        if !(self.c > 0.0 && self.c.is_finite()) {
            return Err(Error::config("c must be positive"));
        }
        if !(self.s > 1.0 && self.s.is_finite()) {
            return Err(Error::config("s must exceed 1"));
        }
        if !(self.epsilon > 0.0) {
            return Err(Error::config("epsilon must be positive"));
        }
        if self.max_inner == 0 {
            return Err(Error::config("max_inner must be positive"));
        }
        if !(self.fprime_tol >= 0.0) {
            return Err(Error::config("fprime_tol must be nonnegative"));
        }
        Ok(())
    }

    /// `δ_k = c/k^s`, `k ≥ 1`.
    pub fn delta(&self, k: usize) -> f64 {
        self.c / math::powf(k as f64, self.s)
    }

    /// `Σ_{i=1}^k δ_i`.
    pub fn delta_sum(&self, k: usize) -> f64 {
        (1..=k).map(|i| self.delta(i)).sum()
    }

    /// `cs/(s−1)`, the bound on every partial sum of `δ`.
    pub fn delta_bound(&self) -> f64 {
        self.c * self.s / (self.s - 1.0)
    }
}

/// `a_{k+1} = (1/(2‖F′(x_k)‖_*))^{(p−1)/p} (p!/((p+1)L_p))^{1/p}`.
pub fn next_coefficient(fprime_norm: f64, degree: usize, lipschitz: f64) -> Result<f64> {
    if !(fprime_norm > 0.0 && fprime_norm.is_finite()) {
        return Err(Error::config("‖F′(x_k)‖ must be positive and finite"));
    }
    if !(lipschitz > 0.0 && lipschitz.is_finite()) {
        return Err(Error::config("L_p must be positive and finite"));
    }
    let p = degree as f64;
    Ok(math::powf(1.0 / (2.0 * fprime_norm), (p - 1.0) / p)
        * math::powf(factorial(degree) / ((p + 1.0) * lipschitz), 1.0 / p))
}

/// `(p!‖F′(x_0)‖_*/((p+1)L_p 2^{p−1}))^{1/p}`.
fn subgradient_radius(fprime0_norm: f64, degree: usize, lipschitz: f64) -> f64 {
    let p = degree as f64;
    math::powf(
        factorial(degree) * fprime0_norm / ((p + 1.0) * lipschitz * math::powi(2.0, degree as i32 - 1)),
        1.0 / p,
    )
}

/// `D_k(δ) = max{‖x_0 − x*‖ + Σ_{i≤k}δ_i, (p!‖F′(x_0)‖_*/((p+1)L_p 2^{p−1}))^{1/p}}`.
pub fn inner_radius(
    distance_plus_deltas: f64,
    fprime0_norm: f64,
    degree: usize,
    lipschitz: f64,
) -> f64 {
    distance_plus_deltas.max(subgradient_radius(fprime0_norm, degree, lipschitz))
}

/// `⌈log₂ log₂(2D/δ) / log₂ p⌉`, at least 1.
fn loglog_count(radius: f64, delta: f64, degree: usize) -> usize {
    let inner = math::log2(2.0 * radius / delta);
    if !(inner > 0.0) {
        return 1;
    }
    let t = math::ceil(math::log2(inner) / math::log2(degree as f64));
    if t >= 1.0 {
        t as usize
    } else {
        1
    }
}

/// The inner step count `t_k` that guarantees `‖Φ′_{k+1}‖_* ≤ δ_{k+1}`;
/// `distance_plus_deltas` is `‖x_0 − x*‖ + Σ_{i≤k}δ_i`.
pub fn inner_iteration_bound(
    delta_next: f64,
    distance_plus_deltas: f64,
    fprime0_norm: f64,
    degree: usize,
    lipschitz: f64,
) -> usize {
    let d = inner_radius(distance_plus_deltas, fprime0_norm, degree, lipschitz);
    loglog_count(d, delta_next, degree)
}

/// `N_k ≤ k(1 + log₂ log₂(2Dk^s/c)/log₂ p)` with `D = max{R, …}`.
pub fn oracle_call_bound(k: usize, cfg: &ProxConfig, distance: f64, fprime0_norm: f64, lipschitz: f64) -> f64 {
    let r = distance + cfg.delta_bound();
    let d = inner_radius(r, fprime0_norm, cfg.degree, lipschitz);
    let kf = k as f64;
    let arg = math::log2(2.0 * d * math::powf(kf, cfg.s) / cfg.c);
    let ll = if arg > 0.0 { math::log2(arg).max(0.0) } else { 0.0 };
    kf * (1.0 + ll / math::log2(cfg.degree as f64))
}

/// `x̄ = Σ a_i x_i / Σ a_i`.
pub fn weighted_average(coefficients: &[f64], points: &[Vec<f64>]) -> Result<Vec<f64>> {
    if coefficients.is_empty() || coefficients.len() != points.len() {
        return Err(Error::config("need one coefficient per point and at least one point"));
    }
    let n = points[0].len();
    let mut acc = alloc::vec![0.0; n];
    let mut total = 0.0;
    for (a, x) in coefficients.iter().zip(points) {
        check_dim(n, x.len())?;
        linalg::axpy(*a, x, &mut acc);
        total += a;
    }
    Ok(linalg::scaled(&acc, 1.0 / total))
}

/// `a·f(y) + ½‖y − c‖²` in the metric norm.
struct ProximalObjective<'a> {
    function: &'a dyn SmoothFunction,
    coefficient: f64,
    center: &'a [f64],
    metric: &'a Metric,
}

impl SmoothFunction for ProximalObjective<'_> {
    fn dim(&self) -> usize {
        self.function.dim()
    }

    fn value(&self, y: &[f64]) -> f64 {
        let r = self.metric.distance(y, self.center);
        self.coefficient * self.function.value(y) + 0.5 * r * r
    }

    fn gradient(&self, y: &[f64]) -> Vec<f64> {
        let b = self.metric.apply(&linalg::sub(y, self.center));
        linalg::add_scaled(&b, self.coefficient, &self.function.gradient(y))
    }

    fn hessian_apply(&self, y: &[f64], v: &[f64]) -> Vec<f64> {
        linalg::add_scaled(&self.metric.apply(v), self.coefficient, &self.function.hessian_apply(y, v))
    }

    fn hessian(&self, y: &[f64]) -> Matrix {
        self.metric
            .matrix()
            .add_scaled(self.coefficient, &self.function.hessian(y))
    }

    fn third_apply(&self, y: &[f64], h: &[f64]) -> Vec<f64> {
        linalg::scaled(&self.function.third_apply(y, h), self.coefficient)
    }

    fn third_bilinear(&self, y: &[f64], h: &[f64], v: &[f64]) -> Vec<f64> {
        linalg::scaled(&self.function.third_bilinear(y, h, v), self.coefficient)
    }
}

/// One tensor step on `Φ_{k+1}`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct InnerStep {
    /// `‖Φ′(z_t)‖_*` before the step.
    pub before: f64,
    /// `‖Φ′(z_{t+1})‖_*` after the step.
    pub after: f64,
    pub certificate: StepCertificate,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct OuterRecord {
    pub k: usize,
    /// `a_k`; zero for `k = 0`.
    pub coefficient: f64,
    /// `δ_k`; zero for `k = 0`.
    pub delta: f64,
    pub x: Vec<f64>,
    pub f_value: f64,
    /// `‖g_k‖_*`; zero for `k = 0`.
    pub g_norm: f64,
    pub fprime_norm: f64,
    pub inner_iterations: usize,
    /// `t_{k−1}`, when `‖x_0 − x*‖` is known.
    pub inner_bound: Option<usize>,
    /// `F(x̄_k)`; `F(x_0)` for `k = 0`.
    pub averaged_value: f64,
    pub averaged_point: Vec<f64>,
    /// `‖x_k − x*‖`, when `x*` is known.
    pub distance_to_minimizer: Option<f64>,
    /// Inner steps performed since the start, `N_k`.
    pub cumulative_inner: usize,
    pub inner_steps: Vec<InnerStep>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProxHeader {
    pub problem: String,
    pub dim: usize,
    pub degree: usize,
    pub lipschitz: f64,
    pub c: f64,
    pub s: f64,
    pub epsilon: f64,
    pub max_outer: usize,
    pub subsolver: String,
    pub fprime0_norm: f64,
    pub optimal_value: Option<f64>,
    pub known_minimizer: Option<Vec<f64>>,
    /// `‖x_0 − x*‖`.
    pub initial_distance: Option<f64>,
    pub seed: Option<u64>,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProxTrace {
    pub header: ProxHeader,
    pub records: Vec<OuterRecord>,
}

impl ProxTrace {
    pub fn outer_iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn total_inner(&self) -> usize {
        self.records.last().map_or(0, |r| r.cumulative_inner)
    }

    fn config(&self) -> ProxConfig {
        ProxConfig {
            degree: self.header.degree,
            c: self.header.c,
            s: self.header.s,
            epsilon: self.header.epsilon,
            max_outer: self.header.max_outer,
            ..ProxConfig::new(2).expect("degree 2 is valid")
        }
    }
}

/// `x̄_k` of the last record.
pub fn averaged_point(trace: &ProxTrace) -> Result<Vec<f64>> {
    let coeffs: Vec<f64> = trace.records.iter().skip(1).map(|r| r.coefficient).collect();
    let points: Vec<Vec<f64>> = trace.records.iter().skip(1).map(|r| r.x.clone()).collect();
    weighted_average(&coeffs, &points)
}

#[derive(Debug, Clone)]
pub struct ProxFailure {
    pub error: Error,
    pub partial: ProxTrace,
}

impl core::fmt::Display for ProxFailure {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(
            f,
            "{} after {} outer iterations",
            self.error,
            self.partial.outer_iterations()
        )
    }
}

fn finite_objective(problem: &Problem, x: &[f64]) -> Result<f64> {
    problem
        .objective(x)
        .finite()
        .ok_or_else(|| Error::domain("point lies outside dom h"))
}

/// Runs the inexact proximal method from `x0`.
pub fn run_inexact_prox(
    problem: &Problem,
    x0: &[f64],
    cfg: &ProxConfig,
) -> core::result::Result<ProxTrace, ProxFailure> {
    let p = cfg.degree;
    let header = ProxHeader {
        problem: problem.name.clone(),
        dim: problem.dim(),
        degree: p,
        lipschitz: problem.lipschitz(p).unwrap_or(f64::NAN),
        c: cfg.c,
        s: cfg.s,
        epsilon: cfg.epsilon,
        max_outer: cfg.max_outer,
        subsolver: String::from(cfg.subsolver.name()),
        fprime0_norm: f64::NAN,
        optimal_value: problem.known_optimal_value,
        known_minimizer: problem.known_minimizer.clone(),
        initial_distance: problem
            .known_minimizer
            .as_ref()
            .filter(|m| m.len() == x0.len())
            .map(|m| problem.metric.distance(x0, m)),
        seed: problem.seed,
    };
    let mut trace = ProxTrace {
        header,
        records: Vec::new(),
    };
    match prox_loop(problem, x0, cfg, &mut trace) {
        Ok(()) => Ok(trace),
        Err(error) => Err(ProxFailure {
            error,
            partial: trace,
        }),
    }
}

fn prox_loop(problem: &Problem, x0: &[f64], cfg: &ProxConfig, trace: &mut ProxTrace) -> Result<()> {
    cfg.validate()?;
    check_dim(problem.dim(), x0.len())?;
    let p = cfg.degree;
    let lipschitz = problem.lipschitz(p)?;
    if !(lipschitz > 0.0) {
        return Err(Error::config("the proximal method needs L_p > 0"));
    }
    let metric = &problem.metric;
    let f = problem.function();
    let f0 = finite_objective(problem, x0)?;
    let fprime0 = problem
        .composite
        .minimal_subgradient(&f.gradient(x0), x0, metric)?
        .ok_or_else(|| Error::domain("x0 lies outside dom h"))?;
    let fprime0_norm = metric.dual(&fprime0);
    trace.header.fprime0_norm = fprime0_norm;
    trace.records.push(OuterRecord {
        k: 0,
        coefficient: 0.0,
        delta: 0.0,
        x: x0.to_vec(),
        f_value: f0,
        g_norm: 0.0,
        fprime_norm: fprime0_norm,
        inner_iterations: 0,
        inner_bound: None,
        averaged_value: f0,
        averaged_point: x0.to_vec(),
        distance_to_minimizer: trace.header.initial_distance,
        cumulative_inner: 0,
        inner_steps: Vec::new(),
    });

    let minimizer = problem
        .known_minimizer
        .as_deref()
        .filter(|m| m.len() == x0.len());
    let mut xk = x0.to_vec();
    let mut fprime = fprime0;
    let mut coeffs = Vec::new();
    let mut points = Vec::new();
    let mut cumulative = 0usize;
    for k in 0..cfg.max_outer {
        let fprime_norm = metric.dual(&fprime);
        if fprime_norm <= cfg.fprime_tol {
            break;
        }
        let a = next_coefficient(fprime_norm, p, lipschitz)?;
        let delta = cfg.delta(k + 1);
        let bound = trace.header.initial_distance.map(|d| {
            inner_iteration_bound(delta, d + cfg.delta_sum(k), fprime0_norm, p, lipschitz)
        });
        let cap = bound.map_or(cfg.max_inner, |t| 10 * t);

        let phi = ProximalObjective {
            function: f,
            coefficient: a,
            center: &xk,
            metric,
        };
        let scaled_h: CompositePart = problem.composite.scaled(a);
        let sp = StepProblem {
            function: &phi,
            composite: &scaled_h,
            metric,
        };
        let mut step_cfg = StepConfig::new(p, a * lipschitz)?
            .with_subsolver(cfg.subsolver)
            .with_max_inner_iterations(cfg.max_subsolver_iterations)?;
        if let Some(tol) = cfg.inner_tolerance {
            step_cfg = step_cfg.with_inner_tolerance(tol)?;
        }

        // Φ′(x_k) = a·F′(x_k)
        let mut z = xk.clone();
        let mut g = linalg::scaled(&fprime, a);
        let mut g_norm = metric.dual(&g);
        let mut steps = Vec::new();
        while g_norm > delta {
            if steps.len() >= cap {
                return Err(Error::InnerBoundExceeded {
                    outer: k,
                    inner: steps.len(),
                    bound: bound.unwrap_or(cfg.max_inner),
                });
            }
            let out = solve_step(&sp, &z, &step_cfg)?;
            let after = metric.dual(&out.fprime);
            steps.push(InnerStep {
                before: g_norm,
                after,
                certificate: out.certificate,
            });
            z = out.point;
            g = out.fprime;
            g_norm = after;
        }
        let bx = metric.apply(&linalg::sub(&z, &xk));
        fprime = linalg::scaled(&linalg::sub(&g, &bx), 1.0 / a);
        xk = z;
        cumulative += steps.len();
        coeffs.push(a);
        points.push(xk.clone());
        let avg = weighted_average(&coeffs, &points)?;
        trace.records.push(OuterRecord {
            k: k + 1,
            coefficient: a,
            delta,
            x: xk.clone(),
            f_value: finite_objective(problem, &xk)?,
            g_norm,
            fprime_norm: metric.dual(&fprime),
            inner_iterations: steps.len(),
            inner_bound: bound,
            averaged_value: problem.objective(&avg).to_f64(),
            averaged_point: avg,
            distance_to_minimizer: minimizer.map(|m| metric.distance(&xk, m)),
            cumulative_inner: cumulative,
            inner_steps: steps,
        });
    }
    Ok(())
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct ProxReport {
    pub verification: Verification,
    /// Last `k` with `F(x_i) − F* ≥ ε` for all `1 ≤ i ≤ k`.
    pub premise_end: usize,
    /// First `k` of the final-rate range, `⌈ln(‖F′(x_0)‖R/ε)⌉`.
    pub final_range_start: Option<usize>,
}

fn inner_slack(cert: &StepCertificate) -> f64 {
    cert.residual * (1.0 + cert.step_norm) + 1e-12 * cert.gradient_scale + 1e-14
}

/// `R = ‖x_0 − x*‖ + cs/(s−1)`.
fn envelope_radius(h: &ProxHeader) -> Option<f64> {
    h.initial_distance.map(|d| d + h.c * h.s / (h.s - 1.0))
}

/// `⌈ln(‖F′(x_0)‖_* R/ε)⌉`, at least 1.
pub fn final_range_start(h: &ProxHeader) -> Option<usize> {
    let arg = h.fprime0_norm * envelope_radius(h)? / h.epsilon;
    Some(if arg > 1.0 {
        (math::ceil(math::ln(arg)) as usize).max(1)
    } else {
        1
    })
}

/// `L_p R^{p+1}/k^{(p+1)/2} · (p+1)2^{p−2}e^{p−1}/p!`.
pub fn final_rate_envelope(h: &ProxHeader, k: usize) -> Option<f64> {
    let r = envelope_radius(h)?;
    let p = h.degree;
    let pf = p as f64;
    let base = (pf + 1.0) * math::powi(2.0, p as i32) / 4.0 / factorial(p);
    Some(
        h.lipschitz * math::powi(r, p as i32 + 1) / math::powf(k as f64, (pf + 1.0) / 2.0)
            * base
            * math::exp(pf - 1.0),
    )
}

/// Every inequality of the proximal scheme on a recorded trace.
pub fn verify_prox(trace: &ProxTrace) -> ProxReport {
    let h = &trace.header;
    let cfg = trace.config();
    let p = h.degree;
    let pf = p as f64;
    let fact = factorial(p);
    let l = h.lipschitz;
    let mut out = Verification::new();
    let mut report = ProxReport {
        verification: Verification::new(),
        premise_end: 0,
        final_range_start: None,
    };

    for rec in trace.records.iter().skip(1) {
        out.record(Inequality::ProxCriterion, Some(rec.k), rec.g_norm, rec.delta, 0.0);
        let a = rec.coefficient;
        let c = a * (pf + 1.0) * l / fact;
        for st in &rec.inner_steps {
            let rhs = c * math::powi(st.before, p as i32);
            out.record(
                Inequality::ProxInnerContraction,
                Some(rec.k),
                st.after,
                rhs,
                RELATIVE_SLACK * rhs + inner_slack(&st.certificate),
            );
            out.extend(crate::step::verify_step(&st.certificate, Some(rec.k)));
        }
    }

    let Some(dist) = h.initial_distance else {
        for i in [
            Inequality::ProxEnergy,
            Inequality::ProxInnerBound,
            Inequality::ProxSubgradientChain,
            Inequality::ProxAveragedRate,
            Inequality::ProxAveragedRateFinal,
            Inequality::ProxOracleCalls,
        ] {
            out.skip(i, "no known minimizer");
        }
        report.verification = out;
        return report;
    };

    let mut partial_delta = 0.0;
    for rec in trace.records.iter().skip(1) {
        partial_delta += rec.delta;
        let radius = dist + partial_delta;
        if let Some(t) = rec.inner_bound {
            out.record(
                Inequality::ProxInnerBound,
                Some(rec.k),
                rec.inner_iterations as f64,
                t as f64,
                0.0,
            );
        }
        let chain = ((pf + 1.0) * l * math::powi(2.0, p as i32 - 1) / fact
            * math::powi(radius, p as i32))
        .max(h.fprime0_norm);
        out.record(
            Inequality::ProxSubgradientChain,
            Some(rec.k),
            rec.fprime_norm,
            chain,
            RELATIVE_SLACK * chain,
        );
        let calls = oracle_call_bound(rec.k, &cfg, dist, h.fprime0_norm, l);
        out.record(
            Inequality::ProxOracleCalls,
            Some(rec.k),
            rec.cumulative_inner as f64,
            calls,
            0.0,
        );
    }

    let Some(fstar) = h.optimal_value else {
        for i in [
            Inequality::ProxEnergy,
            Inequality::ProxAveragedRate,
            Inequality::ProxAveragedRateFinal,
        ] {
            out.skip(i, "no known optimal value");
        }
        report.verification = out;
        return report;
    };
    let rounding = 1e-13 * fstar.abs().max(1.0);

    let mut partial_delta = 0.0;
    let mut weighted_gap = 0.0;
    let mut weighted_sub = 0.0;
    for rec in trace.records.iter().skip(1) {
        partial_delta += rec.delta;
        let a = rec.coefficient;
        weighted_gap += a * (rec.f_value - fstar);
        weighted_sub += 0.5 * a * a * rec.fprime_norm * rec.fprime_norm;
        let dk = rec.distance_to_minimizer.unwrap_or(f64::INFINITY);
        let lhs = weighted_gap + weighted_sub + 0.5 * dk * dk;
        let rk = 0.5 * (dist + partial_delta) * (dist + partial_delta);
        let a_sum: f64 = trace.records[1..=rec.k].iter().map(|r| r.coefficient).sum();
        out.record(
            Inequality::ProxEnergy,
            Some(rec.k),
            lhs,
            rk,
            RELATIVE_SLACK * rk + a_sum * rounding,
        );
    }

    let premise_end = trace
        .records
        .iter()
        .skip(1)
        .take_while(|r| r.f_value - fstar >= cfg.epsilon)
        .last()
        .map_or(0, |r| r.k);
    report.premise_end = premise_end;
    let base = (pf + 1.0) * math::powi(2.0, p as i32) / 4.0 / fact;
    let mut partial_delta = 0.0;
    for rec in trace.records.iter().skip(1).take(premise_end) {
        partial_delta += rec.delta;
        let kf = rec.k as f64;
        let radius = dist + partial_delta;
        let v = math::powf(h.fprime0_norm * radius / cfg.epsilon, (pf - 1.0) / kf);
        let rhs = l * math::powi(radius, p as i32 + 1) / math::powf(kf, (pf + 1.0) / 2.0) * base * v;
        out.record(
            Inequality::ProxAveragedRate,
            Some(rec.k),
            rec.averaged_value - fstar,
            rhs,
            RELATIVE_SLACK * rhs + rounding,
        );
    }
    if premise_end == 0 {
        out.skip(Inequality::ProxAveragedRate, "gap below epsilon from the first step");
    }

    let start = final_range_start(h).unwrap_or(1);
    report.final_range_start = Some(start);
    let final_rhs = |k: usize| final_rate_envelope(h, k).unwrap_or(f64::INFINITY);
    let mut checked = false;
    for rec in trace.records.iter().skip(1) {
        if rec.k < start || rec.k > premise_end {
            continue;
        }
        let rhs = final_rhs(rec.k);
        out.record(
            Inequality::ProxAveragedRateFinal,
            Some(rec.k),
            rec.averaged_value - fstar,
            rhs,
            RELATIVE_SLACK * rhs + rounding,
        );
        checked = true;
    }
    if !checked {
        out.skip(
            Inequality::ProxAveragedRateFinal,
            alloc::format!("empty range [{start}, {premise_end}]"),
        );
    }
    report.verification = out;
    report
}
