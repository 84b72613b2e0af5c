//! The iteration `x_{k+1} = T_H(x_k)`, its trace and the local and global
//! rate checks.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::math;
use crate::oracle::{CountingOracle, OracleCounts, UniformConvexity};
use crate::problems::Problem;
use crate::report::{Inequality, Verification};
use crate::step::{solve_step, verify_step, StepCertificate, StepConfig, StepProblem};

/// Absolute rounding allowance on gaps `F(x) − F*`, relative to `max(1, |F*|)`.
pub const GAP_ROUNDING: f64 = 1e-13;
/// Gaps below this are treated as rounding noise by the rate regression.
pub const GAP_FLOOR: f64 = 1e-12;
const RELATIVE_SLACK: f64 = 1e-8;
use crate::step::GRADIENT_ROUNDING;

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StopRule {
    pub max_iters: usize,
    /// Stop once `F(x_k) − F* ≤ f_gap_tol` (needs a known `F*`).
    pub f_gap_tol: Option<f64>,
    /// Stop once `η(x_k) ≤ eta_tol`.
    pub eta_tol: Option<f64>,
}

impl Default for StopRule {
    fn default() -> Self {
        Self {
            max_iters: 100,
            f_gap_tol: None,
            eta_tol: Some(1e-12),
        }
    }
}

/// Where `F*` in a trace header came from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "snake_case"))]
pub enum OptimumSource {
    Known,
    Reference,
    Unknown,
}

impl OptimumSource {
    pub fn name(self) -> &'static str {
        match self {
            OptimumSource::Known => "known",
            OptimumSource::Reference => "reference",
            OptimumSource::Unknown => "unknown",
        }
    }

    pub fn from_name(s: &str) -> Option<Self> {
        [Self::Known, Self::Reference, Self::Unknown]
            .into_iter()
            .find(|v| v.name() == s)
    }
}

/// Everything the verifiers need besides the records.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunHeader {
    pub problem: String,
    pub dim: usize,
    pub degree: usize,
    pub lipschitz: f64,
    pub regularization: f64,
    pub subsolver: String,
    pub uniform_convexity: Option<UniformConvexity>,
    pub optimal_value: Option<f64>,
    pub optimal_value_source: OptimumSource,
    /// Upper bound on `F*_reference − F*` when the optimum came from a
    /// reference run; zero otherwise.
    pub reference_gap: f64,
    pub level_set_radius: Option<f64>,
    pub known_minimizer: Option<Vec<f64>>,
    pub seed: Option<u64>,
    pub inner_tolerance: Option<f64>,
    pub max_iters: usize,
}

/// Row `k`: the iterate `x_k` and, unless it is the last row, the step to
/// `x_{k+1}`.
#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct IterationRecord {
    pub k: usize,
    pub x: Vec<f64>,
    pub f_value: f64,
    /// `η(x_k)`; `+∞` is stored as `f64::INFINITY`.
    pub eta: f64,
    /// `‖x_{k+1} − x_k‖`.
    pub step_norm: Option<f64>,
    /// `‖F′(x_{k+1})‖_*`.
    pub fprime_norm: Option<f64>,
    pub certificate: Option<StepCertificate>,
    /// Tensor-oracle calls (anchors at which derivatives up to order `p`
    /// were taken) before `x_k` was produced.
    pub oracle_calls: usize,
    pub oracle_counts: OracleCounts,
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RunTrace {
    pub header: RunHeader,
    pub records: Vec<IterationRecord>,
}

impl RunTrace {
    pub fn iterations(&self) -> usize {
        self.records.len().saturating_sub(1)
    }

    pub fn last(&self) -> &IterationRecord {
        self.records.last().expect("a trace holds the initial point")
    }

    /// `F(x_k) − F*`, when `F*` is available.
    pub fn gap(&self, k: usize) -> Option<f64> {
        self.header
            .optimal_value
            .map(|fs| self.records[k].f_value - fs)
    }

    fn gap_rounding(&self) -> f64 {
        GAP_ROUNDING * self.header.optimal_value.map_or(1.0, |v| v.abs().max(1.0))
            + self.header.reference_gap
    }

    /// Replaces `F*` by a reference value.
    pub fn set_reference_optimum(&mut self, value: f64, gap: f64) {
        self.header.optimal_value = Some(value);
        self.header.optimal_value_source = OptimumSource::Reference;
        self.header.reference_gap = gap;
    }
}

/// A run that stopped on an error, with the records produced so far.
#[derive(Debug, Clone)]
pub struct RunFailure {
    pub error: Error,
    pub partial: RunTrace,
}

impl core::fmt::Display for RunFailure {
    fn fmt(&self, f: &mut core::fmt::Formatter<'_>) -> core::fmt::Result {
        write!(f, "{} after {} iterations", self.error, self.partial.iterations())
    }
}

impl From<RunFailure> for Error {
    fn from(f: RunFailure) -> Self {
        f.error
    }
}

fn header_for(problem: &Problem, config: &StepConfig, stop: &StopRule) -> RunHeader {
    RunHeader {
        problem: problem.name.clone(),
        dim: problem.dim(),
        degree: config.degree,
        lipschitz: config.lipschitz,
        regularization: config.regularization,
        subsolver: config.resolved_subsolver(&problem.composite).name().to_string(),
        uniform_convexity: problem.uniform_convexity(),
        optimal_value: problem.known_optimal_value,
        optimal_value_source: if problem.known_optimal_value.is_some() {
            OptimumSource::Known
        } else {
            OptimumSource::Unknown
        },
        reference_gap: 0.0,
        level_set_radius: None,
        known_minimizer: problem.known_minimizer.clone(),
        seed: problem.seed,
        inner_tolerance: config.inner_tolerance,
        max_iters: stop.max_iters,
    }
}

/// Runs `x_{k+1} = T_H(x_k)` from `x0` until a stop rule fires.
pub fn run_rctm(
    problem: &Problem,
    x0: &[f64],
    config: &StepConfig,
    stop: &StopRule,
) -> core::result::Result<RunTrace, RunFailure> {
    let mut trace = RunTrace {
        header: header_for(problem, config, stop),
        records: Vec::new(),
    };
    let fail = |error: Error, trace: RunTrace| RunFailure {
        error,
        partial: trace,
    };
    if let Err(e) = crate::error::check_dim(problem.dim(), x0.len()) {
        return Err(fail(e, trace));
    }
    let Some(f0) = problem.objective(x0).finite() else {
        return Err(fail(Error::domain("x0 lies outside dom h"), trace));
    };
    trace.header.level_set_radius = problem.level_set_radius(x0);
    let counting = CountingOracle::new(problem.function());
    let view = StepProblem {
        function: &counting,
        composite: &problem.composite,
        metric: &problem.metric,
    };
    let eta0 = match problem.eta(x0) {
        Ok(v) => v.to_f64(),
        Err(e) => return Err(fail(e, trace)),
    };
    trace.records.push(IterationRecord {
        k: 0,
        x: x0.to_vec(),
        f_value: f0,
        eta: eta0,
        step_norm: None,
        fprime_norm: None,
        certificate: None,
        oracle_calls: 0,
        oracle_counts: OracleCounts::default(),
    });
    loop {
        let k = trace.records.len() - 1;
        let rec = &trace.records[k];
        let done_eta = stop.eta_tol.is_some_and(|t| rec.eta <= t);
        let done_gap = match (stop.f_gap_tol, problem.known_optimal_value) {
            (Some(t), Some(fs)) => rec.f_value - fs <= t,
            _ => false,
        };
        if done_eta || done_gap || k >= stop.max_iters {
            return Ok(trace);
        }
        let x = rec.x.clone();
        let out = match solve_step(&view, &x, config) {
            Ok(o) => o,
            Err(e) => return Err(fail(e, trace)),
        };
        let eta = match problem.eta(&out.point) {
            Ok(v) => v.to_f64(),
            Err(e) => return Err(fail(e, trace)),
        };
        let counts = counting.counts();
        let prev = trace.records.last_mut().expect("nonempty");
        prev.step_norm = Some(out.certificate.step_norm);
        prev.fprime_norm = Some(out.certificate.fprime_norm);
        prev.certificate = Some(out.certificate);
        trace.records.push(IterationRecord {
            k: k + 1,
            f_value: out.certificate.value_after,
            x: out.point,
            eta,
            step_norm: None,
            fprime_norm: None,
            certificate: None,
            oracle_calls: counts.hessian as usize,
            oracle_counts: counts,
        });
    }
}

/// `F*` and a bound on its error from a long degree-two run (degree three
/// when `L₂` is unavailable) with ten times tighter inner tolerance and ten
/// times more iterations. The bound is `η(x_K)·D`, infinite without `D`.
pub fn reference_optimum(
    problem: &Problem,
    x0: &[f64],
    config: &StepConfig,
    stop: &StopRule,
) -> Result<(f64, f64)> {
    let (degree, l) = match problem.lipschitz(2) {
        Ok(l) => (2, l),
        Err(_) => (3, problem.lipschitz(3)?),
    };
    let tol = config.inner_tolerance.unwrap_or(1e-10) * 0.1;
    let cfg = StepConfig::new(degree, l)?
        .with_inner_tolerance(tol)?
        .with_max_inner_iterations(config.max_inner_iterations.saturating_mul(10))?;
    let long = StopRule {
        max_iters: stop.max_iters.saturating_mul(10),
        f_gap_tol: None,
        eta_tol: Some(1e-14),
    };
    let trace = run_rctm(problem, x0, &cfg, &long)?;
    let best = trace
        .records
        .iter()
        .min_by(|a, b| a.f_value.total_cmp(&b.f_value))
        .expect("nonempty");
    let gap = match problem.level_set_radius(x0) {
        Some(d) => best.eta * d,
        None => f64::INFINITY,
    };
    Ok((best.f_value, gap))
}

/// Thresholds of the superlinear regions in gap and in `η`.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct RegionEstimate {
    pub q_threshold: f64,
    pub g_threshold: f64,
}

pub fn region_thresholds(p: usize, q: f64, sigma: f64, lipschitz: f64, h: f64) -> Result<RegionEstimate> {
    let pf = p as f64;
    if !(pf > q - 1.0) {
        return Err(Error::domain("p ≤ q − 1: no superlinear region"));
    }
    if !(sigma > 0.0) {
        return Err(Error::domain("σ_q must be positive"));
    }
    let e = 1.0 / (pf - q + 1.0);
    let ratio = math::factorial(p) / (lipschitz + h);
    let q_threshold = math::powf(
        math::powf(sigma, pf + 1.0) / math::powf(q - 1.0, q - 1.0) * math::powf(ratio, q),
        e,
    ) / q;
    let g_threshold = math::powf(math::powf(sigma, pf) * math::powf(ratio, q - 1.0), e);
    Ok(RegionEstimate {
        q_threshold,
        g_threshold,
    })
}

/// `ω_{p,q} = (p+1)/p! · ((q−1)/q)^{q−1} · L_p D^{p−q+1} / σ_q`.
pub fn condition_number(p: usize, q: f64, lipschitz: f64, sigma: f64, d: f64) -> f64 {
    let pf = p as f64;
    (pf + 1.0) / math::factorial(p)
        * math::powf((q - 1.0) / q, q - 1.0)
        * lipschitz
        * math::powf(d, pf - q + 1.0)
        / sigma
}

/// Iterations sufficient to enter the gap region.
pub fn region_entry_count(p: usize, q: f64, omega: f64) -> usize {
    let pf = p as f64;
    let inner = math::powf(q, q) / math::powf(q - 1.0, q - 1.0) * math::powf(omega, (pf + 1.0) / pf);
    math::ceil(2.0 * pf * math::powf(inner, 1.0 / (pf - q + 1.0))) as usize + 2
}

/// `K = ⌈(1 + ω^{1/p}) log(gap₀/ε)⌉ + 1`.
pub fn linear_iteration_count(p: usize, omega: f64, gap0: f64, epsilon: f64) -> usize {
    let v = (1.0 + math::powf(omega, 1.0 / p as f64)) * math::ln(gap0 / epsilon);
    math::ceil(v.max(0.0)) as usize + 1
}

/// Constant of the one-step gap bound `gap_{k+1} ≤ C·gap_k^{p/(q−1)}`.
pub fn local_gap_constant(p: usize, q: f64, sigma: f64, lipschitz: f64, h: f64) -> f64 {
    let pf = p as f64;
    (q - 1.0)
        * math::powf(q, (pf - q + 1.0) / (q - 1.0))
        * math::powf(1.0 / sigma, (pf + 1.0) / (q - 1.0))
        * math::powf((lipschitz + h) / math::factorial(p), q / (q - 1.0))
}

/// `(p+1)(2p)^p/p! · L_p D^{p+1} / (k−1)^p`.
pub fn sublinear_bound(p: usize, lipschitz: f64, d: f64, k: usize) -> f64 {
    let pf = p as f64;
    (pf + 1.0) * math::powi(2.0 * pf, p as i32) / math::factorial(p) * lipschitz
        * math::powi(d, p as i32 + 1)
        / math::powi((k - 1) as f64, p as i32)
}

/// Least-squares slope of `log y` against `log x`; needs two distinct `x`.
pub fn log_slope(pairs: &[(f64, f64)]) -> Option<f64> {
    if pairs.len() < 2 {
        return None;
    }
    let pts: Vec<(f64, f64)> = pairs.iter().map(|&(a, b)| (math::ln(a), math::ln(b))).collect();
    let n = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx) * (p.0 - mx)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// Local order fitted to the regression pairs of several runs at once.
pub fn pooled_order(reports: &[LocalRateReport]) -> Option<f64> {
    let pairs: Vec<(f64, f64)> = reports
        .iter()
        .flat_map(|r| r.regression_pairs.iter().copied())
        .collect();
    log_slope(&pairs)
}

fn step_slack(cert: &StepCertificate) -> f64 {
    cert.residual * (1.0 + cert.step_norm)
}

/// Step certificates and monotonicity over a whole trace.
pub fn verify_steps(trace: &RunTrace) -> Verification {
    let mut out = Verification::new();
    for (k, rec) in trace.records.iter().enumerate() {
        let Some(cert) = &rec.certificate else { continue };
        out.extend(verify_step(cert, Some(k)));
        if let Some(next) = trace.records.get(k + 1) {
            out.record(
                Inequality::Monotonicity,
                Some(k),
                next.f_value,
                rec.f_value,
                10.0 * cert.inner_tolerance * cert.step_norm
                    + GAP_ROUNDING * rec.f_value.abs().max(1.0),
            );
        }
    }
    out
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct LocalRateReport {
    pub verification: Verification,
    pub regions: Option<RegionEstimate>,
    /// `(gap_k, gap_{k+1})` pairs inside the gap region above the floor.
    pub regression_pairs: Vec<(f64, f64)>,
    pub empirical_order: Option<f64>,
    /// `p/(q−1)`.
    pub theoretical_order: Option<f64>,
}

/// The one-step gap bound and the subgradient-rate bound at every iteration,
/// the absorbing property of the `η` region, and the empirical local order.
pub fn verify_local_rates(trace: &RunTrace) -> LocalRateReport {
    let h = &trace.header;
    let mut out = Verification::new();
    let mut report = LocalRateReport {
        verification: Verification::new(),
        regions: None,
        regression_pairs: Vec::new(),
        empirical_order: None,
        theoretical_order: None,
    };
    let n = trace.records.len();
    let rounding = trace.gap_rounding();
    for k in 0..n.saturating_sub(1) {
        if let (Some(cert), next) = (&trace.records[k].certificate, &trace.records[k + 1]) {
            out.record(
                Inequality::EtaBelowSubgradient,
                Some(k + 1),
                next.eta,
                cert.fprime_norm,
                1e-12 * cert.gradient_scale + GRADIENT_ROUNDING,
            );
        }
    }
    let Some(uc) = h.uniform_convexity else {
        out.skip(Inequality::LocalGapRate, "no uniform convexity advertised");
        out.skip(Inequality::SubgradientRate, "no uniform convexity advertised");
        report.verification = out;
        return report;
    };
    let (p, q, sigma) = (h.degree, uc.degree, uc.modulus);
    let a = (h.lipschitz + h.regularization) / math::factorial(p);
    let e = p as f64 / (q - 1.0);
    report.theoretical_order = Some(e);

    for k in 0..n.saturating_sub(1) {
        let rec = &trace.records[k];
        let Some(cert) = &rec.certificate else { continue };
        let rhs = a * math::powf(rec.eta / sigma, e);
        out.record(
            Inequality::SubgradientRate,
            Some(k + 1),
            cert.fprime_norm,
            rhs,
            RELATIVE_SLACK * rhs + step_slack(cert) + 1e-12 * cert.gradient_scale + GRADIENT_ROUNDING,
        );
        if let (Some(g0), Some(g1)) = (trace.gap(k), trace.gap(k + 1)) {
            let c = local_gap_constant(p, q, sigma, h.lipschitz, h.regularization);
            let rhs = c * math::powf(g0.max(0.0), e);
            out.record(
                Inequality::LocalGapRate,
                Some(k + 1),
                g1,
                rhs,
                RELATIVE_SLACK * rhs + rounding + step_slack(cert),
            );
        }
    }
    if h.optimal_value.is_none() {
        out.skip(Inequality::LocalGapRate, "F* unavailable");
    }

    match region_thresholds(p, q, sigma, h.lipschitz, h.regularization) {
        Ok(regions) => {
            report.regions = Some(regions);
            let entry = (0..n.saturating_sub(1)).find(|&k| {
                trace.records[k]
                    .fprime_norm
                    .is_some_and(|v| v <= regions.g_threshold)
            });
            if let Some(k0) = entry {
                for k in (k0 + 1)..n {
                    out.record(
                        Inequality::SubgradientRegionAbsorbing,
                        Some(k),
                        trace.records[k].eta,
                        regions.g_threshold,
                        RELATIVE_SLACK * regions.g_threshold,
                    );
                }
            } else {
                out.skip(
                    Inequality::SubgradientRegionAbsorbing,
                    "trace never enters the subgradient region",
                );
            }
            if h.optimal_value.is_some() {
                for k in 0..n.saturating_sub(1) {
                    let (g0, g1) = (trace.gap(k).unwrap(), trace.gap(k + 1).unwrap());
                    let inside = |g: f64| (GAP_FLOOR..=regions.q_threshold).contains(&g);
                    if inside(g0) && g1 >= GAP_FLOOR && g1 <= g0 {
                        report.regression_pairs.push((g0, g1));
                    }
                }
                report.empirical_order = log_slope(&report.regression_pairs);
            }
        }
        Err(_) => {
            out.skip(
                Inequality::SubgradientRegionAbsorbing,
                "p ≤ q − 1: no superlinear region",
            );
        }
    }
    report.verification = out;
    report
}

#[derive(Debug, Clone, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct GlobalRateReport {
    pub verification: Verification,
    pub omega: Option<f64>,
    /// Iterations sufficient to enter the gap region, and the first
    /// iteration observed inside it.
    pub predicted_region_entry: Option<usize>,
    pub observed_region_entry: Option<usize>,
    pub epsilon: f64,
    pub predicted_iterations: Option<usize>,
    pub observed_iterations: Option<usize>,
}

/// The sublinear bound for `k ≥ 2`, the recurrence behind it, the linear
/// bound for `k ≥ 1` and the iteration count to reach `epsilon`.
pub fn verify_global_rates(trace: &RunTrace, epsilon: f64) -> GlobalRateReport {
    let h = &trace.header;
    let mut out = Verification::new();
    let mut report = GlobalRateReport {
        verification: Verification::new(),
        omega: None,
        predicted_region_entry: None,
        observed_region_entry: None,
        epsilon,
        predicted_iterations: None,
        observed_iterations: None,
    };
    let n = trace.records.len();
    let p = h.degree;
    let pf = p as f64;
    let default_h = (h.regularization - pf * h.lipschitz).abs() <= 1e-12 * pf * h.lipschitz
        && h.lipschitz > 0.0;
    let rounding = trace.gap_rounding();
    let ready = |out: &mut Verification, ineq: Inequality| -> Option<f64> {
        if h.optimal_value.is_none() {
            out.skip(ineq, "F* unavailable");
            return None;
        }
        if !default_h {
            out.skip(ineq, "needs H = p·L_p with L_p > 0");
            return None;
        }
        match h.level_set_radius {
            Some(d) => Some(d),
            None => {
                out.skip(ineq, "no level-set radius D recorded");
                None
            }
        }
    };

    if let Some(d) = ready(&mut out, Inequality::SublinearRate) {
        for k in 2..n {
            let rhs = sublinear_bound(p, h.lipschitz, d, k);
            out.record(
                Inequality::SublinearRate,
                Some(k),
                trace.gap(k).unwrap(),
                rhs,
                RELATIVE_SLACK * rhs + rounding,
            );
        }
    }
    if let Some(d) = ready(&mut out, Inequality::SublinearRecurrence) {
        // C·δ^{(p+1)/p} equals the β = p lemma constant times (δ/D)^{(p+1)/p};
        // with inexact steps the lemma sees ‖F′‖ − ρ ≥ δ_{k+1}/D − ρ
        let c_lemma = crate::step::lemma_constant_at_p(p, h.lipschitz);
        for k in 0..n.saturating_sub(1) {
            let Some(cert) = &trace.records[k].certificate else { continue };
            let (d0, d1) = (trace.gap(k).unwrap(), trace.gap(k + 1).unwrap());
            let eff = if d > 0.0 {
                (d1.max(0.0) / d - cert.residual).max(0.0)
            } else {
                0.0
            };
            let lhs = c_lemma * math::powf(eff, (pf + 1.0) / pf);
            out.record(
                Inequality::SublinearRecurrence,
                Some(k + 1),
                lhs,
                d0 - d1,
                RELATIVE_SLACK * lhs + 2.0 * rounding + step_slack(cert),
            );
        }
    }

    match (h.uniform_convexity, h.level_set_radius) {
        (Some(uc), Some(d)) if uc.degree <= pf + 1.0 => {
            let omega = condition_number(p, uc.degree, h.lipschitz, uc.modulus, d);
            report.omega = Some(omega);
            if uc.degree - 1.0 < pf {
                report.predicted_region_entry = Some(region_entry_count(p, uc.degree, omega));
                if let (Ok(regions), Some(_)) = (
                    region_thresholds(p, uc.degree, uc.modulus, h.lipschitz, h.regularization),
                    h.optimal_value,
                ) {
                    report.observed_region_entry =
                        (0..n).find(|&k| trace.gap(k).unwrap() <= regions.q_threshold);
                }
            }
            if ready(&mut out, Inequality::LinearRate).is_some() {
                let g0 = trace.gap(0).unwrap();
                let rate = 1.0 / (1.0 + math::powf(omega, 1.0 / pf));
                let mut inexact = 0.0;
                for k in 1..n {
                    if let Some(cert) = &trace.records[k - 1].certificate {
                        inexact += step_slack(cert);
                    }
                    let rhs = math::exp(-(k as f64) * rate) * g0.max(0.0);
                    out.record(
                        Inequality::LinearRate,
                        Some(k),
                        trace.gap(k).unwrap(),
                        rhs,
                        RELATIVE_SLACK * rhs + rounding + inexact,
                    );
                }
                if g0 > epsilon {
                    let predicted = linear_iteration_count(p, omega, g0, epsilon);
                    report.predicted_iterations = Some(predicted);
                    report.observed_iterations =
                        (0..n).find(|&k| trace.gap(k).unwrap() <= epsilon);
                    match report.observed_iterations {
                        Some(obs) => out.record(
                            Inequality::LinearIterationCount,
                            None,
                            obs as f64,
                            predicted as f64,
                            0.0,
                        ),
                        None if trace.iterations() >= predicted => out.record(
                            Inequality::LinearIterationCount,
                            None,
                            f64::INFINITY,
                            predicted as f64,
                            0.0,
                        ),
                        None => out.skip(
                            Inequality::LinearIterationCount,
                            "trace ended before the predicted count without reaching epsilon",
                        ),
                    }
                } else {
                    report.predicted_iterations = Some(0);
                    report.observed_iterations = Some(0);
                }
            }
        }
        _ => {
            out.skip(Inequality::LinearRate, "needs (q, σ_q) with q ≤ p + 1 and D");
            out.skip(Inequality::LinearIterationCount, "needs (q, σ_q) with q ≤ p + 1 and D");
        }
    }
    report.verification = out;
    report
}

/// Every check that reads only the trace.
pub fn verify_trace(trace: &RunTrace, epsilon: f64) -> Verification {
    let mut v = verify_steps(trace);
    v.extend(verify_local_rates(trace).verification);
    v.extend(verify_global_rates(trace, epsilon).verification);
    v
}

#[cfg(test)]
mod tests;
