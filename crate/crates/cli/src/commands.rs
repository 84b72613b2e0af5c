//! Subcommand implementations shared by the binary and the tests.

use std::fmt::Write as _;
use std::path::{Path, PathBuf};

use rctm_core::prox::{self, ProxTrace};
use rctm_core::rctm::{self, verify_global_rates, verify_local_rates, verify_steps};
use rctm_core::{Problem, RunTrace, Verification};
use serde::Serialize;

use crate::catalog::{ProblemSpec, NAMES};
use crate::config::{Format, Method, ProxSettings, StepSettings, SuiteConfig};
use crate::error::CliError;
use crate::trace_io::{self, TraceFile};

/// Everything a subcommand needs, after merging a config file with flags.
#[derive(Debug, Clone)]
pub struct Plan {
    pub problems: Vec<ProblemSpec>,
    pub method: Method,
    pub step: StepSettings,
    pub prox: ProxSettings,
    pub out: Option<PathBuf>,
    pub format: Format,
    pub verbosity: u8,
}

impl Plan {
    pub fn from_config(cfg: SuiteConfig) -> Self {
        Self {
            problems: cfg.problems,
            method: cfg.method,
            step: cfg.step,
            prox: cfg.prox,
            out: cfg.output,
            format: cfg.format,
            verbosity: cfg.verbosity,
        }
    }

    pub fn single(spec: ProblemSpec) -> Self {
        Self {
            problems: vec![spec],
            method: Method::Rctm,
            step: StepSettings::default(),
            prox: ProxSettings::default(),
            out: None,
            format: Format::Csv,
            verbosity: 1,
        }
    }
}

/// Text for stdout plus the overall result.
#[derive(Debug, Default)]
pub struct Output {
    pub text: String,
    pub failures: Vec<String>,
}

impl Output {
    fn line(&mut self, s: impl AsRef<str>) {
        self.text.push_str(s.as_ref());
        self.text.push('\n');
    }

    pub fn into_result(self) -> Result<String, (String, CliError)> {
        if self.failures.is_empty() {
            Ok(self.text)
        } else {
            let msg = self.failures.join("; ");
            Err((self.text, CliError::Certificate(msg)))
        }
    }
}

#[derive(Serialize)]
struct Report<'a> {
    problem: &'a str,
    method: &'a str,
    passed: bool,
    checks: usize,
    violations: Vec<&'a rctm_core::CheckOutcome>,
    skipped: &'a [(rctm_core::Inequality, String)],
}

fn describe(v: &Verification, verbosity: u8, out: &mut Output, label: &str) {
    let bad: Vec<_> = v.violations().collect();
    if verbosity >= 1 || !bad.is_empty() {
        out.line(format!(
            "{label}: {} checks, {} violations, {} skipped",
            v.checks.len(),
            bad.len(),
            v.skipped.len()
        ));
    }
    for c in &bad {
        out.line(format!(
            "  VIOLATION {} at {}: lhs {:e} > rhs {:e} + slack {:e}",
            c.inequality,
            c.index.map_or("-".to_string(), |i| i.to_string()),
            c.lhs,
            c.rhs,
            c.slack
        ));
    }
    if verbosity >= 2 {
        for c in v.checks.iter().filter(|c| c.passed()) {
            out.line(format!(
                "  ok {} at {}: margin {:e}",
                c.inequality,
                c.index.map_or("-".to_string(), |i| i.to_string()),
                c.margin()
            ));
        }
        for (i, why) in &v.skipped {
            out.line(format!("  skipped {i}: {why}"));
        }
    }
    if !bad.is_empty() {
        let names: Vec<String> = bad.iter().map(|c| c.inequality.to_string()).collect();
        out.failures.push(format!("{label}: {}", names.join(", ")));
    }
}

fn write_outputs(
    plan: &Plan,
    stem: &str,
    trace: &TraceFile,
    v: &Verification,
    method: &str,
) -> Result<Option<PathBuf>, CliError> {
    let Some(dir) = &plan.out else { return Ok(None) };
    std::fs::create_dir_all(dir)?;
    let path = dir.join(format!("{stem}.{}", plan.format.extension()));
    trace_io::write_trace(&path, trace, plan.format)?;
    let report = Report {
        problem: stem,
        method,
        passed: v.passed(),
        checks: v.checks.len(),
        violations: v.violations().collect(),
        skipped: &v.skipped,
    };
    let text = serde_json::to_string_pretty(&report).map_err(|e| CliError::Io(e.to_string()))?;
    std::fs::write(dir.join(format!("{stem}.report.json")), text)?;
    Ok(Some(path))
}

fn stem(spec: &ProblemSpec, method: &str) -> String {
    match spec.seed {
        Some(s) => format!("{}-s{s}-{method}", spec.name),
        None => format!("{}-{method}", spec.name),
    }
}

/// RCTM on `problem`, with a reference `F*` when none is known.
pub fn rctm_trace(problem: &Problem, step: &StepSettings) -> Result<RunTrace, CliError> {
    let lipschitz = problem.lipschitz(step.p)?;
    let cfg = step.step_config(lipschitz)?;
    let stop = step.stop_rule();
    let x0 = problem.default_start.clone();
    let mut trace = rctm::run_rctm(problem, &x0, &cfg, &stop).map_err(|f| CliError::from(f.error))?;
    if trace.header.optimal_value.is_none() {
        let (value, gap) = rctm::reference_optimum(problem, &x0, &cfg, &stop)?;
        if gap.is_finite() {
            trace.set_reference_optimum(value, gap);
        }
    }
    Ok(trace)
}

pub fn prox_trace(problem: &Problem, plan: &Plan) -> Result<ProxTrace, CliError> {
    let cfg = plan.prox.prox_config(&plan.step)?;
    let x0 = problem.default_start.clone();
    prox::run_inexact_prox(problem, &x0, &cfg).map_err(|f| CliError::from(f.error))
}

pub fn verify_rctm(trace: &RunTrace, epsilon: f64) -> Verification {
    rctm::verify_trace(trace, epsilon)
}

pub fn verify_any(trace: &TraceFile, epsilon: f64) -> Verification {
    match trace {
        TraceFile::Rctm(t) => verify_rctm(t, epsilon),
        TraceFile::Prox(t) => prox::verify_prox(t).verification,
    }
}

pub fn run(plan: &Plan) -> Result<Output, CliError> {
    let mut out = Output::default();
    for spec in &plan.problems {
        let problem = spec.build()?;
        match plan.method {
            Method::Rctm => {
                let trace = rctm_trace(&problem, &plan.step)?;
                let v = verify_rctm(&trace, plan.step.epsilon);
                let last = trace.last();
                let s = stem(spec, "rctm");
                out.line(format!(
                    "{}: {} iterations, F = {:.12e}, eta = {:.3e}, x = {:?}",
                    problem.name,
                    trace.iterations(),
                    last.f_value,
                    last.eta,
                    last.x
                ));
                let file = TraceFile::Rctm(trace);
                if let Some(p) = write_outputs(plan, &s, &file, &v, "rctm")? {
                    out.line(format!("  wrote {}", p.display()));
                }
                describe(&v, plan.verbosity, &mut out, &s);
            }
            Method::Prox => prox_one(plan, spec, &problem, &mut out)?,
        }
    }
    Ok(out)
}

fn prox_one(plan: &Plan, spec: &ProblemSpec, problem: &Problem, out: &mut Output) -> Result<(), CliError> {
    let trace = prox_trace(problem, plan)?;
    let rep = prox::verify_prox(&trace);
    let last = trace.records.last().expect("initial record");
    let s = stem(spec, "prox");
    out.line(format!(
        "{}: {} outer iterations, {} inner steps, F = {:.12e}, F(xbar) = {:.12e}",
        problem.name,
        trace.outer_iterations(),
        trace.total_inner(),
        last.f_value,
        last.averaged_value
    ));
    let file = TraceFile::Prox(trace);
    if let Some(p) = write_outputs(plan, &s, &file, &rep.verification, "prox")? {
        out.line(format!("  wrote {}", p.display()));
    }
    describe(&rep.verification, plan.verbosity, out, &s);
    Ok(())
}

pub fn prox_cmd(plan: &Plan) -> Result<Output, CliError> {
    let mut out = Output::default();
    for spec in &plan.problems {
        let problem = spec.build()?;
        prox_one(plan, spec, &problem, &mut out)?;
    }
    Ok(out)
}

pub fn verify(path: &Path, epsilon: f64, verbosity: u8) -> Result<Output, CliError> {
    let trace = trace_io::read_trace(path)?;
    let v = verify_any(&trace, epsilon);
    let mut out = Output::default();
    describe(&v, verbosity.max(1), &mut out, &path.display().to_string());
    Ok(out)
}

pub fn check_oracle(specs: &[ProblemSpec], points: usize, seed: u64) -> Result<Output, CliError> {
    let mut out = Output::default();
    for spec in specs {
        let problem = spec.build()?;
        let health = problem.check_oracle(points, seed)?;
        let uc = problem.check_uniform_convexity(points, seed);
        let d = health.worst_derivatives;
        out.line(format!(
            "{}: derivatives grad {:.1e} hess {:.1e} third {:.1e}; taylor violations {}; convexity violations {}",
            problem.name,
            d.gradient_error,
            d.hessian_error,
            d.third_error,
            health.taylor_violations(),
            uc.violations().count()
        ));
        if !health.passed() || !uc.passed() {
            out.failures.push(format!("{}: oracle check failed", problem.name));
        }
    }
    Ok(out)
}

pub fn all_specs(seed: Option<u64>) -> Vec<ProblemSpec> {
    NAMES
        .iter()
        .map(|n| {
            let mut s = ProblemSpec::named(n);
            s.seed = seed;
            s
        })
        .collect()
}

fn show<T: std::fmt::Display>(v: Option<T>) -> String {
    v.map_or("n/a".to_string(), |x| x.to_string())
}

pub fn rates(plan: &Plan) -> Result<Output, CliError> {
    let mut out = Output::default();
    for spec in &plan.problems {
        let problem = spec.build()?;
        let trace = rctm_trace(&problem, &plan.step)?;
        let local = verify_local_rates(&trace);
        let global = verify_global_rates(&trace, plan.step.epsilon);
        let mut s = String::new();
        let _ = writeln!(
            s,
            "{} (p = {}): empirical order {} from {} pairs, theoretical {}",
            problem.name,
            plan.step.p,
            local.empirical_order.map_or("n/a".into(), |o| format!("{o:.3}")),
            local.regression_pairs.len(),
            show(local.theoretical_order)
        );
        let _ = writeln!(
            s,
            "  region entry: predicted {} observed {}; iterations to {:e}: predicted {} observed {}",
            show(global.predicted_region_entry),
            show(global.observed_region_entry),
            plan.step.epsilon,
            show(global.predicted_iterations),
            show(global.observed_iterations)
        );
        out.text.push_str(&s);
        let mut v = verify_steps(&trace);
        v.extend(local.verification);
        v.extend(global.verification);
        if problem.lipschitz(plan.step.p).map_or(false, |l| l > 0.0) {
            let pt = prox_trace(&problem, plan)?;
            let rep = prox::verify_prox(&pt);
            let n = pt.outer_iterations();
            let cfg = plan.prox.prox_config(&plan.step)?;
            let bound = pt.header.initial_distance.map(|d| {
                prox::oracle_call_bound(n, &cfg, d, pt.header.fprime0_norm, pt.header.lipschitz)
            });
            let worst_t = pt
                .records
                .iter()
                .skip(1)
                .filter_map(|r| r.inner_bound.map(|t| (r.inner_iterations, t)))
                .max_by_key(|&(used, t)| used as i64 - t as i64);
            out.line(format!(
                "  prox: {n} outer, inner steps {} vs N_k bound {}; tightest t_k {}",
                pt.total_inner(),
                bound.map_or("n/a".into(), |b| format!("{b:.2}")),
                worst_t.map_or("n/a".into(), |(u, t)| format!("{u} used of {t}"))
            ));
            v.extend(rep.verification);
        }
        describe(&v, plan.verbosity, &mut out, &problem.name);
    }
    Ok(out)
}
