use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use rctm::catalog::ProblemSpec;
use rctm::commands::{self, Output, Plan};
use rctm::config::{Format, Method, SuiteConfig};
use rctm::CliError;

/// Regularized composite tensor methods with runtime certificates.
///
/// Exit codes: 0 ok, 2 configuration error, 3 certificate violation,
/// 4 subsolver nonconvergence.
#[derive(Parser, Debug)]
#[command(name = "rctm", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
    #[command(flatten)]
    common: Common,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Run the tensor method and check every certificate.
    Run,
    /// Run the inexact proximal scheme.
    Prox,
    /// Re-check a saved trace.
    Verify { trace: PathBuf },
    /// Finite-difference, Taylor-residual and convexity checks.
    CheckOracle {
        #[arg(long, default_value_t = 20)]
        points: usize,
    },
    /// Empirical orders and predicted-vs-observed iteration counts.
    Rates,
}

#[derive(Args, Debug, Default)]
struct Common {
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[arg(long, global = true)]
    problem: Option<String>,
    #[arg(long, global = true)]
    dim: Option<usize>,
    #[arg(long = "p", global = true, value_parser = clap::value_parser!(u8).range(2..=3))]
    degree: Option<u8>,
    /// Regularization `H`; defaults to p·L_p.
    #[arg(long = "H", global = true)]
    regularization: Option<f64>,
    #[arg(long, global = true)]
    max_iters: Option<usize>,
    /// Stop once the minimal subgradient norm falls to this value.
    #[arg(long, global = true)]
    tol: Option<f64>,
    #[arg(long, global = true)]
    inner_tol: Option<f64>,
    #[arg(long, global = true)]
    subsolver: Option<String>,
    #[arg(long, global = true)]
    c: Option<f64>,
    #[arg(long, global = true)]
    s: Option<f64>,
    #[arg(long, global = true)]
    epsilon: Option<f64>,
    #[arg(long, global = true)]
    max_outer: Option<usize>,
    #[arg(long, global = true)]
    seed: Option<u64>,
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    #[arg(long, global = true, value_enum)]
    format: Option<Format>,
    #[arg(short, long, global = true, action = clap::ArgAction::Count)]
    verbose: u8,
}

impl Common {
    fn plan(&self, need_problem: bool) -> Result<Plan, CliError> {
        let mut plan = match (&self.config, &self.problem) {
            (Some(path), _) => Plan::from_config(SuiteConfig::load(path)?),
            (None, Some(name)) => Plan::single(ProblemSpec::named(name)),
            (None, None) if need_problem => {
                return Err(CliError::Config("pass --problem NAME or --config PATH".into()))
            }
            (None, None) => Plan {
                problems: commands::all_specs(self.seed),
                ..Plan::single(ProblemSpec::named("ball-example"))
            },
        };
        if self.config.is_some() {
            if let Some(name) = &self.problem {
                plan.problems.retain(|p| &p.name == name);
                if plan.problems.is_empty() {
                    return Err(CliError::Config(format!("problem {name:?} is not in the config")));
                }
            }
        }
        for spec in &mut plan.problems {
            if self.dim.is_some() {
                spec.dim = self.dim;
            }
            if self.seed.is_some() {
                spec.seed = self.seed;
            }
            if !spec.is_known() {
                return Err(CliError::Config(format!(
                    "unknown problem {:?}; known: {}",
                    spec.name,
                    rctm::catalog::NAMES.join(", ")
                )));
            }
        }
        let st = &mut plan.step;
        if let Some(p) = self.degree {
            st.p = p as usize;
        }
        if self.regularization.is_some() {
            st.regularization = self.regularization;
        }
        if let Some(n) = self.max_iters {
            st.max_iters = n;
        }
        if let Some(t) = self.tol {
            st.tol = t;
        }
        if self.inner_tol.is_some() {
            st.inner_tol = self.inner_tol;
        }
        if let Some(s) = &self.subsolver {
            st.subsolver = s.clone();
        }
        st.subsolver()?;
        if let Some(e) = self.epsilon {
            st.epsilon = e;
            plan.prox.epsilon = e;
        }
        if let Some(c) = self.c {
            plan.prox.c = c;
        }
        if let Some(s) = self.s {
            plan.prox.s = s;
        }
        if let Some(n) = self.max_outer {
            plan.prox.max_outer = n;
        }
        if self.out.is_some() {
            plan.out = self.out.clone();
        }
        if let Some(f) = self.format {
            plan.format = f;
        }
        plan.verbosity = plan.verbosity.max(self.verbose + 1).min(2);
        Ok(plan)
    }
}

fn dispatch(cli: &Cli) -> Result<Output, CliError> {
    let c = &cli.common;
    match &cli.command {
        Command::Run => commands::run(&c.plan(true)?),
        Command::Prox => {
            let mut plan = c.plan(true)?;
            plan.method = Method::Prox;
            commands::prox_cmd(&plan)
        }
        Command::Verify { trace } => {
            commands::verify(trace, c.epsilon.unwrap_or(1e-8), c.verbose + 1)
        }
        Command::CheckOracle { points } => {
            let plan = c.plan(false)?;
            commands::check_oracle(&plan.problems, *points, c.seed.unwrap_or(0))
        }
        Command::Rates => commands::rates(&c.plan(true)?),
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = dispatch(&cli).map_err(|e| (String::new(), e)).and_then(Output::into_result);
    match result {
        Ok(text) => {
            print!("{text}");
            ExitCode::SUCCESS
        }
        Err((text, e)) => {
            print!("{text}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
