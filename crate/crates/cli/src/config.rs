//! Suite configuration files (TOML) and the settings shared with the flags.

use std::path::{Path, PathBuf};

use rctm_core::prox::ProxConfig;
use rctm_core::{StepConfig, StopRule, Subsolver};
use serde::{Deserialize, Serialize};

use crate::catalog::ProblemSpec;
use crate::error::CliError;

pub const SCHEMA_VERSION: u32 = 1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "lowercase")]
pub enum Method {
    #[default]
    Rctm,
    Prox,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default, clap::ValueEnum)]
#[serde(rename_all = "lowercase")]
pub enum Format {
    #[default]
    Csv,
    Json,
}

impl Format {
    pub fn extension(self) -> &'static str {
        match self {
            Format::Csv => "csv",
            Format::Json => "json",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct StepSettings {
    pub p: usize,
    /// Absolute `H`; `p·L_p` when unset.
    #[serde(rename = "H", skip_serializing_if = "Option::is_none")]
    pub regularization: Option<f64>,
    pub max_iters: usize,
    /// Stop once `η(x_k) ≤ tol`.
    pub tol: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub f_gap_tol: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub inner_tol: Option<f64>,
    pub subsolver: String,
    /// Target gap for the iteration-count check.
    pub epsilon: f64,
}

impl Default for StepSettings {
    fn default() -> Self {
        Self {
            p: 2,
            regularization: None,
            max_iters: 100,
            tol: 1e-12,
            f_gap_tol: None,
            inner_tol: None,
            subsolver: "auto".into(),
            epsilon: 1e-8,
        }
    }
}

impl StepSettings {
    pub fn subsolver(&self) -> Result<Subsolver, CliError> {
        Subsolver::from_name(&self.subsolver)
            .ok_or_else(|| CliError::Config(format!("unknown subsolver {:?}", self.subsolver)))
    }

    pub fn step_config(&self, lipschitz: f64) -> Result<StepConfig, CliError> {
        let mut cfg = StepConfig::new(self.p, lipschitz)?.with_subsolver(self.subsolver()?);
        if let Some(h) = self.regularization {
            cfg = cfg.with_regularization(h)?;
        }
        if let Some(t) = self.inner_tol {
            cfg = cfg.with_inner_tolerance(t)?;
        }
        Ok(cfg)
    }

    pub fn stop_rule(&self) -> StopRule {
        StopRule {
            max_iters: self.max_iters,
            f_gap_tol: self.f_gap_tol,
            eta_tol: Some(self.tol),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields, default)]
pub struct ProxSettings {
    pub c: f64,
    pub s: f64,
    pub epsilon: f64,
    pub max_outer: usize,
}

impl Default for ProxSettings {
    fn default() -> Self {
        Self {
            c: 1.0,
            s: 2.0,
            epsilon: 1e-6,
            max_outer: 50,
        }
    }
}

impl ProxSettings {
    pub fn prox_config(&self, step: &StepSettings) -> Result<ProxConfig, CliError> {
        let mut cfg = ProxConfig::new(step.p)?;
        cfg.c = self.c;
        cfg.s = self.s;
        cfg.epsilon = self.epsilon;
        cfg.max_outer = self.max_outer;
        cfg.subsolver = step.subsolver()?;
        cfg.inner_tolerance = step.inner_tol;
        cfg.validate()?;
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SuiteConfig {
    pub schema_version: u32,
    #[serde(default)]
    pub method: Method,
    pub problems: Vec<ProblemSpec>,
    #[serde(default)]
    pub step: StepSettings,
    #[serde(default)]
    pub prox: ProxSettings,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output: Option<PathBuf>,
    #[serde(default)]
    pub format: Format,
    /// 0 prints failures only, 1 a summary per run, 2 every check.
    #[serde(default = "default_verbosity")]
    pub verbosity: u8,
}

fn default_verbosity() -> u8 {
    1
}

impl SuiteConfig {
    pub fn parse(text: &str) -> Result<Self, CliError> {
        let cfg: SuiteConfig =
            toml::from_str(text).map_err(|e| CliError::Config(format!("config: {e}")))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
        Self::parse(&text)
    }

    pub fn validate(&self) -> Result<(), CliError> {
        if self.schema_version != SCHEMA_VERSION {
            return Err(CliError::Config(format!(
                "schema_version {} is not supported (expected {SCHEMA_VERSION})",
                self.schema_version
            )));
        }
        if self.problems.is_empty() {
            return Err(CliError::Config("config lists no problems".into()));
        }
        if let Some(bad) = self.problems.iter().find(|p| !p.is_known()) {
            return Err(CliError::Config(format!(
                "unknown problem {:?}; known: {}",
                bad.name,
                crate::catalog::NAMES.join(", ")
            )));
        }
        self.step.subsolver()?;
        Ok(())
    }
}
