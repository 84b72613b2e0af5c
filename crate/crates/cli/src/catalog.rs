//! Named problem constructors.

use rctm_core::problems::{self, seeded_anchor};
use rctm_core::{Problem, Result};
use serde::{Deserialize, Serialize};

pub const NAMES: [&str; 6] = [
    "ball-example",
    "power-quadratic",
    "power-quartic",
    "power-quadratic-l1",
    "logsumexp-ball",
    "logsumexp-symmetric",
];

/// A catalog entry and its parameters; unset fields take per-problem defaults.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProblemSpec {
    pub name: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub dim: Option<usize>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma2: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma3: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub sigma4: Option<f64>,
    /// l1 weight.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub weight: Option<f64>,
    /// Ball radius for the log-sum-exp problems.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub radius: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// Starting point; the problem's default start when unset.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub start: Option<Vec<f64>>,
}

impl ProblemSpec {
    pub fn named(name: &str) -> Self {
        Self {
            name: name.to_string(),
            dim: None,
            sigma2: None,
            sigma3: None,
            sigma4: None,
            weight: None,
            radius: None,
            seed: None,
            start: None,
        }
    }

    pub fn is_known(&self) -> bool {
        NAMES.contains(&self.name.as_str())
    }

    pub fn build(&self) -> Result<Problem> {
        let seed = self.seed.unwrap_or(0);
        let dim = self.dim.unwrap_or(10);
        let s2 = self.sigma2.unwrap_or(1.0);
        let s3 = self.sigma3.unwrap_or(1.0);
        let mut p = match self.name.as_str() {
            "ball-example" => problems::make_ball_example(s2, s3)?,
            "power-quadratic" => problems::make_power_quadratic(dim, s2, s3, seeded_anchor(dim, seed))?,
            "power-quartic" => {
                problems::make_power_quartic(dim, s2, self.sigma4.unwrap_or(1.0), seeded_anchor(dim, seed))?
            }
            "power-quadratic-l1" => problems::make_power_quadratic_l1(
                dim,
                s2,
                s3,
                seeded_anchor(dim, seed),
                self.weight.unwrap_or(0.1),
            )?,
            "logsumexp-ball" => problems::make_logsumexp_ball(dim, seed, self.radius.unwrap_or(1.0))?,
            "logsumexp-symmetric" => problems::make_logsumexp_symmetric(dim, self.radius.unwrap_or(1.0))?,
            other => {
                return Err(rctm_core::Error::Config(format!(
                    "unknown problem {other:?}; known: {}",
                    NAMES.join(", ")
                )))
            }
        };
        if self.name.starts_with("power") {
            p.seed = Some(seed);
        }
        if let Some(x0) = &self.start {
            if x0.len() != p.dim() {
                return Err(rctm_core::Error::DimensionMismatch {
                    expected: p.dim(),
                    found: x0.len(),
                });
            }
            p.default_start = x0.clone();
        }
        Ok(p)
    }
}
