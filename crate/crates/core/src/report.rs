//! Named inequalities and the pass/fail records produced by the verifiers.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

/// Every inequality the crate certifies at runtime.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(rename_all = "kebab-case"))]
pub enum Inequality {
    /// `|f(y) − Ω_p(y)| ≤ L_p/(p+1)! ‖y−x‖^{p+1}`
    TaylorValue,
    /// `‖∇f(y) − ∇Ω_p(y)‖_* ≤ L_p/p! ‖y−x‖^p`
    TaylorGradient,
    /// `‖(∇²f(y) − ∇²Ω_p(y))v‖_* ≤ L_p/(p−1)! ‖y−x‖^{p−1}‖v‖`
    TaylorHessian,
    /// `⟨G_x − G_y, x − y⟩ ≥ σ_q‖x − y‖^q`
    UniformConvexity,
    /// `‖F′(T)‖_* ≤ (L_p+H)/p! ‖T−x‖^p`
    StepGradientBound,
    /// Step decrease `⟨F′(T), x−T⟩ ≥ c(β)·‖F′(T)‖_*^{(p+1)/p}` for general `β = H/L_p`.
    StepDecrease,
    /// The same decrease with the constant for `β = p`.
    StepDecreaseAtP,
    /// `F(T) ≤ F(x) + 10·tol·‖T−x‖`
    StepDescent,
    /// `F(x_{k+1}) ≤ F(x_k)` up to slack.
    Monotonicity,
    /// Superlinear bound on `F(x_{k+1}) − F*` in terms of `F(x_k) − F*`.
    LocalGapRate,
    /// `η(x_{k+1}) ≤ ‖F′(x_{k+1})‖_*`
    EtaBelowSubgradient,
    /// `‖F′(x_{k+1})‖_* ≤ (L_p+H)/p! (η(x_k)/σ_q)^{p/(q−1)}`
    SubgradientRate,
    /// Once inside the subgradient region, iterates stay there.
    SubgradientRegionAbsorbing,
    /// `F(x_k) − F* ≤ (p+1)(2p)^p/p! · L_p D^{p+1}/(k−1)^p`, `k ≥ 2`.
    SublinearRate,
    /// `δ_k − δ_{k+1} ≥ C δ_{k+1}^{(p+1)/p}`
    SublinearRecurrence,
    /// `F(x_k) − F* ≤ exp(−k/(1+ω^{1/p}))(F(x_0) − F*)`
    LinearRate,
    /// Observed iterations to reach `ε` do not exceed the predicted count.
    LinearIterationCount,
    /// `‖g_k‖_* ≤ δ_k`
    ProxCriterion,
    /// Weighted gap, subgradient and distance energy is below `R_k(δ)`.
    ProxEnergy,
    /// `‖Φ′(z_t)‖_* ≤ a(p+1)L_p/p! · ‖Φ′(z_{t−1})‖_*^p`
    ProxInnerContraction,
    /// Inner iterations per outer step do not exceed `t_k`.
    ProxInnerBound,
    /// `‖F′(x_k)‖_*` stays below the growth bound in terms of `‖F′(x_0)‖_*`.
    ProxSubgradientChain,
    /// Averaged-point rate with the `V_k(ε)` factor.
    ProxAveragedRate,
    /// Averaged-point rate with the `exp(p−1)` factor on its stated range.
    ProxAveragedRateFinal,
    /// Total inner steps do not exceed the `N_k` bound.
    ProxOracleCalls,
}

impl Inequality {
    pub fn name(self) -> &'static str {
        use Inequality::*;
        match self {
            TaylorValue => "taylor-value-residual",
            TaylorGradient => "taylor-gradient-residual",
            TaylorHessian => "taylor-hessian-residual",
            UniformConvexity => "uniform-convexity",
            StepGradientBound => "step-gradient-bound",
            StepDecrease => "step-decrease",
            StepDecreaseAtP => "step-decrease-beta-p",
            StepDescent => "step-descent",
            Monotonicity => "monotonicity",
            LocalGapRate => "local-gap-rate",
            EtaBelowSubgradient => "eta-below-subgradient",
            SubgradientRate => "local-subgradient-rate",
            SubgradientRegionAbsorbing => "subgradient-region-absorbing",
            SublinearRate => "global-sublinear-rate",
            SublinearRecurrence => "global-sublinear-recurrence",
            LinearRate => "global-linear-rate",
            LinearIterationCount => "linear-iteration-count",
            ProxCriterion => "prox-inexactness-criterion",
            ProxEnergy => "prox-energy-bound",
            ProxInnerContraction => "prox-inner-contraction",
            ProxInnerBound => "prox-inner-iteration-bound",
            ProxSubgradientChain => "prox-subgradient-growth",
            ProxAveragedRate => "prox-averaged-rate",
            ProxAveragedRateFinal => "prox-averaged-rate-final",
            ProxOracleCalls => "prox-oracle-call-bound",
        }
    }

    pub fn from_name(name: &str) -> Option<Self> {
        ALL.iter().copied().find(|i| i.name() == name)
    }
}

pub const ALL: [Inequality; 25] = {
    use Inequality::*;
    [
        TaylorValue,
        TaylorGradient,
        TaylorHessian,
        UniformConvexity,
        StepGradientBound,
        StepDecrease,
        StepDecreaseAtP,
        StepDescent,
        Monotonicity,
        LocalGapRate,
        EtaBelowSubgradient,
        SubgradientRate,
        SubgradientRegionAbsorbing,
        SublinearRate,
        SublinearRecurrence,
        LinearRate,
        LinearIterationCount,
        ProxCriterion,
        ProxEnergy,
        ProxInnerContraction,
        ProxInnerBound,
        ProxSubgradientChain,
        ProxAveragedRate,
        ProxAveragedRateFinal,
        ProxOracleCalls,
    ]
};

impl fmt::Display for Inequality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// One evaluated instance of an inequality `lhs ≤ rhs + slack`.
///
/// Lower-bound inequalities are stored with sides swapped so that the same
/// comparison applies everywhere.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CheckOutcome {
    pub inequality: Inequality,
    pub index: Option<usize>,
    pub lhs: f64,
    pub rhs: f64,
    pub slack: f64,
}

impl CheckOutcome {
    pub fn new(inequality: Inequality, index: Option<usize>, lhs: f64, rhs: f64, slack: f64) -> Self {
        Self {
            inequality,
            index,
            lhs,
            rhs,
            slack,
        }
    }

    pub fn passed(&self) -> bool {
        self.lhs <= self.rhs + self.slack
    }

    /// `rhs + slack − lhs`; negative on violation.
    pub fn margin(&self) -> f64 {
        self.rhs + self.slack - self.lhs
    }
}

/// Outcomes of a verification pass plus the checks that could not run.
#[derive(Debug, Clone, Default, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct Verification {
    pub checks: Vec<CheckOutcome>,
    pub skipped: Vec<(Inequality, String)>,
}

impl Verification {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn push(&mut self, check: CheckOutcome) {
        self.checks.push(check);
    }

    pub fn record(
        &mut self,
        inequality: Inequality,
        index: Option<usize>,
        lhs: f64,
        rhs: f64,
        slack: f64,
    ) {
        self.checks
            .push(CheckOutcome::new(inequality, index, lhs, rhs, slack));
    }

    pub fn skip(&mut self, inequality: Inequality, reason: impl Into<String>) {
        self.skipped.push((inequality, reason.into()));
    }

    pub fn extend(&mut self, other: Verification) {
        self.checks.extend(other.checks);
        self.skipped.extend(other.skipped);
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(CheckOutcome::passed)
    }

    pub fn violations(&self) -> impl Iterator<Item = &CheckOutcome> {
        self.checks.iter().filter(|c| !c.passed())
    }

    pub fn count(&self, inequality: Inequality) -> usize {
        self.checks
            .iter()
            .filter(|c| c.inequality == inequality)
            .count()
    }

    pub fn violations_of(&self, inequality: Inequality) -> usize {
        self.violations()
            .filter(|c| c.inequality == inequality)
            .count()
    }

    pub fn was_skipped(&self, inequality: Inequality) -> bool {
        self.skipped.iter().any(|(i, _)| *i == inequality)
    }

    /// Smallest margin seen for `inequality`, if it was checked.
    pub fn worst_margin(&self, inequality: Inequality) -> Option<f64> {
        self.checks
            .iter()
            .filter(|c| c.inequality == inequality)
            .map(CheckOutcome::margin)
            .fold(None, |acc, m| Some(acc.map_or(m, |a: f64| a.min(m))))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn names_round_trip() {
        for i in ALL {
            assert_eq!(Inequality::from_name(i.name()), Some(i));
        }
    }

    #[test]
    fn verification_tracks_violations() {
        let mut v = Verification::new();
        v.record(Inequality::LocalGapRate, Some(1), 1.0, 2.0, 0.0);
        assert!(v.passed());
        v.record(Inequality::LocalGapRate, Some(2), 3.0, 2.0, 0.5);
        assert!(!v.passed());
        assert_eq!(v.violations_of(Inequality::LocalGapRate), 1);
        assert_eq!(v.worst_margin(Inequality::LocalGapRate), Some(-0.5));
    }
}
