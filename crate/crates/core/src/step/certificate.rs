use crate::math;
use crate::report::{Inequality, Verification};

/// Relative slack applied to every step inequality.
pub const CERTIFICATE_SLACK: f64 = 1e-8;
const ROUNDING: f64 = 1e-12;
/// Absolute floor on gradient rounding, for gradients that are small sums of
/// order-one terms.
pub(crate) const GRADIENT_ROUNDING: f64 = 1e-14;

/// Measured quantities of one step.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct StepCertificate {
    pub degree: usize,
    pub lipschitz: f64,
    pub regularization: f64,
    /// `‖T − x‖`.
    pub step_norm: f64,
    /// `‖F′(T)‖_*`.
    pub fprime_norm: f64,
    /// `⟨F′(T), x − T⟩`.
    pub inner_product: f64,
    /// Dual norm of the model subgradient at `T`.
    pub residual: f64,
    pub inner_tolerance: f64,
    pub inner_iterations: usize,
    /// `F(x)`.
    pub value_before: f64,
    /// `F(T)`.
    pub value_after: f64,
    /// `max(‖∇f(x)‖_*, ‖∇f(T)‖_*)`, the scale of rounding in `F′(T)`.
    pub gradient_scale: f64,
}

/// `c` in `⟨F′(T), x − T⟩ ≥ c·‖F′(T)‖_*^{(p+1)/p}` for `H = βL_p`, `β > 1`.
pub fn lemma_constant(degree: usize, lipschitz: f64, regularization: f64) -> f64 {
    let p = degree as f64;
    let beta = regularization / lipschitz;
    let e = (p - 1.0) / (2.0 * p);
    let base = math::powf(math::factorial(degree) / ((p + 1.0) * lipschitz), 1.0 / p);
    base * math::powf(beta * beta - 1.0, e) / beta * p / math::powf(p * p - 1.0, e)
}

/// The `β = p` constant `(p!/((p+1)L_p))^{1/p}`.
pub fn lemma_constant_at_p(degree: usize, lipschitz: f64) -> f64 {
    let p = degree as f64;
    math::powf(math::factorial(degree) / ((p + 1.0) * lipschitz), 1.0 / p)
}

impl StepCertificate {
    /// `(L_p + H)/p! · ‖T − x‖^p`.
    pub fn gradient_bound(&self) -> f64 {
        (self.lipschitz + self.regularization) / math::factorial(self.degree)
            * math::powi(self.step_norm, self.degree as i32)
    }

    /// Right-hand side of the decrease lemma with the actual `β`, evaluated at
    /// the measured `‖F′(T)‖_*`; `None` when `L_p = 0`.
    pub fn lemma_rhs(&self) -> Option<f64> {
        (self.lipschitz > 0.0).then(|| {
            lemma_constant(self.degree, self.lipschitz, self.regularization)
                * self.norm_power(self.fprime_norm)
        })
    }

    fn norm_power(&self, v: f64) -> f64 {
        let p = self.degree as f64;
        math::powf(v.max(0.0), (p + 1.0) / p)
    }

    fn inexact_slack(&self) -> f64 {
        self.residual * (1.0 + self.step_norm)
    }

    pub fn is_default_regularization(&self) -> bool {
        let target = self.degree as f64 * self.lipschitz;
        (self.regularization - target).abs() <= 1e-12 * target
    }
}

/// Checks the gradient bound, the decrease lemma (general `β` and, when
/// `H = pL_p`, the `β = p` form) and descent for one step.
pub fn verify_step(cert: &StepCertificate, index: Option<usize>) -> Verification {
    let mut out = Verification::new();
    let rounding = ROUNDING * cert.gradient_scale + GRADIENT_ROUNDING;
    let bound = cert.gradient_bound();
    out.record(
        Inequality::StepGradientBound,
        index,
        cert.fprime_norm,
        bound,
        CERTIFICATE_SLACK * bound + cert.inexact_slack() + rounding,
    );

    // the lemma applies to F′(T) minus the model residual
    let effective = cert.norm_power(cert.fprime_norm - cert.residual);
    let lemma_slack = |rhs: f64| {
        CERTIFICATE_SLACK * rhs + cert.inexact_slack() + rounding * (1.0 + cert.step_norm)
    };
    if cert.lipschitz > 0.0 {
        let rhs = lemma_constant(cert.degree, cert.lipschitz, cert.regularization) * effective;
        out.record(Inequality::StepDecrease, index, rhs, cert.inner_product, lemma_slack(rhs));
        if cert.is_default_regularization() {
            let rhs = lemma_constant_at_p(cert.degree, cert.lipschitz) * effective;
            out.record(
                Inequality::StepDecreaseAtP,
                index,
                rhs,
                cert.inner_product,
                lemma_slack(rhs),
            );
        } else if index.is_none_or(|i| i == 0) {
            out.skip(Inequality::StepDecreaseAtP, "H differs from p·L_p");
        }
    } else if index.is_none_or(|i| i == 0) {
        out.skip(Inequality::StepDecrease, "L_p = 0");
        out.skip(Inequality::StepDecreaseAtP, "L_p = 0");
    }

    out.record(
        Inequality::StepDescent,
        index,
        cert.value_after,
        cert.value_before,
        10.0 * cert.inner_tolerance * cert.step_norm + ROUNDING * cert.value_before.abs().max(1.0),
    );
    out
}
