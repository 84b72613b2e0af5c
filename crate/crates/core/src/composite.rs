//! The simple convex part `h` of `F = f + h`.
//!
//! Three kinds ship: the zero function, a weighted ℓ1 norm and the indicator
//! of a centered ball `{x : ‖x‖ ≤ R}` in the metric norm. Each provides its
//! value, a scaled proximal map and the minimal subgradient
//! `argmin_{g ∈ ∂h(x)} ‖∇f(x) + g‖_*` in closed form.

use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg;
use crate::metric::Metric;

/// Relative tolerance on `‖x‖ = R` used for ball membership and boundary tests.
pub const BALL_TOLERANCE: f64 = 1e-12;

/// A value in `ℝ ∪ {+∞}`. `Infinite` marks points outside `dom h` and is
/// never produced by arithmetic overflow.
#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub enum Extended {
    Finite(f64),
    Infinite,
}

impl Extended {
    pub fn is_finite(self) -> bool {
        matches!(self, Extended::Finite(_))
    }

    pub fn finite(self) -> Option<f64> {
        match self {
            Extended::Finite(v) => Some(v),
            Extended::Infinite => None,
        }
    }

    /// Maps `Infinite` to `f64::INFINITY` for comparisons.
    pub fn to_f64(self) -> f64 {
        self.finite().unwrap_or(f64::INFINITY)
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
#[cfg_attr(feature = "serde", serde(tag = "kind", rename_all = "snake_case"))]
pub enum CompositeKind {
    Zero,
    L1 { weight: f64 },
    BallIndicator { radius: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq)]
#[cfg_attr(feature = "serde", derive(serde::Serialize, serde::Deserialize))]
pub struct CompositePart {
    pub kind: CompositeKind,
    pub dim: usize,
}

impl CompositePart {
    pub fn zero(dim: usize) -> Self {
        Self {
            kind: CompositeKind::Zero,
            dim,
        }
    }

    pub fn l1(dim: usize, weight: f64) -> Result<Self> {
        if !(weight >= 0.0) {
            return Err(Error::config("l1 weight must be nonnegative"));
        }
        Ok(Self {
            kind: CompositeKind::L1 { weight },
            dim,
        })
    }

    pub fn ball(dim: usize, radius: f64) -> Result<Self> {
        if !(radius > 0.0) {
            return Err(Error::config("ball radius must be positive"));
        }
        Ok(Self {
            kind: CompositeKind::BallIndicator { radius },
            dim,
        })
    }

    pub fn is_zero(&self) -> bool {
        matches!(self.kind, CompositeKind::Zero)
    }

    /// The part `a·h` for `a > 0`; indicators are invariant.
    pub fn scaled(&self, a: f64) -> Self {
        let kind = match self.kind {
            CompositeKind::L1 { weight } => CompositeKind::L1 { weight: a * weight },
            k => k,
        };
        Self { kind, dim: self.dim }
    }

    pub fn contains(&self, x: &[f64], metric: &Metric) -> bool {
        match self.kind {
            CompositeKind::BallIndicator { radius } => {
                metric.norm(x) <= radius * (1.0 + BALL_TOLERANCE)
            }
            _ => true,
        }
    }

    pub fn value(&self, x: &[f64], metric: &Metric) -> Extended {
        match self.kind {
            CompositeKind::Zero => Extended::Finite(0.0),
            CompositeKind::L1 { weight } => {
                Extended::Finite(weight * x.iter().map(|v| v.abs()).sum::<f64>())
            }
            CompositeKind::BallIndicator { .. } => {
                if self.contains(x, metric) {
                    Extended::Finite(0.0)
                } else {
                    Extended::Infinite
                }
            }
        }
    }

    /// `h_value` with a dimension check.
    pub fn h_value(&self, x: &[f64], metric: &Metric) -> Result<Extended> {
        check_dim(self.dim, x.len())?;
        Ok(self.value(x, metric))
    }

    /// `argmin_y { h(y) + ‖y − z‖² / (2t) }` in the metric norm.
    pub fn prox(&self, z: &[f64], t: f64, metric: &Metric) -> Result<Vec<f64>> {
        check_dim(self.dim, z.len())?;
        if !(t > 0.0) {
            return Err(Error::config("prox step must be positive"));
        }
        match self.kind {
            CompositeKind::Zero => Ok(z.to_vec()),
            CompositeKind::L1 { weight } => {
                if !metric.is_identity() {
                    return Err(Error::Unsupported(
                        "l1 prox has no closed form in a non-identity metric",
                    ));
                }
                let tau = t * weight;
                Ok(z.iter().map(|&v| soft_threshold(v, tau)).collect())
            }
            CompositeKind::BallIndicator { radius } => {
                let nz = metric.norm(z);
                if nz <= radius {
                    Ok(z.to_vec())
                } else {
                    Ok(linalg::scaled(z, radius / nz))
                }
            }
        }
    }

    /// The vector `∇f(x) + g*` with `g* ∈ ∂h(x)` minimizing its dual norm, or
    /// `None` when `x ∉ dom h`.
    pub fn minimal_subgradient(
        &self,
        grad_f: &[f64],
        x: &[f64],
        metric: &Metric,
    ) -> Result<Option<Vec<f64>>> {
        check_dim(self.dim, x.len())?;
        check_dim(self.dim, grad_f.len())?;
        match self.kind {
            CompositeKind::Zero => Ok(Some(grad_f.to_vec())),
            CompositeKind::L1 { weight } => {
                if !metric.is_identity() {
                    return Err(Error::Unsupported(
                        "minimal l1 subgradient is only available in the identity metric",
                    ));
                }
                Ok(Some(
                    grad_f
                        .iter()
                        .zip(x)
                        .map(|(&g, &xi)| {
                            if xi > 0.0 {
                                g + weight
                            } else if xi < 0.0 {
                                g - weight
                            } else {
                                soft_threshold(g, weight)
                            }
                        })
                        .collect(),
                ))
            }
            CompositeKind::BallIndicator { radius } => {
                let nx = metric.norm(x);
                if nx > radius * (1.0 + BALL_TOLERANCE) {
                    return Ok(None);
                }
                if nx < radius * (1.0 - BALL_TOLERANCE) {
                    return Ok(Some(grad_f.to_vec()));
                }
                // ‖g + γBx‖²_* = ‖g‖²_* + 2γ⟨g, x⟩ + γ²‖x‖², minimized over γ ≥ 0
                let gx = linalg::dot(grad_f, x);
                let gamma = (-gx / (nx * nx)).max(0.0);
                let bx = metric.apply(x);
                Ok(Some(linalg::add_scaled(grad_f, gamma, &bx)))
            }
        }
    }

    /// `η(x) = min_{g ∈ ∂h(x)} ‖∇f(x) + g‖_*`, `+∞` outside `dom h`.
    pub fn minimal_subgradient_norm(
        &self,
        grad_f: &[f64],
        x: &[f64],
        metric: &Metric,
    ) -> Result<Extended> {
        Ok(match self.minimal_subgradient(grad_f, x, metric)? {
            Some(v) => Extended::Finite(metric.dual(&v)),
            None => Extended::Infinite,
        })
    }
}

fn soft_threshold(v: f64, tau: f64) -> f64 {
    if v > tau {
        v - tau
    } else if v < -tau {
        v + tau
    } else {
        0.0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::Matrix;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn values() {
        let b = Metric::identity(2);
        assert_eq!(
            CompositePart::zero(2).value(&[5.0, -3.0], &b),
            Extended::Finite(0.0)
        );
        let ball = CompositePart::ball(2, 1.0).unwrap();
        assert_eq!(ball.value(&[0.0, -1.0], &b), Extended::Finite(0.0));
        assert_eq!(ball.value(&[0.0, -1.5], &b), Extended::Infinite);
        let l1 = CompositePart::l1(2, 0.5).unwrap();
        assert_eq!(l1.value(&[1.0, -2.0], &b), Extended::Finite(1.5));
        assert!(ball.h_value(&[1.0], &b).is_err());
    }

    #[test]
    fn prox_examples() {
        let b = Metric::identity(2);
        assert_eq!(
            CompositePart::zero(2).prox(&[3.0, 4.0], 1.0, &b).unwrap(),
            vec![3.0, 4.0]
        );
        let ball = CompositePart::ball(2, 1.0).unwrap();
        for t in [0.1, 1.0, 7.0] {
            assert_eq!(ball.prox(&[0.0, -2.0], t, &b).unwrap(), vec![0.0, -1.0]);
        }
        let l1 = CompositePart::l1(2, 1.0).unwrap();
        assert_eq!(l1.prox(&[2.0, -0.5], 1.0, &b).unwrap(), vec![1.0, 0.0]);
        assert!(ball.prox(&[0.0, 1.0], 0.0, &b).is_err());
    }

    #[test]
    fn l1_rejects_dense_metric() {
        let b = Metric::dense(Matrix::diagonal(&[2.0, 1.0])).unwrap();
        let l1 = CompositePart::l1(2, 1.0).unwrap();
        assert!(matches!(l1.prox(&[1.0, 1.0], 1.0, &b), Err(Error::Unsupported(_))));
        assert!(matches!(
            l1.minimal_subgradient_norm(&[1.0, 1.0], &[0.0, 0.0], &b),
            Err(Error::Unsupported(_))
        ));
    }

    fn prox_optimality(part: &CompositePart, metric: &Metric, seed: u64) {
        let n = part.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        for _ in 0..20 {
            let z: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
            let t = rng.random_range(0.1..2.0);
            let y = part.prox(&z, t, metric).unwrap();
            assert!(part.contains(&y, metric));
            let s = linalg::scaled(&metric.apply(&linalg::sub(&z, &y)), 1.0 / t);
            let hy = part.value(&y, metric).to_f64();
            for _ in 0..100 {
                let mut u: Vec<f64> = (0..n).map(|_| rng.random_range(-3.0..3.0)).collect();
                if !part.contains(&u, metric) {
                    u = part.prox(&u, 1.0, metric).unwrap();
                }
                let hu = part.value(&u, metric).to_f64();
                let rhs = hy + linalg::dot(&s, &linalg::sub(&u, &y));
                assert!(hu >= rhs - 1e-10, "{hu} < {rhs}");
            }
        }
    }

    #[test]
    fn prox_output_satisfies_subgradient_inequality() {
        let id = Metric::identity(3);
        prox_optimality(&CompositePart::zero(3), &id, 1);
        prox_optimality(&CompositePart::l1(3, 0.7).unwrap(), &id, 2);
        prox_optimality(&CompositePart::ball(3, 1.5).unwrap(), &id, 3);
        let dense = Metric::dense(
            Matrix::from_rows(&[vec![2.0, 0.3, 0.0], vec![0.3, 1.0, 0.2], vec![0.0, 0.2, 0.5]])
                .unwrap(),
        )
        .unwrap();
        prox_optimality(&CompositePart::ball(3, 1.0).unwrap(), &dense, 4);
    }

    #[test]
    fn ball_eta_outside_domain_is_infinite() {
        let b = Metric::identity(2);
        let ball = CompositePart::ball(2, 1.0).unwrap();
        assert_eq!(
            ball.minimal_subgradient_norm(&[1.0, 1.0], &[2.0, 0.0], &b).unwrap(),
            Extended::Infinite
        );
    }

    #[test]
    fn ball_eta_matches_gamma_grid() {
        let b = Metric::identity(2);
        let ball = CompositePart::ball(2, 1.0).unwrap();
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        for _ in 0..100 {
            let th = rng.random_range(0.0..core::f64::consts::TAU);
            let x = [libm::cos(th), libm::sin(th)];
            let g = [rng.random_range(-5.0..5.0), rng.random_range(-5.0..5.0)];
            let eta = ball.minimal_subgradient_norm(&g, &x, &b).unwrap().to_f64();
            let grid = (0..=100_000)
                .map(|i| {
                    let gamma = 1e3 * i as f64 / 1e5;
                    linalg::norm2(&[g[0] + gamma * x[0], g[1] + gamma * x[1]])
                })
                .fold(f64::INFINITY, f64::min);
            assert!((eta - grid).abs() < 1e-4, "{eta} vs {grid}");
        }
    }

    #[test]
    fn l1_eta_uses_clipped_subgradient() {
        let b = Metric::identity(3);
        let l1 = CompositePart::l1(3, 1.0).unwrap();
        // x = (1, 0, 0): first coordinate fixed, others clipped into [-1, 1]
        let eta = l1
            .minimal_subgradient_norm(&[-1.0, 0.5, -3.0], &[1.0, 0.0, 0.0], &b)
            .unwrap();
        assert_eq!(eta, Extended::Finite(2.0));
    }
}
