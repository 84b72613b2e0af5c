//! Euclidean geometry induced by a self-adjoint positive-definite operator `B`.
//!
//! Primal vectors live in `E`, dual vectors (gradients, subgradients) in `E*`.
//! Both are plain `f64` slices; the role is carried by the argument name and by
//! which norm is applied. `⟨g, x⟩` is always the coordinate dot product.

use alloc::vec::Vec;

use crate::error::{check_dim, Error, Result};
use crate::linalg::{self, Cholesky, Matrix};

#[derive(Debug, Clone)]
pub enum Metric {
    Identity(usize),
    /// Dense SPD operator with its Cholesky factor computed once.
    Dense { matrix: Matrix, factor: Cholesky },
}

impl Metric {
    pub fn identity(n: usize) -> Self {
        Metric::Identity(n)
    }

    pub fn dense(matrix: Matrix) -> Result<Self> {
        if !matrix.is_symmetric(1e-12) {
            return Err(Error::config("metric operator must be symmetric"));
        }
        let factor = Cholesky::factor(&matrix)?;
        Ok(Metric::Dense { matrix, factor })
    }

    pub fn dim(&self) -> usize {
        match self {
            Metric::Identity(n) => *n,
            Metric::Dense { matrix, .. } => matrix.dim(),
        }
    }

    pub fn is_identity(&self) -> bool {
        matches!(self, Metric::Identity(_))
    }

    /// `B x`, mapping a primal vector to the dual space.
    pub fn apply(&self, x: &[f64]) -> Vec<f64> {
        match self {
            Metric::Identity(_) => x.to_vec(),
            Metric::Dense { matrix, .. } => matrix.mul_vec(x),
        }
    }

    /// `B⁻¹ g`
    pub fn apply_inverse(&self, g: &[f64]) -> Vec<f64> {
        match self {
            Metric::Identity(_) => g.to_vec(),
            Metric::Dense { factor, .. } => factor.solve(g),
        }
    }

    pub fn matrix(&self) -> Matrix {
        match self {
            Metric::Identity(n) => Matrix::identity(*n),
            Metric::Dense { matrix, .. } => matrix.clone(),
        }
    }

    /// `‖x‖ = ⟨Bx, x⟩^{1/2}` without a dimension check.
    pub fn norm(&self, x: &[f64]) -> f64 {
        match self {
            Metric::Identity(_) => linalg::norm2(x),
            Metric::Dense { factor, .. } => linalg::norm2(&factor.upper_mul(x)),
        }
    }

    /// `‖g‖_* = ⟨g, B⁻¹g⟩^{1/2}` without a dimension check.
    pub fn dual(&self, g: &[f64]) -> f64 {
        match self {
            Metric::Identity(_) => linalg::norm2(g),
            Metric::Dense { factor, .. } => linalg::norm2(&factor.forward(g)),
        }
    }

    pub fn primal_norm(&self, x: &[f64]) -> Result<f64> {
        check_dim(self.dim(), x.len())?;
        Ok(self.norm(x))
    }

    pub fn dual_norm(&self, g: &[f64]) -> Result<f64> {
        check_dim(self.dim(), g.len())?;
        Ok(self.dual(g))
    }

    /// `‖x - y‖`
    pub fn distance(&self, x: &[f64], y: &[f64]) -> f64 {
        self.norm(&linalg::sub(x, y))
    }

    /// Estimate of the largest eigenvalue of `B⁻¹A` for symmetric positive
    /// semidefinite `A` (power iteration in the `B`-geometry). Used only to seed
    /// adaptive step sizes, so it is not guaranteed to be an upper bound.
    pub fn spectral_estimate(&self, a: &Matrix) -> f64 {
        let n = self.dim();
        let mut v: Vec<f64> = (0..n).map(|i| 1.0 + 0.1 * i as f64).collect();
        let mut lambda = 0.0;
        for _ in 0..50 {
            let nv = self.norm(&v);
            if nv == 0.0 {
                return 0.0;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            let av = a.mul_vec(&v);
            lambda = linalg::dot(&av, &v);
            v = self.apply_inverse(&av);
        }
        lambda
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    fn random_spd(n: usize, rng: &mut ChaCha8Rng) -> Matrix {
        let g: Vec<Vec<f64>> = (0..n)
            .map(|_| (0..n).map(|_| rng.random_range(-1.0..1.0)).collect())
            .collect();
        let mut m = Matrix::zeros(n);
        for i in 0..n {
            for j in 0..n {
                let s: f64 = (0..n).map(|k| g[k][i] * g[k][j]).sum();
                m.set(i, j, s / n as f64 + if i == j { 0.5 } else { 0.0 });
            }
        }
        m.symmetrize();
        m
    }

    #[test]
    fn primal_norm_examples() {
        let id = Metric::identity(2);
        assert_eq!(id.primal_norm(&[3.0, 4.0]).unwrap(), 5.0);
        assert_eq!(Metric::identity(5).primal_norm(&[0.0; 5]).unwrap(), 0.0);
        let b = Metric::dense(Matrix::diagonal(&[4.0, 1.0])).unwrap();
        assert!((b.primal_norm(&[1.0, 1.0]).unwrap() - 5f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn dual_norm_examples() {
        assert_eq!(Metric::identity(2).dual_norm(&[3.0, 4.0]).unwrap(), 5.0);
        let b = Metric::dense(Matrix::diagonal(&[4.0, 1.0])).unwrap();
        assert!((b.dual_norm(&[2.0, 0.0]).unwrap() - 1.0).abs() < 1e-15);
        assert_eq!(b.dual_norm(&[0.0, 0.0]).unwrap(), 0.0);
    }

    #[test]
    fn dimension_mismatch_is_config_error() {
        let b = Metric::identity(3);
        assert!(matches!(
            b.primal_norm(&[1.0, 2.0]),
            Err(Error::DimensionMismatch { expected: 3, found: 2 })
        ));
        assert!(b.dual_norm(&[1.0]).is_err());
    }

    #[test]
    fn dense_metric_is_symmetric_and_positive() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let b = Metric::dense(random_spd(6, &mut rng)).unwrap();
        for _ in 0..200 {
            let x: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let y: Vec<f64> = (0..6).map(|_| rng.random_range(-1.0..1.0)).collect();
            let bxy = linalg::dot(&b.apply(&x), &y);
            let byx = linalg::dot(&b.apply(&y), &x);
            assert!((bxy - byx).abs() <= 1e-12 * bxy.abs().max(1.0));
            assert!(linalg::dot(&b.apply(&x), &x) > 0.0);
        }
    }

    #[test]
    fn cauchy_schwarz_and_duality() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let b = Metric::dense(random_spd(4, &mut rng)).unwrap();
        for _ in 0..1000 {
            let x: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let g: Vec<f64> = (0..4).map(|_| rng.random_range(-3.0..3.0)).collect();
            let pairing = linalg::dot(&g, &x).abs();
            assert!(pairing <= b.dual(&g) * b.norm(&x) + 1e-10);
            let bx = b.apply(&x);
            assert!((b.dual(&bx) - b.norm(&x)).abs() <= 1e-12 * b.norm(&x).max(1.0));
        }
    }

    #[test]
    fn rejects_non_spd() {
        let m = Matrix::from_rows(&[vec![1.0, 0.0], vec![0.0, -1.0]]).unwrap();
        assert!(Metric::dense(m).is_err());
        let asym = Matrix::from_rows(&[vec![1.0, 0.5], vec![0.0, 1.0]]).unwrap();
        assert!(Metric::dense(asym).is_err());
    }

    #[test]
    fn spectral_estimate_finds_top_eigenvalue() {
        let b = Metric::dense(Matrix::diagonal(&[2.0, 1.0])).unwrap();
        let a = Matrix::diagonal(&[4.0, 3.0]);
        // eigenvalues of B⁻¹A are 2 and 3
        let est = b.spectral_estimate(&a);
        assert!((est - 3.0).abs() < 1e-6, "{est}");
    }
}
