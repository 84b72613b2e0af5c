//! Bregman proximal gradient for `p = 3` relative to the radial scaling
//! `ρ(d) = Λ/2‖d‖² + c_H‖d‖⁴`, `Λ ≈ λ_max(B⁻¹∇²f(x))`, `c_H = H/24`.

use alloc::vec::Vec;

use super::{keep_iterate, InnerSolution, RegularizedModel};
use crate::error::Result;
use crate::linalg;

struct Scaling {
    lambda: f64,
    quartic: f64,
}

impl Scaling {
    /// `∇ρ(d) = (Λ + 4c‖d‖²)Bd`, returned as the scalar factor.
    fn factor(&self, r: f64) -> f64 {
        self.lambda + 4.0 * self.quartic * r * r
    }

    /// `D_ρ(a, b)` written without cancellation.
    fn divergence(&self, model: &RegularizedModel<'_>, a: &[f64], b: &[f64]) -> f64 {
        let m = model.metric;
        let delta = linalg::sub(a, b);
        let dd = m.norm(&delta);
        let dd2 = dd * dd;
        let bb = m.norm(b);
        let cross = linalg::dot(&m.apply(b), &delta);
        let q = dd2 + 2.0 * cross;
        0.5 * self.lambda * dd2 + self.quartic * (q * q + 2.0 * bb * bb * dd2)
    }
}

pub(super) fn solve(model: &RegularizedModel<'_>, tol: f64, max_iter: usize) -> Result<InnerSolution> {
    let metric = model.metric;
    let h = model.composite;
    let x = model.anchor().to_vec();
    let scaling = Scaling {
        lambda: metric
            .spectral_estimate(model.taylor.anchor_hessian())
            .max(0.0),
        quartic: (model.regularization / 24.0).max(1e-12),
    };
    let mut lip = 1.0;

    // u(r) = prox_{t h}(x + t B⁻¹v) with t = 1/(L(Λ + 4c r²))
    let argmin = |v: &[f64], lip: f64| -> Result<(Vec<f64>, f64)> {
        let bv = metric.apply_inverse(v);
        let at = |r: f64| -> Result<(Vec<f64>, f64)> {
            let fac = scaling.factor(r);
            let t = 1.0 / (lip * fac);
            Ok((h.prox(&linalg::add_scaled(&x, t, &bv), t, metric)?, fac))
        };
        let gap = |r: f64| -> Result<f64> { Ok(metric.distance(&at(r)?.0, &x) - r) };
        let mut hi = 1.0;
        while gap(hi)? > 0.0 && hi < 1e150 {
            hi *= 4.0;
        }
        let mut lo = if scaling.lambda > 0.0 { 0.0 } else { hi * 1e-300 };
        if lo == 0.0 && gap(0.0)? <= 0.0 {
            return at(0.0);
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if gap(mid)? > 0.0 {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-15 * hi {
                break;
            }
        }
        at(0.5 * (lo + hi))
    };

    let mut y = x.clone();
    let mut gy = model.gradient(&y);
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut trajectory = Vec::new();
    let mut t = 0;
    while t < max_iter {
        t += 1;
        let dy = linalg::sub(&y, &x);
        let grad_rho_y = linalg::scaled(&metric.apply(&dy), scaling.factor(metric.norm(&dy)));
        lip *= 0.8;
        let (u, gu, hsub) = loop {
            let v = linalg::sub(&linalg::scaled(&grad_rho_y, lip), &gy);
            let (u, fac) = argmin(&v, lip)?;
            let du = linalg::sub(&u, &x);
            let gu = model.gradient(&u);
            let curv = linalg::dot(&linalg::sub(&gu, &gy), &linalg::sub(&u, &y));
            let bound = lip * scaling.divergence(model, &du, &dy);
            if curv <= bound || lip > 1e300 {
                // v − L(Λ + 4cr²)B(u − x) ∈ ∂h(u) at the bisection radius r
                let hsub = linalg::add_scaled(&v, -lip * fac, &metric.apply(&du));
                break (u, gu, hsub);
            }
            lip *= 2.0;
        };
        keep_iterate(&mut trajectory, t, &u);
        let residual = metric.dual(&linalg::add(&gu, &hsub));
        if best.as_ref().is_none_or(|b| residual < b.0) {
            best = Some((residual, u.clone(), hsub));
        }
        y = u;
        gy = gu;
        if residual <= tol {
            break;
        }
    }
    let (residual, point, h_subgradient) = best.expect("at least one iteration runs");
    trajectory.push(point.clone());
    Ok(InnerSolution {
        point,
        h_subgradient,
        residual,
        iterations: t,
        trajectory,
    })
}
