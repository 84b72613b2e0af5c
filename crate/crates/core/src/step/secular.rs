//! `p = 2, h = 0`: `(∇²f(x) + (H/2)r·B)d = −∇f(x)` with `r = ‖d‖`.

use alloc::vec;
use alloc::vec::Vec;

use super::{InnerSolution, RegularizedModel};
use crate::error::Result;
use crate::linalg::{self, Cholesky};
use crate::math;

const RELATIVE_TOLERANCE: f64 = 1e-12;

fn shifted_solve(model: &RegularizedModel<'_>, lambda: f64) -> Result<(Vec<f64>, Cholesky)> {
    let a = model.taylor.anchor_hessian();
    let b = model.metric.matrix();
    let chol = Cholesky::factor(&a.add_scaled(lambda, &b))?;
    let g = model.taylor.anchor_gradient();
    let d = linalg::scaled(&chol.solve(g), -1.0);
    Ok((d, chol))
}

pub(super) fn solve(model: &RegularizedModel<'_>, tol: f64) -> Result<InnerSolution> {
    let x = model.anchor().to_vec();
    let n = x.len();
    let metric = model.metric;
    let gnorm = metric.dual(model.taylor.anchor_gradient());
    let c = 0.5 * model.regularization;
    let mut iterations = 0;
    let d = if gnorm == 0.0 {
        vec![0.0; n]
    } else if c == 0.0 {
        iterations += 1;
        shifted_solve(model, 0.0)?.0
    } else {
        let (mut lo, mut hi) = (0.0, math::sqrt(gnorm / c));
        let mut r = hi;
        let mut best = None;
        for _ in 0..200 {
            iterations += 1;
            let (d, chol) = match shifted_solve(model, c * r) {
                Ok(v) => v,
                Err(_) => {
                    lo = r;
                    r = 0.5 * (lo + hi);
                    continue;
                }
            };
            let nd = metric.norm(&d);
            let gap = nd - r;
            if gap.abs() <= RELATIVE_TOLERANCE * r {
                best = Some(d);
                break;
            }
            if gap > 0.0 {
                lo = r;
            } else {
                hi = r;
            }
            // Newton on ψ(r) = 1/‖d(cr)‖ − 1/r
            let w = chol.forward(&metric.apply(&d));
            let dnd = -c * linalg::dot(&w, &w) / nd;
            let psi = 1.0 / nd - 1.0 / r;
            let dpsi = -dnd / (nd * nd) + 1.0 / (r * r);
            let mut next = r - psi / dpsi;
            if !(next > lo && next < hi) {
                next = 0.5 * (lo + hi);
            }
            best = Some(d);
            if hi - lo <= 1e-15 * hi {
                break;
            }
            r = next;
        }
        match best {
            Some(d) => d,
            None => shifted_solve(model, c * hi)?.0,
        }
    };
    let mut point = linalg::add(&x, &d);
    let mut residual = metric.dual(&model.gradient(&point));
    // Newton polish on the full stationarity system
    for _ in 0..3 {
        if residual <= tol * 1e-2 {
            break;
        }
        let Ok(chol) = Cholesky::factor(&model.hessian(&point)) else {
            break;
        };
        iterations += 1;
        let step = chol.solve(&model.gradient(&point));
        let trial = linalg::add_scaled(&point, -1.0, &step);
        let res = metric.dual(&model.gradient(&trial));
        if res < residual {
            point = trial;
            residual = res;
        } else {
            break;
        }
    }
    Ok(InnerSolution {
        trajectory: vec![x, point.clone()],
        h_subgradient: vec![0.0; n],
        point,
        residual,
        iterations,
    })
}
