//! Accelerated proximal gradient with backtracking and gradient restart.

use alloc::vec::Vec;

use super::{keep_iterate, InnerSolution, RegularizedModel};
use crate::error::Result;
use crate::linalg;
use crate::math;

pub(super) fn solve(model: &RegularizedModel<'_>, tol: f64, max_iter: usize) -> Result<InnerSolution> {
    let metric = model.metric;
    let h = model.composite;
    let x = model.anchor().to_vec();
    let mut lip = metric
        .spectral_estimate(model.taylor.anchor_hessian())
        .max(1e-8);

    let mut y = x.clone();
    let mut w = x.clone();
    let mut mom = 1.0;
    let mut best: Option<(f64, Vec<f64>, Vec<f64>)> = None;
    let mut trajectory = Vec::new();
    let mut t = 0;
    while t < max_iter {
        t += 1;
        let gw = model.gradient(&w);
        let step_dir = metric.apply_inverse(&gw);
        lip *= 0.9;
        let (y_new, g_new) = loop {
            let z = linalg::add_scaled(&w, -1.0 / lip, &step_dir);
            let cand = h.prox(&z, 1.0 / lip, metric)?;
            let d = linalg::sub(&cand, &w);
            let gc = model.gradient(&cand);
            let curv = linalg::dot(&linalg::sub(&gc, &gw), &d);
            let nd = metric.norm(&d);
            if curv <= 0.5 * lip * nd * nd || nd == 0.0 || lip > 1e300 {
                break (cand, gc);
            }
            lip *= 2.0;
        };
        keep_iterate(&mut trajectory, t, &y_new);
        // L·B(w − y) − ∇φ(w) ∈ ∂h(y)
        let mut hsub = linalg::scaled(&metric.apply(&linalg::sub(&w, &y_new)), lip);
        linalg::axpy(-1.0, &gw, &mut hsub);
        let residual = metric.dual(&linalg::add(&g_new, &hsub));
        if best.as_ref().is_none_or(|b| residual < b.0) {
            best = Some((residual, y_new.clone(), hsub));
        }
        if residual <= tol {
            break;
        }
        let restart = linalg::dot(
            &metric.apply(&linalg::sub(&w, &y_new)),
            &linalg::sub(&y_new, &y),
        ) > 0.0;
        if restart {
            mom = 1.0;
            w = y_new.clone();
        } else {
            let next = 0.5 * (1.0 + math::sqrt(1.0 + 4.0 * mom * mom));
            let beta = (mom - 1.0) / next;
            w = linalg::add_scaled(&y_new, beta, &linalg::sub(&y_new, &y));
            mom = next;
        }
        y = y_new;
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
