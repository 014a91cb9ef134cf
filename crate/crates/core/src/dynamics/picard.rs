//! Pathwise Picard iteration for the planar model
//! `d(xi, alpha) = b(xi, alpha) dt + (0, 0, sigma) dW` with
//! `b = (tau(alpha), Psi(xi) . tau_perp(alpha))`.

use serde::Serialize;

use crate::dynamics::wiener::WienerPath;
use crate::error::{invalid, Result};

/// Final iterate on the grid and the sup-distances between iterates.
#[derive(Debug, Clone, Serialize)]
pub struct PicardSolution {
    pub times: Vec<f64>,
    /// `(xi_1, xi_2, alpha)` at each grid time.
    pub path: Vec<[f64; 3]>,
    /// `gaps[n-1] = max_t |X^(n) - X^(n-1)|` for `n = 1..=n_iter`.
    pub gaps: Vec<f64>,
}

/// Drift `b(xi, alpha)` of the planar model.
pub fn planar_drift(psi: &dyn Fn([f64; 2]) -> [f64; 2], x: &[f64; 3]) -> [f64; 3] {
    let (s, c) = x[2].sin_cos();
    let p = psi([x[0], x[1]]);
    [c, s, -p[0] * s + p[1] * c]
}

/// `n_iter` Picard iterates started from the constant path `x0`, with
/// time integrals by the cumulative trapezoid rule on the grid of `path`.
pub fn picard_solve_2d(
    psi: &dyn Fn([f64; 2]) -> [f64; 2],
    path: &WienerPath,
    x0: [f64; 3],
    sigma: f64,
    n_iter: usize,
) -> Result<PicardSolution> {
    if path.dims != 1 {
        return Err(invalid("path", "the planar model is driven by a scalar Brownian motion"));
    }
    if n_iter == 0 {
        return Err(invalid("n_iter", "need at least one iteration"));
    }
    let n = path.n_steps();
    let dt = path.dt;
    let w = path.cumulative(0);
    let times: Vec<f64> = (0..=n).map(|k| k as f64 * dt).collect();
    let mut cur = vec![x0; n + 1];
    let mut gaps = Vec::with_capacity(n_iter);
    for _ in 0..n_iter {
        let mut next = Vec::with_capacity(n + 1);
        let mut acc = [0.0; 3];
        next.push(x0);
        let mut b_prev = planar_drift(psi, &cur[0]);
        for k in 0..n {
            let b = planar_drift(psi, &cur[k + 1]);
            for i in 0..3 {
                acc[i] += 0.5 * dt * (b_prev[i] + b[i]);
            }
            b_prev = b;
            next.push([x0[0] + acc[0], x0[1] + acc[1], x0[2] + acc[2] + sigma * w[k + 1]]);
        }
        let gap = cur
            .iter()
            .zip(&next)
            .map(|(a, b)| ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2) + (a[2] - b[2]).powi(2)).sqrt())
            .fold(0.0, f64::max);
        gaps.push(gap);
        cur = next;
    }
    Ok(PicardSolution {
        times,
        path: cur,
        gaps,
    })
}
