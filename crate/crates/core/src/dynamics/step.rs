//! Single time steps of both formulations.

use crate::dynamics::config::{AngleState, FiberState, SimConfig};
use crate::error::{invalid, FiberError, Result};
use crate::geometry::chart::{embed_angles_into, unit_tangent_into, wrap_angle, POLE_TOLERANCE};
use crate::geometry::{SphericalAngles, UnitVector};
use crate::linalg::dot;
use crate::potential::PotentialSpec;
use crate::scalar::Real;

/// Scalars shared by every step of a run.
#[derive(Debug, Clone, Copy)]
pub struct StepParams<T> {
    pub dt: T,
    pub sigma: T,
    pub kappa: T,
}

impl<T: Real> StepParams<T> {
    pub fn from_config(cfg: &SimConfig) -> Self {
        Self {
            dt: T::lit(cfg.dt),
            sigma: T::lit(cfg.sigma),
            kappa: T::lit(cfg.kappa()),
        }
    }
}

/// Scratch buffers for [`embedded_in_place`].
#[derive(Debug, Clone)]
pub struct EmbeddedWorkspace<T> {
    grad: Vec<T>,
    b0: Vec<T>,
    n0: Vec<T>,
    b1: Vec<T>,
    n1: Vec<T>,
    v_bar: Vec<T>,
    xi_bar: Vec<T>,
}

impl<T: Real> EmbeddedWorkspace<T> {
    pub fn new(d: usize) -> Self {
        Self {
            grad: vec![T::zero(); d],
            b0: vec![T::zero(); d],
            n0: vec![T::zero(); d],
            b1: vec![T::zero(); d],
            n1: vec![T::zero(); d],
            v_bar: vec![T::zero(); d],
            xi_bar: vec![T::zero(); d],
        }
    }
}

/// `out = -kappa (I - w w^T) g` and `noise = sigma (I - w w^T) dw`.
#[inline]
fn fields<T: Real>(w: &[T], g: &[T], dw: Option<&[T]>, prm: &StepParams<T>, drift: &mut [T], noise: &mut [T]) {
    let wg = dot(w, g);
    for ((o, &wi), &gi) in drift.iter_mut().zip(w).zip(g) {
        *o = -prm.kappa * (gi - wi * wg);
    }
    match dw {
        Some(dw) => {
            let wd = dot(w, dw);
            for ((o, &wi), &di) in noise.iter_mut().zip(w).zip(dw) {
                *o = prm.sigma * (di - wi * wd);
            }
        }
        None => noise.iter_mut().for_each(|o| *o = T::zero()),
    }
}

/// One Heun step on `(xi, v)` in place. `dw = None` means a noiseless step.
/// Returns `false` when the state became non-finite.
pub fn embedded_in_place<T: Real>(
    xi: &mut [T],
    v: &mut [T],
    dw: Option<&[T]>,
    prm: &StepParams<T>,
    pot: &PotentialSpec<T>,
    ws: &mut EmbeddedWorkspace<T>,
) -> bool {
    let half = T::lit(0.5);
    let dt = prm.dt;
    pot.grad_into(xi, &mut ws.grad);
    fields(v, &ws.grad, dw, prm, &mut ws.b0, &mut ws.n0);
    for i in 0..v.len() {
        ws.v_bar[i] = v[i] + ws.b0[i] * dt + ws.n0[i];
        ws.xi_bar[i] = xi[i] + v[i] * dt;
    }
    pot.grad_into(&ws.xi_bar, &mut ws.grad);
    fields(&ws.v_bar, &ws.grad, dw, prm, &mut ws.b1, &mut ws.n1);
    let mut sq = T::zero();
    for i in 0..v.len() {
        let vs = v[i] + half * (ws.b0[i] + ws.b1[i]) * dt + half * (ws.n0[i] + ws.n1[i]);
        ws.v_bar[i] = vs;
        sq = sq + vs * vs;
    }
    let inv = T::one() / sq.sqrt();
    let mut finite = inv.is_finite();
    for i in 0..v.len() {
        let vn = ws.v_bar[i] * inv;
        xi[i] = xi[i] + half * dt * (v[i] + vn);
        v[i] = vn;
        finite &= xi[i].is_finite() && vn.is_finite();
    }
    finite
}

/// One embedded step from `state` with Brownian increment `dw`.
pub fn step_embedded<T: Real>(
    state: &FiberState<T>,
    dw: &[T],
    cfg: &SimConfig,
    pot: &PotentialSpec<T>,
) -> Result<FiberState<T>> {
    let d = state.xi.len();
    for len in [state.v.dim(), dw.len(), pot.dim()] {
        if len != d {
            return Err(FiberError::DimensionMismatch { expected: d, got: len });
        }
    }
    let prm = StepParams::from_config(cfg);
    let mut xi = state.xi.clone();
    let mut v = state.v.to_vec();
    let mut ws = EmbeddedWorkspace::new(d);
    let noise = (cfg.sigma > 0.0).then_some(dw);
    if !embedded_in_place(&mut xi, &mut v, noise, &prm, pot, &mut ws) {
        return Err(FiberError::StepFailure { step: 0 });
    }
    Ok(FiberState {
        xi,
        v: UnitVector::from_normalized(v),
    })
}

/// Scratch buffers for [`local_in_place`].
#[derive(Debug, Clone)]
pub struct LocalWorkspace<T> {
    tau: Vec<T>,
    n: Vec<T>,
    grad: Vec<T>,
    metric: Vec<T>,
    theta_new: Vec<T>,
}

impl<T: Real> LocalWorkspace<T> {
    pub fn new(d: usize) -> Self {
        Self {
            tau: vec![T::zero(); d],
            n: vec![T::zero(); d],
            grad: vec![T::zero(); d],
            metric: vec![T::zero(); d - 1],
            theta_new: vec![T::zero(); d - 1],
        }
    }
}

/// Outcome of a local step that did not complete.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum LocalStepFailure {
    /// Polar angle with this 1-based index left the admissible band.
    ChartExit(usize),
    NonFinite,
}

/// One Euler–Maruyama step in angles, in place; on failure the state is left
/// untouched. `dw` has `d - 1` components (or `None` for a noiseless step).
pub fn local_in_place<T: Real>(
    xi: &mut [T],
    theta: &mut [T],
    dw: Option<&[T]>,
    prm: &StepParams<T>,
    pot: &PotentialSpec<T>,
    ws: &mut LocalWorkspace<T>,
) -> std::result::Result<(), LocalStepFailure> {
    let m = theta.len();
    let dt = prm.dt;
    let half_s2 = T::lit(0.5) * prm.sigma * prm.sigma;
    ws.metric[m - 1] = T::one();
    for j in (0..m - 1).rev() {
        ws.metric[j] = ws.metric[j + 1] / theta[j + 1].sin();
    }
    embed_angles_into(theta, &mut ws.tau);
    pot.grad_into(xi, &mut ws.grad);
    for j in 0..m {
        let g = ws.metric[j];
        unit_tangent_into(theta, j + 1, &mut ws.n);
        let mut drift = -prm.kappa * g * dot(&ws.grad, &ws.n);
        if j > 0 {
            let (s, c) = theta[j].sin_cos();
            drift = drift + half_s2 * g * g * T::lit(j as f64) * c / s;
        }
        let mut t = theta[j] + drift * dt;
        if let Some(dw) = dw {
            t = t + prm.sigma * g * dw[j];
        }
        ws.theta_new[j] = t;
    }
    let tol = T::lit(POLE_TOLERANCE);
    for j in 1..m {
        let t = ws.theta_new[j];
        if !t.is_finite() {
            return Err(LocalStepFailure::NonFinite);
        }
        if t <= T::zero() || t >= T::PI() || t.sin() <= tol {
            return Err(LocalStepFailure::ChartExit(j + 1));
        }
    }
    if !ws.theta_new[0].is_finite() {
        return Err(LocalStepFailure::NonFinite);
    }
    ws.theta_new[0] = wrap_angle(ws.theta_new[0]);
    let mut finite = true;
    for (x, &t) in xi.iter_mut().zip(&ws.tau) {
        *x = *x + t * dt;
        finite &= x.is_finite();
    }
    if !finite {
        return Err(LocalStepFailure::NonFinite);
    }
    theta.copy_from_slice(&ws.theta_new);
    Ok(())
}

/// One local step from `state` with Brownian increment `dw` (`d - 1`
/// components). Leaving the chart is reported as
/// [`FiberError::ChartExit`] with `step = 0`.
pub fn step_local<T: Real>(
    state: &AngleState<T>,
    dw: &[T],
    cfg: &SimConfig,
    pot: &PotentialSpec<T>,
) -> Result<AngleState<T>> {
    let d = state.xi.len();
    if state.theta.dim() != d || pot.dim() != d {
        return Err(FiberError::DimensionMismatch {
            expected: d,
            got: state.theta.dim(),
        });
    }
    if dw.len() != d - 1 {
        return Err(invalid("dw", format!("expected {} components", d - 1)));
    }
    let prm = StepParams::from_config(cfg);
    let mut xi = state.xi.clone();
    let mut theta = state.theta.as_slice().to_vec();
    let mut ws = LocalWorkspace::new(d);
    let noise = (cfg.sigma > 0.0).then_some(dw);
    match local_in_place(&mut xi, &mut theta, noise, &prm, pot, &mut ws) {
        Ok(()) => Ok(AngleState {
            xi,
            theta: SphericalAngles::new(theta)?,
        }),
        Err(LocalStepFailure::ChartExit(index)) => Err(FiberError::ChartExit { step: 0, index }),
        Err(LocalStepFailure::NonFinite) => Err(FiberError::StepFailure { step: 0 }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::embed_angles;

    fn cfg(d: usize, sigma: f64, dt: f64) -> SimConfig {
        SimConfig::new(d, sigma, dt, 1, 0)
    }

    #[test]
    fn free_flight_is_exact() {
        let pot = PotentialSpec::<f64>::zero(3);
        let mut s = FiberState {
            xi: vec![1.0, 2.0, 3.0],
            v: UnitVector::normalize(vec![1.0, -2.0, 2.0]).unwrap(),
        };
        let c = cfg(3, 0.0, 0.01);
        for _ in 0..1000 {
            s = step_embedded(&s, &[0.3, 0.1, -0.2], &c, &pot).unwrap();
        }
        let expect = [1.0 + 10.0 / 3.0, 2.0 - 20.0 / 3.0, 3.0 + 20.0 / 3.0];
        for (a, b) in s.xi.iter().zip(expect) {
            assert!((a - b).abs() < 1e-12);
        }
        assert_eq!(&*s.v, &[1.0 / 3.0, -2.0 / 3.0, 2.0 / 3.0]);
    }

    #[test]
    fn stays_on_sphere_with_large_noise() {
        let pot = PotentialSpec::<f64>::radial_quadratic(4);
        let mut s = FiberState {
            xi: vec![0.5; 4],
            v: UnitVector::basis(4, 2),
        };
        let c = cfg(4, 4.0, 0.1);
        for k in 0..100 {
            let dw: Vec<f64> = (0..4).map(|i| ((k * 7 + i * 3) as f64).sin() * 0.3).collect();
            s = step_embedded(&s, &dw, &c, &pot).unwrap();
            assert!((crate::linalg::norm(&s.v) - 1.0).abs() <= 1e-12);
        }
    }

    #[test]
    fn local_d2_matches_planar_model() {
        // alpha' = -grad Phi . tau_perp with tau_perp = (-sin, cos)
        let pot = PotentialSpec::<f64>::radial_quadratic(2);
        let s = AngleState {
            xi: vec![0.4, -0.3],
            theta: SphericalAngles::new(vec![1.0]).unwrap(),
        };
        let c = cfg(2, 0.7, 0.01);
        let out = step_local(&s, &[0.05], &c, &pot).unwrap();
        let g = [0.8, -0.6];
        let perp = [-(1.0f64).sin(), (1.0f64).cos()];
        let expect = 1.0 - (g[0] * perp[0] + g[1] * perp[1]) * 0.01 + 0.7 * 0.05;
        assert!((out.theta.angle(1) - expect).abs() < 1e-15);
        assert!((out.xi[0] - (0.4 + 0.01 * (1.0f64).cos())).abs() < 1e-15);
    }

    #[test]
    fn local_free_flight_keeps_angles() {
        let pot = PotentialSpec::<f64>::zero(3);
        let theta = SphericalAngles::new(vec![0.3, 1.1]).unwrap();
        let tau = embed_angles(&theta);
        let mut s = AngleState { xi: vec![0.0; 3], theta };
        let c = cfg(3, 0.0, 0.1);
        for _ in 0..10 {
            s = step_local(&s, &[1.0, 1.0], &c, &pot).unwrap();
        }
        assert_eq!(s.theta.as_slice(), &[0.3, 1.1]);
        for (x, t) in s.xi.iter().zip(tau.iter()) {
            assert!((x - t).abs() < 1e-14);
        }
    }

    #[test]
    fn local_reports_chart_exit() {
        let pot = PotentialSpec::<f64>::zero(3);
        let s = AngleState {
            xi: vec![0.0; 3],
            theta: SphericalAngles::new(vec![0.3, 0.01]).unwrap(),
        };
        let c = cfg(3, 1.0, 0.01);
        assert!(matches!(
            step_local(&s, &[0.0, -2.0], &c, &pot),
            Err(FiberError::ChartExit { index: 2, .. })
        ));
    }

    #[test]
    fn f32_embedded_step() {
        let pot = PotentialSpec::<f32>::radial_quadratic(2);
        let s = FiberState {
            xi: vec![0.1f32, 0.2],
            v: UnitVector::basis(2, 0),
        };
        let c = cfg(2, 1.0, 0.01);
        let out = step_embedded(&s, &[0.1, -0.1], &c, &pot).unwrap();
        assert!((crate::linalg::norm(&out.v) - 1.0).abs() < 1e-6);
    }
}
