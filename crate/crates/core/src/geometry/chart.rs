//! Spherical coordinate chart on `S^{d-1}`.
//!
//! The chart is built recursively: `tau_1(t1) = (cos t1, sin t1)` and
//! `tau_k = (tau_{k-1} sin t_k, cos t_k)`. Angles are stored 0-based:
//! `theta[k]` holds the angle with 1-based index `k + 1`. Functions that take
//! an angle index `j` (metric factors, unit tangents) use the 1-based
//! convention, `1 <= j <= d - 1`.
//!
//! Dimension note: `d` is always the ambient dimension of the direction
//! vector, so the sphere is `S^{d-1}`, it has `d - 1` angles, and the
//! Laplace–Beltrami eigenvalue of the coordinate functions is `-(d - 1)`.

use std::ops::Deref;

use serde::{Deserialize, Serialize};

use crate::error::{FiberError, Result};
use crate::linalg::{dot, norm};
use crate::scalar::Real;

/// Minimum admissible `sin(theta_j)` for the polar angles (`j >= 2`).
pub const POLE_TOLERANCE: f64 = 1e-8;

/// Angles `(theta_1, ..., theta_{d-1})` of a point on `S^{d-1}`.
///
/// `theta_1` is reduced modulo `2 pi`; the polar angles lie strictly inside
/// `(0, pi)` with `sin` above [`POLE_TOLERANCE`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SphericalAngles<T> {
    theta: Vec<T>,
}

impl<T: Real> SphericalAngles<T> {
    pub fn new(mut theta: Vec<T>) -> Result<Self> {
        if theta.is_empty() {
            return Err(crate::error::invalid("theta", "need at least one angle (d >= 2)"));
        }
        if theta.iter().any(|t| !t.is_finite()) {
            return Err(crate::error::invalid("theta", "angles must be finite"));
        }
        theta[0] = wrap_angle(theta[0]);
        let tol = T::lit(POLE_TOLERANCE);
        for (k, &t) in theta.iter().enumerate().skip(1) {
            if t <= T::zero() || t >= T::PI() || t.sin() <= tol {
                return Err(FiberError::PoleSingularity {
                    index: k + 1,
                    sin: t.sin().as_f64(),
                });
            }
        }
        Ok(Self { theta })
    }

    /// Ambient dimension `d` (number of angles plus one).
    pub fn dim(&self) -> usize {
        self.theta.len() + 1
    }

    pub fn as_slice(&self) -> &[T] {
        &self.theta
    }

    /// Angle with 1-based index `j`.
    pub fn angle(&self, j: usize) -> T {
        self.theta[j - 1]
    }

    pub fn into_vec(self) -> Vec<T> {
        self.theta
    }
}

/// Reduces an angle into `[0, 2 pi)`.
pub fn wrap_angle<T: Real>(t: T) -> T {
    let two_pi = T::TAU();
    let r = t % two_pi;
    let r = if r < T::zero() { r + two_pi } else { r };
    if r >= two_pi {
        T::zero()
    } else {
        r
    }
}

/// A vector of `R^d` with `| |v|^2 - 1 |` below [`Real::unit_tolerance`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct UnitVector<T> {
    v: Vec<T>,
}

impl<T: Real> UnitVector<T> {
    /// Accepts `v` only if it is already unit length.
    pub fn new(v: Vec<T>) -> Result<Self> {
        let n2 = dot(&v, &v);
        if !n2.is_finite() || (n2 - T::one()).abs() > T::unit_tolerance() {
            return Err(crate::error::invalid(
                "v",
                format!("not a unit vector (|v|^2 = {n2})"),
            ));
        }
        Ok(Self { v })
    }

    /// Rescales a nonzero finite vector onto the sphere.
    pub fn normalize(mut v: Vec<T>) -> Result<Self> {
        let n = norm(&v);
        if !n.is_finite() || n <= T::zero() {
            return Err(crate::error::invalid("v", "cannot normalize zero or non-finite vector"));
        }
        v.iter_mut().for_each(|x| *x = *x / n);
        Ok(Self { v })
    }

    /// `i`-th standard basis vector of `R^d`.
    pub fn basis(d: usize, i: usize) -> Self {
        let mut v = vec![T::zero(); d];
        v[i] = T::one();
        Self { v }
    }

    pub(crate) fn from_normalized(v: Vec<T>) -> Self {
        Self { v }
    }

    pub fn dim(&self) -> usize {
        self.v.len()
    }

    pub fn into_vec(self) -> Vec<T> {
        self.v
    }

    pub fn neg(&self) -> Self {
        Self {
            v: self.v.iter().map(|&x| -x).collect(),
        }
    }
}

impl<T> Deref for UnitVector<T> {
    type Target = [T];

    fn deref(&self) -> &[T] {
        &self.v
    }
}

/// Writes `tau_{d-1}(theta)` into `out` (length `d`).
pub fn embed_angles_into<T: Real>(theta: &[T], out: &mut [T]) {
    let d = theta.len() + 1;
    debug_assert_eq!(out.len(), d);
    out[0] = theta[0].cos();
    out[1] = theta[0].sin();
    for k in 2..d {
        let (s, c) = theta[k - 1].sin_cos();
        for o in out[..k].iter_mut() {
            *o = *o * s;
        }
        out[k] = c;
    }
}

/// The chart map `theta -> tau_{d-1}(theta)`.
pub fn embed_angles<T: Real>(theta: &SphericalAngles<T>) -> UnitVector<T> {
    let mut out = vec![T::zero(); theta.dim()];
    embed_angles_into(theta.as_slice(), &mut out);
    UnitVector::from_normalized(out)
}

/// Inverse chart. Fails with [`FiberError::PoleSingularity`] when some polar
/// angle is within [`POLE_TOLERANCE`] of `0` or `pi`.
pub fn angles_from_point<T: Real>(v: &[T]) -> Result<SphericalAngles<T>> {
    let theta = raw_angles(v);
    let d = v.len();
    let tol = T::lit(POLE_TOLERANCE);
    for k in (2..d).rev() {
        let s = theta[k - 1].sin();
        if s <= tol {
            return Err(FiberError::PoleSingularity {
                index: k,
                sin: s.as_f64(),
            });
        }
    }
    SphericalAngles::new(theta)
}

/// Inverse chart with polar angles clamped into the admissible band; used
/// only to label states that sit (numerically) on a pole.
pub(crate) fn angles_from_point_clamped<T: Real>(v: &[T]) -> SphericalAngles<T> {
    let mut theta = raw_angles(v);
    let lo = T::lit(2.0 * POLE_TOLERANCE);
    for t in theta.iter_mut().skip(1) {
        *t = t.max(lo).min(T::PI() - lo);
    }
    SphericalAngles::new(theta).expect("clamped angles are admissible")
}

fn raw_angles<T: Real>(v: &[T]) -> Vec<T> {
    let d = v.len();
    let mut theta = vec![T::zero(); d - 1];
    theta[0] = wrap_angle(v[1].atan2(v[0]));
    // sin(theta_k) and cos(theta_k) are proportional to |v[..k]| and v[k].
    let mut head2 = v[0] * v[0] + v[1] * v[1];
    for k in 2..d {
        theta[k - 1] = head2.sqrt().atan2(v[k]);
        head2 = head2 + v[k] * v[k];
    }
    theta
}

/// Metric factor `G_j = prod_{i=j+1}^{d-1} 1 / sin(theta_i)`; equals one for
/// `j = d - 1` (empty product).
pub fn metric_factor<T: Real>(theta: &SphericalAngles<T>, j: usize) -> T {
    let t = theta.as_slice();
    assert!(j >= 1 && j <= t.len(), "angle index {j} out of range 1..={}", t.len());
    t[j..].iter().fold(T::one(), |acc, &a| acc / a.sin())
}

/// `d/dtheta_j log(rho)` of the chart volume density: `(j - 1) cot(theta_j)`.
pub fn log_density_derivative<T: Real>(theta: &SphericalAngles<T>, j: usize) -> T {
    let t = theta.as_slice();
    assert!(j >= 1 && j <= t.len(), "angle index {j} out of range 1..={}", t.len());
    if j == 1 {
        return T::zero();
    }
    let a = t[j - 1];
    T::lit((j - 1) as f64) * a.cos() / a.sin()
}

/// Unit tangent `n_j = d_j tau / |d_j tau|` written into `out`.
pub(crate) fn unit_tangent_into<T: Real>(theta: &[T], j: usize, out: &mut [T]) {
    out.iter_mut().for_each(|x| *x = T::zero());
    if j == 1 {
        let (s, c) = theta[0].sin_cos();
        out[0] = -s;
        out[1] = c;
        return;
    }
    let (s, c) = theta[j - 1].sin_cos();
    embed_angles_into(&theta[..j - 1], &mut out[..j]);
    for o in out[..j].iter_mut() {
        *o = *o * c;
    }
    out[j] = -s;
}

/// Unit tangent `n_j` of the chart (1-based `j`).
pub fn unit_tangent<T: Real>(theta: &SphericalAngles<T>, j: usize) -> Vec<T> {
    let mut out = vec![T::zero(); theta.dim()];
    unit_tangent_into(theta.as_slice(), j, &mut out);
    out
}

/// Chart Jacobian columns `d_j tau`, `j = 1..d-1`.
pub fn chart_jacobian<T: Real>(theta: &SphericalAngles<T>) -> Vec<Vec<T>> {
    (1..theta.dim())
        .map(|j| {
            let g = metric_factor(theta, j);
            unit_tangent(theta, j).into_iter().map(|x| x / g).collect()
        })
        .collect()
}

/// Local coefficients `c_j = G_j (z . n_j)` of the sphere gradient of
/// `v -> z . v`.
pub fn sphere_grad_local_coeffs<T: Real>(z: &[T], theta: &SphericalAngles<T>) -> Vec<T> {
    (1..theta.dim())
        .map(|j| metric_factor(theta, j) * dot(z, &unit_tangent(theta, j)))
        .collect()
}

/// Pushes local coefficients through the chart Jacobian into `R^d`.
pub fn push_forward<T: Real>(coeffs: &[T], theta: &SphericalAngles<T>) -> Vec<T> {
    let mut out = vec![T::zero(); theta.dim()];
    for (c, col) in coeffs.iter().zip(chart_jacobian(theta)) {
        for (o, x) in out.iter_mut().zip(col) {
            *o = *o + *c * x;
        }
    }
    out
}
