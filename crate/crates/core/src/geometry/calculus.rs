//! Differential operators on `S^{d-1}` evaluated through ambient extensions.

use std::sync::Arc;

use crate::error::{FiberError, Result};
use crate::geometry::chart::{log_density_derivative, metric_factor, SphericalAngles, UnitVector};
use crate::linalg::{dot, project_tangent, trace};
use crate::scalar::Real;

/// Whether missing derivatives may be replaced by central differences.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Differentiation {
    #[default]
    AllowFiniteDifferences,
    AnalyticOnly,
}

/// A function on the sphere given through a smooth extension to `R^d`.
pub trait SphereFunction<T: Real> {
    fn value(&self, v: &[T]) -> T;

    fn gradient(&self, _v: &[T]) -> Option<Vec<T>> {
        None
    }

    /// Row-major `d x d` Hessian.
    fn hessian(&self, _v: &[T]) -> Option<Vec<T>> {
        None
    }
}

type Scalar<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
type Vector<T> = Arc<dyn Fn(&[T]) -> Vec<T> + Send + Sync>;

/// Closure-backed [`SphereFunction`].
#[derive(Clone)]
pub struct AmbientFunction<T> {
    value: Scalar<T>,
    gradient: Option<Vector<T>>,
    hessian: Option<Vector<T>>,
}

impl<T: Real> AmbientFunction<T> {
    pub fn new(value: impl Fn(&[T]) -> T + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            gradient: None,
            hessian: None,
        }
    }

    pub fn with_gradient(mut self, g: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static) -> Self {
        self.gradient = Some(Arc::new(g));
        self
    }

    pub fn with_hessian(mut self, h: impl Fn(&[T]) -> Vec<T> + Send + Sync + 'static) -> Self {
        self.hessian = Some(Arc::new(h));
        self
    }
}

impl<T: Real> SphereFunction<T> for AmbientFunction<T> {
    fn value(&self, v: &[T]) -> T {
        (self.value)(v)
    }

    fn gradient(&self, v: &[T]) -> Option<Vec<T>> {
        self.gradient.as_ref().map(|g| g(v))
    }

    fn hessian(&self, v: &[T]) -> Option<Vec<T>> {
        self.hessian.as_ref().map(|h| h(v))
    }
}

/// Euclidean gradient, analytic when available.
pub fn ambient_gradient<T: Real, F: SphereFunction<T> + ?Sized>(
    f: &F,
    v: &[T],
    mode: Differentiation,
) -> Result<Vec<T>> {
    if let Some(g) = f.gradient(v) {
        return Ok(g);
    }
    if mode == Differentiation::AnalyticOnly {
        return Err(FiberError::MissingDerivatives("gradient"));
    }
    let h = T::fd_step();
    let mut p = v.to_vec();
    Ok((0..v.len())
        .map(|i| {
            p[i] = v[i] + h;
            let fp = f.value(&p);
            p[i] = v[i] - h;
            let fm = f.value(&p);
            p[i] = v[i];
            (fp - fm) / (h + h)
        })
        .collect())
}

/// Euclidean Hessian, analytic when available; otherwise central differences
/// of the analytic gradient or, failing that, of the values.
pub fn ambient_hessian<T: Real, F: SphereFunction<T> + ?Sized>(
    f: &F,
    v: &[T],
    mode: Differentiation,
) -> Result<Vec<T>> {
    if let Some(h) = f.hessian(v) {
        return Ok(h);
    }
    if mode == Differentiation::AnalyticOnly {
        return Err(FiberError::MissingDerivatives("Hessian"));
    }
    let d = v.len();
    let mut out = vec![T::zero(); d * d];
    let mut p = v.to_vec();
    if f.gradient(v).is_some() {
        let h = T::fd_step();
        for j in 0..d {
            p[j] = v[j] + h;
            let gp = f.gradient(&p).expect("gradient available");
            p[j] = v[j] - h;
            let gm = f.gradient(&p).expect("gradient available");
            p[j] = v[j];
            for i in 0..d {
                out[i * d + j] = (gp[i] - gm[i]) / (h + h);
            }
        }
        symmetrize(&mut out, d);
        return Ok(out);
    }
    let h = T::epsilon().powf(T::lit(0.25));
    let f0 = f.value(v);
    for i in 0..d {
        for j in i..d {
            let val = if i == j {
                p[i] = v[i] + h;
                let fp = f.value(&p);
                p[i] = v[i] - h;
                let fm = f.value(&p);
                p[i] = v[i];
                (fp - f0 - f0 + fm) / (h * h)
            } else {
                let mut eval = |si: T, sj: T| {
                    p[i] = v[i] + si * h;
                    p[j] = v[j] + sj * h;
                    let r = f.value(&p);
                    p[i] = v[i];
                    p[j] = v[j];
                    r
                };
                let one = T::one();
                (eval(one, one) - eval(one, -one) - eval(-one, one) + eval(-one, -one))
                    / (T::lit(4.0) * h * h)
            };
            out[i * d + j] = val;
            out[j * d + i] = val;
        }
    }
    Ok(out)
}

fn symmetrize<T: Real>(m: &mut [T], d: usize) {
    let half = T::lit(0.5);
    for i in 0..d {
        for j in i + 1..d {
            let s = half * (m[i * d + j] + m[j * d + i]);
            m[i * d + j] = s;
            m[j * d + i] = s;
        }
    }
}

/// Tangential projection `(I - v v^T) z`.
pub fn sphere_grad_linear<T: Real>(z: &[T], v: &[T]) -> Vec<T> {
    let mut out = vec![T::zero(); v.len()];
    project_tangent(v, z, &mut out);
    out
}

/// `Delta_S f` from the Euclidean jet of an extension:
/// `tr(P H P) - (d - 1) v . grad f` with `P = I - v v^T`.
pub fn laplace_beltrami_from_jet<T: Real>(v: &[T], grad: &[T], hess: &[T]) -> T {
    let d = v.len();
    // tr(P H P) = tr(H) - v^T H v for symmetric H and |v| = 1.
    let mut vhv = T::zero();
    for i in 0..d {
        let mut row = T::zero();
        for j in 0..d {
            row = row + hess[i * d + j] * v[j];
        }
        vhv = vhv + v[i] * row;
    }
    trace(hess, d) - vhv - T::lit((d - 1) as f64) * dot(v, grad)
}

/// Laplace–Beltrami operator of `S^{d-1}` at `v`.
pub fn laplace_beltrami<T: Real, F: SphereFunction<T> + ?Sized>(
    f: &F,
    v: &UnitVector<T>,
    mode: Differentiation,
) -> Result<T> {
    let g = ambient_gradient(f, v, mode)?;
    let h = ambient_hessian(f, v, mode)?;
    Ok(laplace_beltrami_from_jet(v, &g, &h))
}

/// Cross-check of [`laplace_beltrami`]: `sum_j V_j(V_j f)` with the fields
/// `V_j(w) = (I - w w^T) e_j`, the outer derivative taken by central
/// differences of the first-order field action.
pub fn laplace_beltrami_by_fields<T: Real, F: SphereFunction<T> + ?Sized>(
    f: &F,
    v: &UnitVector<T>,
    mode: Differentiation,
) -> Result<T> {
    let d = v.len();
    let h = T::fd_step();
    let field_action = |w: &[T], j: usize| -> Result<T> {
        let g = ambient_gradient(f, w, mode)?;
        // (e_j - w w_j) . grad f
        Ok(g[j] - w[j] * dot(w, &g))
    };
    let mut total = T::zero();
    let mut p = v.to_vec();
    for j in 0..d {
        let mut dir = vec![T::zero(); d];
        dir[j] = T::one();
        let u = sphere_grad_linear(&dir, v);
        for i in 0..d {
            p[i] = v[i] + h * u[i];
        }
        let fp = field_action(&p, j)?;
        for i in 0..d {
            p[i] = v[i] - h * u[i];
        }
        let fm = field_action(&p, j)?;
        total = total + (fp - fm) / (h + h);
    }
    Ok(total)
}

/// Derivatives of a chart-local function: `first[j-1] = df/dtheta_j` and
/// `second[j-1] = d^2 f/dtheta_j^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalDerivatives<T> {
    pub first: Vec<T>,
    pub second: Vec<T>,
}

/// `sum_j G_j^2 d^2f/dtheta_j^2 + sum_j G_j^2 (j - 1) cot(theta_j) df/dtheta_j`.
pub fn laplace_beltrami_local<T: Real>(f: &LocalDerivatives<T>, theta: &SphericalAngles<T>) -> T {
    (1..theta.dim())
        .map(|j| {
            let g = metric_factor(theta, j);
            let g2 = g * g;
            g2 * f.second[j - 1] + g2 * log_density_derivative(theta, j) * f.first[j - 1]
        })
        .sum()
}

/// Fourth-order central-difference [`LocalDerivatives`] of `f(theta)`.
pub fn local_derivatives_fd<T: Real>(
    f: impl Fn(&[T]) -> T,
    theta: &SphericalAngles<T>,
) -> LocalDerivatives<T> {
    let t = theta.as_slice();
    let h = T::epsilon().powf(T::lit(1.0 / 6.0));
    let f0 = f(t);
    let mut p = t.to_vec();
    let mut first = Vec::with_capacity(t.len());
    let mut second = Vec::with_capacity(t.len());
    for k in 0..t.len() {
        let mut at = |s: f64| {
            p[k] = t[k] + T::lit(s) * h;
            let y = f(&p);
            p[k] = t[k];
            y
        };
        let (p1, m1, p2, m2) = (at(1.0), at(-1.0), at(2.0), at(-2.0));
        let twelve = T::lit(12.0);
        first.push((T::lit(8.0) * (p1 - m1) - (p2 - m2)) / (twelve * h));
        second.push((T::lit(16.0) * (p1 + m1) - (p2 + m2) - T::lit(30.0) * f0) / (twelve * h * h));
    }
    LocalDerivatives { first, second }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::chart::embed_angles;

    fn coordinate(i: usize, d: usize) -> AmbientFunction<f64> {
        AmbientFunction::new(move |v: &[f64]| v[i])
            .with_gradient(move |_v: &[f64]| {
                let mut g = vec![0.0; d];
                g[i] = 1.0;
                g
            })
            .with_hessian(move |_v: &[f64]| vec![0.0; d * d])
    }

    fn unit(v: &[f64]) -> UnitVector<f64> {
        UnitVector::normalize(v.to_vec()).unwrap()
    }

    #[test]
    fn coordinate_functions_are_eigenfunctions() {
        let v = unit(&[0.3, -0.5, 0.8, 0.1]);
        for i in 0..4 {
            let lb = laplace_beltrami(&coordinate(i, 4), &v, Differentiation::AnalyticOnly).unwrap();
            assert!((lb + 3.0 * v[i]).abs() < 1e-14);
        }
    }

    #[test]
    fn constant_has_zero_laplacian() {
        let f = AmbientFunction::new(|_v: &[f64]| 2.5);
        let v = unit(&[1.0, 2.0, 3.0]);
        assert!(laplace_beltrami(&f, &v, Differentiation::AllowFiniteDifferences).unwrap().abs() < 1e-6);
    }

    #[test]
    fn analytic_only_reports_missing_derivatives() {
        let f = AmbientFunction::new(|v: &[f64]| v[0] * v[1]);
        let v = unit(&[1.0, 2.0, 3.0]);
        let err = laplace_beltrami(&f, &v, Differentiation::AnalyticOnly).unwrap_err();
        assert_eq!(err, FiberError::MissingDerivatives("gradient"));
    }

    #[test]
    fn degree_two_harmonic_on_s2() {
        // v1 v2 is a degree-2 spherical harmonic: eigenvalue -l(l+1) = -6.
        let f = AmbientFunction::new(|v: &[f64]| v[0] * v[1])
            .with_gradient(|v: &[f64]| vec![v[1], v[0], 0.0])
            .with_hessian(|_v: &[f64]| vec![0.0, 1.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0]);
        let v = unit(&[0.4, -0.7, 0.2]);
        let lb = laplace_beltrami(&f, &v, Differentiation::AnalyticOnly).unwrap();
        assert!((lb + 6.0 * v[0] * v[1]).abs() < 1e-13);
        // oracle: second derivatives along great circles through v
        let fd = great_circle_laplacian(|w| w[0] * w[1], &v);
        assert!((lb - fd).abs() < 1e-5, "{lb} vs {fd}");
        let fields = laplace_beltrami_by_fields(&f, &v, Differentiation::AnalyticOnly).unwrap();
        assert!((lb - fields).abs() < 1e-8);
    }

    /// Sum of second derivatives along geodesics in an orthonormal tangent
    /// frame; independent of the ambient-extension formula.
    fn great_circle_laplacian(f: impl Fn(&[f64]) -> f64, v: &[f64]) -> f64 {
        let d = v.len();
        let mut frame: Vec<Vec<f64>> = Vec::new();
        for i in 0..d {
            let mut e = vec![0.0; d];
            e[i] = 1.0;
            let mut u = sphere_grad_linear(&e, v);
            for b in &frame {
                let c = dot(&u, b);
                u.iter_mut().zip(b).for_each(|(x, y)| *x -= c * y);
            }
            let n = dot(&u, &u).sqrt();
            if n > 1e-6 {
                frame.push(u.iter().map(|x| x / n).collect());
            }
        }
        let h = 1e-4;
        let f0 = f(v);
        frame
            .iter()
            .map(|u| {
                let at = |s: f64| -> Vec<f64> {
                    v.iter().zip(u).map(|(a, b)| a * s.cos() + b * s.sin()).collect()
                };
                (f(&at(h)) - 2.0 * f0 + f(&at(-h))) / (h * h)
            })
            .sum()
    }

    #[test]
    fn local_laplacian_examples() {
        let t = SphericalAngles::new(vec![0.7]).unwrap();
        let d = local_derivatives_fd(|t: &[f64]| t[0].cos(), &t);
        assert!((laplace_beltrami_local(&d, &t) + 0.7f64.cos()).abs() < 1e-6);
        let t = SphericalAngles::new(vec![0.7, 1.1]).unwrap();
        let exact = LocalDerivatives {
            first: vec![0.0, -(1.1f64).sin()],
            second: vec![0.0, -(1.1f64).cos()],
        };
        assert!((laplace_beltrami_local(&exact, &t) + 2.0 * 1.1f64.cos()).abs() < 1e-14);
    }

    #[test]
    fn local_and_ambient_laplacian_agree() {
        let t = SphericalAngles::new(vec![2.2, 0.9, 1.7]).unwrap();
        let v = embed_angles(&t);
        let f = |w: &[f64]| w[0] * w[2] + w[1].powi(3) - 0.5 * w[3];
        let amb = laplace_beltrami(&AmbientFunction::new(f), &v, Differentiation::AllowFiniteDifferences).unwrap();
        let loc = laplace_beltrami_local(
            &local_derivatives_fd(
                |th: &[f64]| f(&embed_angles(&SphericalAngles::new(th.to_vec()).unwrap())),
                &t,
            ),
            &t,
        );
        assert!((amb - loc).abs() < 1e-6, "{amb} vs {loc}");
    }
}
