//! Functions `f(xi, v)` on `R^d x S^{d-1}` with optional analytic
//! derivatives. The `v`-derivatives are those of the ambient extension.

use std::sync::Arc;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::error::Result;
use crate::geometry::calculus::{ambient_gradient, ambient_hessian, Differentiation, SphereFunction};
use crate::geometry::random_unit_vector;
use crate::linalg::dot;
use crate::potential::PotentialSpec;
use crate::scalar::Real;

type Value<T> = Arc<dyn Fn(&[T], &[T]) -> T + Send + Sync>;
type Vector<T> = Arc<dyn Fn(&[T], &[T]) -> Vec<T> + Send + Sync>;

/// How fast a test function decays in `xi`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub enum Support {
    /// Vanishes outside `|xi| <= r`.
    Compact(f64),
    /// Gaussian decay at the given length scale.
    GaussianDecay(f64),
    /// No decay (constants, coordinates).
    Unbounded,
}

#[derive(Clone)]
pub struct TestFunction<T> {
    value: Value<T>,
    grad_xi: Option<Vector<T>>,
    grad_v: Option<Vector<T>>,
    hess_v: Option<Vector<T>>,
    pub support: Support,
    pub mode: Differentiation,
}

impl<T> std::fmt::Debug for TestFunction<T> {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("TestFunction")
            .field("grad_xi", &self.grad_xi.is_some())
            .field("grad_v", &self.grad_v.is_some())
            .field("hess_v", &self.hess_v.is_some())
            .field("support", &self.support)
            .field("mode", &self.mode)
            .finish()
    }
}

/// `v -> f(xi, v)` for fixed `xi`.
struct Slice<'a, T> {
    f: &'a TestFunction<T>,
    xi: &'a [T],
}

impl<T: Real> SphereFunction<T> for Slice<'_, T> {
    fn value(&self, v: &[T]) -> T {
        (self.f.value)(self.xi, v)
    }

    fn gradient(&self, v: &[T]) -> Option<Vec<T>> {
        self.f.grad_v.as_ref().map(|g| g(self.xi, v))
    }

    fn hessian(&self, v: &[T]) -> Option<Vec<T>> {
        self.f.hess_v.as_ref().map(|h| h(self.xi, v))
    }
}

/// `xi -> f(xi, v)` for fixed `v`.
struct XiSlice<'a, T> {
    f: &'a TestFunction<T>,
    v: &'a [T],
}

impl<T: Real> SphereFunction<T> for XiSlice<'_, T> {
    fn value(&self, xi: &[T]) -> T {
        (self.f.value)(xi, self.v)
    }

    fn gradient(&self, xi: &[T]) -> Option<Vec<T>> {
        self.f.grad_xi.as_ref().map(|g| g(xi, self.v))
    }
}

impl<T: Real> TestFunction<T> {
    pub fn new(value: impl Fn(&[T], &[T]) -> T + Send + Sync + 'static) -> Self {
        Self {
            value: Arc::new(value),
            grad_xi: None,
            grad_v: None,
            hess_v: None,
            support: Support::Unbounded,
            mode: Differentiation::default(),
        }
    }

    pub fn with_grad_xi(mut self, g: impl Fn(&[T], &[T]) -> Vec<T> + Send + Sync + 'static) -> Self {
        self.grad_xi = Some(Arc::new(g));
        self
    }

    pub fn with_grad_v(mut self, g: impl Fn(&[T], &[T]) -> Vec<T> + Send + Sync + 'static) -> Self {
        self.grad_v = Some(Arc::new(g));
        self
    }

    /// Row-major `d x d` Hessian in `v`.
    pub fn with_hess_v(mut self, h: impl Fn(&[T], &[T]) -> Vec<T> + Send + Sync + 'static) -> Self {
        self.hess_v = Some(Arc::new(h));
        self
    }

    pub fn with_support(mut self, s: Support) -> Self {
        self.support = s;
        self
    }

    pub fn analytic_only(mut self) -> Self {
        self.mode = Differentiation::AnalyticOnly;
        self
    }

    pub fn has_analytic_derivatives(&self) -> bool {
        self.grad_xi.is_some() && self.grad_v.is_some() && self.hess_v.is_some()
    }

    pub fn value(&self, xi: &[T], v: &[T]) -> T {
        (self.value)(xi, v)
    }

    pub fn grad_xi(&self, xi: &[T], v: &[T]) -> Result<Vec<T>> {
        ambient_gradient(&XiSlice { f: self, v }, xi, self.mode)
    }

    pub fn grad_v(&self, xi: &[T], v: &[T]) -> Result<Vec<T>> {
        ambient_gradient(&Slice { f: self, xi }, v, self.mode)
    }

    pub fn hess_v(&self, xi: &[T], v: &[T]) -> Result<Vec<T>> {
        ambient_hessian(&Slice { f: self, xi }, v, self.mode)
    }

    /// Largest relative discrepancy between the analytic gradients and
    /// central differences over `n` random points with `|v| = 1`.
    pub fn gradient_consistency(&self, d: usize, n: usize, seed: u64) -> T {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = T::epsilon().cbrt();
        let mut worst = T::zero();
        let fd = |f: &dyn Fn(&[T]) -> T, x: &[T]| -> Vec<T> {
            let mut p = x.to_vec();
            (0..x.len())
                .map(|i| {
                    p[i] = x[i] + h;
                    let a = f(&p);
                    p[i] = x[i] - h;
                    let b = f(&p);
                    p[i] = x[i];
                    (a - b) / (h + h)
                })
                .collect()
        };
        for _ in 0..n {
            let xi: Vec<T> = (0..d).map(|_| T::lit(rng.random_range(-1.5..1.5))).collect();
            let v: Vec<T> = random_unit_vector::<T, _>(d, &mut rng).into_vec();
            let mut pairs: Vec<(Vec<T>, Vec<T>)> = Vec::new();
            if let Some(g) = &self.grad_xi {
                pairs.push((g(&xi, &v), fd(&|x| (self.value)(x, &v), &xi)));
            }
            if let Some(g) = &self.grad_v {
                pairs.push((g(&xi, &v), fd(&|w| (self.value)(&xi, w), &v)));
            }
            if let (Some(g), Some(hs)) = (&self.grad_v, &self.hess_v) {
                let hm = hs(&xi, &v);
                for j in 0..d {
                    let col: Vec<T> = (0..d).map(|i| hm[i * d + j]).collect();
                    pairs.push((col, fd(&|w| g(&xi, w)[j], &v)));
                }
            }
            for (a, b) in pairs {
                let scale = a.iter().fold(T::one(), |m, x| m.max(x.abs()));
                for (x, y) in a.iter().zip(&b) {
                    worst = worst.max((*x - *y).abs() / scale);
                }
            }
        }
        worst
    }
}

impl TestFunction<f64> {
    pub fn constant(c: f64, d: usize) -> Self {
        TestFunction::new(move |_, _| c)
            .with_grad_xi(move |_, _| vec![0.0; d])
            .with_grad_v(move |_, _| vec![0.0; d])
            .with_hess_v(move |_, _| vec![0.0; d * d])
    }

    /// `f = v_i`.
    pub fn v_coordinate(i: usize, d: usize) -> Self {
        TestFunction::new(move |_, v| v[i])
            .with_grad_xi(move |_, _| vec![0.0; d])
            .with_grad_v(move |_, _| {
                let mut g = vec![0.0; d];
                g[i] = 1.0;
                g
            })
            .with_hess_v(move |_, _| vec![0.0; d * d])
    }

    /// `f = xi_i`.
    pub fn xi_coordinate(i: usize, d: usize) -> Self {
        TestFunction::new(move |xi, _| xi[i])
            .with_grad_xi(move |_, _| {
                let mut g = vec![0.0; d];
                g[i] = 1.0;
                g
            })
            .with_grad_v(move |_, _| vec![0.0; d])
            .with_hess_v(move |_, _| vec![0.0; d * d])
    }

    /// `exp(-beta Phi(xi))`, independent of `v`.
    pub fn boltzmann(pot: &PotentialSpec<f64>, beta: f64) -> Self {
        let d = pot.dim();
        let (p1, p2) = (pot.clone(), pot.clone());
        TestFunction::new(move |xi, _| (-beta * p1.value(xi)).exp())
            .with_grad_xi(move |xi, _| {
                let e = (-beta * p2.value(xi)).exp();
                p2.grad(xi).into_iter().map(|g| -beta * g * e).collect()
            })
            .with_grad_v(move |_, _| vec![0.0; d])
            .with_hess_v(move |_, _| vec![0.0; d * d])
            .with_support(Support::GaussianDecay(1.0 / beta.sqrt()))
    }

    /// Gaussian bump times a quadratic in `v`:
    /// `exp(-|xi - c|^2 / (2 w^2)) (a0 + b . v + v^T M v)` with `M` symmetric.
    pub fn bump_quadratic(center: Vec<f64>, width: f64, a0: f64, b: Vec<f64>, m: Vec<f64>) -> Self {
        let d = center.len();
        assert!(b.len() == d && m.len() == d * d, "coefficient shapes must match the dimension");
        let w2 = width * width;
        let bump = {
            let c = center.clone();
            move |xi: &[f64]| (-xi.iter().zip(&c).map(|(x, c)| (x - c).powi(2)).sum::<f64>() / (2.0 * w2)).exp()
        };
        let poly = {
            let (b, m) = (b.clone(), m.clone());
            move |v: &[f64]| {
                let mut q = 0.0;
                for i in 0..d {
                    for j in 0..d {
                        q += v[i] * m[i * d + j] * v[j];
                    }
                }
                a0 + dot(&b, v) + q
            }
        };
        let grad_poly = {
            let (b, m) = (b.clone(), m.clone());
            move |v: &[f64]| -> Vec<f64> {
                (0..d)
                    .map(|i| b[i] + (0..d).map(|j| (m[i * d + j] + m[j * d + i]) * v[j]).sum::<f64>())
                    .collect()
            }
        };
        let (bump1, bump2, bump3, bump4) = (bump.clone(), bump.clone(), bump.clone(), bump);
        let (poly1, poly2) = (poly.clone(), poly);
        let c = center;
        let gp = grad_poly;
        TestFunction::new(move |xi, v| bump1(xi) * poly1(v))
            .with_grad_xi(move |xi, v| {
                let s = bump2(xi) * poly2(v);
                xi.iter().zip(&c).map(|(x, c)| -(x - c) / w2 * s).collect()
            })
            .with_grad_v(move |xi, v| {
                let s = bump3(xi);
                gp(v).into_iter().map(|g| g * s).collect()
            })
            .with_hess_v(move |xi, _| {
                let s = bump4(xi);
                (0..d * d).map(|k| s * (m[k] + m[(k % d) * d + k / d])).collect()
            })
            .with_support(Support::GaussianDecay(width))
    }

    /// Bump-quadratic with random centre and coefficients.
    pub fn random_smooth(d: usize, seed: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let center: Vec<f64> = (0..d).map(|_| rng.random_range(-0.5..0.5)).collect();
        let width = rng.random_range(0.6..1.2);
        let a0 = rng.random_range(-1.0..1.0);
        let b: Vec<f64> = (0..d).map(|_| rng.random_range(-1.0..1.0)).collect();
        let mut m = vec![0.0; d * d];
        for i in 0..d {
            for j in i..d {
                let x = rng.random_range(-1.0..1.0);
                m[i * d + j] = x;
                m[j * d + i] = x;
            }
        }
        Self::bump_quadratic(center, width, a0, b, m)
    }
}
