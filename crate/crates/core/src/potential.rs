//! The confining potential `Phi` and numerical audits of its hypotheses.
//!
//! Potentials are accepted unnormalized; the normalization constant
//! `int exp(-Phi)` is carried as metadata and only diagnostics use it.

use std::fmt;
use std::sync::Arc;

use nalgebra::{DMatrix, SymmetricEigen};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, FiberError, Result};
use crate::geometry::random_unit_vector;
use crate::linalg::dot;
use crate::rules::gauss_legendre_interval;
use crate::scalar::Real;

type ValueFn<T> = Arc<dyn Fn(&[T]) -> T + Send + Sync>;
/// Writes into the output slice: `d` entries for gradients, `d*d` row-major
/// entries for Hessians.
type IntoFn<T> = Arc<dyn Fn(&[T], &mut [T]) + Send + Sync>;

/// Analytic family of a potential.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub enum PotentialFamily {
    /// `sum_i a_i xi_i^2`.
    QuadraticDiagonal(Vec<f64>),
    /// `|xi|^2`.
    RadialQuadratic,
    /// `c . xi`.
    Linear(Vec<f64>),
    /// `|xi|^4`.
    Quartic,
    Zero,
    Custom(String),
}

/// `Phi` with value, gradient, Hessian and analytic metadata.
#[derive(Clone)]
pub struct PotentialSpec<T> {
    dim: usize,
    value: ValueFn<T>,
    grad: IntoFn<T>,
    hess: IntoFn<T>,
    pub family: PotentialFamily,
    /// Additive constant already folded into `value`.
    pub offset: f64,
    /// `int exp(-Phi) dxi` when known in closed form.
    pub normalization_known: Option<f64>,
    /// Poincare constant of `exp(-Phi) dxi` when known.
    pub poincare_constant_known: Option<f64>,
    /// The caller vouches for smoothness (built-ins are smooth).
    pub smoothness_attested: bool,
}

impl<T> fmt::Debug for PotentialSpec<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("PotentialSpec")
            .field("dim", &self.dim)
            .field("family", &self.family)
            .field("offset", &self.offset)
            .field("normalization_known", &self.normalization_known)
            .field("poincare_constant_known", &self.poincare_constant_known)
            .finish()
    }
}

impl<T: Real> PotentialSpec<T> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn value(&self, xi: &[T]) -> T {
        (self.value)(xi)
    }

    pub fn grad_into(&self, xi: &[T], out: &mut [T]) {
        (self.grad)(xi, out)
    }

    pub fn grad(&self, xi: &[T]) -> Vec<T> {
        let mut g = vec![T::zero(); self.dim];
        self.grad_into(xi, &mut g);
        g
    }

    /// Row-major `d x d` Hessian.
    pub fn hess(&self, xi: &[T]) -> Vec<T> {
        let mut h = vec![T::zero(); self.dim * self.dim];
        (self.hess)(xi, &mut h);
        h
    }

    /// Diagonal quadratic `sum_i a_i xi_i^2`; requires every `a_i > 0`.
    pub fn anisotropic_quadratic(a: &[f64]) -> Result<Self> {
        if a.len() < 2 {
            return Err(invalid("a", "need at least two coefficients (d >= 2)"));
        }
        if a.iter().any(|&x| !(x > 0.0) || !x.is_finite()) {
            return Err(invalid("a", "all coefficients must be positive"));
        }
        Ok(Self::quadratic_unchecked(a.to_vec(), PotentialFamily::QuadraticDiagonal(a.to_vec())))
    }

    /// `|xi|^2`: Gaussian weight with variance 1/2 per coordinate, Poincare
    /// constant 2.
    pub fn radial_quadratic(d: usize) -> Self {
        assert!(d >= 2, "d >= 2 required");
        Self::quadratic_unchecked(vec![1.0; d], PotentialFamily::RadialQuadratic)
    }

    fn quadratic_unchecked(a: Vec<f64>, family: PotentialFamily) -> Self {
        let d = a.len();
        let coef: Vec<T> = a.iter().map(|&x| T::lit(x)).collect();
        let (c1, c2, c3) = (coef.clone(), coef.clone(), coef);
        let amin = a.iter().cloned().fold(f64::INFINITY, f64::min);
        let norm = a.iter().map(|&ai| (std::f64::consts::PI / ai).sqrt()).product();
        Self {
            dim: d,
            value: Arc::new(move |x: &[T]| x.iter().zip(&c1).map(|(&xi, &ai)| ai * xi * xi).sum()),
            grad: Arc::new(move |x: &[T], out: &mut [T]| {
                for ((o, &xi), &ai) in out.iter_mut().zip(x).zip(&c2) {
                    *o = (ai + ai) * xi;
                }
            }),
            hess: Arc::new(move |_x: &[T], out: &mut [T]| {
                out.iter_mut().for_each(|o| *o = T::zero());
                for (i, &ai) in c3.iter().enumerate() {
                    out[i * d + i] = ai + ai;
                }
            }),
            family,
            offset: 0.0,
            normalization_known: Some(norm),
            poincare_constant_known: Some(2.0 * amin),
            smoothness_attested: true,
        }
    }

    /// `Phi = 0` (not integrable; useful for transport-only checks).
    pub fn zero(d: usize) -> Self {
        Self {
            dim: d,
            value: Arc::new(|_x: &[T]| T::zero()),
            grad: Arc::new(|_x: &[T], out: &mut [T]| out.iter_mut().for_each(|o| *o = T::zero())),
            hess: Arc::new(|_x: &[T], out: &mut [T]| out.iter_mut().for_each(|o| *o = T::zero())),
            family: PotentialFamily::Zero,
            offset: 0.0,
            normalization_known: None,
            poincare_constant_known: None,
            smoothness_attested: true,
        }
    }

    /// `Phi = c . xi`.
    pub fn linear(c: &[f64]) -> Self {
        let coef: Vec<T> = c.iter().map(|&x| T::lit(x)).collect();
        let (c1, c2) = (coef.clone(), coef);
        Self {
            dim: c.len(),
            value: Arc::new(move |x: &[T]| dot(x, &c1)),
            grad: Arc::new(move |_x: &[T], out: &mut [T]| out.copy_from_slice(&c2)),
            hess: Arc::new(|_x: &[T], out: &mut [T]| out.iter_mut().for_each(|o| *o = T::zero())),
            family: PotentialFamily::Linear(c.to_vec()),
            offset: 0.0,
            normalization_known: None,
            poincare_constant_known: None,
            smoothness_attested: true,
        }
    }

    /// `Phi = |xi|^4`.
    pub fn quartic(d: usize) -> Self {
        Self {
            dim: d,
            value: Arc::new(|x: &[T]| {
                let r2 = dot(x, x);
                r2 * r2
            }),
            grad: Arc::new(|x: &[T], out: &mut [T]| {
                let r2 = dot(x, x);
                for (o, &xi) in out.iter_mut().zip(x) {
                    *o = T::lit(4.0) * r2 * xi;
                }
            }),
            hess: Arc::new(move |x: &[T], out: &mut [T]| {
                let r2 = dot(x, x);
                for i in 0..d {
                    for j in 0..d {
                        let diag = if i == j { T::lit(4.0) * r2 } else { T::zero() };
                        out[i * d + j] = diag + T::lit(8.0) * x[i] * x[j];
                    }
                }
            }),
            family: PotentialFamily::Quartic,
            offset: 0.0,
            normalization_known: None,
            poincare_constant_known: None,
            smoothness_attested: true,
        }
    }

    /// User potential. The gradient and Hessian are compared with central
    /// differences on a fixed random sample before the spec is accepted.
    pub fn custom(
        dim: usize,
        name: impl Into<String>,
        value: impl Fn(&[T]) -> T + Send + Sync + 'static,
        grad: impl Fn(&[T], &mut [T]) + Send + Sync + 'static,
        hess: impl Fn(&[T], &mut [T]) + Send + Sync + 'static,
        smoothness_attested: bool,
    ) -> Result<Self> {
        let spec = Self {
            dim,
            value: Arc::new(value),
            grad: Arc::new(grad),
            hess: Arc::new(hess),
            family: PotentialFamily::Custom(name.into()),
            offset: 0.0,
            normalization_known: None,
            poincare_constant_known: None,
            smoothness_attested,
        };
        let err = spec.derivative_consistency(16, 0x5eed);
        let tol = T::lit(1e-5).max(T::lit(50.0) * T::epsilon().powf(T::lit(2.0 / 3.0)));
        if err > tol {
            return Err(invalid(
                "grad",
                format!("derivatives disagree with finite differences (relative error {err})"),
            ));
        }
        Ok(spec)
    }

    pub fn with_poincare_constant(mut self, lambda: f64) -> Self {
        self.poincare_constant_known = Some(lambda);
        self
    }

    pub fn with_normalization(mut self, z: f64) -> Self {
        self.normalization_known = Some(z);
        self
    }

    /// `Phi + c`. Dynamics are unchanged; the normalization scales by `e^{-c}`.
    pub fn shifted(&self, c: f64) -> Self {
        let inner = self.value.clone();
        let cc = T::lit(c);
        Self {
            value: Arc::new(move |x: &[T]| inner(x) + cc),
            offset: self.offset + c,
            normalization_known: self.normalization_known.map(|z| z * (-c).exp()),
            ..self.clone()
        }
    }

    /// Shift making `int exp(-Phi) = 1`, when the normalization is known.
    pub fn normalized(&self) -> Option<Self> {
        self.normalization_known.map(|z| self.shifted(z.ln()))
    }

    /// `s * Phi` for `s > 0`. Quadratic families stay analytic.
    pub fn scaled(&self, s: f64) -> Self {
        assert!(s > 0.0, "scale must be positive");
        let mut out = match &self.family {
            PotentialFamily::QuadraticDiagonal(a) => {
                let a: Vec<f64> = a.iter().map(|x| s * x).collect();
                Self::quadratic_unchecked(a.clone(), PotentialFamily::QuadraticDiagonal(a))
            }
            PotentialFamily::RadialQuadratic if s == 1.0 => Self::radial_quadratic(self.dim),
            PotentialFamily::RadialQuadratic => {
                let a = vec![s; self.dim];
                Self::quadratic_unchecked(a.clone(), PotentialFamily::QuadraticDiagonal(a))
            }
            _ => {
                let (v, g, h) = (self.value.clone(), self.grad.clone(), self.hess.clone());
                let st = T::lit(s);
                Self {
                    value: Arc::new(move |x: &[T]| st * v(x)),
                    grad: Arc::new(move |x: &[T], out: &mut [T]| {
                        g(x, out);
                        out.iter_mut().for_each(|o| *o = *o * st);
                    }),
                    hess: Arc::new(move |x: &[T], out: &mut [T]| {
                        h(x, out);
                        out.iter_mut().for_each(|o| *o = *o * st);
                    }),
                    family: self.family.clone(),
                    normalization_known: None,
                    poincare_constant_known: None,
                    ..self.clone()
                }
            }
        };
        if self.offset != 0.0 {
            out = out.shifted(s * self.offset);
        }
        out
    }

    /// Largest relative discrepancy of gradient and Hessian against central
    /// differences on `n` random points.
    pub fn derivative_consistency(&self, n: usize, seed: u64) -> T {
        let d = self.dim;
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let h = T::epsilon().cbrt();
        let mut worst = T::zero();
        for _ in 0..n {
            let x: Vec<T> = (0..d)
                .map(|_| T::lit(StandardNormal.sample(&mut rng)))
                .collect();
            let g = self.grad(&x);
            let hs = self.hess(&x);
            let mut p = x.clone();
            for i in 0..d {
                p[i] = x[i] + h;
                let fp = self.value(&p);
                let gp = self.grad(&p);
                p[i] = x[i] - h;
                let fm = self.value(&p);
                let gm = self.grad(&p);
                p[i] = x[i];
                let fd = (fp - fm) / (h + h);
                worst = worst.max((fd - g[i]).abs() / T::one().max(g[i].abs()));
                for j in 0..d {
                    let fdh = (gp[j] - gm[j]) / (h + h);
                    let a = hs[j * d + i];
                    worst = worst.max((fdh - a).abs() / T::one().max(a.abs()));
                }
            }
        }
        worst
    }

    /// Radius beyond which `exp(-Phi)` is negligible (tail mass below ~1e-8
    /// for the Gaussian families); used by quadrature rules.
    pub fn reference_radius(&self) -> Option<f64> {
        match &self.family {
            PotentialFamily::RadialQuadratic => Some(4.5),
            PotentialFamily::QuadraticDiagonal(a) => {
                let amin = a.iter().cloned().fold(f64::INFINITY, f64::min);
                Some(4.5 / amin.sqrt())
            }
            _ => None,
        }
    }

    /// Coefficients when the family is a diagonal quadratic.
    pub fn quadratic_coefficients(&self) -> Option<Vec<f64>> {
        match &self.family {
            PotentialFamily::QuadraticDiagonal(a) => Some(a.clone()),
            PotentialFamily::RadialQuadratic => Some(vec![1.0; self.dim]),
            _ => None,
        }
    }
}

/// Builds a built-in potential from its configuration name.
pub fn by_name<T: Real>(name: &str, d: usize, params: &[f64]) -> Result<PotentialSpec<T>> {
    match name {
        "radial-quadratic" => Ok(PotentialSpec::radial_quadratic(d)),
        "anisotropic-quadratic" | "quadratic-diagonal" => {
            if params.len() != d {
                return Err(invalid("phi-params", format!("expected {d} coefficients")));
            }
            PotentialSpec::anisotropic_quadratic(params)
        }
        "zero" => Ok(PotentialSpec::zero(d)),
        "quartic" => Ok(PotentialSpec::quartic(d)),
        "linear" => {
            if params.len() != d {
                return Err(invalid("phi-params", format!("expected {d} coefficients")));
            }
            Ok(PotentialSpec::linear(params))
        }
        other => Err(invalid("phi", format!("unknown potential `{other}`"))),
    }
}

/// Integration method for [`audit_h2`].
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum H2Method {
    /// Grid for `d <= 3`, Monte-Carlo otherwise.
    Auto { budget: usize },
    /// Tensor Gauss–Legendre with `nodes` points per axis.
    Grid { nodes: usize },
    /// Gaussian importance sampling.
    MonteCarlo { samples: usize, seed: u64 },
}

/// Estimate of `int exp(-Phi) dxi`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct H2Audit {
    pub estimate: f64,
    pub error: f64,
    /// Half-width of the integration box.
    pub radius: f64,
}

const TAIL_RATIO: f64 = 1e-12;
const MAX_TAIL_RADIUS: f64 = 1024.0;

/// Normalization audit. `bounding_box` overrides the automatic tail search.
pub fn audit_h2<T: Real>(p: &PotentialSpec<T>, method: H2Method, bounding_box: Option<f64>) -> Result<H2Audit> {
    let d = p.dim();
    let radius = match bounding_box {
        Some(r) if r > 0.0 => r,
        Some(_) => return Err(invalid("bounding_box", "must be positive")),
        None => tail_radius(p)?,
    };
    let eval = |x: &[f64]| -> f64 {
        let xt: Vec<T> = x.iter().map(|&v| T::lit(v)).collect();
        (-p.value(&xt).as_f64()).exp()
    };
    let method = match method {
        H2Method::Auto { budget } if d <= 3 => H2Method::Grid { nodes: budget.max(8) },
        H2Method::Auto { budget } => H2Method::MonteCarlo {
            samples: budget.max(1000),
            seed: 0x42,
        },
        m => m,
    };
    match method {
        H2Method::Grid { nodes } => {
            let fine = tensor_gauss(&eval, d, radius, nodes);
            let coarse = tensor_gauss(&eval, d, radius, (nodes / 2).max(2));
            Ok(H2Audit {
                estimate: fine,
                error: (fine - coarse).abs(),
                radius,
            })
        }
        H2Method::MonteCarlo { samples, seed } => {
            let s = radius / 7.0;
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let log_q0 = -0.5 * d as f64 * (2.0 * std::f64::consts::PI * s * s).ln();
            let mut sum = 0.0;
            let mut sum2 = 0.0;
            let mut x = vec![0.0; d];
            for _ in 0..samples {
                for xi in x.iter_mut() {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    *xi = s * z;
                }
                let log_q = log_q0 - 0.5 * x.iter().map(|v| v * v).sum::<f64>() / (s * s);
                let w = eval(&x) / log_q.exp();
                sum += w;
                sum2 += w * w;
            }
            let n = samples as f64;
            let mean = sum / n;
            let var = (sum2 / n - mean * mean).max(0.0);
            Ok(H2Audit {
                estimate: mean,
                error: (var / n).sqrt(),
                radius,
            })
        }
        H2Method::Auto { .. } => unreachable!(),
    }
}

fn tensor_gauss(f: &dyn Fn(&[f64]) -> f64, d: usize, radius: f64, n: usize) -> f64 {
    let (x, w) = gauss_legendre_interval(n, -radius, radius);
    let mut idx = vec![0usize; d];
    let mut point = vec![0.0; d];
    let mut total = 0.0;
    loop {
        let mut weight = 1.0;
        for k in 0..d {
            point[k] = x[idx[k]];
            weight *= w[idx[k]];
        }
        total += weight * f(&point);
        let mut k = 0;
        loop {
            if k == d {
                return total;
            }
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
            k += 1;
        }
    }
}

/// Smallest radius `2^k` at which `exp(-Phi)` on the shell is below
/// `TAIL_RATIO` times its largest value inside, with `Phi` growing at least
/// like `(d + 1) log r` (integrable tail).
pub(crate) fn tail_radius<T: Real>(p: &PotentialSpec<T>) -> Result<f64> {
    let d = p.dim();
    let mut rng = ChaCha8Rng::seed_from_u64(0x7a11);
    let mut dirs: Vec<Vec<f64>> = Vec::new();
    for i in 0..d {
        for s in [-1.0, 1.0] {
            let mut e = vec![0.0; d];
            e[i] = s;
            dirs.push(e);
        }
    }
    for _ in 0..64 {
        dirs.push(random_unit_vector::<f64, _>(d, &mut rng).into_vec());
    }
    let phi = |x: Vec<f64>| -> f64 {
        let xt: Vec<T> = x.into_iter().map(T::lit).collect();
        p.value(&xt).as_f64()
    };
    let mut phi_min = phi(vec![0.0; d]);
    let mut r = 0.5;
    while r <= MAX_TAIL_RADIUS {
        let shell: Vec<f64> = dirs
            .iter()
            .map(|u| phi(u.iter().map(|c| c * r).collect()))
            .collect();
        let shell_min = shell.iter().cloned().fold(f64::INFINITY, f64::min);
        if r >= 1.0
            && shell_min - phi_min >= -TAIL_RATIO.ln()
            && shell_min - phi_min >= (d as f64 + 1.0) * r.ln()
        {
            return Ok(r);
        }
        phi_min = phi_min.min(shell_min);
        r *= 2.0;
    }
    Err(FiberError::NonIntegrable(format!(
        "exp(-Phi) has not decayed by radius {MAX_TAIL_RADIUS}"
    )))
}

/// Result of the pointwise-condition audit.
#[derive(Debug, Clone, PartialEq)]
pub struct H4Audit {
    /// `max |Hess Phi| / (1 + |grad Phi|)` over the sample; monotone in the sample.
    pub max_ratio: f64,
    /// Ratio maxima over nested radial shells (increasing radius).
    pub shell_maxima: Vec<f64>,
    /// Shell maxima grow monotonically and at least double from the first to
    /// the last shell.
    pub unbounded_suspected: bool,
}

impl H4Audit {
    /// Smallest admissible `C`, or infinity when growth is suspected.
    pub fn bound(&self) -> f64 {
        if self.unbounded_suspected {
            f64::INFINITY
        } else {
            self.max_ratio
        }
    }
}

const H4_SHELLS: usize = 5;

/// Pointwise condition `|Hess Phi| <= C (1 + |grad Phi|)` over a sample.
pub fn audit_h4<T: Real>(p: &PotentialSpec<T>, sample: &[Vec<T>]) -> Result<H4Audit> {
    if sample.is_empty() {
        return Err(invalid("sample", "must be nonempty"));
    }
    let d = p.dim();
    let mut rows: Vec<(f64, f64)> = sample
        .iter()
        .map(|x| {
            let g = p.grad(x);
            let h: Vec<f64> = p.hess(x).iter().map(|v| v.as_f64()).collect();
            let gnorm = g.iter().map(|v| v.as_f64().powi(2)).sum::<f64>().sqrt();
            let op = SymmetricEigen::new(DMatrix::from_row_slice(d, d, &h))
                .eigenvalues
                .iter()
                .fold(0.0f64, |m, e| m.max(e.abs()));
            let r = x.iter().map(|v| v.as_f64().powi(2)).sum::<f64>().sqrt();
            (r, op / (1.0 + gnorm))
        })
        .collect();
    let max_ratio = rows.iter().fold(0.0f64, |m, r| m.max(r.1));
    rows.sort_by(|a, b| a.0.total_cmp(&b.0));
    let shells = H4_SHELLS.min(rows.len());
    let per = rows.len().div_ceil(shells);
    let shell_maxima: Vec<f64> = rows
        .chunks(per)
        .map(|c| c.iter().fold(0.0f64, |m, r| m.max(r.1)))
        .collect();
    let unbounded_suspected = shell_maxima.len() >= H4_SHELLS
        && shell_maxima.windows(2).all(|w| w[1] > w[0])
        && shell_maxima[shell_maxima.len() - 1] >= 2.0 * shell_maxima[0];
    Ok(H4Audit {
        max_ratio,
        shell_maxima,
        unbounded_suspected,
    })
}
