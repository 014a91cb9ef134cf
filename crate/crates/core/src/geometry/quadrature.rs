//! Quadrature rules for the normalized surface measure `nu` on `S^{d-1}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::geometry::chart::{embed_angles_into, UnitVector};
use crate::linalg::quad_form;
use crate::rules::gauss_legendre;
use crate::scalar::Real;

/// How a sphere rule is generated.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RuleKind {
    /// Trapezoid on `S^1`; uniform azimuth x Gauss–Legendre in `cos(theta_2)` on `S^2`.
    Deterministic,
    /// Equal-weight normalized Gaussian vectors.
    MonteCarlo { seed: u64 },
}

/// A value with its standard error (zero for deterministic rules).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub value: f64,
    pub std_error: f64,
}

/// Nodes and weights for `nu`; weights are nonnegative and sum to one.
#[derive(Debug, Clone)]
pub struct SphereQuadrature<T> {
    pub nodes: Vec<UnitVector<T>>,
    pub weights: Vec<T>,
    pub kind: RuleKind,
    /// Highest total polynomial degree integrated exactly (deterministic rules).
    pub exact_degree: Option<usize>,
}

/// Builds a rule on `S^{d-1}`. `size` is the number of nodes per angle for
/// deterministic rules and the sample count for Monte-Carlo rules.
pub fn sphere_quadrature<T: Real>(d: usize, kind: RuleKind, size: usize) -> Result<SphereQuadrature<T>> {
    if d < 2 {
        return Err(invalid("d", "sphere quadrature needs d >= 2"));
    }
    if size == 0 {
        return Err(invalid("size", "rule size must be positive"));
    }
    match kind {
        RuleKind::Deterministic => match d {
            2 => Ok(trapezoid(size)),
            3 => Ok(product_s2(size)),
            _ => Err(invalid(
                "kind",
                format!("no deterministic rule for S^{}; use Monte-Carlo", d - 1),
            )),
        },
        RuleKind::MonteCarlo { seed } => Ok(monte_carlo(d, size, seed)),
    }
}

fn trapezoid<T: Real>(n: usize) -> SphereQuadrature<T> {
    let w = T::one() / T::lit(n as f64);
    let nodes = (0..n)
        .map(|k| {
            let a = T::TAU() * T::lit(k as f64) / T::lit(n as f64);
            UnitVector::from_normalized(vec![a.cos(), a.sin()])
        })
        .collect();
    SphereQuadrature {
        nodes,
        weights: vec![w; n],
        kind: RuleKind::Deterministic,
        exact_degree: Some(n - 1),
    }
}

fn product_s2<T: Real>(n: usize) -> SphereQuadrature<T> {
    let (x, w) = gauss_legendre(n);
    let mut nodes = Vec::with_capacity(n * n);
    let mut weights = Vec::with_capacity(n * n);
    for k in 0..n {
        let az = T::TAU() * T::lit(k as f64) / T::lit(n as f64);
        for (xi, wi) in x.iter().zip(&w) {
            let polar = T::lit(xi.acos());
            let mut v = vec![T::zero(); 3];
            embed_angles_into(&[az, polar], &mut v);
            nodes.push(UnitVector::from_normalized(v));
            weights.push(T::lit(0.5 * wi / n as f64));
        }
    }
    SphereQuadrature {
        nodes,
        weights,
        kind: RuleKind::Deterministic,
        exact_degree: Some(n - 1),
    }
}

fn monte_carlo<T: Real>(d: usize, n: usize, seed: u64) -> SphereQuadrature<T> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let nodes = (0..n).map(|_| random_unit_vector(d, &mut rng)).collect();
    SphereQuadrature {
        nodes,
        weights: vec![T::one() / T::lit(n as f64); n],
        kind: RuleKind::MonteCarlo { seed },
        exact_degree: None,
    }
}

/// Uniform sample on `S^{d-1}` (normalized standard Gaussian).
pub fn random_unit_vector<T: Real, R: rand::Rng + ?Sized>(d: usize, rng: &mut R) -> UnitVector<T> {
    loop {
        let g: Vec<f64> = (0..d).map(|_| StandardNormal.sample(rng)).collect();
        let n = g.iter().map(|x| x * x).sum::<f64>().sqrt();
        if n > 1e-12 {
            let v: Vec<T> = g.iter().map(|x| T::lit(x / n)).collect();
            return UnitVector::normalize(v).expect("nonzero sample");
        }
    }
}

impl<T: Real> SphereQuadrature<T> {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.nodes.first().map_or(0, |v| v.dim())
    }

    /// Integral of `f` against `nu`; the standard error is reported for
    /// Monte-Carlo rules.
    pub fn integrate(&self, f: impl Fn(&[T]) -> T) -> Estimate {
        let vals: Vec<f64> = self.nodes.iter().map(|v| f(v).as_f64()).collect();
        let w: Vec<f64> = self.weights.iter().map(|w| w.as_f64()).collect();
        let mean: f64 = vals.iter().zip(&w).map(|(f, w)| f * w).sum();
        let std_error = match self.kind {
            RuleKind::Deterministic => 0.0,
            RuleKind::MonteCarlo { .. } => {
                let n = vals.len() as f64;
                let var = vals.iter().map(|f| (f - mean).powi(2)).sum::<f64>() / (n - 1.0).max(1.0);
                (var / n).sqrt()
            }
        };
        Estimate { value: mean, std_error }
    }
}

/// Quadrature estimate of `int (B v, v) dnu`; the exact value is `tr(B) / d`.
pub fn gauss_moment<T: Real>(b: &[T], quad: &SphereQuadrature<T>) -> Estimate {
    quad.integrate(|v| quad_form(b, v, v))
}
