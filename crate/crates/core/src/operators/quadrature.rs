//! Product rules on `R^d x S^{d-1}`.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::error::{invalid, Result};
use crate::geometry::{random_unit_vector, sphere_quadrature, Estimate, RuleKind};
use crate::potential::PotentialSpec;
use crate::rules::gauss_legendre_interval;

/// Which measure a [`ProductQuadrature`] integrates against.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Weight {
    /// `mu = exp(-Phi) dxi (x) nu`, normalized.
    Mu,
    /// `dxi (x) nu` on the box `[-R, R]^d`.
    Flat,
}

/// Nodes `(xi_k, v_k)` with weights.
#[derive(Debug, Clone)]
pub struct ProductQuadrature {
    pub d: usize,
    pub xi: Vec<Vec<f64>>,
    pub v: Vec<Vec<f64>>,
    pub weights: Vec<f64>,
    pub weight: Weight,
    pub monte_carlo: bool,
    /// Half-width of the `xi` box (grid rules).
    pub radius: Option<f64>,
}

type Nodes = (Vec<Vec<f64>>, Vec<Vec<f64>>, Vec<f64>);

fn xi_grid(d: usize, radius: f64, n: usize) -> (Vec<Vec<f64>>, Vec<f64>) {
    let (x, w) = gauss_legendre_interval(n, -radius, radius);
    let total = n.pow(d as u32);
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        nodes.push(idx.iter().map(|&i| x[i]).collect());
        weights.push(idx.iter().map(|&i| w[i]).product());
        for k in 0..d {
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
        }
    }
    (nodes, weights)
}

fn sphere_nodes(d: usize, n_v: usize, seed: u64) -> Result<(Vec<Vec<f64>>, Vec<f64>, bool)> {
    let kind = if d <= 3 {
        RuleKind::Deterministic
    } else {
        RuleKind::MonteCarlo { seed }
    };
    let q = sphere_quadrature::<f64>(d, kind, n_v)?;
    let mc = d > 3;
    Ok((q.nodes.into_iter().map(|v| v.into_vec()).collect(), q.weights, mc))
}

impl ProductQuadrature {
    fn product(xs: &[Vec<f64>], wx: &[f64], vs: &[Vec<f64>], wv: &[f64]) -> Nodes {
        let n = xs.len() * vs.len();
        let mut xi = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        let mut w = Vec::with_capacity(n);
        for (x, a) in xs.iter().zip(wx) {
            for (u, b) in vs.iter().zip(wv) {
                xi.push(x.clone());
                v.push(u.clone());
                w.push(a * b);
            }
        }
        (xi, v, w)
    }

    /// Tensor Gauss–Legendre in `xi` on `[-R, R]^d` weighted by `exp(-Phi)`,
    /// times a sphere rule (`n_v` nodes per angle for `d <= 3`, `n_v`
    /// samples otherwise). Weights are normalized by their discrete sum.
    pub fn mu_grid(pot: &PotentialSpec<f64>, n_xi: usize, n_v: usize) -> Result<Self> {
        let d = pot.dim();
        let radius = pot
            .reference_radius()
            .ok_or_else(|| invalid("pot", "grid rules need a potential with a reference radius"))?;
        let (xs, mut wx) = xi_grid(d, radius, n_xi);
        for (x, w) in xs.iter().zip(wx.iter_mut()) {
            *w *= (-pot.value(x)).exp();
        }
        let z: f64 = wx.iter().sum();
        wx.iter_mut().for_each(|w| *w /= z);
        let (vs, wv, mc) = sphere_nodes(d, n_v, 0x5e11)?;
        let (xi, v, weights) = Self::product(&xs, &wx, &vs, &wv);
        Ok(Self {
            d,
            xi,
            v,
            weights,
            weight: Weight::Mu,
            monte_carlo: mc,
            radius: Some(radius),
        })
    }

    /// Lebesgue measure on `[-R, R]^d` times `nu`.
    pub fn flat_grid(d: usize, radius: f64, n_xi: usize, n_v: usize) -> Result<Self> {
        let (xs, wx) = xi_grid(d, radius, n_xi);
        let (vs, wv, mc) = sphere_nodes(d, n_v, 0x5e12)?;
        let (xi, v, weights) = Self::product(&xs, &wx, &vs, &wv);
        Ok(Self {
            d,
            xi,
            v,
            weights,
            weight: Weight::Flat,
            monte_carlo: mc,
            radius: Some(radius),
        })
    }

    /// `n` independent samples of `mu` for quadratic potentials, weighted
    /// samples from a Gaussian proposal otherwise.
    pub fn mu_monte_carlo(pot: &PotentialSpec<f64>, n: usize, seed: u64) -> Result<Self> {
        let d = pot.dim();
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let a = pot.quadratic_coefficients();
        let s_prop = pot.reference_radius().unwrap_or(4.0) / 3.0;
        let mut xi = Vec::with_capacity(n);
        let mut v = Vec::with_capacity(n);
        let mut weights = Vec::with_capacity(n);
        for _ in 0..n {
            let z: Vec<f64> = (0..d).map(|_| StandardNormal.sample(&mut rng)).collect();
            let (x, w) = match &a {
                Some(a) => (z.iter().zip(a).map(|(z, a)| z / (2.0 * a).sqrt()).collect(), 1.0),
                None => {
                    let x: Vec<f64> = z.iter().map(|z| z * s_prop).collect();
                    let lq = -0.5 * z.iter().map(|z| z * z).sum::<f64>();
                    let w = (-pot.value(&x) - lq).exp();
                    (x, w)
                }
            };
            xi.push(x);
            v.push(random_unit_vector::<f64, _>(d, &mut rng).into_vec());
            weights.push(w);
        }
        let total: f64 = weights.iter().sum();
        weights.iter_mut().for_each(|w| *w /= total);
        Ok(Self {
            d,
            xi,
            v,
            weights,
            weight: Weight::Mu,
            monte_carlo: true,
            radius: None,
        })
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    /// Quadrature of `f`; for sampled rules the standard error of the
    /// weighted mean is reported.
    pub fn integrate(&self, f: impl Fn(&[f64], &[f64]) -> f64) -> Estimate {
        let vals: Vec<f64> = self.xi.iter().zip(&self.v).map(|(x, v)| f(x, v)).collect();
        self.integrate_values(&vals)
    }

    /// Fallible variant of [`ProductQuadrature::integrate`].
    pub fn try_integrate(&self, f: impl Fn(&[f64], &[f64]) -> Result<f64>) -> Result<Estimate> {
        let vals = self
            .xi
            .iter()
            .zip(&self.v)
            .map(|(x, v)| f(x, v))
            .collect::<Result<Vec<f64>>>()?;
        Ok(self.integrate_values(&vals))
    }

    pub fn integrate_values(&self, vals: &[f64]) -> Estimate {
        let mean: f64 = vals.iter().zip(&self.weights).map(|(f, w)| f * w).sum();
        let std_error = if self.monte_carlo {
            let total: f64 = self.weights.iter().sum();
            self.weights
                .iter()
                .zip(vals)
                .map(|(w, f)| (w / total * (f - mean / total)).powi(2))
                .sum::<f64>()
                .sqrt()
                * total
        } else {
            0.0
        };
        Estimate { value: mean, std_error }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_integrates_to_one() {
        let pot = PotentialSpec::radial_quadratic(2);
        let q = ProductQuadrature::mu_grid(&pot, 32, 8).unwrap();
        let one = q.integrate(|_, _| 1.0).value;
        assert!((one - 1.0).abs() < 1e-10, "{one}");
        let pot = PotentialSpec::radial_quadratic(2).shifted(std::f64::consts::PI.ln());
        let q = ProductQuadrature::mu_grid(&pot, 32, 8).unwrap();
        let one = q.integrate(|_, _| 1.0).value;
        assert!((one - 1.0).abs() < 1e-10, "{one}");
        let mc = ProductQuadrature::mu_monte_carlo(&PotentialSpec::radial_quadratic(3), 10_000, 1).unwrap();
        let e = mc.integrate(|x, _| x[0] * x[0]);
        assert!((e.value - 0.5).abs() < 3.0 * e.std_error, "{e:?}");
    }

    #[test]
    fn flat_box_volume() {
        let q = ProductQuadrature::flat_grid(2, 2.0, 4, 4).unwrap();
        assert!((q.integrate(|_, _| 1.0).value - 16.0).abs() < 1e-12);
    }
}
