//! Expectations under the invariant law, by quadrature. These never touch the
//! simulator.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::ergodics::observable::Observable;
use crate::error::{invalid, Result};
use crate::geometry::{sphere_quadrature, Estimate, RuleKind};
use crate::potential::{tail_radius, PotentialSpec};
use crate::rules::{gauss_hermite_normal, gauss_legendre_interval};

const HERMITE_NODES: usize = 24;
const LEGENDRE_NODES: usize = 64;
const LEGENDRE_NODES_3D: usize = 40;
const MC_SAMPLES: usize = 400_000;

/// Nodes and weights (summing to one) for the `xi`-marginal.
struct XiRule {
    nodes: Vec<Vec<f64>>,
    weights: Vec<f64>,
    monte_carlo: bool,
}

/// Invariant law of the dynamics with force scale `kappa`:
/// `exp(-(d-1) kappa Phi) dxi` normalized, times the uniform law on the sphere.
fn xi_rule(pot: &PotentialSpec<f64>, kappa: f64) -> Result<XiRule> {
    let d = pot.dim();
    let beta = (d as f64 - 1.0) * kappa;
    if !(beta > 0.0) {
        return Err(invalid("kappa", "must be positive"));
    }
    if let Some(a) = pot.quadratic_coefficients() {
        let (z, w) = gauss_hermite_normal(HERMITE_NODES);
        let scale: Vec<f64> = a.iter().map(|ai| 1.0 / (2.0 * beta * ai).sqrt()).collect();
        return Ok(tensor(d, &z, &w, |k, x| x * scale[k]));
    }
    let eff = pot.scaled(beta);
    let r = tail_radius(&eff)?;
    if d <= 3 {
        let n = if d == 3 { LEGENDRE_NODES_3D } else { LEGENDRE_NODES };
        let (x, w) = gauss_legendre_interval(n, -r, r);
        let mut rule = tensor(d, &x, &w, |_, x| x);
        for (p, wt) in rule.nodes.iter().zip(rule.weights.iter_mut()) {
            *wt *= (-eff.value(p)).exp();
        }
        let total: f64 = rule.weights.iter().sum();
        rule.weights.iter_mut().for_each(|w| *w /= total);
        return Ok(rule);
    }
    // self-normalized importance sampling from N(0, s^2 I)
    let s = r / 4.0;
    let mut rng = ChaCha8Rng::seed_from_u64(0x1a7e);
    let mut nodes = Vec::with_capacity(MC_SAMPLES);
    let mut weights = Vec::with_capacity(MC_SAMPLES);
    for _ in 0..MC_SAMPLES {
        let p: Vec<f64> = (0..d)
            .map(|_| {
                let z: f64 = StandardNormal.sample(&mut rng);
                s * z
            })
            .collect();
        let log_q = -0.5 * p.iter().map(|x| x * x).sum::<f64>() / (s * s);
        weights.push((-eff.value(&p) - log_q).exp());
        nodes.push(p);
    }
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|w| *w /= total);
    Ok(XiRule {
        nodes,
        weights,
        monte_carlo: true,
    })
}

fn tensor(d: usize, x: &[f64], w: &[f64], map: impl Fn(usize, f64) -> f64) -> XiRule {
    let n = x.len();
    let total = n.pow(d as u32);
    let mut nodes = Vec::with_capacity(total);
    let mut weights = Vec::with_capacity(total);
    let mut idx = vec![0usize; d];
    for _ in 0..total {
        nodes.push((0..d).map(|k| map(k, x[idx[k]])).collect());
        weights.push(idx.iter().map(|&i| w[i]).product());
        for k in 0..d {
            idx[k] += 1;
            if idx[k] < n {
                break;
            }
            idx[k] = 0;
        }
    }
    XiRule {
        nodes,
        weights,
        monte_carlo: false,
    }
}

/// Sphere rule exact for polynomials of degree three in `v`: trapezoid or
/// product rules for `d <= 3`, the `2d` points `+-e_i` otherwise.
fn v_rule(d: usize) -> Result<(Vec<Vec<f64>>, Vec<f64>)> {
    if d <= 3 {
        let q = sphere_quadrature::<f64>(d, RuleKind::Deterministic, 16)?;
        return Ok((q.nodes.into_iter().map(|v| v.into_vec()).collect(), q.weights));
    }
    let mut nodes = Vec::with_capacity(2 * d);
    for i in 0..d {
        for s in [1.0, -1.0] {
            let mut e = vec![0.0; d];
            e[i] = s;
            nodes.push(e);
        }
    }
    Ok((nodes, vec![1.0 / (2 * d) as f64; 2 * d]))
}

pub type PhaseFn<'a> = &'a dyn Fn(&[f64], &[f64]) -> f64;

/// `E[f(xi, v)]` under the invariant law for force scale `kappa`. For
/// `d >= 4` the `v`-rule is exact only up to degree three.
pub fn stationary_expectations(
    fs: &[PhaseFn<'_>],
    pot: &PotentialSpec<f64>,
    kappa: f64,
) -> Result<Vec<Estimate>> {
    let xr = xi_rule(pot, kappa)?;
    let (vn, vw) = v_rule(pot.dim())?;
    let mut out = Vec::with_capacity(fs.len());
    for f in fs {
        let vals: Vec<f64> = xr
            .nodes
            .iter()
            .map(|x| vn.iter().zip(&vw).map(|(v, w)| w * f(x, v)).sum())
            .collect();
        let mean: f64 = vals.iter().zip(&xr.weights).map(|(g, w)| g * w).sum();
        let std_error = if xr.monte_carlo {
            // delta-method error of a self-normalized estimator
            xr.weights
                .iter()
                .zip(&vals)
                .map(|(w, g)| (w * (g - mean)).powi(2))
                .sum::<f64>()
                .sqrt()
        } else {
            0.0
        };
        out.push(Estimate { value: mean, std_error });
    }
    Ok(out)
}

pub fn stationary_expectation(
    f: &dyn Fn(&[f64], &[f64]) -> f64,
    pot: &PotentialSpec<f64>,
    kappa: f64,
) -> Result<Estimate> {
    Ok(stationary_expectations(&[f], pot, kappa)?[0])
}

/// Invariant-law expectations of built-in observables.
pub fn observable_targets(obs: &[Observable], pot: &PotentialSpec<f64>, kappa: f64) -> Result<Vec<Estimate>> {
    let fs: Vec<_> = obs.iter().map(|&o| move |x: &[f64], v: &[f64]| o.eval(x, v)).collect();
    let refs: Vec<PhaseFn<'_>> = fs.iter().map(|f| f as PhaseFn<'_>).collect();
    stationary_expectations(&refs, pot, kappa)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn gaussian_moments() {
        let pot = PotentialSpec::radial_quadratic(2);
        let e = stationary_expectation(&|x, _| x[0] * x[0], &pot, 1.0).unwrap();
        assert!((e.value - 0.5).abs() < 1e-13);
        let e = stationary_expectation(&|_, v| v[1] * v[1], &pot, 1.0).unwrap();
        assert!((e.value - 0.5).abs() < 1e-14);
        // kappa = 1/(d-1) in d = 3 gives exp(-Phi): variance 1/2 per axis
        let pot = PotentialSpec::anisotropic_quadratic(&[1.0, 2.0, 0.5]).unwrap();
        let e = stationary_expectation(&|x, _| x[1] * x[1], &pot, 0.5).unwrap();
        assert!((e.value - 0.25).abs() < 1e-13);
    }

    #[test]
    fn grid_and_hermite_paths_agree() {
        // a custom copy of |xi|^2 forces the Legendre grid
        let q = PotentialSpec::radial_quadratic(2);
        let c = PotentialSpec::custom(
            2,
            "copy",
            |x: &[f64]| x[0] * x[0] + x[1] * x[1],
            |x: &[f64], g: &mut [f64]| {
                g[0] = 2.0 * x[0];
                g[1] = 2.0 * x[1];
            },
            |_x: &[f64], h: &mut [f64]| h.copy_from_slice(&[2.0, 0.0, 0.0, 2.0]),
            true,
        )
        .unwrap();
        let f = |x: &[f64], v: &[f64]| x[0] * x[0] + x[0] * v[0] + v[1] * v[1];
        let a = stationary_expectation(&f, &q, 1.0).unwrap();
        let b = stationary_expectation(&f, &c, 1.0).unwrap();
        assert!((a.value - b.value).abs() < 1e-10, "{a:?} {b:?}");
    }

    #[test]
    fn quartic_in_high_dimension_uses_sampling() {
        let pot = PotentialSpec::quartic(4);
        let e = stationary_expectation(&|x, _| x[0], &pot, 1.0 / 3.0).unwrap();
        assert!(e.std_error > 0.0);
        assert!(e.value.abs() < 4.0 * e.std_error + 1e-12);
        let e = stationary_expectation(&|_, v| v[2] * v[2], &pot, 1.0 / 3.0).unwrap();
        assert!((e.value - 0.25).abs() < 1e-14);
    }
}
