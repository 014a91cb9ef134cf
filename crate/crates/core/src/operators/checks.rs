//! Structural checks of the generator at `kappa = 1/(d-1)`, where the
//! invariant law is `mu = exp(-Phi) dxi (x) nu`.

use serde::Serialize;

use crate::error::{FiberError, Result};
use crate::geometry::{sphere_quadrature, Estimate, RuleKind};
use crate::linalg::dot;
use crate::operators::apply::{apply_diffusion, apply_fokker_planck, apply_kolmogorov, apply_transport};
use crate::operators::quadrature::ProductQuadrature;
use crate::operators::testfn::TestFunction;
use crate::potential::PotentialSpec;

/// `1/(d-1)`.
pub fn mu_kappa(d: usize) -> f64 {
    1.0 / (d as f64 - 1.0)
}

fn same_dim(quad: &ProductQuadrature, pot: &PotentialSpec<f64>) -> Result<()> {
    if quad.d != pot.dim() {
        return Err(FiberError::DimensionMismatch {
            expected: pot.dim(),
            got: quad.d,
        });
    }
    Ok(())
}

/// `int L f dmu`.
pub fn check_invariance(f: &TestFunction<f64>, quad: &ProductQuadrature, sigma: f64, pot: &PotentialSpec<f64>) -> Result<Estimate> {
    same_dim(quad, pot)?;
    let kappa = mu_kappa(quad.d);
    quad.try_integrate(|xi, v| apply_kolmogorov(f, xi, v, sigma, pot, kappa))
}

/// Defects of the splitting `L = S - A` in `L^2(mu)`.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct SplitDefects {
    /// `<Sg, h> - <g, Sh>`.
    pub s_defect: f64,
    /// `<Ag, h> + <g, Ah>`.
    pub a_defect: f64,
    /// `<Sg, g>`, nonpositive.
    pub dissipation: f64,
}

pub fn check_symmetry_split(
    g: &TestFunction<f64>,
    h: &TestFunction<f64>,
    quad: &ProductQuadrature,
    sigma: f64,
    pot: &PotentialSpec<f64>,
) -> Result<SplitDefects> {
    same_dim(quad, pot)?;
    let kappa = mu_kappa(quad.d);
    let n = quad.len();
    let (mut sd, mut ad, mut diss) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for (xi, v) in quad.xi.iter().zip(&quad.v) {
        let (gv, hv) = (g.value(xi, v), h.value(xi, v));
        let (sg, sh) = (apply_diffusion(g, xi, v, sigma)?, apply_diffusion(h, xi, v, sigma)?);
        let (ag, ah) = (
            apply_transport(g, xi, v, pot, kappa)?,
            apply_transport(h, xi, v, pot, kappa)?,
        );
        sd.push(sg * hv - gv * sh);
        ad.push(ag * hv + gv * ah);
        diss.push(sg * gv);
    }
    Ok(SplitDefects {
        s_defect: quad.integrate_values(&sd).value,
        a_defect: quad.integrate_values(&ad).value,
        dissipation: quad.integrate_values(&diss).value,
    })
}

/// Largest `|T L^K T^{-1} h - L^FP h|` over `points`, with
/// `T u(xi, v) = exp(-Phi(xi)) u(xi, -v)` and the given `kappa`. The two
/// sides agree for `kappa = 1/(d-1)` only.
pub fn conjugation_defect(
    h: &TestFunction<f64>,
    points: &[(Vec<f64>, Vec<f64>)],
    sigma: f64,
    pot: &PotentialSpec<f64>,
    kappa: f64,
) -> Result<f64> {
    let d = pot.dim();
    if let Some((xi, v)) = points.first() {
        h.grad_xi(xi, v)?;
        h.grad_v(xi, v)?;
        h.hess_v(xi, v)?;
    }
    let u = inverse_transform(h, pot);
    let mut worst = 0.0_f64;
    for (xi, v) in points {
        if xi.len() != d || v.len() != d {
            return Err(FiberError::DimensionMismatch { expected: d, got: xi.len().min(v.len()) });
        }
        let w: Vec<f64> = v.iter().map(|x| -x).collect();
        let lhs = (-pot.value(xi)).exp() * apply_kolmogorov(&u, xi, &w, sigma, pot, kappa)?;
        let rhs = apply_fokker_planck(h, xi, v, sigma, pot, kappa)?;
        worst = worst.max((lhs - rhs).abs());
    }
    Ok(worst)
}

/// [`conjugation_defect`] at `kappa = 1/(d-1)`.
pub fn check_conjugation(h: &TestFunction<f64>, points: &[(Vec<f64>, Vec<f64>)], sigma: f64, pot: &PotentialSpec<f64>) -> Result<f64> {
    conjugation_defect(h, points, sigma, pot, mu_kappa(pot.dim()))
}

/// `u(xi, w) = exp(Phi(xi)) h(xi, -w)` with derivatives from those of `h`.
fn inverse_transform(h: &TestFunction<f64>, pot: &PotentialSpec<f64>) -> TestFunction<f64> {
    let neg = |w: &[f64]| -> Vec<f64> { w.iter().map(|x| -x).collect() };
    let nan = |n: usize| vec![f64::NAN; n];
    let (h0, h1, h2, h3) = (h.clone(), h.clone(), h.clone(), h.clone());
    let (p0, p1, p2, p3) = (pot.clone(), pot.clone(), pot.clone(), pot.clone());
    TestFunction::new(move |xi, w| p0.value(xi).exp() * h0.value(xi, &neg(w)))
        .with_grad_xi(move |xi, w| {
            let v = neg(w);
            let e = p1.value(xi).exp();
            let hv = h1.value(xi, &v);
            match h1.grad_xi(xi, &v) {
                Ok(g) => p1.grad(xi).iter().zip(&g).map(|(dp, dh)| e * (dp * hv + dh)).collect(),
                Err(_) => nan(xi.len()),
            }
        })
        .with_grad_v(move |xi, w| {
            let e = p2.value(xi).exp();
            match h2.grad_v(xi, &neg(w)) {
                Ok(g) => g.into_iter().map(|x| -e * x).collect(),
                Err(_) => nan(w.len()),
            }
        })
        .with_hess_v(move |xi, w| {
            let e = p3.value(xi).exp();
            match h3.hess_v(xi, &neg(w)) {
                Ok(m) => m.into_iter().map(|x| e * x).collect(),
                Err(_) => nan(w.len() * w.len()),
            }
        })
        .analytic_only()
}

/// Outcome of [`bs_identity_check`].
#[derive(Debug, Clone, Serialize)]
pub struct BsDefects {
    /// `max |S(A Pi g) + (d-1) sigma^2/2 A Pi g|` over the nodes.
    pub pointwise: f64,
    /// `max_h |<S A Pi g, h> + (d-1) sigma^2/2 <A Pi g, h>|`.
    pub quadrature: f64,
}

/// Checks `S A Pi g = -(d-1) sigma^2/2 A Pi g`, where
/// `Pi g(xi) = rho_g(xi) = int g(xi, v) dnu(v)` and `A Pi g = -v . grad rho_g`.
pub fn bs_identity_check(
    g: &TestFunction<f64>,
    hs: &[TestFunction<f64>],
    quad: &ProductQuadrature,
    sigma: f64,
) -> Result<BsDefects> {
    let d = quad.d;
    let sphere = if d <= 3 {
        sphere_quadrature::<f64>(d, RuleKind::Deterministic, 24)?
    } else {
        sphere_quadrature::<f64>(d, RuleKind::MonteCarlo { seed: 0xb5 }, 4096)?
    };
    let grad_rho = |xi: &[f64]| -> Result<Vec<f64>> {
        let mut out = vec![0.0; d];
        for (u, w) in sphere.nodes.iter().zip(&sphere.weights) {
            let gx = g.grad_xi(xi, u)?;
            out.iter_mut().zip(&gx).for_each(|(o, x)| *o += w * x);
        }
        Ok(out)
    };
    let factor = -(d as f64 - 1.0) * sigma * sigma / 2.0;
    let mut pointwise = 0.0_f64;
    let mut api = Vec::with_capacity(quad.len());
    let mut sapi = Vec::with_capacity(quad.len());
    let mut cached: Option<(&[f64], Vec<f64>)> = None;
    for (xi, v) in quad.xi.iter().zip(&quad.v) {
        let c = match &cached {
            Some((x, c)) if *x == xi.as_slice() => c.clone(),
            _ => {
                let c = grad_rho(xi)?;
                cached = Some((xi.as_slice(), c.clone()));
                c
            }
        };
        let a = -dot(v, &c);
        let cc = c.clone();
        let lin = TestFunction::new(move |_, w: &[f64]| -dot(w, &cc))
            .with_grad_v(move |_, _| c.iter().map(|x| -x).collect())
            .with_hess_v(move |_, w: &[f64]| vec![0.0; w.len() * w.len()]);
        let s = apply_diffusion(&lin, xi, v, sigma)?;
        pointwise = pointwise.max((s - factor * a).abs());
        api.push(a);
        sapi.push(s);
    }
    let mut quadrature = 0.0_f64;
    for h in hs {
        let hv: Vec<f64> = quad.xi.iter().zip(&quad.v).map(|(x, v)| h.value(x, v)).collect();
        let lhs: Vec<f64> = sapi.iter().zip(&hv).map(|(s, h)| s * h).collect();
        let rhs: Vec<f64> = api.iter().zip(&hv).map(|(a, h)| a * h).collect();
        let defect = quad.integrate_values(&lhs).value - factor * quad.integrate_values(&rhs).value;
        quadrature = quadrature.max(defect.abs());
    }
    Ok(BsDefects { pointwise, quadrature })
}
