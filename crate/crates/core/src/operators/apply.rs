use crate::error::{FiberError, Result};
use crate::geometry::calculus::laplace_beltrami_from_jet;
use crate::linalg::{dot, project_tangent};
use crate::operators::testfn::TestFunction;
use crate::potential::PotentialSpec;
use crate::scalar::Real;

fn check<T: Real>(xi: &[T], v: &[T], pot: &PotentialSpec<T>) -> Result<()> {
    for len in [v.len(), pot.dim()] {
        if len != xi.len() {
            return Err(FiberError::DimensionMismatch {
                expected: xi.len(),
                got: len,
            });
        }
    }
    Ok(())
}

/// `kappa (I - v v^T) grad Phi(xi)`.
fn tangential_force<T: Real>(xi: &[T], v: &[T], pot: &PotentialSpec<T>, kappa: T) -> Vec<T> {
    let g: Vec<T> = pot.grad(xi).into_iter().map(|x| x * kappa).collect();
    let mut out = vec![T::zero(); v.len()];
    project_tangent(v, &g, &mut out);
    out
}

/// `(sigma^2 / 2) Delta_S f(xi, .)` at `v`.
pub fn apply_diffusion<T: Real>(f: &TestFunction<T>, xi: &[T], v: &[T], sigma: T) -> Result<T> {
    let g = f.grad_v(xi, v)?;
    let h = f.hess_v(xi, v)?;
    Ok(T::lit(0.5) * sigma * sigma * laplace_beltrami_from_jet(v, &g, &h))
}

/// Transport part `A f = -v . grad_xi f + kappa (I - v v^T) grad Phi . grad_v f`,
/// so that the generator is `S - A`.
pub fn apply_transport<T: Real>(f: &TestFunction<T>, xi: &[T], v: &[T], pot: &PotentialSpec<T>, kappa: T) -> Result<T> {
    check(xi, v, pot)?;
    let gx = f.grad_xi(xi, v)?;
    let gv = f.grad_v(xi, v)?;
    Ok(-dot(v, &gx) + dot(&tangential_force(xi, v, pot, kappa), &gv))
}

/// Generator `L^K f = v . grad_xi f - kappa (I - v v^T) grad Phi . grad_v f
/// + (sigma^2/2) Delta_S f`.
pub fn apply_kolmogorov<T: Real>(
    f: &TestFunction<T>,
    xi: &[T],
    v: &[T],
    sigma: T,
    pot: &PotentialSpec<T>,
    kappa: T,
) -> Result<T> {
    Ok(apply_diffusion(f, xi, v, sigma)? - apply_transport(f, xi, v, pot, kappa)?)
}

/// Flat adjoint of [`apply_kolmogorov`]:
/// `L^FP f = -v . grad_xi f + kappa (I - v v^T) grad Phi . grad_v f
/// - (d-1) kappa (grad Phi . v) f + (sigma^2/2) Delta_S f`.
/// It annihilates `exp(-(d-1) kappa Phi)`.
pub fn apply_fokker_planck<T: Real>(
    f: &TestFunction<T>,
    xi: &[T],
    v: &[T],
    sigma: T,
    pot: &PotentialSpec<T>,
    kappa: T,
) -> Result<T> {
    let d = T::lit(xi.len() as f64);
    let a = apply_transport(f, xi, v, pot, kappa)?;
    let zeroth = (d - T::one()) * kappa * dot(&pot.grad(xi), v) * f.value(xi, v);
    Ok(a - zeroth + apply_diffusion(f, xi, v, sigma)?)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn kolmogorov_examples() {
        let pot = PotentialSpec::<f64>::radial_quadratic(3);
        let v = [0.6, 0.0, 0.8];
        let xi = [0.3, -0.2, 1.0];
        let c = TestFunction::constant(2.0, 3);
        assert_eq!(apply_kolmogorov(&c, &xi, &v, 1.3, &pot, 1.0).unwrap(), 0.0);
        let f = TestFunction::xi_coordinate(1, 3);
        assert_eq!(apply_kolmogorov(&f, &xi, &v, 1.3, &pot, 1.0).unwrap(), 0.0);
        let f = TestFunction::xi_coordinate(2, 3);
        assert!((apply_kolmogorov(&f, &xi, &v, 1.3, &pot, 1.0).unwrap() - 0.8).abs() < 1e-15);
        // grad Phi = 0 at the origin: L v_i = -(sigma^2/2)(d-1) v_i
        let f = TestFunction::v_coordinate(0, 3);
        let r = apply_kolmogorov(&f, &[0.0; 3], &v, 2.0, &pot, 1.0).unwrap();
        assert!((r + 2.0 * 2.0 * 0.6).abs() < 1e-14);
    }

    #[test]
    fn fokker_planck_annihilates_boltzmann_factor() {
        for (d, kappa) in [(2, 1.0), (3, 0.5), (3, 1.0), (5, 0.25)] {
            let pot = PotentialSpec::<f64>::anisotropic_quadratic(&vec![1.3; d]).unwrap();
            let f = TestFunction::boltzmann(&pot, (d as f64 - 1.0) * kappa);
            let xi: Vec<f64> = (0..d).map(|i| 0.1 * i as f64 - 0.2).collect();
            let mut v = vec![0.0; d];
            v[d - 1] = 1.0;
            let r = apply_fokker_planck(&f, &xi, &v, 0.9, &pot, kappa).unwrap();
            assert!(r.abs() < 1e-14, "{d} {kappa} {r}");
        }
    }

    #[test]
    fn missing_derivatives_in_analytic_mode() {
        let pot = PotentialSpec::<f64>::radial_quadratic(2);
        let f = TestFunction::new(|xi: &[f64], v: &[f64]| xi[0] * v[0]).analytic_only();
        assert!(matches!(
            apply_kolmogorov(&f, &[0.0, 0.0], &[1.0, 0.0], 1.0, &pot, 1.0),
            Err(FiberError::MissingDerivatives(_))
        ));
    }
}
