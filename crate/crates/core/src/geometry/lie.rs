//! Numerical Lie brackets and the bracket-generating rank test for the
//! lay-down vector fields.

use nalgebra::DMatrix;

use crate::geometry::chart::UnitVector;
use crate::linalg::project_tangent;
use crate::potential::PotentialSpec;
use crate::scalar::Real;

/// Default central-difference step for [`lie_bracket`].
pub const BRACKET_STEP: f64 = 1e-5;

/// Step used for both levels of a doubly nested bracket; the outer
/// difference amplifies the inner round-off by `1/h`.
pub const NESTED_BRACKET_STEP: f64 = 1e-4;

/// Singular values below `RANK_THRESHOLD * sigma_max` count as zero.
pub const RANK_THRESHOLD: f64 = 1e-6;

/// `[A, B](p) = (DB) A - (DA) B`, both Jacobian-vector products by central
/// differences with step `h`.
pub fn lie_bracket<T: Real>(
    a: &dyn Fn(&[T]) -> Vec<T>,
    b: &dyn Fn(&[T]) -> Vec<T>,
    p: &[T],
    h: T,
) -> Vec<T> {
    let ap = a(p);
    let bp = b(p);
    let db_a = directional(b, p, &ap, h);
    let da_b = directional(a, p, &bp, h);
    db_a.iter().zip(&da_b).map(|(&x, &y)| x - y).collect()
}

fn directional<T: Real>(f: &dyn Fn(&[T]) -> Vec<T>, p: &[T], dir: &[T], h: T) -> Vec<T> {
    let plus: Vec<T> = p.iter().zip(dir).map(|(&x, &u)| x + h * u).collect();
    let minus: Vec<T> = p.iter().zip(dir).map(|(&x, &u)| x - h * u).collect();
    f(&plus)
        .iter()
        .zip(f(&minus))
        .map(|(&x, y)| (x - y) / (h + h))
        .collect()
}

/// Outcome of [`hormander_rank`].
#[derive(Debug, Clone)]
pub struct HormanderReport {
    pub rank: usize,
    pub singular_values: Vec<f64>,
    /// Number of vectors assembled (`2d + 2`).
    pub n_vectors: usize,
}

/// Rank of `{N0 + d/dt, N_j, [N_j, N0 + d/dt], sum_j [N_j, [N_j, N0 + d/dt]]}`
/// at `(t, xi, v)` in `R^{1+2d}`. The fields use their trivial ambient
/// extensions (`I - v v^T` for any `v`), so brackets at points of the sphere
/// are tangent to `R x R^d x S^{d-1}` and the full rank is `2d`.
pub fn hormander_rank(
    xi: &[f64],
    v: &UnitVector<f64>,
    sigma: f64,
    potential: &PotentialSpec<f64>,
) -> HormanderReport {
    let d = xi.len();
    let m = 1 + 2 * d;
    let drift = |p: &[f64]| -> Vec<f64> {
        let (x, w) = (&p[1..=d], &p[d + 1..]);
        let mut g = vec![0.0; d];
        potential.grad_into(x, &mut g);
        let mut pg = vec![0.0; d];
        project_tangent(w, &g, &mut pg);
        let mut out = Vec::with_capacity(m);
        out.push(1.0);
        out.extend_from_slice(w);
        out.extend(pg.iter().map(|x| -x));
        out
    };
    let noise = |j: usize| {
        move |p: &[f64]| -> Vec<f64> {
            let w = &p[d + 1..];
            let mut out = vec![0.0; m];
            for i in 0..d {
                let delta = if i == j { 1.0 } else { 0.0 };
                out[1 + d + i] = sigma * (delta - w[i] * w[j]);
            }
            out
        }
    };

    let mut point = vec![0.0; m];
    point[1..=d].copy_from_slice(xi);
    point[d + 1..].copy_from_slice(v);

    let mut vectors: Vec<Vec<f64>> = vec![drift(&point)];
    let h = NESTED_BRACKET_STEP;
    let mut second = vec![0.0; m];
    for j in 0..d {
        let nj = noise(j);
        vectors.push(nj(&point));
        let first_bracket = |p: &[f64]| lie_bracket(&nj, &drift, p, h);
        vectors.push(first_bracket(&point));
        let nested = lie_bracket(&nj, &first_bracket, &point, h);
        second.iter_mut().zip(nested).for_each(|(s, x)| *s += x);
    }
    vectors.push(second);

    let n_vectors = vectors.len();
    let mat = DMatrix::from_fn(n_vectors, m, |r, c| vectors[r][c]);
    let sv = mat.singular_values();
    let mut singular_values: Vec<f64> = sv.iter().copied().collect();
    singular_values.sort_by(|a, b| b.total_cmp(a));
    let smax = singular_values.first().copied().unwrap_or(0.0);
    let rank = singular_values
        .iter()
        .filter(|&&s| s > RANK_THRESHOLD * smax)
        .count();
    HormanderReport {
        rank,
        singular_values,
        n_vectors,
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::potential::PotentialSpec;

    #[test]
    fn bracket_with_itself_vanishes() {
        let a = |p: &[f64]| vec![p[1] * p[0], p[0].sin()];
        let r = lie_bracket(&a, &a, &[0.3, -1.2], BRACKET_STEP);
        assert!(r.iter().all(|x| x.abs() < 1e-8));
    }

    #[test]
    fn constant_fields_commute() {
        let a = |_p: &[f64]| vec![1.0, 2.0];
        let b = |_p: &[f64]| vec![-3.0, 0.5];
        let r = lie_bracket(&a, &b, &[0.3, -1.2], BRACKET_STEP);
        assert!(r.iter().all(|x| x.abs() < 1e-12));
    }

    #[test]
    fn hand_computed_bracket() {
        // A = x2 d1, B = d2: [A, B] = -d1
        let a = |p: &[f64]| vec![p[1], 0.0];
        let b = |_p: &[f64]| vec![0.0, 1.0];
        let r = lie_bracket(&a, &b, &[0.7, 0.2], BRACKET_STEP);
        assert!((r[0] + 1.0).abs() < 1e-8 && r[1].abs() < 1e-8);
    }

    #[test]
    fn bracket_is_antisymmetric() {
        let a = |p: &[f64]| vec![p[1] * p[1], p[0] * p[1], p[2].cos()];
        let b = |p: &[f64]| vec![p[2], p[0].exp(), p[1]];
        let p = [0.1, 0.4, -0.3];
        let ab = lie_bracket(&a, &b, &p, BRACKET_STEP);
        let ba = lie_bracket(&b, &a, &p, BRACKET_STEP);
        assert!(ab.iter().zip(&ba).all(|(x, y)| (x + y).abs() < 1e-8));
    }

    #[test]
    fn rank_is_full_for_quadratic_potential() {
        let pot = PotentialSpec::radial_quadratic(2);
        let v = UnitVector::normalize(vec![0.6, -0.8]).unwrap();
        let rep = hormander_rank(&[0.3, -0.4], &v, 1.0, &pot);
        assert_eq!(rep.rank, 4);
        let pot = PotentialSpec::radial_quadratic(3);
        let v = UnitVector::normalize(vec![0.2, 0.5, -0.7]).unwrap();
        assert_eq!(hormander_rank(&[1.0, 0.2, -0.5], &v, 1.0, &pot).rank, 6);
    }
}
