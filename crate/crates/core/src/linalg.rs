//! Small dense helpers on slices. Matrices are row-major `d*d` slices.

use crate::scalar::Real;

#[inline]
pub fn dot<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter().zip(b).fold(T::zero(), |acc, (&x, &y)| acc + x * y)
}

#[inline]
pub fn norm<T: Real>(a: &[T]) -> T {
    dot(a, a).sqrt()
}

/// `out = (I - v v^T) z`.
#[inline]
pub fn project_tangent<T: Real>(v: &[T], z: &[T], out: &mut [T]) {
    let s = dot(v, z);
    for ((o, &zi), &vi) in out.iter_mut().zip(z).zip(v) {
        *o = zi - s * vi;
    }
}

/// `y^T M x` for a row-major square matrix.
pub fn quad_form<T: Real>(m: &[T], x: &[T], y: &[T]) -> T {
    let d = x.len();
    let mut acc = T::zero();
    for i in 0..d {
        let mut row = T::zero();
        for j in 0..d {
            row = row + m[i * d + j] * x[j];
        }
        acc = acc + y[i] * row;
    }
    acc
}

pub fn trace<T: Real>(m: &[T], d: usize) -> T {
    (0..d).map(|i| m[i * d + i]).sum()
}

pub fn max_abs_diff<T: Real>(a: &[T], b: &[T]) -> T {
    a.iter()
        .zip(b)
        .fold(T::zero(), |acc, (&x, &y)| acc.max((x - y).abs()))
}
