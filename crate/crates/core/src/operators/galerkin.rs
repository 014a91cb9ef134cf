//! Galerkin approximation of the `d = 2`, `kappa = 1` generator in `L^2(mu)`.
//!
//! Basis: normalized Hermite polynomials `He_m(x)/sqrt(m!)` in
//! `x_i = sqrt(2 a_i) xi_i` for each coordinate, tensored with the Fourier
//! system `{1, sqrt2 cos(k alpha), sqrt2 sin(k alpha)}` on `dalpha/2pi`, where
//! `v = (cos alpha, sin alpha)`. With `D_i = sqrt(2 a_i) d/dx_i` and
//! `X_i = sqrt(2 a_i) x_i = d_i Phi` the generator reads
//! `cos D_1 + sin D_2 + sin X_1 d_alpha - cos X_2 d_alpha + sigma^2/2 d_alpha^2`.

use nalgebra::DMatrix;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{invalid, FiberError, Result};
use crate::potential::PotentialSpec;

/// Smallest admissible `(n_hermite, n_fourier)`.
pub const MIN_BASIS: (usize, usize) = (4, 5);
/// Relative change under refinement above which a gap is flagged unstable.
pub const STABILITY_TOL: f64 = 0.05;

#[derive(Debug, Clone, Serialize)]
pub struct GapEstimate {
    pub gap: f64,
    pub basis: (usize, usize),
    pub dimension: usize,
    /// Eigenvalues `(re, im)` with the largest real parts, constant mode excluded.
    pub leading: Vec<(f64, f64)>,
    /// `|L 1|` in the discrete operator.
    pub kernel_residual: f64,
}

#[derive(Debug, Clone, Serialize)]
pub struct GapRefinement {
    pub coarse: GapEstimate,
    pub fine: GapEstimate,
    pub relative_change: f64,
    pub stable: bool,
}

struct Assembly {
    nh: usize,
    nf: usize,
    d1: Vec<f64>,
    x1: Vec<f64>,
    d2: Vec<f64>,
    x2: Vec<f64>,
    fc: Vec<f64>,
    fs: Vec<f64>,
    fsd: Vec<f64>,
    fcd: Vec<f64>,
    fdd: Vec<f64>,
    half_s2: f64,
}

/// Fourier basis function `i` and its first two derivatives at `t`.
fn fourier(i: usize, t: f64) -> (f64, f64, f64) {
    if i == 0 {
        return (1.0, 0.0, 0.0);
    }
    let k = i.div_ceil(2) as f64;
    let r = std::f64::consts::SQRT_2;
    let (s, c) = (k * t).sin_cos();
    if i % 2 == 1 {
        (r * c, -r * k * s, -r * k * k * c)
    } else {
        (r * s, r * k * c, -r * k * k * s)
    }
}

impl Assembly {
    fn new(a: &[f64], sigma: f64, nh: usize, nf: usize) -> Self {
        let ladder = |scale: f64| {
            let mut d = vec![0.0; nh * nh];
            let mut x = vec![0.0; nh * nh];
            for m in 0..nh {
                if m > 0 {
                    d[(m - 1) * nh + m] = scale * (m as f64).sqrt();
                    x[(m - 1) * nh + m] = scale * (m as f64).sqrt();
                }
                if m + 1 < nh {
                    x[(m + 1) * nh + m] = scale * ((m + 1) as f64).sqrt();
                }
            }
            (d, x)
        };
        let (d1, x1) = ladder((2.0 * a[0]).sqrt());
        let (d2, x2) = ladder((2.0 * a[1]).sqrt());
        let m = 2 * nf + 4;
        let mut f = [vec![0.0; nf * nf], vec![0.0; nf * nf], vec![0.0; nf * nf], vec![0.0; nf * nf], vec![0.0; nf * nf]];
        for q in 0..m {
            let t = 2.0 * std::f64::consts::PI * q as f64 / m as f64;
            let (s, c) = t.sin_cos();
            let vals: Vec<(f64, f64, f64)> = (0..nf).map(|i| fourier(i, t)).collect();
            for i in 0..nf {
                for j in 0..nf {
                    let (ei, (ej, dj, ddj)) = (vals[i].0, vals[j]);
                    let k = i * nf + j;
                    f[0][k] += ei * c * ej;
                    f[1][k] += ei * s * ej;
                    f[2][k] += ei * s * dj;
                    f[3][k] += ei * c * dj;
                    f[4][k] += ei * ddj;
                }
            }
        }
        let [fc, fs, fsd, fcd, fdd] = f.map(|v| {
            v.into_iter()
                .map(|x| x / m as f64)
                .map(|x| if x.abs() < 1e-13 { 0.0 } else { x })
                .collect::<Vec<f64>>()
        });
        Self {
            nh,
            nf,
            d1,
            x1,
            d2,
            x2,
            fc,
            fs,
            fsd,
            fcd,
            fdd,
            half_s2: 0.5 * sigma * sigma,
        }
    }

    fn split(&self, idx: usize) -> (usize, usize, usize) {
        let i = idx % self.nf;
        let p = idx / self.nf;
        (p / self.nh, p % self.nh, i)
    }

    fn size(&self) -> usize {
        self.nh * self.nh * self.nf
    }

    /// `<psi_row, L psi_col>_mu`.
    fn element(&self, row: usize, col: usize) -> f64 {
        let (m1, m2, i) = self.split(row);
        let (n1, n2, j) = self.split(col);
        let (nh, nf) = (self.nh, self.nf);
        let f = i * nf + j;
        let h1 = m1 * nh + n1;
        let h2 = m2 * nh + n2;
        let mut out = 0.0;
        if m2 == n2 {
            out += self.fc[f] * self.d1[h1] + self.fsd[f] * self.x1[h1];
        }
        if m1 == n1 {
            out += self.fs[f] * self.d2[h2] - self.fcd[f] * self.x2[h2];
        }
        if m1 == n1 && m2 == n2 {
            out += self.half_s2 * self.fdd[f];
        }
        out
    }

    /// Parity of basis element `idx` under the reflections
    /// `(xi_1, alpha) -> (-xi_1, pi - alpha)` and `(xi_2, alpha) -> (-xi_2, -alpha)`.
    fn parity(&self, idx: usize) -> (bool, bool) {
        let (m1, m2, i) = self.split(idx);
        let k = i.div_ceil(2);
        let (f1, f2) = match i {
            0 => (true, true),
            _ if i % 2 == 1 => (k % 2 == 0, true),
            _ => (k % 2 == 1, false),
        };
        ((m1 % 2 == 0) == f1, (m2 % 2 == 0) == f2)
    }
}

fn eigenvalues(asm: &Assembly, idx: &[usize]) -> Vec<(f64, f64)> {
    if idx.is_empty() {
        return Vec::new();
    }
    let m = DMatrix::from_fn(idx.len(), idx.len(), |r, c| asm.element(idx[r], idx[c]));
    m.complex_eigenvalues().iter().map(|z| (z.re, z.im)).collect()
}

fn setup(pot: &PotentialSpec<f64>, sigma: f64, basis: (usize, usize)) -> Result<Assembly> {
    if pot.dim() != 2 {
        return Err(invalid("pot", "the Galerkin estimator is two-dimensional"));
    }
    let a = pot
        .quadratic_coefficients()
        .ok_or_else(|| invalid("pot", "the Galerkin estimator needs a diagonal quadratic potential"))?;
    if !(sigma >= 0.0) || !sigma.is_finite() {
        return Err(invalid("sigma", "must be nonnegative and finite"));
    }
    let (nh, nf) = basis;
    if nf % 2 == 0 {
        return Err(invalid("basis", "the Fourier size must be odd (1, cos k, sin k)"));
    }
    if nh < MIN_BASIS.0 || nf < MIN_BASIS.1 {
        return Err(FiberError::BasisTooSmall(format!(
            "({nh}, {nf}) is below the minimum ({}, {})",
            MIN_BASIS.0, MIN_BASIS.1
        )));
    }
    Ok(Assembly::new(&a, sigma, nh, nf))
}

fn summarize(asm: &Assembly, mut ev: Vec<(f64, f64)>, basis: (usize, usize)) -> GapEstimate {
    ev.sort_by(|a, b| b.0.total_cmp(&a.0));
    let kernel_residual = (0..asm.size()).map(|r| asm.element(r, 0).powi(2)).sum::<f64>().sqrt();
    GapEstimate {
        gap: -ev.first().map_or(f64::NEG_INFINITY, |z| z.0),
        basis,
        dimension: asm.size(),
        leading: ev.into_iter().take(8).collect(),
        kernel_residual,
    }
}

/// Spectral gap `-max Re(spectrum)` on the complement of constants,
/// computed sector by sector over the two reflection symmetries.
pub fn estimate_gap_2d(pot: &PotentialSpec<f64>, sigma: f64, basis: (usize, usize)) -> Result<GapEstimate> {
    let asm = setup(pot, sigma, basis)?;
    let sectors: Vec<Vec<usize>> = [(true, true), (true, false), (false, true), (false, false)]
        .iter()
        .map(|s| (1..asm.size()).filter(|&k| asm.parity(k) == *s).collect())
        .collect();
    let ev: Vec<(f64, f64)> = sectors.par_iter().flat_map(|idx| eigenvalues(&asm, idx)).collect();
    Ok(summarize(&asm, ev, basis))
}

/// Same as [`estimate_gap_2d`] without the symmetry reduction.
pub fn estimate_gap_2d_dense(pot: &PotentialSpec<f64>, sigma: f64, basis: (usize, usize)) -> Result<GapEstimate> {
    let asm = setup(pot, sigma, basis)?;
    let idx: Vec<usize> = (1..asm.size()).collect();
    let ev = eigenvalues(&asm, &idx);
    Ok(summarize(&asm, ev, basis))
}

/// Gap at two bases; flagged unstable when the relative change exceeds
/// [`STABILITY_TOL`].
pub fn gap_refinement(pot: &PotentialSpec<f64>, sigma: f64, coarse: (usize, usize), fine: (usize, usize)) -> Result<GapRefinement> {
    let coarse = estimate_gap_2d(pot, sigma, coarse)?;
    let fine = estimate_gap_2d(pot, sigma, fine)?;
    let relative_change = ((fine.gap - coarse.gap) / fine.gap).abs();
    Ok(GapRefinement {
        stable: relative_change <= STABILITY_TOL,
        coarse,
        fine,
        relative_change,
    })
}
