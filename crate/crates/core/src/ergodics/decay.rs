use serde::Serialize;

use crate::ergodics::ensemble::ObservableSeries;
use crate::error::{FiberError, Result};

/// Minimum number of points above the noise floor.
pub const MIN_USABLE: usize = 10;
/// Points must deviate from the target by this many standard errors.
pub const NOISE_FLOOR_SE: f64 = 3.0;
/// Fits with a lower coefficient of determination are not accepted.
pub const MIN_R2: f64 = 0.8;

/// Least-squares fit of `log |E f(X_t) - target| ~ log C - lambda t`.
#[derive(Debug, Clone, Serialize)]
pub struct DecayFit {
    /// Observed decay rate, clamped at zero.
    pub lambda_hat: f64,
    /// Raw fitted slope of the log deviation.
    pub slope: f64,
    pub prefactor: f64,
    pub r_squared: f64,
    /// First and last time used.
    pub window: (f64, f64),
    pub n_points: usize,
    /// `r_squared >= MIN_R2` and the deviation decreases.
    pub accepted: bool,
}

/// Fits the decay of `series` towards `target`, using only points whose
/// deviation exceeds `NOISE_FLOOR_SE` combined standard errors.
pub fn fit_decay(series: &ObservableSeries, target: f64) -> Result<DecayFit> {
    let target_se = series.target.map_or(0.0, |t| t.std_error);
    let pts: Vec<(f64, f64)> = series
        .times
        .iter()
        .zip(&series.means)
        .zip(&series.std_errors)
        .filter_map(|((&t, &m), &se)| {
            let dev = (m - target).abs();
            let floor = NOISE_FLOOR_SE * (se * se + target_se * target_se).sqrt();
            (dev > floor && dev > 0.0).then(|| (t, dev.ln()))
        })
        .collect();
    if pts.len() < MIN_USABLE {
        return Err(FiberError::InsufficientSignal {
            usable: pts.len(),
            required: MIN_USABLE,
        });
    }
    let n = pts.len() as f64;
    let mt = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mt).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mt) * (p.1 - my)).sum();
    let syy: f64 = pts.iter().map(|p| (p.1 - my).powi(2)).sum();
    let slope = sxy / sxx;
    let intercept = my - slope * mt;
    let r_squared = if syy > 0.0 { sxy * sxy / (sxx * syy) } else { 0.0 };
    Ok(DecayFit {
        lambda_hat: (-slope).max(0.0),
        slope,
        prefactor: intercept.exp(),
        r_squared,
        window: (pts[0].0, pts[pts.len() - 1].0),
        n_points: pts.len(),
        accepted: r_squared >= MIN_R2 && slope < 0.0,
    })
}
