use serde::Serialize;

use crate::error::{invalid, Result};

/// Lower bounds entering the hypocoercive rate.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct CoercivityConstants {
    /// `(d-1) sigma^2 / 2`, the sphere Poincare constant times the diffusion.
    pub microscopic: f64,
    /// `Lambda / d`.
    pub macroscopic: f64,
    /// `Lambda / (d + Lambda)`.
    pub projected_bound: f64,
}

pub fn coercivity_constants(d: usize, sigma: f64, lambda: f64) -> Result<CoercivityConstants> {
    if d < 2 {
        return Err(invalid("d", "d >= 2 required"));
    }
    if !(sigma > 0.0) || !sigma.is_finite() {
        return Err(invalid("sigma", "must be positive"));
    }
    if !(lambda > 0.0) || lambda.is_nan() {
        return Err(invalid("Lambda", "must be positive"));
    }
    let df = d as f64;
    let projected_bound = if lambda.is_infinite() { 1.0 } else { lambda / (df + lambda) };
    Ok(CoercivityConstants {
        microscopic: (df - 1.0) * sigma * sigma / 2.0,
        macroscopic: lambda / df,
        projected_bound,
    })
}
