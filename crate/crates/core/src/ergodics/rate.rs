use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};
use crate::operators::{coercivity_constants, CoercivityConstants};

/// Inputs of the rate formula. `k1..k3` depend on the potential and are not
/// computable from it here; they are user inputs.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateParams {
    pub eta: f64,
    pub sigma: f64,
    pub k1: f64,
    pub k2: f64,
    pub k3: f64,
}

impl RateParams {
    pub fn validate(&self) -> Result<()> {
        let fields = [
            ("eta", self.eta),
            ("sigma", self.sigma),
            ("K1", self.k1),
            ("K2", self.k2),
            ("K3", self.k3),
        ];
        for (name, x) in fields {
            if !(x > 0.0) || !x.is_finite() {
                return Err(invalid(name, "must be positive and finite"));
            }
        }
        Ok(())
    }
}

/// `lambda = eta/(1+eta) * K1 sigma^2 / (1 + K2 sigma^2 + K3 sigma^4)`.
pub fn hypocoercivity_rate(p: &RateParams) -> Result<f64> {
    p.validate()?;
    let s2 = p.sigma * p.sigma;
    Ok(p.eta / (1.0 + p.eta) * p.k1 * s2 / (1.0 + p.k2 * s2 + p.k3 * s2 * s2))
}

/// Maximizer `sigma* = K3^{-1/4}` of the rate over `sigma`.
pub fn optimal_sigma(k3: f64) -> Result<f64> {
    if !(k3 > 0.0) || !k3.is_finite() {
        return Err(invalid("K3", "must be positive and finite"));
    }
    Ok(k3.powf(-0.25))
}

/// Rate at `sigma*`: `eta/(1+eta) * K1 / (K2 + 2 sqrt(K3))`.
pub fn maximal_rate(p: &RateParams) -> Result<f64> {
    p.validate()?;
    Ok(p.eta / (1.0 + p.eta) * p.k1 / (p.k2 + 2.0 * p.k3.sqrt()))
}

/// Computable sub-constants of the rate.
#[derive(Debug, Clone, Serialize)]
pub struct RateConstantsReport {
    pub d: usize,
    pub sigma: f64,
    pub lambda_poincare: f64,
    pub eta: f64,
    pub coercivity: CoercivityConstants,
    /// `eta / (1 + eta)`.
    pub eta_factor: f64,
    pub note: &'static str,
}

pub const CONSTANTS_NOTE: &str = "K1, K2, K3 depend on elliptic-regularity bounds for the potential that are \
not given numerically; they must be supplied. The values here are the coercivity sub-constants only.";

pub fn rate_constants_report(d: usize, sigma: f64, lambda: f64, eta: f64) -> Result<RateConstantsReport> {
    if !(eta > 0.0) || !eta.is_finite() {
        return Err(invalid("eta", "must be positive and finite"));
    }
    Ok(RateConstantsReport {
        d,
        sigma,
        lambda_poincare: lambda,
        eta,
        coercivity: coercivity_constants(d, sigma, lambda)?,
        eta_factor: eta / (1.0 + eta),
        note: CONSTANTS_NOTE,
    })
}
