use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, FiberError, Result};
use crate::geometry::{SphericalAngles, UnitVector};
use crate::scalar::Real;

/// Time-stepping scheme.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum Scheme {
    /// Euler–Maruyama in spherical angles.
    LocalEuler,
    /// Heun predictor–corrector in `R^d`, renormalized onto the sphere.
    #[default]
    EmbeddedHeunProjected,
}

impl Scheme {
    pub fn name(self) -> &'static str {
        match self {
            Scheme::LocalEuler => "local-euler",
            Scheme::EmbeddedHeunProjected => "embedded-heun-projected",
        }
    }
}

impl fmt::Display for Scheme {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Scheme {
    type Err = FiberError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "local-euler" | "local" => Ok(Scheme::LocalEuler),
            "embedded-heun-projected" | "embedded" => Ok(Scheme::EmbeddedHeunProjected),
            other => Err(invalid("scheme", format!("unknown scheme `{other}`"))),
        }
    }
}

/// Factor `kappa` multiplying the potential force.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize, Default)]
#[serde(rename_all = "kebab-case")]
pub enum DriftScale {
    /// `kappa = 1`; invariant density `exp(-(d-1) Phi)`.
    #[default]
    Unit,
    /// `kappa = 1/(d-1)`; invariant density `exp(-Phi)`.
    InverseDimMinusOne,
}

impl DriftScale {
    pub fn kappa(self, d: usize) -> f64 {
        match self {
            DriftScale::Unit => 1.0,
            DriftScale::InverseDimMinusOne => 1.0 / (d as f64 - 1.0),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            DriftScale::Unit => "unit",
            DriftScale::InverseDimMinusOne => "inverse-dim-minus-one",
        }
    }
}

impl fmt::Display for DriftScale {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for DriftScale {
    type Err = FiberError;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "unit" | "1" => Ok(DriftScale::Unit),
            "inverse-dim-minus-one" | "1/(d-1)" => Ok(DriftScale::InverseDimMinusOne),
            other => Err(invalid("drift_scale", format!("unknown drift scale `{other}`"))),
        }
    }
}

/// Simulation parameters. The horizon is `dt * n_steps`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimConfig {
    pub d: usize,
    pub sigma: f64,
    pub dt: f64,
    pub n_steps: usize,
    pub seed: u64,
    #[serde(default)]
    pub scheme: Scheme,
    #[serde(default)]
    pub drift_scale: DriftScale,
    #[serde(default = "one")]
    pub record_stride: usize,
}

fn one() -> usize {
    1
}

impl SimConfig {
    pub fn new(d: usize, sigma: f64, dt: f64, n_steps: usize, seed: u64) -> Self {
        Self {
            d,
            sigma,
            dt,
            n_steps,
            seed,
            scheme: Scheme::default(),
            drift_scale: DriftScale::default(),
            record_stride: 1,
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    pub fn with_drift_scale(mut self, s: DriftScale) -> Self {
        self.drift_scale = s;
        self
    }

    pub fn with_record_stride(mut self, stride: usize) -> Self {
        self.record_stride = stride;
        self
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.n_steps as f64
    }

    pub fn kappa(&self) -> f64 {
        self.drift_scale.kappa(self.d)
    }

    pub fn validate(&self) -> Result<()> {
        if self.d < 2 {
            return Err(invalid("d", "d >= 2 required"));
        }
        if !(self.sigma >= 0.0) || !self.sigma.is_finite() {
            return Err(invalid("sigma", "must be finite and nonnegative"));
        }
        if !(self.dt > 0.0) || !self.dt.is_finite() {
            return Err(invalid("dt", "must be positive"));
        }
        if self.record_stride == 0 {
            return Err(invalid("record_stride", "must be positive"));
        }
        if !self.n_steps.is_multiple_of(self.record_stride) {
            return Err(invalid("record_stride", "must divide n_steps"));
        }
        Ok(())
    }
}

/// Start point `(xi_0, v_0)`; defaults to `(0, e_1)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InitialState {
    pub xi: Vec<f64>,
    pub v: Vec<f64>,
}

impl InitialState {
    pub fn origin(d: usize) -> Self {
        let mut v = vec![0.0; d];
        v[0] = 1.0;
        Self { xi: vec![0.0; d], v }
    }

    pub fn new(xi: Vec<f64>, v: Vec<f64>) -> Self {
        Self { xi, v }
    }

    pub(crate) fn checked<T: Real>(&self, d: usize) -> Result<(Vec<T>, UnitVector<T>)> {
        for len in [self.xi.len(), self.v.len()] {
            if len != d {
                return Err(FiberError::DimensionMismatch { expected: d, got: len });
            }
        }
        if self.xi.iter().any(|x| !x.is_finite()) {
            return Err(invalid("xi", "must be finite"));
        }
        let v = UnitVector::normalize(self.v.iter().map(|&x| T::lit(x)).collect())?;
        Ok((self.xi.iter().map(|&x| T::lit(x)).collect(), v))
    }
}

/// Global-chart state `(xi, v)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FiberState<T> {
    pub xi: Vec<T>,
    pub v: UnitVector<T>,
}

/// Local-chart state `(xi, theta)`.
#[derive(Debug, Clone, PartialEq)]
pub struct AngleState<T> {
    pub xi: Vec<T>,
    pub theta: SphericalAngles<T>,
}
