//! Run configuration: a TOML file layer overridden by command-line flags,
//! resolved against per-subcommand defaults. Manifests are complete file
//! layers, so `--config manifest.toml` replays a run.

use std::fs;
use std::path::{Path, PathBuf};

use clap::Args;
use fiberlay::dynamics::DriftScale;
use fiberlay::ergodics::Observable;
use fiberlay::potential::by_name;
use fiberlay::{InitialState, Potential, Scheme, SimConfig, FORMAT_HEADER};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, CliResult};

pub const MANIFEST: &str = "manifest.toml";
pub const CODE_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Args, Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunArgs {
    /// TOML config file or manifest of an earlier run; flags override it.
    #[arg(long)]
    #[serde(skip)]
    pub config: Option<PathBuf>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub d: Option<usize>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub sigma: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub dt: Option<f64>,
    /// Horizon; must be a whole number of steps.
    #[arg(long = "T", visible_alias = "horizon")]
    #[serde(rename = "T", skip_serializing_if = "Option::is_none")]
    pub horizon: Option<f64>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub seed: Option<u64>,
    /// local-euler or embedded-heun-projected.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub scheme: Option<String>,
    /// unit (kappa = 1) or inverse-dim-minus-one (kappa = 1/(d-1)).
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub drift_scale: Option<String>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub record_stride: Option<usize>,
    /// radial-quadratic, anisotropic-quadratic, quartic, linear or zero.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi: Option<String>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub phi_params: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub xi0: Option<Vec<f64>>,
    #[arg(long, value_delimiter = ',', allow_negative_numbers = true)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub v0: Option<Vec<f64>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub n_paths: Option<usize>,
    /// Fraction of the horizon discarded before time averages.
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub burn_in: Option<f64>,
    #[arg(long, value_delimiter = ',')]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub observables: Option<Vec<String>>,
    #[arg(long)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    #[arg(long, hide = true)]
    #[serde(skip_serializing_if = "std::ops::Not::not")]
    pub inject_drift_sign_error: bool,
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub subcommand: Option<String>,
    #[arg(skip)]
    #[serde(skip_serializing_if = "Option::is_none")]
    pub code_version: Option<String>,
}

macro_rules! overlay {
    ($base:ident, $top:ident; $($f:ident),*) => {
        RunArgs {
            $($f: $top.$f.or($base.$f),)*
            config: None,
            inject_drift_sign_error: $top.inject_drift_sign_error || $base.inject_drift_sign_error,
            subcommand: None,
            code_version: None,
        }
    };
}

impl RunArgs {
    fn overlay(base: RunArgs, top: RunArgs) -> RunArgs {
        overlay!(base, top; d, sigma, dt, horizon, seed, scheme, drift_scale, record_stride, phi,
            phi_params, xi0, v0, n_paths, burn_in, observables, out)
    }

    /// File layer (if any) with these flags on top.
    pub fn layered(&self) -> CliResult<RunArgs> {
        let base = match &self.config {
            Some(path) => read_layer(path)?,
            None => RunArgs::default(),
        };
        Ok(RunArgs::overlay(base, self.clone()))
    }
}

pub fn read_toml<T: for<'de> Deserialize<'de>>(path: &Path) -> CliResult<T> {
    let text = fs::read_to_string(path).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))?;
    toml::from_str(&text).map_err(|e| CliError::Config(format!("{}: {e}", path.display())))
}

fn read_layer(path: &Path) -> CliResult<RunArgs> {
    read_toml(path)
}

/// Defaults that differ between subcommands.
#[derive(Debug, Clone)]
pub struct Defaults {
    pub sigma: f64,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub record_stride: usize,
    pub n_paths: usize,
    pub burn_in: f64,
    pub observables: &'static [&'static str],
    pub start: Start,
}

/// Default start point.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Start {
    /// `(0, e_1)`.
    Origin,
    /// `(e_1, e_2)`.
    Tangent,
}

impl Defaults {
    pub fn simulate() -> Self {
        Defaults {
            sigma: 1.0,
            dt: 1e-3,
            horizon: 10.0,
            seed: 0,
            record_stride: 1,
            n_paths: 1,
            burn_in: 0.5,
            observables: &[],
            start: Start::Origin,
        }
    }

    pub fn figures() -> Self {
        Defaults {
            horizon: 20.0,
            start: Start::Tangent,
            ..Self::simulate()
        }
    }

    pub fn diagnose() -> Self {
        Defaults {
            horizon: 20.0,
            record_stride: 100,
            n_paths: 10_000,
            observables: &["xi1", "xi1^2", "v1"],
            ..Self::simulate()
        }
    }

    pub fn verify() -> Self {
        Defaults {
            horizon: 10.0,
            seed: 4,
            record_stride: 10,
            n_paths: 400,
            ..Self::simulate()
        }
    }
}

/// Fully resolved run.
#[derive(Debug, Clone)]
pub struct RunConfig {
    pub subcommand: String,
    pub sim: SimConfig,
    pub phi: String,
    pub phi_params: Vec<f64>,
    pub init: InitialState,
    pub n_paths: usize,
    pub burn_in: f64,
    pub observables: Vec<Observable>,
    pub out: PathBuf,
    pub inject_drift_sign_error: bool,
}

fn config_err(e: impl ToString) -> CliError {
    CliError::Config(e.to_string())
}

pub fn steps_for(horizon: f64, dt: f64) -> CliResult<usize> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(CliError::Config("dt must be positive".into()));
    }
    if !(horizon >= 0.0) || !horizon.is_finite() {
        return Err(CliError::Config("T must be finite and nonnegative".into()));
    }
    let n = (horizon / dt).round();
    if (n * dt - horizon).abs() > 1e-9 * horizon.max(dt) {
        return Err(CliError::Config(format!("T = {horizon} is not a multiple of dt = {dt}")));
    }
    Ok(n as usize)
}

impl RunConfig {
    pub fn resolve(subcommand: &str, args: &RunArgs, def: &Defaults) -> CliResult<RunConfig> {
        let a = args.layered()?;
        let d = a.d.unwrap_or(2);
        let dt = a.dt.unwrap_or(def.dt);
        let n_steps = steps_for(a.horizon.unwrap_or(def.horizon), dt)?;
        let mut sim = SimConfig::new(d, a.sigma.unwrap_or(def.sigma), dt, n_steps, a.seed.unwrap_or(def.seed))
            .with_record_stride(a.record_stride.unwrap_or(def.record_stride));
        if let Some(s) = &a.scheme {
            sim = sim.with_scheme(s.parse::<Scheme>().map_err(config_err)?);
        }
        if let Some(s) = &a.drift_scale {
            sim = sim.with_drift_scale(s.parse::<DriftScale>().map_err(config_err)?);
        }
        sim.validate()?;
        let o = match def.start {
            Start::Origin => InitialState::origin(d),
            Start::Tangent => {
                let (mut xi, mut v) = (vec![0.0; d], vec![0.0; d]);
                xi[0] = 1.0;
                v[1] = 1.0;
                InitialState::new(xi, v)
            }
        };
        let init = InitialState::new(a.xi0.clone().unwrap_or(o.xi), a.v0.clone().unwrap_or(o.v));
        for len in [init.xi.len(), init.v.len()] {
            if len != d {
                return Err(CliError::Config(format!("start point has {len} components, d = {d}")));
            }
        }
        if init.v.iter().all(|&x| x == 0.0) || init.v.iter().chain(&init.xi).any(|x| !x.is_finite()) {
            return Err(CliError::Config("start point must be finite with nonzero v0".into()));
        }
        let burn_in = a.burn_in.unwrap_or(def.burn_in);
        if !(0.0..1.0).contains(&burn_in) {
            return Err(CliError::Config("burn-in must lie in [0, 1)".into()));
        }
        let n_paths = a.n_paths.unwrap_or(def.n_paths);
        if n_paths == 0 {
            return Err(CliError::Config("n-paths must be positive".into()));
        }
        let names: Vec<String> = match &a.observables {
            Some(v) => v.clone(),
            None => def.observables.iter().map(|s| s.to_string()).collect(),
        };
        let observables = names
            .iter()
            .map(|s| s.parse::<Observable>().map_err(config_err))
            .collect::<CliResult<Vec<_>>>()?;
        for o in &observables {
            o.check_dim(d)?;
        }
        let cfg = RunConfig {
            subcommand: subcommand.to_string(),
            sim,
            phi: a.phi.clone().unwrap_or_else(|| "radial-quadratic".into()),
            phi_params: a.phi_params.clone().unwrap_or_default(),
            init,
            n_paths,
            burn_in,
            observables,
            out: a.out.clone().unwrap_or_else(|| PathBuf::from("fiberlay-out")),
            inject_drift_sign_error: a.inject_drift_sign_error,
        };
        cfg.potential()?;
        Ok(cfg)
    }

    pub fn potential(&self) -> CliResult<Potential> {
        Ok(by_name(&self.phi, self.sim.d, &self.phi_params)?)
    }

    /// Complete file layer echoing this run.
    pub fn manifest(&self) -> RunArgs {
        RunArgs {
            config: None,
            d: Some(self.sim.d),
            sigma: Some(self.sim.sigma),
            dt: Some(self.sim.dt),
            horizon: Some(self.sim.horizon()),
            seed: Some(self.sim.seed),
            scheme: Some(self.sim.scheme.name().into()),
            drift_scale: Some(self.sim.drift_scale.name().into()),
            record_stride: Some(self.sim.record_stride),
            phi: Some(self.phi.clone()),
            phi_params: Some(self.phi_params.clone()),
            xi0: Some(self.init.xi.clone()),
            v0: Some(self.init.v.clone()),
            n_paths: Some(self.n_paths),
            burn_in: Some(self.burn_in),
            observables: Some(self.observables.iter().map(|o| o.to_string()).collect()),
            out: Some(self.out.clone()),
            inject_drift_sign_error: self.inject_drift_sign_error,
            subcommand: Some(self.subcommand.clone()),
            code_version: Some(CODE_VERSION.into()),
        }
    }

    pub fn write_manifest(&self) -> CliResult<PathBuf> {
        write_toml(&self.out, MANIFEST, &self.manifest())
    }
}

/// Writes `value` as TOML under the format header.
pub fn write_toml<T: Serialize>(dir: &Path, name: &str, value: &T) -> CliResult<PathBuf> {
    let body = toml::to_string(value).map_err(|e| CliError::Runtime(e.to_string()))?;
    let path = dir.join(name);
    fs::create_dir_all(dir)?;
    fs::write(&path, format!("{FORMAT_HEADER}\n{body}"))?;
    Ok(path)
}
