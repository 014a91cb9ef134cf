use serde::Serialize;

use crate::dynamics::{InitialState, SimConfig, Trajectory};
use crate::error::{invalid, Result};
use crate::ergodics::ensemble::{time_averages, Moments, MIN_PATHS};
use crate::ergodics::observable::Observable;
use crate::ergodics::targets::observable_targets;
use crate::geometry::Estimate;
use crate::potential::PotentialSpec;

/// `|z|` above which a moment is flagged.
pub const Z_FLAG: f64 = 4.0;

/// One compared moment.
#[derive(Debug, Clone, Serialize)]
pub struct MomentCheck {
    pub observable: String,
    pub estimate: Estimate,
    pub target: Estimate,
    /// `(estimate - target) / combined standard error`.
    pub z: f64,
    pub flagged: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct StationarityReport {
    pub burn_in: f64,
    pub n_paths: usize,
    pub checks: Vec<MomentCheck>,
}

impl StationarityReport {
    pub fn any_flagged(&self) -> bool {
        self.checks.iter().any(|c| c.flagged)
    }

    pub fn max_abs_z(&self) -> f64 {
        self.checks.iter().fold(0.0, |m, c| m.max(c.z.abs()))
    }

    pub fn get(&self, observable: &str) -> Option<&MomentCheck> {
        self.checks.iter().find(|c| c.observable == observable)
    }
}

/// z-score of `a - b` under independent errors. Exact agreement with zero
/// error gives `0`.
pub fn z_score(a: Estimate, b: Estimate) -> f64 {
    let diff = a.value - b.value;
    let se = (a.std_error.powi(2) + b.std_error.powi(2)).sqrt();
    if diff == 0.0 {
        0.0
    } else {
        diff / se
    }
}

fn report(obs: &[Observable], est: Vec<Estimate>, pot: &PotentialSpec<f64>, kappa: f64, burn_in: f64, n_paths: usize) -> Result<StationarityReport> {
    let targets = observable_targets(obs, pot, kappa)?;
    let checks = obs
        .iter()
        .zip(est)
        .zip(targets)
        .map(|((o, e), t)| {
            let z = z_score(e, t);
            MomentCheck {
                observable: o.to_string(),
                estimate: e,
                target: t,
                z,
                flagged: !(z.abs() <= Z_FLAG),
            }
        })
        .collect();
    Ok(StationarityReport {
        burn_in,
        n_paths,
        checks,
    })
}

/// Runs `n_paths` paths from `init` and compares post-burn-in moments
/// (first and second moments of `xi` and `v`, and `xi . v`) with the
/// invariant law. Each path contributes its time average, so the standard
/// errors account for autocorrelation along the path.
pub fn stationarity_audit(
    cfg: &SimConfig,
    pot: &PotentialSpec<f64>,
    init: &InitialState,
    n_paths: usize,
    burn_in: f64,
) -> Result<StationarityReport> {
    let obs = Observable::moment_set(cfg.d);
    let est = time_averages(cfg, pot, &obs, n_paths, init, burn_in)?;
    report(&obs, est, pot, cfg.kappa(), burn_in, n_paths)
}

/// [`stationarity_audit`] on stored trajectories sharing one configuration.
pub fn stationarity_audit_trajectories(
    trajectories: &[Trajectory<f64>],
    pot: &PotentialSpec<f64>,
    burn_in: f64,
) -> Result<StationarityReport> {
    let first = trajectories.first().ok_or_else(|| invalid("trajectories", "empty ensemble"))?;
    if trajectories.len() < MIN_PATHS {
        return Err(invalid("trajectories", format!("need at least {MIN_PATHS} paths")));
    }
    if !(0.0..1.0).contains(&burn_in) {
        return Err(invalid("burn_in", "must lie in [0, 1)"));
    }
    let cfg = &first.config;
    let obs = Observable::moment_set(cfg.d);
    let t0 = burn_in * cfg.horizon();
    let mut m = Moments::new(obs.len());
    for traj in trajectories {
        if traj.config != *cfg {
            return Err(invalid("trajectories", "configurations differ"));
        }
        let dirs = traj.directions();
        let mut avg = vec![0.0; obs.len()];
        let mut count = 0usize;
        for k in (0..traj.len()).filter(|&k| traj.times[k] >= t0 - 1e-12) {
            for (a, o) in avg.iter_mut().zip(&obs) {
                *a += o.eval(&traj.xi[k], &dirs[k]);
            }
            count += 1;
        }
        for (i, a) in avg.iter().enumerate() {
            let y = a / count.max(1) as f64;
            m.sum[i] += y;
            m.sumsq[i] += y * y;
        }
        m.n += 1;
    }
    let est = (0..obs.len()).map(|i| m.estimate(i)).collect();
    report(&obs, est, pot, cfg.kappa(), burn_in, trajectories.len())
}
