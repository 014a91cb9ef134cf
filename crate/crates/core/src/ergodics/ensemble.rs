//! Parallel ensembles with results independent of the worker count: paths are
//! grouped into fixed batches, each batch is reduced sequentially, and batch
//! results are merged in batch order.

use rayon::prelude::*;
use serde::Serialize;

use crate::dynamics::{InitialState, Integrator, SimConfig};
use crate::error::{invalid, FiberError, Result};
use crate::ergodics::observable::Observable;
use crate::ergodics::targets::observable_targets;
use crate::geometry::Estimate;
use crate::potential::PotentialSpec;

/// Environment variable capping the number of worker threads.
pub const THREADS_ENV: &str = "FIBERLAY_THREADS";

/// Paths per batch.
pub const BATCH: usize = 64;

/// Smallest ensemble for which standard errors are reported.
pub const MIN_PATHS: usize = 100;

/// Worker count: `FIBERLAY_THREADS` when set to a positive integer, capped by
/// the available parallelism.
pub fn worker_count() -> usize {
    let avail = std::thread::available_parallelism().map_or(1, |n| n.get());
    match std::env::var(THREADS_ENV).ok().and_then(|s| s.trim().parse::<usize>().ok()) {
        Some(n) if n > 0 => n.min(avail),
        _ => avail,
    }
}

/// Runs `body(acc, path_index)` for every path, one accumulator per batch,
/// and returns the batch accumulators in order.
pub fn run_batches<A, I, B>(n_paths: usize, init: I, body: B) -> Result<Vec<A>>
where
    A: Send,
    I: Fn() -> A + Sync,
    B: Fn(&mut A, u64) -> Result<()> + Sync,
{
    let n_batches = n_paths.div_ceil(BATCH);
    let work = |b: usize| -> Result<A> {
        let mut acc = init();
        for p in b * BATCH..((b + 1) * BATCH).min(n_paths) {
            body(&mut acc, p as u64)?;
        }
        Ok(acc)
    };
    let threads = worker_count();
    if threads <= 1 {
        return (0..n_batches).map(work).collect();
    }
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| invalid("threads", e.to_string()))?;
    pool.install(|| (0..n_batches).into_par_iter().map(work).collect())
}

/// Running sums for means and standard errors.
#[derive(Debug, Clone)]
pub(crate) struct Moments {
    pub n: usize,
    pub sum: Vec<f64>,
    pub sumsq: Vec<f64>,
}

impl Moments {
    pub fn new(len: usize) -> Self {
        Self {
            n: 0,
            sum: vec![0.0; len],
            sumsq: vec![0.0; len],
        }
    }

    pub fn merge(&mut self, other: &Moments) {
        self.n += other.n;
        for (a, b) in self.sum.iter_mut().zip(&other.sum) {
            *a += b;
        }
        for (a, b) in self.sumsq.iter_mut().zip(&other.sumsq) {
            *a += b;
        }
    }

    pub fn estimate(&self, k: usize) -> Estimate {
        let n = self.n as f64;
        let mean = self.sum[k] / n;
        let var = if self.n > 1 {
            ((self.sumsq[k] - n * mean * mean) / (n - 1.0)).max(0.0)
        } else {
            0.0
        };
        Estimate {
            value: mean,
            std_error: (var / n).sqrt(),
        }
    }

    pub fn combine(parts: Vec<Moments>, len: usize) -> Moments {
        let mut total = Moments::new(len);
        for p in &parts {
            total.merge(p);
        }
        total
    }
}

/// Ensemble means `E[f(X_t)]` on the sampling grid.
#[derive(Debug, Clone, Serialize)]
pub struct ObservableSeries {
    pub observable: String,
    pub times: Vec<f64>,
    pub means: Vec<f64>,
    pub std_errors: Vec<f64>,
    pub n_paths: usize,
    /// `int f dmu` from the quadrature oracle.
    pub target: Option<Estimate>,
    pub config: SimConfig,
    pub init: InitialState,
}

fn check_ensemble(cfg: &SimConfig, pot: &PotentialSpec<f64>, obs: &[Observable], n_paths: usize) -> Result<()> {
    cfg.validate()?;
    if n_paths < MIN_PATHS {
        return Err(invalid("n_paths", format!("need at least {MIN_PATHS} paths")));
    }
    if pot.dim() != cfg.d {
        return Err(FiberError::DimensionMismatch {
            expected: cfg.d,
            got: pot.dim(),
        });
    }
    obs.iter().try_for_each(|o| o.check_dim(cfg.d))
}

/// Ensemble means of each observable sampled every `cfg.record_stride`
/// steps from the fixed start `init`, with the invariant-law target when it
/// can be computed.
pub fn mixing_series(
    cfg: &SimConfig,
    pot: &PotentialSpec<f64>,
    observables: &[Observable],
    n_paths: usize,
    init: &InitialState,
) -> Result<Vec<ObservableSeries>> {
    check_ensemble(cfg, pot, observables, n_paths)?;
    let n_obs = observables.len();
    let n_times = cfg.n_steps / cfg.record_stride + 1;
    let len = n_obs * n_times;
    let parts = run_batches(
        n_paths,
        || Moments::new(len),
        |acc, p| {
            let mut it = Integrator::new(cfg, pot, init, p)?;
            let mut xi = vec![0.0; cfg.d];
            for k in 0..n_times {
                if k > 0 {
                    it.advance(cfg.record_stride)?;
                }
                xi.copy_from_slice(it.xi());
                let v = it.direction();
                for (o, obs) in observables.iter().enumerate() {
                    let y = obs.eval(&xi, v);
                    acc.sum[o * n_times + k] += y;
                    acc.sumsq[o * n_times + k] += y * y;
                }
            }
            acc.n += 1;
            Ok(())
        },
    )?;
    let total = Moments::combine(parts, len);
    let targets = observable_targets(observables, pot, cfg.kappa()).ok();
    let times: Vec<f64> = (0..n_times).map(|k| (k * cfg.record_stride) as f64 * cfg.dt).collect();
    Ok(observables
        .iter()
        .enumerate()
        .map(|(o, obs)| {
            let est: Vec<Estimate> = (0..n_times).map(|k| total.estimate(o * n_times + k)).collect();
            ObservableSeries {
                observable: obs.to_string(),
                times: times.clone(),
                means: est.iter().map(|e| e.value).collect(),
                std_errors: est.iter().map(|e| e.std_error).collect(),
                n_paths,
                target: targets.as_ref().map(|t| t[o]),
                config: cfg.clone(),
                init: init.clone(),
            }
        })
        .collect())
}

/// Per-path time averages after `burn_in` (fraction of the horizon), reduced
/// to ensemble means with standard errors across paths. Samples are taken
/// every `cfg.record_stride` steps.
pub fn time_averages(
    cfg: &SimConfig,
    pot: &PotentialSpec<f64>,
    observables: &[Observable],
    n_paths: usize,
    init: &InitialState,
    burn_in: f64,
) -> Result<Vec<Estimate>> {
    check_ensemble(cfg, pot, observables, n_paths)?;
    if !(0.0..1.0).contains(&burn_in) {
        return Err(invalid("burn_in", "must lie in [0, 1)"));
    }
    let n_obs = observables.len();
    let stride = cfg.record_stride;
    let first = ((burn_in * cfg.n_steps as f64).ceil() as usize).div_ceil(stride) * stride;
    let samples = (cfg.n_steps - first) / stride + 1;
    let parts = run_batches(
        n_paths,
        || Moments::new(n_obs),
        |acc, p| {
            let mut it = Integrator::new(cfg, pot, init, p)?;
            it.advance(first)?;
            let mut avg = vec![0.0; n_obs];
            let mut xi = vec![0.0; cfg.d];
            for k in 0..samples {
                if k > 0 {
                    it.advance(stride)?;
                }
                xi.copy_from_slice(it.xi());
                let v = it.direction();
                for (a, obs) in avg.iter_mut().zip(observables) {
                    *a += obs.eval(&xi, v);
                }
            }
            for (o, a) in avg.iter().enumerate() {
                let y = a / samples as f64;
                acc.sum[o] += y;
                acc.sumsq[o] += y * y;
            }
            acc.n += 1;
            Ok(())
        },
    )?;
    let total = Moments::combine(parts, n_obs);
    Ok((0..n_obs).map(|o| total.estimate(o)).collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn batches_cover_all_paths_in_order() {
        let parts = run_batches(150, Vec::new, |acc: &mut Vec<u64>, p| {
            acc.push(p);
            Ok(())
        })
        .unwrap();
        let flat: Vec<u64> = parts.into_iter().flatten().collect();
        assert_eq!(flat, (0..150).collect::<Vec<u64>>());
    }

    #[test]
    fn moments_estimate() {
        let mut m = Moments::new(1);
        for x in [1.0, 2.0, 3.0, 4.0] {
            m.sum[0] += x;
            m.sumsq[0] += x * x;
            m.n += 1;
        }
        let e = m.estimate(0);
        assert_eq!(e.value, 2.5);
        assert!((e.std_error - (5.0f64 / 3.0 / 4.0).sqrt()).abs() < 1e-15);
    }

    #[test]
    fn too_few_paths_rejected() {
        let pot = PotentialSpec::radial_quadratic(2);
        let cfg = SimConfig::new(2, 1.0, 1e-2, 10, 0);
        assert!(mixing_series(&cfg, &pot, &[Observable::V(0)], 10, &InitialState::origin(2)).is_err());
    }
}
