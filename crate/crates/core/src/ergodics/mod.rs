//! Monte-Carlo diagnostics of mixing and stationarity, decay-rate fits and
//! the hypocoercive rate formula.

pub mod audit;
pub mod decay;
pub mod ensemble;
pub mod observable;
pub mod rate;
pub mod targets;

pub use audit::{stationarity_audit, stationarity_audit_trajectories, z_score, MomentCheck, StationarityReport};
pub use decay::{fit_decay, DecayFit};
pub use ensemble::{mixing_series, run_batches, time_averages, worker_count, ObservableSeries, THREADS_ENV};
pub use observable::Observable;
pub use rate::{
    hypocoercivity_rate, maximal_rate, optimal_sigma, rate_constants_report, RateConstantsReport, RateParams,
};
pub use targets::{observable_targets, stationary_expectation, stationary_expectations};
