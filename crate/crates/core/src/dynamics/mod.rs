//! Time stepping of the lay-down SDE in the global and local charts.

pub mod config;
pub mod picard;
pub mod simulate;
pub mod step;
pub mod wiener;

pub use config::{AngleState, DriftScale, FiberState, InitialState, Scheme, SimConfig};
pub use picard::{picard_solve_2d, planar_drift, PicardSolution};
pub use simulate::{simulate, simulate_stream, ChartEvent, ChartKind, Integrator, SimulationFailure, Trajectory};
pub use step::{step_embedded, step_local, StepParams};
pub use wiener::{wiener_path, NormalStream, WienerPath};
