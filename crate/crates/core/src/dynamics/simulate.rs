use std::fmt;
use std::io::{self, Write};

use serde::{Deserialize, Serialize};

use crate::dynamics::config::{InitialState, Scheme, SimConfig};
use crate::dynamics::step::{
    embedded_in_place, local_in_place, EmbeddedWorkspace, LocalStepFailure, LocalWorkspace, StepParams,
};
use crate::dynamics::wiener::NormalStream;
use crate::error::{FiberError, Result};
use crate::geometry::chart::{angles_from_point, angles_from_point_clamped, embed_angles_into};
use crate::potential::PotentialSpec;
use crate::scalar::Real;
use crate::FORMAT_HEADER;

/// A local-scheme step that left the chart and was redone in the global
/// chart.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ChartEvent {
    /// Index of the step that left the chart.
    pub step: usize,
    /// 1-based index of the offending polar angle.
    pub index: usize,
    /// Embedded steps taken before re-charting succeeded.
    pub embedded_steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum Mode {
    Global,
    Local,
    /// Local scheme temporarily running embedded steps.
    Fallback,
}

/// Advances one path. Path `stream` of a run draws its noise from ChaCha
/// stream `stream` under `cfg.seed`.
#[derive(Clone)]
pub struct Integrator<T: Real> {
    cfg: SimConfig,
    pot: PotentialSpec<T>,
    prm: StepParams<T>,
    sqrt_dt: f64,
    normals: NormalStream,
    noisy: bool,
    mode: Mode,
    xi: Vec<T>,
    v: Vec<T>,
    theta: Vec<T>,
    dw: Vec<T>,
    raw: Vec<f64>,
    emb_ws: EmbeddedWorkspace<T>,
    loc_ws: LocalWorkspace<T>,
    steps: usize,
    events: Vec<ChartEvent>,
}

impl<T: Real> Integrator<T> {
    pub fn new(cfg: &SimConfig, pot: &PotentialSpec<T>, init: &InitialState, stream: u64) -> Result<Self> {
        cfg.validate()?;
        let d = cfg.d;
        if pot.dim() != d {
            return Err(FiberError::DimensionMismatch {
                expected: d,
                got: pot.dim(),
            });
        }
        let (xi, v) = init.checked::<T>(d)?;
        let v = v.into_vec();
        let mut me = Self {
            cfg: cfg.clone(),
            pot: pot.clone(),
            prm: StepParams::from_config(cfg),
            sqrt_dt: cfg.dt.sqrt(),
            normals: NormalStream::new(cfg.seed, stream),
            noisy: cfg.sigma > 0.0,
            mode: Mode::Global,
            xi,
            v,
            theta: vec![T::zero(); d - 1],
            dw: vec![T::zero(); d],
            raw: vec![0.0; d],
            emb_ws: EmbeddedWorkspace::new(d),
            loc_ws: LocalWorkspace::new(d),
            steps: 0,
            events: Vec::new(),
        };
        if cfg.scheme == Scheme::LocalEuler {
            match angles_from_point(&me.v) {
                Ok(t) => {
                    me.theta = t.into_vec();
                    me.mode = Mode::Local;
                }
                Err(FiberError::PoleSingularity { index, .. }) => {
                    me.mode = Mode::Fallback;
                    me.events.push(ChartEvent {
                        step: 0,
                        index,
                        embedded_steps: 0,
                    });
                }
                Err(e) => return Err(e),
            }
        }
        Ok(me)
    }

    pub fn config(&self) -> &SimConfig {
        &self.cfg
    }

    pub fn steps_taken(&self) -> usize {
        self.steps
    }

    pub fn time(&self) -> f64 {
        self.steps as f64 * self.cfg.dt
    }

    pub fn xi(&self) -> &[T] {
        &self.xi
    }

    /// Current direction `v` in `R^d`.
    pub fn direction(&mut self) -> &[T] {
        if self.mode == Mode::Local {
            embed_angles_into(&self.theta, &mut self.v);
        }
        &self.v
    }

    /// Current angles; `None` for global-chart runs. During a fallback the
    /// angles are read off the global state with polar angles clamped.
    pub fn angles(&self) -> Option<Vec<T>> {
        match self.mode {
            Mode::Global => None,
            Mode::Local => Some(self.theta.clone()),
            Mode::Fallback => Some(angles_from_point_clamped(&self.v).into_vec()),
        }
    }

    pub fn events(&self) -> &[ChartEvent] {
        &self.events
    }

    fn draw(&mut self, n: usize) -> Option<&[T]> {
        if !self.noisy {
            return None;
        }
        self.normals.fill(&mut self.raw[..n]);
        for (o, &z) in self.dw.iter_mut().zip(&self.raw[..n]) {
            *o = T::lit(z * self.sqrt_dt);
        }
        Some(&self.dw[..n])
    }

    fn embedded(&mut self) -> Result<()> {
        let d = self.cfg.d;
        let noisy = self.draw(d).is_some();
        let dw = noisy.then_some(&self.dw[..]);
        if embedded_in_place(&mut self.xi, &mut self.v, dw, &self.prm, &self.pot, &mut self.emb_ws) {
            Ok(())
        } else {
            Err(FiberError::StepFailure { step: self.steps })
        }
    }

    fn try_rechart(&mut self) {
        if let Ok(t) = angles_from_point(&self.v) {
            self.theta = t.into_vec();
            self.mode = Mode::Local;
        }
        if let Some(e) = self.events.last_mut() {
            e.embedded_steps += 1;
        }
    }

    /// One step of the configured scheme.
    pub fn step(&mut self) -> Result<()> {
        match self.mode {
            Mode::Global => self.embedded()?,
            Mode::Fallback => {
                self.embedded()?;
                self.try_rechart();
            }
            Mode::Local => {
                let m = self.cfg.d - 1;
                let noisy = self.draw(m).is_some();
                let dw = noisy.then_some(&self.dw[..m]);
                match local_in_place(&mut self.xi, &mut self.theta, dw, &self.prm, &self.pot, &mut self.loc_ws) {
                    Ok(()) => {}
                    Err(LocalStepFailure::NonFinite) => return Err(FiberError::StepFailure { step: self.steps }),
                    Err(LocalStepFailure::ChartExit(index)) => {
                        embed_angles_into(&self.theta, &mut self.v);
                        self.events.push(ChartEvent {
                            step: self.steps,
                            index,
                            embedded_steps: 0,
                        });
                        self.mode = Mode::Fallback;
                        self.embedded()?;
                        self.try_rechart();
                    }
                }
            }
        }
        self.steps += 1;
        Ok(())
    }

    pub fn advance(&mut self, n: usize) -> Result<()> {
        for _ in 0..n {
            self.step()?;
        }
        Ok(())
    }
}

/// Which coordinates a trajectory records for the direction.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ChartKind {
    /// `v` in `R^d`.
    Global,
    /// Angles `theta_1..theta_{d-1}`.
    Local,
}

/// Recorded path.
#[derive(Debug, Clone)]
pub struct Trajectory<T> {
    pub chart: ChartKind,
    pub times: Vec<f64>,
    pub xi: Vec<Vec<T>>,
    /// `v` (global chart) or angles (local chart) at each record.
    pub direction: Vec<Vec<T>>,
    pub config: SimConfig,
    pub events: Vec<ChartEvent>,
}

/// Failed run with everything recorded up to the failure.
#[derive(Debug, Clone)]
pub struct SimulationFailure<T> {
    pub error: FiberError,
    pub partial: Trajectory<T>,
}

impl<T> fmt::Display for SimulationFailure<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} (after {} records)", self.error, self.partial.times.len())
    }
}

impl<T: fmt::Debug> std::error::Error for SimulationFailure<T> {}

/// Runs `cfg.n_steps` steps from `init`, recording every `record_stride`
/// steps (including the start).
pub fn simulate<T: Real>(
    cfg: &SimConfig,
    pot: &PotentialSpec<T>,
    init: &InitialState,
) -> std::result::Result<Trajectory<T>, SimulationFailure<T>> {
    simulate_stream(cfg, pot, init, 0)
}

/// [`simulate`] for path `stream` of an ensemble.
pub fn simulate_stream<T: Real>(
    cfg: &SimConfig,
    pot: &PotentialSpec<T>,
    init: &InitialState,
    stream: u64,
) -> std::result::Result<Trajectory<T>, SimulationFailure<T>> {
    let chart = match cfg.scheme {
        Scheme::LocalEuler => ChartKind::Local,
        Scheme::EmbeddedHeunProjected => ChartKind::Global,
    };
    let mut traj = Trajectory {
        chart,
        times: Vec::new(),
        xi: Vec::new(),
        direction: Vec::new(),
        config: cfg.clone(),
        events: Vec::new(),
    };
    let mut it = match Integrator::new(cfg, pot, init, stream) {
        Ok(it) => it,
        Err(error) => return Err(SimulationFailure { error, partial: traj }),
    };
    let records = cfg.n_steps / cfg.record_stride;
    traj.times.reserve(records + 1);
    let record = |it: &mut Integrator<T>, traj: &mut Trajectory<T>| {
        traj.times.push(it.time());
        traj.xi.push(it.xi().to_vec());
        let dir = match chart {
            ChartKind::Global => it.direction().to_vec(),
            ChartKind::Local => it.angles().expect("local run has angles"),
        };
        traj.direction.push(dir);
    };
    record(&mut it, &mut traj);
    for _ in 0..records {
        if let Err(error) = it.advance(cfg.record_stride) {
            traj.events = it.events().to_vec();
            return Err(SimulationFailure { error, partial: traj });
        }
        record(&mut it, &mut traj);
    }
    traj.events = it.events().to_vec();
    Ok(traj)
}

impl<T: Real> Trajectory<T> {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn dim(&self) -> usize {
        self.config.d
    }

    /// Direction vectors `v` at each record, embedding angles when needed.
    pub fn directions(&self) -> Vec<Vec<T>> {
        match self.chart {
            ChartKind::Global => self.direction.clone(),
            ChartKind::Local => self
                .direction
                .iter()
                .map(|t| {
                    let mut v = vec![T::zero(); self.dim()];
                    embed_angles_into(t, &mut v);
                    v
                })
                .collect(),
        }
    }

    /// `sum_k |xi_{k+1} - xi_k - v_k (t_{k+1} - t_k)|^2`, a proxy for the
    /// roughness of the recorded path.
    pub fn roughness(&self) -> f64 {
        let v = self.directions();
        let mut total = 0.0;
        for k in 0..self.len().saturating_sub(1) {
            let h = self.times[k + 1] - self.times[k];
            for i in 0..self.dim() {
                let r = (self.xi[k + 1][i] - self.xi[k][i]).as_f64() - v[k][i].as_f64() * h;
                total += r * r;
            }
        }
        total
    }

    /// Column names of the CSV export.
    pub fn columns(&self) -> Vec<String> {
        let d = self.dim();
        let mut cols = vec!["t".to_string()];
        cols.extend((1..=d).map(|i| format!("xi_{i}")));
        match self.chart {
            ChartKind::Global => cols.extend((1..=d).map(|i| format!("v_{i}"))),
            ChartKind::Local => cols.extend((1..d).map(|i| format!("theta_{i}"))),
        }
        cols
    }

    /// CSV export: format header line, column line, one row per record with
    /// 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut w: W) -> io::Result<()> {
        writeln!(w, "{FORMAT_HEADER}")?;
        writeln!(w, "{}", self.columns().join(","))?;
        for k in 0..self.len() {
            write!(w, "{:.16e}", self.times[k])?;
            for x in self.xi[k].iter().chain(&self.direction[k]) {
                write!(w, ",{:.16e}", x.as_f64())?;
            }
            writeln!(w)?;
        }
        Ok(())
    }
}
