use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{invalid, Result};

/// Generator of independent standard normals for one path. Path `k` of an
/// ensemble uses ChaCha stream `k` under the master seed, so paths are
/// independent of how the ensemble is scheduled.
#[derive(Debug, Clone)]
pub struct NormalStream {
    rng: ChaCha8Rng,
}

impl NormalStream {
    pub fn new(seed: u64, stream: u64) -> Self {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        rng.set_stream(stream);
        Self { rng }
    }

    #[inline]
    #[allow(clippy::should_implement_trait)]
    pub fn next(&mut self) -> f64 {
        StandardNormal.sample(&mut self.rng)
    }

    pub fn fill(&mut self, out: &mut [f64]) {
        for o in out {
            *o = self.next();
        }
    }
}

/// Brownian increments on a uniform grid, `dims` components per step.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct WienerPath {
    pub seed: u64,
    pub dims: usize,
    pub dt: f64,
    increments: Vec<f64>,
}

/// `n` increments `dW ~ N(0, dt I)` reproducible from `seed`.
pub fn wiener_path(seed: u64, dims: usize, dt: f64, n: usize) -> Result<WienerPath> {
    if !(dt > 0.0) || !dt.is_finite() {
        return Err(invalid("dt", "must be positive"));
    }
    if dims == 0 {
        return Err(invalid("dims", "must be positive"));
    }
    let mut normals = NormalStream::new(seed, 0);
    let s = dt.sqrt();
    let increments = (0..n * dims).map(|_| s * normals.next()).collect();
    Ok(WienerPath {
        seed,
        dims,
        dt,
        increments,
    })
}

impl WienerPath {
    pub fn n_steps(&self) -> usize {
        self.increments.len() / self.dims
    }

    pub fn horizon(&self) -> f64 {
        self.dt * self.n_steps() as f64
    }

    /// Increment over `[k dt, (k+1) dt]`.
    pub fn increment(&self, k: usize) -> &[f64] {
        &self.increments[k * self.dims..(k + 1) * self.dims]
    }

    pub fn increments(&self) -> &[f64] {
        &self.increments
    }

    /// `W_t` of component `j` on the grid, starting from `W_0 = 0`.
    pub fn cumulative(&self, j: usize) -> Vec<f64> {
        let mut w = Vec::with_capacity(self.n_steps() + 1);
        let mut acc = 0.0;
        w.push(acc);
        for k in 0..self.n_steps() {
            acc += self.increment(k)[j];
            w.push(acc);
        }
        w
    }
}
