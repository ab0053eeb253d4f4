//! Path generators shared by ensemble simulation and FPT detection.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::filter::{ConditionedState, StateSpaceFilter, MAX_ORDER};
use crate::error::{Error, Result};
use crate::process::ProcessSpec;

/// A sampler of discretely observed paths started at a fixed level.
pub trait PathModel: Sync {
    /// Per-start data computed once and shared by all paths.
    type Start: Sync;

    fn dt(&self) -> f64;

    fn start_time(&self) -> f64 {
        0.0
    }

    fn prepare(&self, x0: f64, steps: usize) -> Result<Self::Start>;

    /// Calls `visit(k, x_k)` for `k = 0, 1, ...` until it returns `false` or
    /// the prepared number of steps is reached. `x_0` is exactly the start level.
    fn walk(&self, start: &Self::Start, x0: f64, rng: &mut ChaCha8Rng, visit: &mut dyn FnMut(usize, f64) -> bool);

    /// Quadratic-variation rate of the paths at time `t`; `None` for
    /// differentiable paths.
    fn local_variance_rate(&self, t: f64) -> Option<f64>;
}

pub struct FilterStart {
    state: ConditionedState,
    steps: usize,
}

impl PathModel for StateSpaceFilter {
    type Start = FilterStart;

    fn dt(&self) -> f64 {
        StateSpaceFilter::dt(self)
    }

    fn prepare(&self, x0: f64, steps: usize) -> Result<FilterStart> {
        Ok(FilterStart {
            state: self.condition_on(x0)?,
            steps,
        })
    }

    fn walk(&self, start: &FilterStart, x0: f64, rng: &mut ChaCha8Rng, visit: &mut dyn FnMut(usize, f64) -> bool) {
        let n = self.order();
        let mut v = [0.0; MAX_ORDER];
        let mut xi = [0.0; MAX_ORDER];
        let mut scratch = [0.0; MAX_ORDER];
        for x in xi[..n].iter_mut() {
            *x = rng.sample(StandardNormal);
        }
        let f = &start.state.factor;
        for i in 0..n {
            v[i] = start.state.mean[i] + (0..n).map(|j| f[i * n + j] * xi[j]).sum::<f64>();
        }
        if !visit(0, x0) {
            return;
        }
        for k in 1..=start.steps {
            for x in xi[..n].iter_mut() {
                *x = rng.sample(StandardNormal);
            }
            self.advance(&mut v, &xi, &mut scratch);
            if !visit(k, self.observe(&v[..n])) {
                return;
            }
        }
    }

    fn local_variance_rate(&self, _t: f64) -> Option<f64> {
        StateSpaceFilter::local_variance_rate(self)
    }
}

/// Exact sampler of a factored (Gauss-Markov) process through its Wiener
/// representation `X(t) = m(t) + h2(t) W(r(t))`.
#[derive(Debug, Clone)]
pub struct GaussMarkovSampler {
    spec: ProcessSpec,
    dt: f64,
}

pub struct GaussMarkovStart {
    w0: f64,
    mean: Vec<f64>,
    h2: Vec<f64>,
    increment_sd: Vec<f64>,
}

impl GaussMarkovSampler {
    pub fn new(spec: ProcessSpec, dt: f64) -> Result<Self> {
        spec.factors()?;
        if !(dt > 0.0 && dt.is_finite()) {
            return Err(Error::InvalidGrid(format!("time step {dt} must be positive")));
        }
        Ok(GaussMarkovSampler { spec, dt })
    }
}

impl PathModel for GaussMarkovSampler {
    type Start = GaussMarkovStart;

    fn dt(&self) -> f64 {
        self.dt
    }

    fn start_time(&self) -> f64 {
        self.spec.t0
    }

    fn prepare(&self, x0: f64, steps: usize) -> Result<GaussMarkovStart> {
        let f = self.spec.factors()?;
        let t0 = self.spec.t0;
        let times: Vec<f64> = (0..=steps).map(|k| t0 + self.dt * k as f64).collect();
        let mut increment_sd = vec![0.0; steps + 1];
        for k in 1..=steps {
            let dr = f.r(times[k]) - f.r(times[k - 1]);
            if !(dr > 0.0) {
                return Err(Error::NonInvertibleTimeMap(times[k]));
            }
            increment_sd[k] = dr.sqrt();
        }
        let h2: Vec<f64> = times.iter().map(|&t| f.h2().value(t)).collect();
        let mean: Vec<f64> = times.iter().map(|&t| self.spec.mean.value(t)).collect();
        Ok(GaussMarkovStart {
            w0: (x0 - mean[0]) / h2[0],
            mean,
            h2,
            increment_sd,
        })
    }

    fn walk(&self, start: &GaussMarkovStart, x0: f64, rng: &mut ChaCha8Rng, visit: &mut dyn FnMut(usize, f64) -> bool) {
        if !visit(0, x0) {
            return;
        }
        let mut w = start.w0;
        for k in 1..start.mean.len() {
            let xi: f64 = rng.sample(StandardNormal);
            w += start.increment_sd[k] * xi;
            if !visit(k, start.mean[k] + start.h2[k] * w) {
                return;
            }
        }
    }

    fn local_variance_rate(&self, t: f64) -> Option<f64> {
        let f = self.spec.factors().ok()?;
        let h2 = f.h2().value(t);
        Some(h2 * h2 * f.r_prime(t))
    }
}
