//! Stored path ensembles and the dense covariance sampler used to check them.

use std::fmt::Write as _;
use std::io::Write;

use nalgebra::DMatrix;
use rand::Rng;
use rand_distr::StandardNormal;

use super::model::PathModel;
use super::streams::{par_map_indexed, path_rng};
use crate::error::{Error, Result};

/// Observed sample paths on `t0 + k dt`, `k = 0..=steps`.
#[derive(Debug, Clone, PartialEq)]
pub struct PathEnsemble {
    pub dt: f64,
    pub t0: f64,
    pub x0: f64,
    pub seed: u64,
    pub paths: Vec<Vec<f64>>,
    /// Quadratic-variation rate at each step midpoint (index `k` covers
    /// `[t_{k-1}, t_k]`, entry 0 unused); `None` for smooth paths.
    pub bridge_rates: Option<Vec<f64>>,
}

impl PathEnsemble {
    pub fn len(&self) -> usize {
        self.paths.len()
    }

    pub fn is_empty(&self) -> bool {
        self.paths.is_empty()
    }

    pub fn steps(&self) -> usize {
        self.paths.first().map_or(0, |p| p.len() - 1)
    }

    pub fn time(&self, k: usize) -> f64 {
        self.t0 + self.dt * k as f64
    }

    /// Path matrix as CSV (one row per path), refused above `max_values` entries.
    pub fn write_csv<W: Write>(&self, mut out: W, max_values: usize) -> Result<()> {
        let total = self.len() * (self.steps() + 1);
        if total > max_values {
            return Err(Error::Config(format!(
                "path dump of {total} values exceeds the limit of {max_values}"
            )));
        }
        let mut line = String::new();
        for path in &self.paths {
            line.clear();
            for (i, x) in path.iter().enumerate() {
                if i > 0 {
                    line.push(',');
                }
                let _ = write!(line, "{x:.16e}");
            }
            line.push('\n');
            out.write_all(line.as_bytes())?;
        }
        Ok(())
    }
}

fn check_sizes(n: usize, steps: usize) -> Result<()> {
    if n == 0 || steps == 0 {
        return Err(Error::InvalidGrid(format!(
            "ensemble needs at least one path and one step (got {n} paths, {steps} steps)"
        )));
    }
    Ok(())
}

/// Simulates `n` independent paths of `steps` steps from `x0`. Path `i`
/// depends only on `(seed, i)`.
pub fn simulate_ensemble<M: PathModel>(
    model: &M,
    x0: f64,
    n: usize,
    steps: usize,
    seed: u64,
    threads: Option<usize>,
) -> Result<PathEnsemble> {
    check_sizes(n, steps)?;
    let start = model.prepare(x0, steps)?;
    let paths = par_map_indexed(n, threads, |i| {
        let mut rng = path_rng(seed, i as u64);
        let mut path = Vec::with_capacity(steps + 1);
        model.walk(&start, x0, &mut rng, &mut |_, x| {
            path.push(x);
            true
        });
        path
    })?;
    if let Some(bad) = paths.iter().flatten().find(|x| !x.is_finite()) {
        return Err(Error::Domain(format!("simulated path value {bad} is not finite")));
    }
    let (dt, t0) = (model.dt(), model.start_time());
    let bridge_rates = (0..=steps)
        .map(|k| {
            if k == 0 {
                Some(0.0)
            } else {
                model.local_variance_rate(t0 + dt * (k as f64 - 0.5))
            }
        })
        .collect();
    Ok(PathEnsemble {
        dt,
        t0,
        x0,
        seed,
        paths,
        bridge_rates,
    })
}

/// Samples a zero-mean, unit-variance stationary process with correlation
/// `gamma` on `k dt`, `k = 0..=steps`, conditionally on `X(0) = x0`, by a
/// dense Cholesky factorization of the conditional covariance.
pub fn simulate_oracle_cholesky<G: Fn(f64) -> f64>(
    gamma: G,
    x0: f64,
    dt: f64,
    steps: usize,
    n: usize,
    seed: u64,
) -> Result<PathEnsemble> {
    check_sizes(n, steps)?;
    if steps >= 2000 {
        return Err(Error::InvalidGrid(format!(
            "oracle grid limited to 2000 points (got {})",
            steps + 1
        )));
    }
    if !(dt > 0.0) {
        return Err(Error::InvalidGrid(format!("time step {dt} must be positive")));
    }
    let lags: Vec<f64> = (0..=steps).map(|k| gamma(dt * k as f64)).collect();
    let cov = DMatrix::from_fn(steps, steps, |i, j| {
        lags[(i as isize - j as isize).unsigned_abs()] - lags[i + 1] * lags[j + 1]
    });
    let chol = cov
        .cholesky()
        .ok_or_else(|| Error::NotPositiveDefinite("conditional Gram matrix".into()))?;
    let l = chol.l();
    let paths = (0..n)
        .map(|i| {
            let mut rng = path_rng(seed, i as u64);
            let xi: Vec<f64> = (0..steps).map(|_| rng.sample(StandardNormal)).collect();
            let mut path = Vec::with_capacity(steps + 1);
            path.push(x0);
            for r in 0..steps {
                let noise: f64 = (0..=r).map(|c| l[(r, c)] * xi[c]).sum();
                path.push(lags[r + 1] * x0 + noise);
            }
            path
        })
        .collect();
    Ok(PathEnsemble {
        dt,
        t0: 0.0,
        x0,
        seed,
        paths,
        bridge_rates: None,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::filter::build_filter;
    use crate::sim::spectrum::{spectral_factorize, EvenRational};

    #[test]
    fn paths_start_at_x0_and_are_reproducible() {
        let s = spectral_factorize(&EvenRational::exp_cos(0.5, 0.5).unwrap()).unwrap();
        let f = build_filter(&s, 0.01).unwrap();
        let a = simulate_ensemble(&f, 0.3, 50, 20, 11, Some(1)).unwrap();
        let b = simulate_ensemble(&f, 0.3, 50, 20, 11, Some(3)).unwrap();
        assert_eq!(a, b);
        assert!(a.paths.iter().all(|p| p[0] == 0.3 && p.len() == 21));
        assert!(simulate_ensemble(&f, 0.3, 0, 20, 11, None).is_err());
    }

    #[test]
    fn oracle_single_step_moments() {
        let (beta, dt, x0) = (0.5, 0.5, 0.8);
        let g = move |t: f64| (-beta * t).exp();
        let e = simulate_oracle_cholesky(g, x0, dt, 1, 20_000, 5).unwrap();
        let xs: Vec<f64> = e.paths.iter().map(|p| p[1]).collect();
        let n = xs.len() as f64;
        let mean = xs.iter().sum::<f64>() / n;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1.0);
        let (m, v) = (g(dt) * x0, 1.0 - g(dt).powi(2));
        assert!((mean - m).abs() < 4.0 * (v / n).sqrt());
        assert!((var - v).abs() < 4.0 * v * (2.0 / n).sqrt());
    }

    #[test]
    fn oracle_rejects_indefinite_and_large_grids() {
        // a "correlation" that is not positive definite
        let bad = |t: f64| if t == 0.0 { 1.0 } else { -0.99 };
        assert!(matches!(
            simulate_oracle_cholesky(bad, 0.0, 0.1, 3, 1, 0),
            Err(Error::NotPositiveDefinite(_))
        ));
        assert!(simulate_oracle_cholesky(|t: f64| (-t).exp(), 0.0, 0.01, 2000, 1, 0).is_err());
    }

    #[test]
    fn path_dump_respects_limit() {
        let s = spectral_factorize(&EvenRational::exp_cos(0.5, 0.0).unwrap()).unwrap();
        let f = build_filter(&s, 0.1).unwrap();
        let e = simulate_ensemble(&f, 0.0, 3, 4, 1, Some(1)).unwrap();
        let mut buf = Vec::new();
        e.write_csv(&mut buf, 15).unwrap();
        assert_eq!(String::from_utf8(buf).unwrap().lines().count(), 3);
        assert!(e.write_csv(Vec::new(), 14).is_err());
    }
}
