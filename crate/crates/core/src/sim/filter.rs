//! Exact discrete-time state-space realization of a rational-spectrum process.
//!
//! With `Q` monic of degree `n`, the state `v = (phi, phi', ..., phi^(n-1))`
//! follows `dv = A v dt + b dW` with `A` the companion matrix of `Q` and
//! `b = e_n`; the observation is `X = P(D) phi = c . v`. Sampling on a grid of
//! step `dt` uses `Phi = exp(A dt)` and the exact innovation covariance
//! `Sigma - Phi Sigma Phi^T`, so second moments carry no time-step bias.

use nalgebra::{DMatrix, DVector};

use super::spectrum::RationalSpectrum;
use crate::error::{Error, Result};

/// Largest supported state dimension.
pub const MAX_ORDER: usize = 8;

#[derive(Debug, Clone)]
pub struct StateSpaceFilter {
    n: usize,
    dt: f64,
    generator: DMatrix<f64>,
    observation: DVector<f64>,
    stationary: DMatrix<f64>,
    transition: DMatrix<f64>,
    innovation: DMatrix<f64>,
    // row-major copies used on the hot path
    transition_rows: Vec<f64>,
    innovation_factor: Vec<f64>,
    local_rate: Option<f64>,
}

/// Stationary state law conditioned on the observation `c . v = x0`.
#[derive(Debug, Clone)]
pub struct ConditionedState {
    pub mean: Vec<f64>,
    /// Row-major `n x n` factor `L` with `L L^T` the conditional covariance.
    pub factor: Vec<f64>,
}

/// Symmetric square root by eigen-decomposition, clipping eigenvalues in
/// `[-tol, 0)` to zero. Returns a row-major factor.
pub fn psd_factor(m: &DMatrix<f64>, tol: f64, what: &str) -> Result<Vec<f64>> {
    let n = m.nrows();
    let sym = (m + m.transpose()) * 0.5;
    let eig = sym.symmetric_eigen();
    let scale = eig.eigenvalues.iter().fold(0.0_f64, |a, v| a.max(v.abs())).max(1.0);
    let mut out = vec![0.0; n * n];
    for (j, &lambda) in eig.eigenvalues.iter().enumerate() {
        if lambda < -tol * scale {
            return Err(Error::NotPositiveDefinite(format!("{what} has eigenvalue {lambda:e}")));
        }
        let root = lambda.max(0.0).sqrt();
        for i in 0..n {
            out[i * n + j] = eig.eigenvectors[(i, j)] * root;
        }
    }
    Ok(out)
}

/// Solves `A X + X A^T + B = 0` through the Kronecker form.
fn lyapunov(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let n = a.nrows();
    let eye = DMatrix::<f64>::identity(n, n);
    let k = eye.kronecker(a) + a.kronecker(&eye);
    let rhs = DVector::from_iterator(n * n, b.iter().map(|v| -v));
    let x = k
        .lu()
        .solve(&rhs)
        .ok_or_else(|| Error::NotPositiveDefinite("singular Lyapunov operator".into()))?;
    let x = DMatrix::from_column_slice(n, n, x.as_slice());
    Ok((&x + x.transpose()) * 0.5)
}

/// Builds the exact discretization of the filter `P(D)/Q(D)` at step `dt`.
pub fn build_filter(spectrum: &RationalSpectrum, dt: f64) -> Result<StateSpaceFilter> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(Error::InvalidGrid(format!("time step {dt} must be positive")));
    }
    // re-validates the Hurwitz property and degree constraint
    let spectrum = RationalSpectrum::new(spectrum.p().to_vec(), spectrum.q().to_vec())?;
    let n = spectrum.order();
    if n > MAX_ORDER {
        return Err(Error::DegreeMismatch(format!(
            "state dimension {n} exceeds {MAX_ORDER}"
        )));
    }
    let q = spectrum.q();
    let mut generator = DMatrix::<f64>::zeros(n, n);
    for i in 0..n - 1 {
        generator[(i, i + 1)] = 1.0;
    }
    for j in 0..n {
        generator[(n - 1, j)] = -q[j];
    }
    let mut observation = DVector::<f64>::zeros(n);
    for (i, &c) in spectrum.p().iter().enumerate() {
        observation[i] = c;
    }
    let mut noise = DMatrix::<f64>::zeros(n, n);
    noise[(n - 1, n - 1)] = 1.0;

    let stationary = lyapunov(&generator, &noise)?;
    psd_factor(&stationary, 1e-10, "stationary covariance")?;
    let transition = (&generator * dt).exp();
    let innovation = &stationary - &transition * &stationary * transition.transpose();
    let innovation_factor = psd_factor(&innovation, 1e-10, "innovation covariance")?;
    let transition_rows = (0..n * n).map(|k| transition[(k / n, k % n)]).collect();

    Ok(StateSpaceFilter {
        n,
        dt,
        generator,
        observation,
        stationary,
        transition,
        innovation,
        transition_rows,
        innovation_factor,
        local_rate: spectrum.local_variance_rate(),
    })
}

impl StateSpaceFilter {
    pub fn order(&self) -> usize {
        self.n
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn generator(&self) -> &DMatrix<f64> {
        &self.generator
    }

    pub fn observation(&self) -> &DVector<f64> {
        &self.observation
    }

    pub fn stationary_covariance(&self) -> &DMatrix<f64> {
        &self.stationary
    }

    pub fn transition(&self) -> &DMatrix<f64> {
        &self.transition
    }

    pub fn innovation_covariance(&self) -> &DMatrix<f64> {
        &self.innovation
    }

    /// Variance of the observed process in the stationary regime.
    pub fn stationary_variance(&self) -> f64 {
        self.observation.dot(&(&self.stationary * &self.observation))
    }

    /// `c Phi^k Sigma c^T`, the autocovariance of the discrete model at lag `k`.
    pub fn lag_autocovariance(&self, k: usize) -> f64 {
        let mut v = &self.stationary * &self.observation;
        for _ in 0..k {
            v = &self.transition * v;
        }
        self.observation.dot(&v)
    }

    /// Quadratic-variation rate of the observed paths, if they are rough.
    pub fn local_variance_rate(&self) -> Option<f64> {
        self.local_rate
    }

    /// Stationary state law conditioned on observing `x0`.
    pub fn condition_on(&self, x0: f64) -> Result<ConditionedState> {
        let sc = &self.stationary * &self.observation;
        let var = self.observation.dot(&sc);
        if !(var > 0.0) {
            return Err(Error::DegenerateObservation);
        }
        let mean = (&sc * (x0 / var)).iter().copied().collect();
        let cov = &self.stationary - &sc * sc.transpose() / var;
        let factor = psd_factor(&cov, 1e-10, "conditioned state covariance")?;
        Ok(ConditionedState { mean, factor })
    }

    /// `v <- Phi v + L xi` in place; `scratch` must hold `n` values.
    #[inline]
    pub(crate) fn advance(&self, v: &mut [f64], xi: &[f64], scratch: &mut [f64]) {
        let n = self.n;
        for (i, out) in scratch[..n].iter_mut().enumerate() {
            let row = &self.transition_rows[i * n..(i + 1) * n];
            let noise = &self.innovation_factor[i * n..(i + 1) * n];
            let mut acc = 0.0;
            for j in 0..n {
                acc += row[j] * v[j] + noise[j] * xi[j];
            }
            *out = acc;
        }
        v[..n].copy_from_slice(&scratch[..n]);
    }

    #[inline]
    pub(crate) fn observe(&self, v: &[f64]) -> f64 {
        self.observation.iter().zip(v).map(|(c, x)| c * x).sum()
    }
}
