//! Second-kind Volterra equation for Gauss-Markov FPT densities.
//!
//! For a factored process the FPT density through `S(t)` satisfies
//!
//! `g(t) = -2 Psi[S(t),t|x0,t0] + 2 int_{t0}^t g(tau) Psi[S(t),t|S(tau),tau] dtau`,
//!
//! whose kernel is weakly singular only in the sense that it tends to a finite
//! limit (zero for smooth boundaries) as `tau -> t`.
//!
//! Two discretizations are provided. [`Scheme::Simpson`] applies Simpson
//! weights directly on the solver grid and takes the diagonal kernel value
//! from [`psi_diagonal`]. [`Scheme::ProductIntegration`] subtracts the forcing
//! term, interpolates the smooth remainder piecewise quadratically and
//! integrates the interpolants against the kernel on a refined grid; it is far
//! more accurate at the same step.

use std::fmt::Write as _;
use std::io::Write;

use crate::boundary::BoundarySpec;
use crate::density::{DensityGrid, DensityMethod};
use crate::error::{Error, Result};
use crate::process::{normal_pdf, CovarianceFactors, ProcessSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Scheme {
    ProductIntegration,
    Simpson,
}

impl Scheme {
    pub fn as_str(self) -> &'static str {
        match self {
            Scheme::ProductIntegration => "product",
            Scheme::Simpson => "simpson",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "product" => Ok(Scheme::ProductIntegration),
            "simpson" => Ok(Scheme::Simpson),
            _ => Err(Error::Config(format!("unknown volterra scheme '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SolverConfig {
    pub step: f64,
    pub horizon: f64,
    pub scheme: Scheme,
    /// Fine quadrature panels per solver step (product integration only).
    pub refinement: usize,
    /// Relative tolerance of the diagonal-limit extrapolation.
    pub diagonal_tolerance: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig {
            step: 0.01,
            horizon: 10.0,
            scheme: Scheme::ProductIntegration,
            refinement: 4,
            diagonal_tolerance: 1e-6,
        }
    }
}

impl SolverConfig {
    pub fn new(step: f64, horizon: f64) -> Self {
        SolverConfig {
            step,
            horizon,
            ..SolverConfig::default()
        }
    }

    pub fn with_scheme(mut self, scheme: Scheme) -> Self {
        self.scheme = scheme;
        self
    }

    fn steps(&self) -> Result<usize> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(Error::InvalidGrid(format!(
                "solver step {} must be positive",
                self.step
            )));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidGrid(format!("horizon {} must be positive", self.horizon)));
        }
        if self.refinement == 0 {
            return Err(Error::InvalidGrid("refinement must be at least 1".into()));
        }
        Ok(((self.horizon / self.step) - 1e-9).ceil().max(1.0) as usize)
    }
}

/// Per-step record of the diagonal kernel value and of clamping.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DiagnosticRow {
    pub t: f64,
    pub psi_diag: f64,
    pub clamped: bool,
}

#[derive(Debug, Clone)]
pub struct VolterraSolution {
    /// Density with negative ordinates clamped to zero.
    pub density: DensityGrid,
    /// Unclamped solution values.
    pub raw: Vec<f64>,
    pub diagnostics: Vec<DiagnosticRow>,
    pub clamped: usize,
}

impl VolterraSolution {
    pub fn diagnostics_csv(&self) -> String {
        let mut s = String::from("t,psi_diag,clamped\n");
        for r in &self.diagnostics {
            let _ = writeln!(s, "{:.16e},{:.16e},{}", r.t, r.psi_diag, r.clamped as u8);
        }
        s
    }

    pub fn write_diagnostics_csv<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.diagnostics_csv().as_bytes())?;
        Ok(())
    }
}

/// Process and boundary quantities at one instant.
#[derive(Debug, Clone, Copy)]
struct Instant {
    t: f64,
    s: f64,
    ds: f64,
    m: f64,
    dm: f64,
    h1: f64,
    dh1: f64,
    h2: f64,
    dh2: f64,
}

struct Kernel<'a> {
    spec: &'a ProcessSpec,
    factors: &'a CovarianceFactors,
    boundary: &'a BoundarySpec,
}

impl<'a> Kernel<'a> {
    fn new(spec: &'a ProcessSpec, boundary: &'a BoundarySpec) -> Result<Self> {
        Ok(Kernel {
            spec,
            factors: spec.factors()?,
            boundary,
        })
    }

    fn at(&self, t: f64) -> Instant {
        let (h1, h2) = (self.factors.h1(), self.factors.h2());
        Instant {
            t,
            s: self.boundary.value(t),
            ds: self.boundary.derivative(t),
            m: self.spec.mean.value(t),
            dm: self.spec.mean.derivative(t),
            h1: h1.value(t),
            dh1: h1.derivative(t),
            h2: h2.value(t),
            dh2: h2.derivative(t),
        }
    }

    /// `Psi[S(t),t|y,tau]`; `None` when the transition variance is not positive.
    #[inline]
    fn psi(now: &Instant, y: f64, then: &Instant) -> Option<f64> {
        let den = now.h1 * then.h2 - now.h2 * then.h1;
        let ratio = now.h2 / then.h2;
        let variance = now.h2 * den / then.h2;
        if !(variance > 0.0) {
            return None;
        }
        let mean = now.m + ratio * (y - then.m);
        let f = normal_pdf(now.s, mean, variance);
        if f == 0.0 {
            return Some(0.0);
        }
        let bracket = now.ds
            - now.dm
            - (now.s - now.m) * (now.dh1 * then.h2 - now.dh2 * then.h1) / den
            - (y - then.m) * (now.dh2 * now.h1 - now.h2 * now.dh1) / den;
        Some(0.5 * f * bracket)
    }
}

/// Kernel `Psi[S(t),t|y,tau]` of the Volterra equation, for `tau < t`.
pub fn psi_kernel(spec: &ProcessSpec, boundary: &BoundarySpec, t: f64, y: f64, tau: f64) -> Result<f64> {
    if !(t > tau) {
        return Err(Error::CoincidentTimes { t, tau });
    }
    let k = Kernel::new(spec, boundary)?;
    let (now, then) = (k.at(t), k.at(tau));
    Kernel::psi(&now, y, &then).ok_or_else(|| Error::DegenerateVariance {
        variance: now.h2 * (now.h1 * then.h2 - now.h2 * then.h1) / then.h2,
        from: tau,
        to: t,
    })
}

/// Limit of `Psi[S(t),t|S(tau),tau]` as `tau -> t-`, by Neville extrapolation
/// in `sqrt(t - tau)` over offsets `eps0 2^{-k}`, `k = 0..4`, starting from
/// `eps0 = min(step, (t - t0)/2)` and halving `eps0` until the last two
/// extrapolants agree.
pub fn psi_diagonal(spec: &ProcessSpec, boundary: &BoundarySpec, t: f64, step: f64) -> Result<f64> {
    psi_diagonal_with(spec, boundary, t, step, SolverConfig::default().diagonal_tolerance)
}

fn psi_diagonal_with(spec: &ProcessSpec, boundary: &BoundarySpec, t: f64, step: f64, tolerance: f64) -> Result<f64> {
    let span = t - spec.t0;
    if !(span > 0.0) {
        return Err(Error::CoincidentTimes { t, tau: spec.t0 });
    }
    let k = Kernel::new(spec, boundary)?;
    let now = k.at(t);
    // shrink the offsets until the extrapolation settles
    let mut eps0 = step.min(0.5 * span);
    let mut last = Error::DiagonalNotConverged {
        t,
        residual: f64::INFINITY,
    };
    for _ in 0..MAX_HALVINGS {
        match extrapolate_diagonal(&k, &now, eps0)? {
            (estimate, residual, largest) if estimate.is_finite() && residual <= tolerance * largest.max(1.0) => {
                return Ok(estimate)
            }
            (_, residual, _) => last = Error::DiagonalNotConverged { t, residual },
        }
        eps0 *= 0.5;
    }
    Err(last)
}

const MAX_HALVINGS: usize = 24;

/// Returns the extrapolated value, its change over the last level and the
/// largest sampled magnitude.
fn extrapolate_diagonal(k: &Kernel, now: &Instant, eps0: f64) -> Result<(f64, f64, f64)> {
    const LEVELS: usize = 5;
    let t = now.t;
    let mut xs = [0.0; LEVELS];
    let mut table = [0.0; LEVELS];
    let mut largest: f64 = 0.0;
    for (i, (x, v)) in xs.iter_mut().zip(table.iter_mut()).enumerate() {
        let eps = eps0 / f64::powi(2.0, i as i32);
        let then = k.at(t - eps);
        *x = eps.sqrt();
        *v = Kernel::psi(now, then.s, &then).ok_or(Error::DegenerateVariance {
            variance: 0.0,
            from: t - eps,
            to: t,
        })?;
        largest = largest.max(v.abs());
    }
    // Neville's scheme evaluated at x = 0
    let mut previous = table[LEVELS - 2];
    for level in 1..LEVELS {
        for i in 0..LEVELS - level {
            let (xa, xb) = (xs[i], xs[i + level]);
            table[i] = (xa * table[i + 1] - xb * table[i]) / (xa - xb);
        }
        if level == LEVELS - 2 {
            previous = table[1];
        }
    }
    Ok((table[0], (table[0] - previous).abs(), largest))
}

/// Solves the Volterra equation on `t0 + k h`, `k = 0..=n`.
pub fn solve_volterra(spec: &ProcessSpec, boundary: &BoundarySpec, config: &SolverConfig) -> Result<VolterraSolution> {
    let n = config.steps()?;
    let kernel = Kernel::new(spec, boundary)?;
    let (t0, x0) = (spec.t0, spec.x0);
    let s0 = boundary.value(t0);
    if !(x0 < s0) {
        return Err(Error::StartsAboveBoundary { x0, boundary: s0 });
    }
    let h = config.step;
    let knots: Vec<f64> = (0..=n).map(|k| t0 + h * k as f64).collect();
    let diag: Vec<f64> = std::iter::once(Ok(0.0))
        .chain(
            knots[1..]
                .iter()
                .map(|&t| psi_diagonal_with(spec, boundary, t, h, config.diagonal_tolerance)),
        )
        .collect::<Result<_>>()?;

    let raw = match config.scheme {
        Scheme::ProductIntegration => product_integration(&kernel, x0, t0, h, n, config.refinement, &diag)?,
        Scheme::Simpson => simpson(&kernel, x0, t0, &knots, &diag)?,
    };

    let mut clamped = 0;
    let mut diagnostics = Vec::with_capacity(n + 1);
    let values: Vec<f64> = raw
        .iter()
        .zip(&knots)
        .zip(&diag)
        .map(|((&g, &t), &psi_diag)| {
            let negative = g < 0.0;
            clamped += negative as usize;
            diagnostics.push(DiagnosticRow {
                t,
                psi_diag,
                clamped: negative,
            });
            g.max(0.0)
        })
        .collect();
    if let Some(bad) = values.iter().find(|v| !v.is_finite()) {
        return Err(Error::IllConditioned {
            t: f64::NAN,
            pivot: *bad,
        });
    }
    Ok(VolterraSolution {
        density: DensityGrid::new(knots, values, DensityMethod::Volterra)?,
        raw,
        diagnostics,
        clamped,
    })
}

fn forcing(now: &Instant, x0: f64, start: &Instant) -> f64 {
    if now.t <= start.t {
        return 0.0;
    }
    // a non-positive variance here only happens within rounding of t0,
    // where the first-passage density vanishes
    Kernel::psi(now, x0, start).map_or(0.0, |p| -2.0 * p)
}

fn pivot(t: f64, diag_weight: f64) -> Result<f64> {
    let p = 1.0 - 2.0 * diag_weight;
    if p.abs() < 1e-10 {
        return Err(Error::IllConditioned { t, pivot: p });
    }
    Ok(p)
}

fn simpson(kernel: &Kernel, x0: f64, t0: f64, knots: &[f64], diag: &[f64]) -> Result<Vec<f64>> {
    let n = knots.len() - 1;
    let h = knots[1] - knots[0];
    let start = kernel.at(t0);
    let points: Vec<Instant> = knots.iter().map(|&t| kernel.at(t)).collect();
    let mut g = vec![0.0; n + 1];
    let mut w = vec![0.0; n + 1];
    for k in 1..=n {
        simpson_weights(k, h, &mut w);
        let now = &points[k];
        let mut acc = 0.0;
        for j in 1..k {
            let then = &points[j];
            acc += w[j] * g[j] * Kernel::psi(now, then.s, then).unwrap_or(0.0);
        }
        let rhs = forcing(now, x0, &start) + 2.0 * acc;
        g[k] = rhs / pivot(now.t, w[k] * diag[k])?;
    }
    Ok(g)
}

/// Simpson weights on nodes `0..=k`; odd `k` closes with a trapezoid panel.
fn simpson_weights(k: usize, h: f64, w: &mut [f64]) {
    w[..=k].iter_mut().for_each(|x| *x = 0.0);
    if k == 1 {
        w[0] = 0.5 * h;
        w[1] = 0.5 * h;
        return;
    }
    let m = if k.is_multiple_of(2) { k } else { k - 1 };
    for (j, x) in w[..=m].iter_mut().enumerate() {
        *x = h / 3.0
            * if j == 0 || j == m {
                1.0
            } else if j % 2 == 1 {
                4.0
            } else {
                2.0
            };
    }
    if m < k {
        w[m] += 0.5 * h;
        w[k] += 0.5 * h;
    }
}

#[inline]
fn quadratic_basis(x: f64) -> [f64; 3] {
    [0.5 * (x - 1.0) * (x - 2.0), -x * (x - 2.0), 0.5 * x * (x - 1.0)]
}

fn product_integration(
    kernel: &Kernel,
    x0: f64,
    t0: f64,
    h: f64,
    n: usize,
    refinement: usize,
    diag: &[f64],
) -> Result<Vec<f64>> {
    // fine grid: `per` Simpson subintervals per solver step
    let per = 2 * refinement;
    let delta = h / per as f64;
    let start = kernel.at(t0);
    let fine: Vec<Instant> = (0..=n * per).map(|i| kernel.at(t0 + delta * i as f64)).collect();
    let forcing_fine: Vec<f64> = fine.iter().map(|p| forcing(p, x0, &start)).collect();

    // remainder R = g - F on the solver grid
    let mut remainder = vec![0.0; n + 1];
    let mut g = vec![0.0; n + 1];
    let mut weights = vec![0.0; n + 1];
    let mut kernel_row = vec![0.0; n * per + 1];

    for k in 1..=n {
        let last = k * per;
        let now = &fine[last];
        for (i, then) in fine[..last].iter().enumerate() {
            kernel_row[i] = Kernel::psi(now, then.s, then).unwrap_or(0.0);
        }
        kernel_row[last] = diag[k];

        weights[..=k].iter_mut().for_each(|w| *w = 0.0);
        let mut forced = 0.0;
        let mut segment = |from: usize, panels: usize, nodes: [usize; 3], offset: f64, linear: bool| {
            let lo = from * per;
            let count = panels * per;
            for i in 0..=count {
                let simpson = if i == 0 || i == count {
                    1.0
                } else if i % 2 == 1 {
                    4.0
                } else {
                    2.0
                };
                let kw = kernel_row[lo + i] * simpson * delta / 3.0;
                forced += forcing_fine[lo + i] * kw;
                let x = offset + i as f64 / per as f64;
                if linear {
                    weights[nodes[0]] += (1.0 - x) * kw;
                    weights[nodes[1]] += x * kw;
                } else {
                    let basis = quadratic_basis(x);
                    for (node, b) in nodes.iter().zip(basis) {
                        weights[*node] += b * kw;
                    }
                }
            }
        };
        let mut p = 0;
        while p + 2 <= k {
            segment(p, 2, [p, p + 1, p + 2], 0.0, false);
            p += 2;
        }
        if p < k {
            if k >= 2 {
                segment(p, 1, [k - 2, k - 1, k], 1.0, false);
            } else {
                segment(0, 1, [0, 1, 1], 0.0, true);
            }
        }

        let history: f64 = weights[..k].iter().zip(&remainder[..k]).map(|(w, r)| w * r).sum();
        remainder[k] = 2.0 * (forced + history) / pivot(now.t, weights[k])?;
        g[k] = forcing_fine[last] + remainder[k];
    }
    Ok(g)
}
