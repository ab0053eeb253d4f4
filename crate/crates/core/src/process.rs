//! Gaussian process specifications and Gauss-Markov analytics.
//!
//! A Gauss-Markov process is described by a mean `m(t)` and a factored
//! covariance `c(s,t) = h1(s) h2(t)` for `s <= t`. From the factors we get the
//! normal transition density, the Fokker-Planck coefficients and the time
//! change `r(t) = h1(t)/h2(t)` that maps the process onto a standard Wiener
//! process. Stationary processes given by a correlation function `gamma` are
//! represented separately; they are Markov only when `gamma` factorizes.

use std::f64::consts::PI;
use std::fmt;
use std::sync::Arc;

use crate::boundary::BoundarySpec;
use crate::error::{Error, Result};

/// Shared real-valued function of time.
pub type RealFn = Arc<dyn Fn(f64) -> f64 + Send + Sync>;

/// A function supplied together with its derivative.
#[derive(Clone)]
pub struct SmoothFn {
    value: RealFn,
    derivative: RealFn,
}

impl fmt::Debug for SmoothFn {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("SmoothFn(..)")
    }
}

impl SmoothFn {
    pub fn new<F, G>(value: F, derivative: G) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
        G: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        SmoothFn {
            value: Arc::new(value),
            derivative: Arc::new(derivative),
        }
    }

    pub fn constant(c: f64) -> Self {
        SmoothFn::new(move |_| c, |_| 0.0)
    }

    /// `a + b t`
    pub fn affine(a: f64, b: f64) -> Self {
        SmoothFn::new(move |t| a + b * t, move |_| b)
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        (self.value)(t)
    }

    #[inline]
    pub fn derivative(&self, t: f64) -> f64 {
        (self.derivative)(t)
    }

    /// Largest mismatch between the supplied derivative and a central
    /// difference of the value, measured as `|fd - d| / max(1, |d|)`.
    pub fn derivative_mismatch(&self, grid: &[f64]) -> f64 {
        grid.iter()
            .map(|&t| {
                let step = 1e-5 * t.abs().max(1.0);
                let fd = (self.value(t + step) - self.value(t - step)) / (2.0 * step);
                let d = self.derivative(t);
                (fd - d).abs() / d.abs().max(1.0)
            })
            .fold(0.0, f64::max)
    }
}

/// Working time interval `I`. The end may be infinite.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Interval {
    pub start: f64,
    pub end: f64,
}

impl Interval {
    pub fn new(start: f64, end: f64) -> Result<Self> {
        if !(start.is_finite() && end > start) {
            return Err(Error::Domain(format!("invalid interval [{start}, {end}]")));
        }
        Ok(Interval { start, end })
    }

    pub fn from_start(start: f64) -> Self {
        Interval {
            start,
            end: f64::INFINITY,
        }
    }

    pub fn contains(&self, t: f64) -> bool {
        let slack = 1e-12 * (1.0 + t.abs());
        t >= self.start - slack && t <= self.end + slack
    }

    fn check(&self, t: f64) -> Result<()> {
        if self.contains(t) {
            Ok(())
        } else {
            Err(Error::OutOfInterval {
                t,
                start: self.start,
                end: self.end,
            })
        }
    }
}

/// Mean function `m(t)` with derivative.
#[derive(Debug, Clone)]
pub struct MeanFunction(SmoothFn);

impl MeanFunction {
    pub fn new(f: SmoothFn) -> Self {
        MeanFunction(f)
    }

    pub fn zero() -> Self {
        MeanFunction(SmoothFn::constant(0.0))
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        self.0.value(t)
    }

    #[inline]
    pub fn derivative(&self, t: f64) -> f64 {
        self.0.derivative(t)
    }

    pub fn as_smooth(&self) -> &SmoothFn {
        &self.0
    }
}

/// Factors of a Markov covariance, `c(s,t) = h1(s) h2(t)` for `s <= t`.
#[derive(Clone)]
pub struct CovarianceFactors {
    h1: SmoothFn,
    h2: SmoothFn,
    interval: Interval,
    r_inverse: Option<RealFn>,
}

impl fmt::Debug for CovarianceFactors {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("CovarianceFactors")
            .field("interval", &self.interval)
            .field("closed_form_inverse", &self.r_inverse.is_some())
            .finish()
    }
}

impl CovarianceFactors {
    pub fn new(h1: SmoothFn, h2: SmoothFn, interval: Interval) -> Self {
        CovarianceFactors {
            h1,
            h2,
            interval,
            r_inverse: None,
        }
    }

    /// Registers a closed form for `r^{-1}`; bisection is used otherwise.
    pub fn with_r_inverse<F>(mut self, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.r_inverse = Some(Arc::new(f));
        self
    }

    pub fn with_interval(mut self, interval: Interval) -> Self {
        self.interval = interval;
        self
    }

    pub fn interval(&self) -> Interval {
        self.interval
    }

    pub fn h1(&self) -> &SmoothFn {
        &self.h1
    }

    pub fn h2(&self) -> &SmoothFn {
        &self.h2
    }

    pub fn covariance(&self, s: f64, t: f64) -> f64 {
        let (lo, hi) = if s <= t { (s, t) } else { (t, s) };
        self.h1.value(lo) * self.h2.value(hi)
    }

    #[inline]
    pub fn r(&self, t: f64) -> f64 {
        self.h1.value(t) / self.h2.value(t)
    }

    #[inline]
    pub fn r_prime(&self, t: f64) -> f64 {
        let h2 = self.h2.value(t);
        (self.h1.derivative(t) * h2 - self.h1.value(t) * self.h2.derivative(t)) / (h2 * h2)
    }

    /// Inverse of the time map. Uses the registered closed form when present,
    /// otherwise monotone bisection to 1e-12 relative tolerance.
    pub fn r_inverse(&self, theta: f64) -> Result<f64> {
        if let Some(inv) = &self.r_inverse {
            let t = inv(theta);
            return if t.is_finite() {
                Ok(t)
            } else {
                Err(Error::NonInvertibleTimeMap(theta))
            };
        }
        let mut lo = self.interval.start;
        if self.r(lo) > theta {
            return Err(Error::NonInvertibleTimeMap(lo));
        }
        let mut width = if self.interval.end.is_finite() {
            self.interval.end - lo
        } else {
            1.0
        };
        let mut hi = lo + width;
        while self.r(hi) < theta {
            if !self.interval.end.is_finite() || hi < self.interval.end {
                width *= 2.0;
                hi = lo + width;
            }
            if !hi.is_finite() || width > 1e12 {
                return Err(Error::NonInvertibleTimeMap(hi));
            }
        }
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if self.r(mid) < theta {
                lo = mid;
            } else {
                hi = mid;
            }
            if hi - lo <= 1e-12 * hi.abs().max(1e-300) {
                break;
            }
        }
        Ok(0.5 * (lo + hi))
    }

    /// Checks `h1 h2 > 0` and strict growth of `r` on the interior grid points.
    pub fn check_nonsingular(&self, grid: &[f64]) -> Result<()> {
        for &t in grid {
            let prod = self.h1.value(t) * self.h2.value(t);
            if !(prod > 0.0) {
                return Err(Error::ParameterConstraint(format!(
                    "h1(t) h2(t) = {prod} is not positive at t = {t}"
                )));
            }
            if !(self.r_prime(t) > 0.0) {
                return Err(Error::NonInvertibleTimeMap(t));
            }
        }
        Ok(())
    }
}

/// Stationary correlation `gamma(t)` with `gamma(0) = 1`.
///
/// The supplied evaluators describe `gamma` and `gamma'` for `t >= 0`; the
/// even extension is applied automatically. The second derivative is only
/// needed for mean-square differentiable correlations.
#[derive(Clone)]
pub struct StationaryCorrelation {
    gamma: SmoothFn,
    second_derivative: Option<RealFn>,
}

impl fmt::Debug for StationaryCorrelation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("StationaryCorrelation")
            .field("gamma(0)", &self.gamma.value(0.0))
            .finish()
    }
}

impl StationaryCorrelation {
    pub fn new(gamma: SmoothFn) -> Result<Self> {
        let g0 = gamma.value(0.0);
        if (g0 - 1.0).abs() > 1e-12 {
            return Err(Error::ParameterConstraint(format!("gamma(0) must be 1, got {g0}")));
        }
        Ok(StationaryCorrelation {
            gamma,
            second_derivative: None,
        })
    }

    pub fn with_second_derivative<F>(mut self, f: F) -> Self
    where
        F: Fn(f64) -> f64 + Send + Sync + 'static,
    {
        self.second_derivative = Some(Arc::new(f));
        self
    }

    /// `gamma(t) = exp(-beta |t|) cos(alpha t)`.
    pub fn exp_cos(beta: f64, alpha: f64) -> Result<Self> {
        if !(beta > 0.0) || !alpha.is_finite() {
            return Err(Error::ParameterConstraint(format!(
                "exp-cos correlation needs beta > 0 (got beta={beta}, alpha={alpha})"
            )));
        }
        StationaryCorrelation::new(SmoothFn::new(
            move |t| (-beta * t).exp() * (alpha * t).cos(),
            move |t| -(-beta * t).exp() * (beta * (alpha * t).cos() + alpha * (alpha * t).sin()),
        ))
    }

    /// `gamma(t) = (1 + beta |t|) exp(-beta |t|)`, mean-square differentiable.
    pub fn damped_linear(beta: f64) -> Result<Self> {
        if !(beta > 0.0) {
            return Err(Error::ParameterConstraint(format!("beta must be > 0, got {beta}")));
        }
        Ok(StationaryCorrelation::new(SmoothFn::new(
            move |t| (1.0 + beta * t) * (-beta * t).exp(),
            move |t| -beta * beta * t * (-beta * t).exp(),
        ))?
        .with_second_derivative(move |t| -beta * beta * (1.0 - beta * t) * (-beta * t).exp()))
    }

    #[inline]
    pub fn gamma(&self, t: f64) -> f64 {
        self.gamma.value(t.abs())
    }

    #[inline]
    pub fn gamma_prime(&self, t: f64) -> f64 {
        if t >= 0.0 {
            self.gamma.derivative(t)
        } else {
            -self.gamma.derivative(-t)
        }
    }

    pub fn gamma_second(&self, t: f64) -> Option<f64> {
        self.second_derivative.as_ref().map(|f| f(t.abs()))
    }

    pub fn covariance(&self, s: f64, t: f64) -> f64 {
        self.gamma(t - s)
    }

    /// Returns `-gamma''(0)`, the variance of the derivative process, when
    /// the correlation is mean-square differentiable.
    pub fn derivative_variance(&self) -> Result<f64> {
        let slope = self.gamma.derivative(0.0);
        if slope.abs() > 1e-8 {
            return Err(Error::NotMsDifferentiable(format!("gamma'(0) = {slope}")));
        }
        let curvature = self
            .gamma_second(0.0)
            .ok_or_else(|| Error::NotMsDifferentiable("gamma''(0) not supplied".into()))?;
        if curvature >= -1e-12 {
            return Err(Error::NotMsDifferentiable(format!("gamma''(0) = {curvature}")));
        }
        Ok(-curvature)
    }
}

#[derive(Debug, Clone)]
pub enum Covariance {
    Factored(CovarianceFactors),
    Stationary(StationaryCorrelation),
}

/// Family label carried by a [`ProcessSpec`], for reporting.
#[derive(Debug, Clone, PartialEq)]
pub enum ProcessFamily {
    Wiener {
        beta1: f64,
        c: f64,
        sigma: f64,
        c1: f64,
    },
    OrnsteinUhlenbeck {
        beta1: f64,
        beta2: f64,
        c: f64,
        c1: f64,
        c2: f64,
        sigma: f64,
    },
    ExpCos {
        beta: f64,
        alpha: f64,
    },
    Custom,
}

/// A Gaussian process: mean, covariance and deterministic start `X(t0) = x0`.
#[derive(Debug, Clone)]
pub struct ProcessSpec {
    pub mean: MeanFunction,
    pub covariance: Covariance,
    pub x0: f64,
    pub t0: f64,
    pub family: ProcessFamily,
}

/// Conditional mean and variance of `X(t)` given `X(tau) = y`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TransitionParams {
    pub mean: f64,
    pub variance: f64,
}

#[inline]
pub(crate) fn normal_pdf(x: f64, mean: f64, variance: f64) -> f64 {
    let z = x - mean;
    (-0.5 * z * z / variance).exp() / (2.0 * PI * variance).sqrt()
}

impl ProcessSpec {
    pub fn factored(mean: MeanFunction, factors: CovarianceFactors) -> Self {
        ProcessSpec {
            mean,
            covariance: Covariance::Factored(factors),
            x0: 0.0,
            t0: 0.0,
            family: ProcessFamily::Custom,
        }
    }

    pub fn stationary(correlation: StationaryCorrelation) -> Self {
        ProcessSpec {
            mean: MeanFunction::zero(),
            covariance: Covariance::Stationary(correlation),
            x0: 0.0,
            t0: 0.0,
            family: ProcessFamily::Custom,
        }
    }

    pub fn with_start(mut self, x0: f64, t0: f64) -> Self {
        self.x0 = x0;
        self.t0 = t0;
        self
    }

    /// Zero-mean, unit-variance stationary process with `gamma(t) = exp(-beta|t|)`
    /// in factored form `h1(t) = e^{beta t}`, `h2(t) = e^{-beta t}`.
    pub fn stationary_ou(beta: f64) -> Result<Self> {
        make_ou_family(0.0, -beta, 0.0, 1.0, 0.0, (2.0 * beta).sqrt()).map(|mut spec| {
            spec.family = ProcessFamily::ExpCos { beta, alpha: 0.0 };
            spec
        })
    }

    /// Stationary process with correlation `exp(-beta|t|) cos(alpha t)`.
    /// For `alpha == 0` the factored (Markov) representation is returned.
    pub fn exp_cos(beta: f64, alpha: f64) -> Result<Self> {
        if alpha == 0.0 {
            return ProcessSpec::stationary_ou(beta);
        }
        let mut spec = ProcessSpec::stationary(StationaryCorrelation::exp_cos(beta, alpha)?);
        spec.family = ProcessFamily::ExpCos { beta, alpha };
        Ok(spec)
    }

    pub fn factors(&self) -> Result<&CovarianceFactors> {
        match &self.covariance {
            Covariance::Factored(f) => Ok(f),
            Covariance::Stationary(_) => Err(Error::Domain(
                "operation requires a factored (Gauss-Markov) covariance".into(),
            )),
        }
    }

    pub fn correlation(&self) -> Option<&StationaryCorrelation> {
        match &self.covariance {
            Covariance::Stationary(c) => Some(c),
            Covariance::Factored(_) => None,
        }
    }

    pub fn covariance_at(&self, s: f64, t: f64) -> f64 {
        match &self.covariance {
            Covariance::Factored(f) => f.covariance(s, t),
            Covariance::Stationary(c) => c.covariance(s, t),
        }
    }

    /// Conditional law of `X(t)` given `X(tau) = y`, for factored covariances.
    pub fn transition_params(&self, y: f64, tau: f64, t: f64) -> Result<TransitionParams> {
        let f = self.factors()?;
        f.interval.check(tau)?;
        f.interval.check(t)?;
        let h2t = f.h2.value(t);
        let ratio = h2t / f.h2.value(tau);
        let mean = self.mean.value(t) + ratio * (y - self.mean.value(tau));
        let variance = h2t * (f.h1.value(t) - ratio * f.h1.value(tau));
        Ok(TransitionParams { mean, variance })
    }

    /// Normal transition density `f(x, t | y, tau)` and its parameters.
    pub fn transition_density(&self, y: f64, tau: f64, x: f64, t: f64) -> Result<(f64, TransitionParams)> {
        let params = self.transition_params(y, tau, t)?;
        let f = self.factors()?;
        let scale = (f.h1.value(t) * f.h2.value(t)).abs().max(f64::MIN_POSITIVE);
        if !(t > tau) || params.variance <= 1e-14 * scale {
            return Err(Error::DegenerateVariance {
                variance: params.variance,
                from: tau,
                to: t,
            });
        }
        Ok((normal_pdf(x, params.mean, params.variance), params))
    }

    /// Drift `A1(x,t)` and infinitesimal variance `A2(t)` of the
    /// Fokker-Planck equation satisfied by the transition density.
    pub fn fokker_planck_coefficients(&self, x: f64, t: f64) -> Result<(f64, f64)> {
        let f = self.factors()?;
        f.interval.check(t)?;
        let h2 = f.h2.value(t);
        if h2 == 0.0 {
            return Err(Error::Domain(format!("h2 vanishes at t = {t}")));
        }
        let m = self.mean.value(t);
        let a1 = self.mean.derivative(t) + (x - m) * f.h2.derivative(t) / h2;
        let a2 = h2 * h2 * f.r_prime(t);
        if !(a2 > 0.0) {
            return Err(Error::NonpositiveDiffusion(a2));
        }
        Ok((a1, a2))
    }
}

/// Outcome of the triple-product Markov test.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MarkovCheck {
    pub holds: bool,
    /// Largest `|c(s,u) - c(s,t)c(t,u)/c(t,t)| / |c(s,u)|` over the triples.
    pub max_violation: f64,
}

/// Tests `c(s,u) = c(s,t) c(t,u) / c(t,t)` on the given `(s,t,u)` triples.
pub fn markov_condition_check<C>(cov: C, triples: &[(f64, f64, f64)], tol: f64) -> Result<MarkovCheck>
where
    C: Fn(f64, f64) -> f64,
{
    let mut worst = 0.0_f64;
    for &(s, t, u) in triples {
        if !(s <= t && t <= u) {
            return Err(Error::Domain(format!("triple ({s}, {t}, {u}) is not ordered")));
        }
        let ctt = cov(t, t);
        if !(ctt > 0.0) {
            return Err(Error::Domain(format!("c(t,t) = {ctt} is not positive at t = {t}")));
        }
        let lhs = cov(s, u);
        let diff = (lhs - cov(s, t) * cov(t, u) / ctt).abs();
        let violation = if diff == 0.0 {
            0.0
        } else if lhs != 0.0 {
            diff / lhs.abs()
        } else {
            f64::INFINITY
        };
        worst = worst.max(violation);
    }
    Ok(MarkovCheck {
        holds: worst <= tol,
        max_violation: worst,
    })
}

fn ou_constraint(c1: f64, c2: f64, beta2: f64, sigma: f64) -> f64 {
    c1 * c2 - sigma * sigma / (2.0 * beta2)
}

/// First stationary-transition family: `m(t) = beta1 t + c`,
/// `c(s,t) = sigma^2 s + c1` for `s <= t`.
pub fn make_wiener_family(beta1: f64, c: f64, sigma: f64, c1: f64) -> Result<ProcessSpec> {
    if sigma == 0.0 || !sigma.is_finite() {
        return Err(Error::ParameterConstraint("sigma != 0".into()));
    }
    if !(c1 >= 0.0) {
        return Err(Error::ParameterConstraint(format!("c1 >= 0 (got {c1})")));
    }
    let s2 = sigma * sigma;
    let factors = CovarianceFactors::new(
        SmoothFn::affine(c1, s2),
        SmoothFn::constant(1.0),
        Interval::from_start(0.0),
    )
    .with_r_inverse(move |theta| (theta - c1) / s2);
    let mut spec = ProcessSpec::factored(MeanFunction::new(SmoothFn::affine(c, beta1)), factors).with_start(c, 0.0);
    spec.family = ProcessFamily::Wiener { beta1, c, sigma, c1 };
    Ok(spec)
}

/// Second stationary-transition family:
/// `m(t) = -beta1/beta2 + c e^{beta2 t}`,
/// `c(s,t) = c1 e^{beta2 t} [c2 e^{beta2 s} - sigma^2/(2 c1 beta2) e^{-beta2 s}]`.
pub fn make_ou_family(beta1: f64, beta2: f64, c: f64, c1: f64, c2: f64, sigma: f64) -> Result<ProcessSpec> {
    if sigma == 0.0 || !sigma.is_finite() {
        return Err(Error::ParameterConstraint("sigma != 0".into()));
    }
    if c1 == 0.0 {
        return Err(Error::ParameterConstraint("c1 != 0".into()));
    }
    if beta2 == 0.0 {
        return Err(Error::ParameterConstraint("beta2 != 0".into()));
    }
    let slack = ou_constraint(c1, c2, beta2, sigma);
    if slack < 0.0 {
        return Err(Error::ParameterConstraint(format!(
            "c1 c2 - sigma^2/(2 beta2) >= 0 (got {slack})"
        )));
    }
    let s2 = sigma * sigma;
    let a = c1 * c2;
    let b = s2 / (2.0 * beta2);
    let h1 = SmoothFn::new(
        move |s| a * (beta2 * s).exp() - b * (-beta2 * s).exp(),
        move |s| beta2 * (a * (beta2 * s).exp() + b * (-beta2 * s).exp()),
    );
    let h2 = SmoothFn::new(move |t| (beta2 * t).exp(), move |t| beta2 * (beta2 * t).exp());
    // r(t) = a - b e^{-2 beta2 t}
    let factors = CovarianceFactors::new(h1, h2, Interval::from_start(0.0))
        .with_r_inverse(move |theta| -((a - theta) / b).ln() / (2.0 * beta2));
    let mean = MeanFunction::new(SmoothFn::new(
        move |t| -beta1 / beta2 + c * (beta2 * t).exp(),
        move |t| c * beta2 * (beta2 * t).exp(),
    ));
    let start = -beta1 / beta2 + c;
    let mut spec = ProcessSpec::factored(mean, factors).with_start(start, 0.0);
    spec.family = ProcessFamily::OrnsteinUhlenbeck {
        beta1,
        beta2,
        c,
        c1,
        c2,
        sigma,
    };
    Ok(spec)
}

/// Time change onto the standard Wiener process, `X(t) = m(t) + h2(t) W(r(t))`.
#[derive(Debug, Clone)]
pub struct WienerTransform {
    spec: ProcessSpec,
    boundary: BoundarySpec,
    /// Transformed initial state.
    pub x0_star: f64,
    /// Transformed initial time `r(t0)`.
    pub theta0: f64,
}

/// Builds the Wiener-process image of an FPT problem for a factored process.
pub fn transform_to_wiener(spec: &ProcessSpec, boundary: &BoundarySpec) -> Result<WienerTransform> {
    let f = spec.factors()?;
    let (t0, x0) = (spec.t0, spec.x0);
    let s0 = boundary.value(t0);
    if !(x0 < s0) {
        return Err(Error::StartsAboveBoundary { x0, boundary: s0 });
    }
    let end = if f.interval.end.is_finite() {
        f.interval.end
    } else {
        t0 + 20.0
    };
    for i in 1..=64 {
        let t = t0 + (end - t0) * i as f64 / 64.0;
        if !(f.r_prime(t) > 0.0) {
            return Err(Error::NonInvertibleTimeMap(t));
        }
    }
    let theta0 = f.r(t0);
    let x0_star = (x0 - spec.mean.value(t0)) / f.h2.value(t0);
    Ok(WienerTransform {
        spec: spec.clone(),
        boundary: boundary.clone(),
        x0_star,
        theta0,
    })
}

impl WienerTransform {
    fn factors(&self) -> &CovarianceFactors {
        match &self.spec.covariance {
            Covariance::Factored(f) => f,
            Covariance::Stationary(_) => unreachable!("checked at construction"),
        }
    }

    pub fn r(&self, t: f64) -> f64 {
        self.factors().r(t)
    }

    pub fn r_prime(&self, t: f64) -> f64 {
        self.factors().r_prime(t)
    }

    pub fn r_inverse(&self, theta: f64) -> Result<f64> {
        self.factors().r_inverse(theta)
    }

    /// `S*(theta) = {S[r^{-1}(theta)] - m[r^{-1}(theta)]} / h2[r^{-1}(theta)]`.
    pub fn boundary_star(&self, theta: f64) -> Result<f64> {
        let t = self.r_inverse(theta)?;
        Ok(self.boundary_star_at(t))
    }

    fn boundary_star_at(&self, t: f64) -> f64 {
        (self.boundary.value(t) - self.spec.mean.value(t)) / self.factors().h2.value(t)
    }

    fn boundary_star_derivative_at(&self, t: f64) -> f64 {
        let f = self.factors();
        let h2 = f.h2.value(t);
        let gap = self.boundary.value(t) - self.spec.mean.value(t);
        let dgap = self.boundary.derivative(t) - self.spec.mean.derivative(t);
        (dgap / h2 - gap * f.h2.derivative(t) / (h2 * h2)) / f.r_prime(t)
    }

    /// `dS*/dtheta`.
    pub fn boundary_star_derivative(&self, theta: f64) -> Result<f64> {
        let t = self.r_inverse(theta)?;
        Ok(self.boundary_star_derivative_at(t))
    }

    /// The transformed boundary as a custom boundary in the `theta` variable.
    /// Points where `r^{-1}` fails evaluate to NaN.
    pub fn transformed_boundary(&self) -> BoundarySpec {
        let a = self.clone();
        let b = self.clone();
        BoundarySpec::custom(SmoothFn::new(
            move |theta| a.boundary_star(theta).unwrap_or(f64::NAN),
            move |theta| b.boundary_star_derivative(theta).unwrap_or(f64::NAN),
        ))
    }

    /// Maps a Wiener FPT density value at `theta = r(t)` back to the original
    /// time scale: `g(t) = r'(t) g_W(r(t))`.
    pub fn pullback(&self, t: f64, wiener_density: f64) -> f64 {
        self.r_prime(t) * wiener_density
    }
}
