//! Closed-form first-passage-time densities.

use std::f64::consts::{PI, SQRT_2};

use statrs::function::erf::erfc;

use crate::boundary::{BoundarySpec, Soglia};
use crate::density::{DensityGrid, DensityMethod};
use crate::error::{Error, Result};
use crate::process::{normal_pdf, ProcessSpec, StationaryCorrelation};
use crate::quadrature::adaptive_simpson;

pub(crate) fn normal_cdf(x: f64) -> f64 {
    0.5 * erfc(-x / SQRT_2)
}

/// FPT density of the zero-mean, unit-variance process with correlation
/// `exp(-beta|t|)` started at 0, through the [`Soglia`] boundary with the same
/// `beta`.
#[derive(Debug, Clone)]
pub struct ClosedFormSoglia {
    process: ProcessSpec,
    boundary: Soglia,
}

impl ClosedFormSoglia {
    pub fn new(beta: f64, d: f64) -> Result<Self> {
        Ok(ClosedFormSoglia {
            process: ProcessSpec::stationary_ou(beta)?,
            boundary: Soglia::new(beta, d)?,
        })
    }

    pub fn boundary(&self) -> Soglia {
        self.boundary
    }

    pub fn density(&self, t: f64) -> Result<f64> {
        if !(t > 0.0) {
            return Err(Error::Domain(format!("closed form needs t > 0, got {t}")));
        }
        let Soglia { beta, d } = self.boundary;
        let s = self.boundary.value(t);
        let f = match self.process.transition_density(0.0, 0.0, s, t) {
            Ok((f, _)) => f,
            // vanishing variance while S(t) -> d > 0: the Gaussian factor is zero
            Err(Error::DegenerateVariance { .. }) => return Ok(0.0),
            Err(e) => return Err(e),
        };
        if f == 0.0 {
            return Ok(0.0);
        }
        let u = (2.0 * beta * t).exp_m1();
        let q = (1.0 + 8.0 * (-4.0 * d * d / u).exp()).sqrt();
        Ok(4.0 * d * beta * (beta * t).exp() / u * q / (1.0 + q) * f)
    }

    /// Density on the given knots; knots at `t <= 0` get the limit value 0.
    pub fn grid(&self, knots: Vec<f64>) -> Result<DensityGrid> {
        let values = knots
            .iter()
            .map(|&t| if t > 0.0 { self.density(t) } else { Ok(0.0) })
            .collect::<Result<Vec<_>>>()?;
        DensityGrid::new(knots, values, DensityMethod::ClosedForm)
    }

    /// Averages of the density over each histogram bin, so that it can be
    /// compared bin by bin with a Monte Carlo histogram.
    pub fn bin_averages(&self, histogram: &DensityGrid) -> Result<DensityGrid> {
        let w = histogram
            .bin_width()
            .ok_or_else(|| Error::InvalidGrid("bin averages need a histogram grid".into()))?;
        let f = |t: f64| if t > 0.0 { self.density(t).unwrap_or(0.0) } else { 0.0 };
        let values = histogram
            .knots()
            .iter()
            .map(|&mid| {
                let (lo, hi) = ((mid - 0.5 * w).max(0.0), mid + 0.5 * w);
                adaptive_simpson(f, lo, hi, 1e-11) / w
            })
            .collect();
        DensityGrid::new(histogram.knots().to_vec(), values, DensityMethod::ClosedForm)
    }
}

/// Closed-form FPT density through the boundary family [`Soglia`].
pub fn closed_form_soglia(beta: f64, d: f64, t: f64) -> Result<f64> {
    ClosedFormSoglia::new(beta, d)?.density(t)
}

/// Standard Wiener FPT density through `a + b theta` starting from `x0` at `theta0`.
pub fn wiener_linear_fpt(a: f64, b: f64, x0: f64, theta0: f64, theta: f64) -> Result<f64> {
    let gap0 = a + b * theta0 - x0;
    if !(gap0 > 0.0) {
        return Err(Error::StartsAboveBoundary {
            x0,
            boundary: a + b * theta0,
        });
    }
    if theta < theta0 {
        return Err(Error::Domain(format!("theta = {theta} precedes theta0 = {theta0}")));
    }
    let s = theta - theta0;
    if s == 0.0 {
        return Ok(0.0);
    }
    let gap = a + b * theta - x0;
    Ok(gap0 / (2.0 * PI * s * s * s).sqrt() * (-gap * gap / (2.0 * s)).exp())
}

/// First term `W1(t|x0)` of the alternating series for the FPT density of a
/// mean-square differentiable stationary process; an upper bound for the density.
///
/// `W1 = E[(Z - S'(t))^+ | X(t) = S(t)] p_X(S(t))`, where `(X(t), Z(t) = X'(t))`
/// is bivariate normal conditionally on `X(0) = x0`.
pub fn w1_upper_bound(correlation: &StationaryCorrelation, boundary: &BoundarySpec, x0: f64, t: f64) -> Result<f64> {
    let lambda = correlation.derivative_variance()?;
    let s0 = boundary.value(0.0);
    if !(x0 < s0) {
        return Err(Error::StartsAboveBoundary { x0, boundary: s0 });
    }
    if !(t > 0.0) {
        return Ok(0.0);
    }
    let g = correlation.gamma(t);
    let gp = correlation.gamma_prime(t);
    let (mean_x, var_x) = (g * x0, 1.0 - g * g);
    if var_x <= 0.0 {
        return Ok(0.0);
    }
    let (mean_z, var_z, cov_xz) = (gp * x0, lambda - gp * gp, -g * gp);

    let s = boundary.value(t);
    let slope = boundary.derivative(t);
    let cond_mean = mean_z + cov_xz / var_x * (s - mean_x);
    let cond_var = var_z - cov_xz * cov_xz / var_x;
    let excess = cond_mean - slope;
    let partial = if cond_var > 0.0 {
        let sd = cond_var.sqrt();
        let k = excess / sd;
        excess * normal_cdf(k) + sd * (-0.5 * k * k).exp() / (2.0 * PI).sqrt()
    } else {
        excess.max(0.0)
    };
    Ok(normal_pdf(s, mean_x, var_x) * partial)
}

#[cfg(test)]
mod tests {
    use super::*;
    use nalgebra::{Matrix3, Vector3};

    #[test]
    fn closed_form_vanishes_at_origin() {
        for &(t, bound) in &[(1e-3, 1e-9), (1e-4, 1e-100), (1e-5, 0.0)] {
            let g = closed_form_soglia(0.5, 0.25, t).unwrap();
            assert!(g <= bound, "t={t} g={g}");
        }
        assert!(closed_form_soglia(0.5, 0.25, 0.0).is_err());
    }

    #[test]
    fn closed_form_mode_moves_with_d() {
        let scan = |d: f64| {
            let cf = ClosedFormSoglia::new(0.5, d).unwrap();
            let knots: Vec<f64> = (1..=20_000).map(|i| i as f64 * 5e-4).collect();
            cf.grid(knots).unwrap().mode()
        };
        let (m1, p1) = scan(0.25);
        let (m2, p2) = scan(0.5);
        assert!(m2 > m1 && p2 < p1, "({m1},{p1}) vs ({m2},{p2})");
    }

    #[test]
    fn closed_form_mass_regression() {
        let cf = ClosedFormSoglia::new(0.5, 0.25).unwrap();
        let mass = adaptive_simpson(|t| if t > 0.0 { cf.density(t).unwrap() } else { 0.0 }, 0.0, 50.0, 1e-8);
        assert!(mass > 0.0 && mass <= 1.0 + 1e-6);
        // baseline from an independent adaptive quadrature of the displayed formula
        assert!((mass - 1.0).abs() < 1e-6, "mass {mass}");
    }

    #[test]
    fn wiener_constant_boundary_is_sure() {
        // mass on [0, T] = 2 (1 - Phi(1/sqrt T))
        let t_max: f64 = 1e4;
        let mass = adaptive_simpson(
            |th| wiener_linear_fpt(1.0, 0.0, 0.0, 0.0, th).unwrap(),
            0.0,
            t_max,
            1e-10,
        );
        let exact = 2.0 * (1.0 - normal_cdf(1.0 / t_max.sqrt()));
        assert!((mass - exact).abs() < 1e-6);
        assert!(mass >= 0.99);
    }

    #[test]
    fn wiener_linear_mass_matches_exponential() {
        let f = |th: f64| wiener_linear_fpt(1.0, 1.0, 0.0, 0.0, th).unwrap();
        let mass = adaptive_simpson(f, 0.0, 200.0, 1e-10);
        assert!((mass - (-2.0_f64).exp()).abs() < 1e-4);
    }

    #[test]
    fn wiener_translation_invariance() {
        for &th in &[0.1, 1.0, 3.3] {
            let a = wiener_linear_fpt(2.0, 0.4, 1.0, 0.0, th).unwrap();
            let b = wiener_linear_fpt(1.0, 0.4, 0.0, 0.0, th).unwrap();
            assert!((a - b).abs() < 1e-15);
        }
        assert!(matches!(
            wiener_linear_fpt(1.0, 0.0, 1.0, 0.0, 1.0),
            Err(Error::StartsAboveBoundary { .. })
        ));
    }

    #[test]
    fn w1_rejects_non_differentiable_correlation() {
        let ec = StationaryCorrelation::exp_cos(0.5, 0.25).unwrap();
        let b = BoundarySpec::constant(1.0);
        assert!(matches!(
            w1_upper_bound(&ec, &b, 0.0, 1.0),
            Err(Error::NotMsDifferentiable(_))
        ));
    }

    /// Density of (X(t), Z(t)) given X(0) = x0, from the full 3x3 joint law,
    /// integrated over z by quadrature.
    fn w1_by_quadrature(beta: f64, s: f64, slope: f64, x0: f64, t: f64) -> f64 {
        let g = |u: f64| (1.0 + beta * u.abs()) * (-beta * u.abs()).exp();
        let gp = |u: f64| -beta * beta * u * (-beta * u.abs()).exp();
        let lambda = beta * beta;
        // order: X(0), X(t), Z(t)
        let cov = Matrix3::new(1.0, g(t), gp(t), g(t), 1.0, 0.0, gp(t), 0.0, lambda);
        let inv = cov.try_inverse().unwrap();
        let det = cov.determinant();
        let joint = |x: f64, z: f64| {
            let v = Vector3::new(x0, x, z);
            let q = (v.transpose() * inv * v)[(0, 0)];
            (-0.5 * q).exp() / ((2.0 * PI).powi(3) * det).sqrt()
        };
        let marginal = (-0.5 * x0 * x0).exp() / (2.0 * PI).sqrt();
        adaptive_simpson(|z| (z - slope) * joint(s, z) / marginal, slope, slope + 40.0, 1e-13)
    }

    #[test]
    fn w1_closed_form_matches_quadrature() {
        let beta = 1.0;
        let corr = StationaryCorrelation::damped_linear(beta).unwrap();
        for &(x0, t) in &[(0.0, 1.0), (0.3, 0.5), (-0.7, 2.0)] {
            let b = BoundarySpec::linear(1.0, -0.1);
            let got = w1_upper_bound(&corr, &b, x0, t).unwrap();
            let want = w1_by_quadrature(beta, b.value(t), b.derivative(t), x0, t);
            assert!((got - want).abs() < 1e-8, "x0={x0} t={t}: {got} vs {want}");
        }
    }

    #[test]
    fn w1_is_nonnegative() {
        let corr = StationaryCorrelation::damped_linear(1.0).unwrap();
        let b = BoundarySpec::constant(1.0);
        for i in 0..200 {
            let t = i as f64 * 0.05;
            assert!(w1_upper_bound(&corr, &b, 0.0, t).unwrap() >= 0.0);
        }
    }
}
