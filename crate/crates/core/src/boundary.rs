//! Firing thresholds `S(t)` with their time derivatives.

use crate::error::{Error, Result};
use crate::process::SmoothFn;

/// The boundary family for which the Gauss-Markov FPT density with
/// correlation `exp(-beta|t|)` is known in closed form:
///
/// `S(t) = d e^{-bt} {1 - (e^{2bt}-1)/(2d^2) ln[1/4 + 1/4 sqrt(1 + 8 exp(-4d^2/(e^{2bt}-1)))]}`.
///
/// `S(0+) = d` and `S(t) -> 0` as `t` grows. Note the curve is not monotone:
/// it rises above `d` for small `t` before decaying.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Soglia {
    pub beta: f64,
    pub d: f64,
}

/// Pieces shared by the value and the derivative.
struct SogliaTerms {
    decay: f64,
    u: f64,
    u_prime: f64,
    log_term: f64,
    e: f64,
    q: f64,
}

impl Soglia {
    pub fn new(beta: f64, d: f64) -> Result<Self> {
        if !(beta > 0.0 && beta.is_finite()) {
            return Err(Error::Domain(format!("soglia boundary needs beta > 0, got {beta}")));
        }
        if !(d > 0.0 && d.is_finite()) {
            return Err(Error::Domain(format!("soglia boundary needs d > 0, got {d}")));
        }
        Ok(Soglia { beta, d })
    }

    fn near_origin(&self, t: f64) -> bool {
        t < 1e-9 / self.beta
    }

    fn terms(&self, t: f64) -> SogliaTerms {
        let (b, d) = (self.beta, self.d);
        let u = (2.0 * b * t).exp_m1();
        let ratio = 4.0 * d * d / u;
        let e = (-ratio).exp();
        let q = (1.0 + 8.0 * e).sqrt();
        // ln((1+q)/4) written around q = 3 to keep precision for large t
        let q_minus_3 = 8.0 * (-ratio).exp_m1() / (q + 3.0);
        SogliaTerms {
            decay: (-b * t).exp(),
            u,
            u_prime: 2.0 * b * (u + 1.0),
            log_term: (0.25 * q_minus_3).ln_1p(),
            e,
            q,
        }
    }

    /// `S(t)` for `t >= 0`; returns the limit `d` for `t` below `1e-9/beta`.
    pub fn value(&self, t: f64) -> f64 {
        if self.near_origin(t) {
            return self.d;
        }
        let k = self.terms(t);
        k.decay * (self.d - k.u * k.log_term / (2.0 * self.d))
    }

    /// Analytic `S'(t)`; near the origin returns the limit `beta (ln 2 / d - d)`.
    pub fn derivative(&self, t: f64) -> f64 {
        let (b, d) = (self.beta, self.d);
        if self.near_origin(t) {
            return b * (std::f64::consts::LN_2 / d - d);
        }
        let k = self.terms(t);
        let value = k.decay * (d - k.u * k.log_term / (2.0 * d));
        // u L' = 16 d^2 E u' / (u q (1+q)); E/u underflows cleanly to 0 near t=0
        let u_dlog = 16.0 * d * d * k.e * k.u_prime / (k.u * k.q * (1.0 + k.q));
        -b * value - k.decay * (k.u_prime * k.log_term + u_dlog) / (2.0 * d)
    }
}

/// Evaluates the closed-form-family boundary. Errors for `t < 0`, `d <= 0`, `beta <= 0`.
pub fn soglia_eval(beta: f64, d: f64, t: f64) -> Result<f64> {
    let s = Soglia::new(beta, d)?;
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("soglia boundary needs t >= 0, got {t}")));
    }
    Ok(s.value(t))
}

/// Analytic derivative of [`soglia_eval`].
pub fn soglia_derivative(beta: f64, d: f64, t: f64) -> Result<f64> {
    let s = Soglia::new(beta, d)?;
    if !(t >= 0.0) {
        return Err(Error::Domain(format!("soglia boundary needs t >= 0, got {t}")));
    }
    Ok(s.derivative(t))
}

/// Tag describing the boundary family.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum BoundaryKind {
    Soglia { beta: f64, d: f64 },
    Linear { a: f64, b: f64 },
    Constant { a: f64 },
    Custom,
}

/// A threshold `S(t)` with derivative `S'(t)`.
#[derive(Debug, Clone)]
pub enum BoundarySpec {
    Soglia(Soglia),
    /// `a + b t`
    Linear {
        a: f64,
        b: f64,
    },
    Constant(f64),
    Custom(SmoothFn),
}

impl BoundarySpec {
    pub fn soglia(beta: f64, d: f64) -> Result<Self> {
        Soglia::new(beta, d).map(BoundarySpec::Soglia)
    }

    pub fn linear(a: f64, b: f64) -> Self {
        BoundarySpec::Linear { a, b }
    }

    pub fn constant(a: f64) -> Self {
        BoundarySpec::Constant(a)
    }

    pub fn custom(f: SmoothFn) -> Self {
        BoundarySpec::Custom(f)
    }

    pub fn kind(&self) -> BoundaryKind {
        match self {
            BoundarySpec::Soglia(s) => BoundaryKind::Soglia { beta: s.beta, d: s.d },
            BoundarySpec::Linear { a, b } => BoundaryKind::Linear { a: *a, b: *b },
            BoundarySpec::Constant(a) => BoundaryKind::Constant { a: *a },
            BoundarySpec::Custom(_) => BoundaryKind::Custom,
        }
    }

    #[inline]
    pub fn value(&self, t: f64) -> f64 {
        match self {
            BoundarySpec::Soglia(s) => s.value(t),
            BoundarySpec::Linear { a, b } => a + b * t,
            BoundarySpec::Constant(a) => *a,
            BoundarySpec::Custom(f) => f.value(t),
        }
    }

    #[inline]
    pub fn derivative(&self, t: f64) -> f64 {
        match self {
            BoundarySpec::Soglia(s) => s.derivative(t),
            BoundarySpec::Linear { b, .. } => *b,
            BoundarySpec::Constant(_) => 0.0,
            BoundarySpec::Custom(f) => f.derivative(t),
        }
    }

    /// Checks finiteness and that a central difference of `S` matches `S'`
    /// within `rel_tol` (relative to `max(1, |S'|)`) on the grid.
    pub fn check_consistency(&self, grid: &[f64], rel_tol: f64) -> Result<()> {
        for &t in grid {
            let (v, dv) = (self.value(t), self.derivative(t));
            if !(v.is_finite() && dv.is_finite()) {
                return Err(Error::Domain(format!("boundary is not finite at t = {t}")));
            }
        }
        let f = SmoothFn::new(
            {
                let b = self.clone();
                move |t| b.value(t)
            },
            {
                let b = self.clone();
                move |t| b.derivative(t)
            },
        );
        let mismatch = f.derivative_mismatch(grid);
        if mismatch > rel_tol {
            return Err(Error::Domain(format!(
                "boundary derivative disagrees with finite differences (mismatch {mismatch:e})"
            )));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn soglia_limit_at_origin() {
        assert_eq!(soglia_eval(0.5, 0.25, 0.0).unwrap(), 0.25);
        let near = soglia_eval(0.5, 0.25, 1e-8).unwrap();
        assert!((near - 0.25).abs() < 1e-6);
    }

    #[test]
    fn soglia_vanishes_for_large_t() {
        assert!(soglia_eval(0.5, 0.5, 20.0).unwrap() < 1e-3);
        assert!(soglia_eval(0.5, 0.5, 20.0).unwrap() > 0.0);
    }

    #[test]
    fn soglia_domain_errors() {
        assert!(soglia_eval(0.5, 0.25, -0.1).is_err());
        assert!(soglia_eval(0.5, 0.0, 1.0).is_err());
        assert!(soglia_eval(0.5, -1.0, 1.0).is_err());
        assert!(soglia_eval(0.0, 0.25, 1.0).is_err());
        assert!(soglia_derivative(0.5, -0.25, 1.0).is_err());
    }

    #[test]
    fn soglia_flatter_for_smaller_d() {
        let small = soglia_derivative(0.5, 0.25, 1.0).unwrap();
        let large = soglia_derivative(0.5, 0.5, 1.0).unwrap();
        assert!(small.abs() < large.abs());
    }

    #[test]
    fn soglia_derivative_matches_central_difference() {
        for &d in &[0.25, 0.5] {
            for &t in &[0.05, 0.3, 1.0, 2.5, 7.0] {
                let h = 1e-5;
                let fd = (soglia_eval(0.5, d, t + h).unwrap() - soglia_eval(0.5, d, t - h).unwrap()) / (2.0 * h);
                let an = soglia_derivative(0.5, d, t).unwrap();
                assert!((fd - an).abs() <= 1e-8 * an.abs().max(1.0), "d={d} t={t}: {fd} vs {an}");
            }
        }
    }

    #[test]
    fn soglia_derivative_continuous_near_origin() {
        let a = soglia_derivative(0.5, 0.25, 1e-6).unwrap();
        let b = soglia_derivative(0.5, 0.25, 1e-4).unwrap();
        let limit = soglia_derivative(0.5, 0.25, 0.0).unwrap();
        assert!(a.is_finite() && b.is_finite());
        assert!((a - limit).abs() < 1e-4 && (b - limit).abs() < 1e-2);
    }

    #[test]
    fn soglia_decays_after_its_hump() {
        let s = Soglia::new(0.5, 0.5).unwrap();
        for i in 1..=900 {
            let t = 1.0 + i as f64 * 0.01;
            assert!(s.derivative(t) < 0.0, "t={t}");
        }
        // the curve starts at d, rises, then falls below d
        assert!(s.value(0.3) > s.d);
        assert!(s.value(1.0) < s.d);
    }

    #[test]
    fn linear_and_constant() {
        let l = BoundarySpec::linear(1.0, 2.0);
        assert_eq!(l.value(3.0), 7.0);
        assert_eq!(l.derivative(3.0), 2.0);
        let c = BoundarySpec::constant(1.5);
        assert_eq!(c.value(9.0), 1.5);
        assert_eq!(c.derivative(9.0), 0.0);
        assert_eq!(c.kind(), BoundaryKind::Constant { a: 1.5 });
    }

    #[test]
    fn custom_boundary_consistency() {
        let grid: Vec<f64> = (1..50).map(|i| i as f64 * 0.2).collect();
        let good = BoundarySpec::custom(SmoothFn::new(|t| t.sin() + 2.0, |t| t.cos()));
        assert!(good.check_consistency(&grid, 1e-6).is_ok());
        let bad = BoundarySpec::custom(SmoothFn::new(|t| t.sin() + 2.0, |t| t.sin()));
        assert!(bad.check_consistency(&grid, 1e-6).is_err());
        let soglia = BoundarySpec::soglia(0.5, 0.25).unwrap();
        assert!(soglia.check_consistency(&grid, 1e-6).is_ok());
    }
}
