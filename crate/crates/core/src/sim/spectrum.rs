//! Rational spectral densities and their Hurwitz factorization.

use num_complex::Complex64;

use super::poly;
use crate::error::{Error, Result};

/// An even rational spectral density `Gamma(omega) = N(omega^2) / D(omega^2)`,
/// coefficients ascending in `z = omega^2`.
#[derive(Debug, Clone, PartialEq)]
pub struct EvenRational {
    pub numerator: Vec<f64>,
    pub denominator: Vec<f64>,
}

impl EvenRational {
    pub fn new(numerator: Vec<f64>, denominator: Vec<f64>) -> Self {
        EvenRational {
            numerator: poly::trim(&numerator),
            denominator: poly::trim(&denominator),
        }
    }

    /// Spectrum of the correlation `exp(-beta|t|) cos(alpha t)`.
    pub fn exp_cos(beta: f64, alpha: f64) -> Result<Self> {
        check_beta(beta)?;
        let (a2, b2) = (alpha * alpha, beta * beta);
        Ok(EvenRational::new(
            vec![2.0 * beta * (a2 + b2), 2.0 * beta],
            vec![(b2 + a2) * (b2 + a2), 2.0 * (b2 - a2), 1.0],
        ))
    }

    /// Spectrum of the correlation `(1 + beta|t|) exp(-beta|t|)`.
    pub fn damped_linear(beta: f64) -> Result<Self> {
        check_beta(beta)?;
        let b2 = beta * beta;
        Ok(EvenRational::new(vec![4.0 * beta * b2], vec![b2 * b2, 2.0 * b2, 1.0]))
    }

    pub fn eval(&self, omega: f64) -> f64 {
        let z = omega * omega;
        poly::eval(&self.numerator, z) / poly::eval(&self.denominator, z)
    }
}

fn check_beta(beta: f64) -> Result<()> {
    if !(beta > 0.0 && beta.is_finite()) {
        return Err(Error::Domain(format!("spectrum needs beta > 0, got {beta}")));
    }
    Ok(())
}

/// `2 beta (w^2 + a^2 + b^2) / (w^4 + 2 w^2 (b^2 - a^2) + (b^2 + a^2)^2)`.
pub fn spectral_density_expcos(beta: f64, alpha: f64, omega: f64) -> Result<f64> {
    Ok(EvenRational::exp_cos(beta, alpha)?.eval(omega))
}

/// Transfer function `P(s)/Q(s)` of a stable filter, coefficients ascending
/// in `s`, with `Q` monic and Hurwitz and `deg P < deg Q`.
#[derive(Debug, Clone, PartialEq)]
pub struct RationalSpectrum {
    p: Vec<f64>,
    q: Vec<f64>,
}

impl RationalSpectrum {
    pub fn new(p: Vec<f64>, q: Vec<f64>) -> Result<Self> {
        let (p, q) = (poly::trim(&p), poly::trim(&q));
        let dq = poly::degree(&q).ok_or_else(|| Error::DegreeMismatch("Q is the zero polynomial".into()))?;
        let dp = poly::degree(&p).ok_or_else(|| Error::DegreeMismatch("P is the zero polynomial".into()))?;
        if dp >= dq {
            return Err(Error::DegreeMismatch(format!(
                "deg P = {dp} must be below deg Q = {dq}"
            )));
        }
        if let Some(r) = poly::roots(&q).into_iter().find(|r| !(r.re < 0.0)) {
            return Err(Error::NonHurwitz { re: r.re, im: r.im });
        }
        let lead = q[dq];
        Ok(RationalSpectrum {
            p: p.iter().map(|c| c / lead).collect(),
            q: q.iter().map(|c| c / lead).collect(),
        })
    }

    pub fn p(&self) -> &[f64] {
        &self.p
    }

    pub fn q(&self) -> &[f64] {
        &self.q
    }

    pub fn order(&self) -> usize {
        self.q.len() - 1
    }

    /// `|P(i omega)|^2 / |Q(i omega)|^2`.
    pub fn density(&self, omega: f64) -> f64 {
        let s = Complex64::new(0.0, omega);
        (poly::eval_complex(&self.p, s) / poly::eval_complex(&self.q, s)).norm_sqr()
    }

    /// Quadratic-variation rate of the output, nonzero only when the
    /// relative degree is one (paths are then rough like Brownian motion).
    pub fn local_variance_rate(&self) -> Option<f64> {
        let n = self.order();
        (self.p.len() == n).then(|| self.p[n - 1] * self.p[n - 1])
    }
}

/// Splits an even rational density into a Hurwitz denominator and a
/// minimum-phase numerator, by mapping the roots `z` of the polynomials in
/// `omega^2` to `s = -sqrt(-z)`.
pub fn spectral_factorize(gamma: &EvenRational) -> Result<RationalSpectrum> {
    let (num, den) = (&gamma.numerator, &gamma.denominator);
    let dn = poly::degree(num).ok_or(Error::NotPositive(0.0))?;
    let dd = poly::degree(den).ok_or_else(|| Error::DegreeMismatch("zero denominator".into()))?;
    if dn >= dd {
        return Err(Error::DegreeMismatch(format!(
            "numerator degree {dn} in omega^2 must be below denominator degree {dd}"
        )));
    }
    let ratio = num[dn] / den[dd];
    if !(ratio > 0.0) {
        return Err(Error::NotPositive(ratio));
    }
    for i in 0..=2000 {
        let omega = 50.0 * i as f64 / 2000.0;
        let v = gamma.eval(omega);
        if !(v > 0.0 && v.is_finite()) {
            return Err(Error::NotPositive(v));
        }
    }

    let left_half = |z: Complex64| -(-z).sqrt();
    let mut zeros: Vec<Complex64> = poly::roots(num).into_iter().map(left_half).collect();
    let mut poles: Vec<Complex64> = Vec::with_capacity(dd);
    for z in poly::roots(den) {
        let s = left_half(z);
        if !(s.re < 0.0) {
            return Err(Error::NonHurwitz { re: s.re, im: s.im });
        }
        poles.push(s);
    }
    // cancel common factors so that the state dimension is minimal
    poles.retain(
        |&s| match zeros.iter().position(|&z| (z - s).norm() <= 1e-9 * s.norm().max(1.0)) {
            Some(i) => {
                zeros.swap_remove(i);
                false
            }
            None => true,
        },
    );
    let gain = ratio.sqrt();
    let p: Vec<f64> = poly::from_roots(&zeros).iter().map(|c| gain * c).collect();
    RationalSpectrum::new(p, poly::from_roots(&poles))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn lorentzian_reduction() {
        assert!((spectral_density_expcos(0.5, 0.0, 1.0).unwrap() - 0.8).abs() < 1e-15);
        assert!(spectral_density_expcos(0.0, 0.5, 1.0).is_err());
        let a = spectral_density_expcos(0.5, 0.25, 1.7).unwrap();
        let b = spectral_density_expcos(0.5, 0.25, -1.7).unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn exp_cos_factors() {
        let f = spectral_factorize(&EvenRational::exp_cos(0.5, 0.5).unwrap()).unwrap();
        let want_q = [0.5, 1.0, 1.0];
        let want_p = [0.5_f64.sqrt(), 1.0];
        for (a, b) in f.q().iter().zip(want_q) {
            assert!((a - b).abs() < 1e-14);
        }
        for (a, b) in f.p().iter().zip(want_p) {
            assert!((a - b).abs() < 1e-14);
        }
        let g = EvenRational::exp_cos(0.5, 0.5).unwrap();
        for &w in &[0.0, 0.5, 1.0, 2.0] {
            assert!((f.density(w) - g.eval(w)).abs() <= 1e-12 * g.eval(w));
        }
    }

    #[test]
    fn ou_factor_after_cancellation() {
        let f = spectral_factorize(&EvenRational::exp_cos(0.5, 0.0).unwrap()).unwrap();
        assert_eq!(f.order(), 1);
        assert!((f.q()[0] - 0.5).abs() < 1e-14);
        assert!((f.p()[0] - 1.0).abs() < 1e-14);
        assert_eq!(f.local_variance_rate(), Some(f.p()[0] * f.p()[0]));
    }

    #[test]
    fn damped_linear_is_smooth() {
        let f = spectral_factorize(&EvenRational::damped_linear(1.0).unwrap()).unwrap();
        assert_eq!(f.order(), 2);
        assert_eq!(f.local_variance_rate(), None);
    }

    #[test]
    fn rejects_bad_spectra() {
        let neg = EvenRational::new(vec![-1.0, 1.0], vec![1.0, 0.0, 1.0]);
        assert!(matches!(spectral_factorize(&neg), Err(Error::NotPositive(_))));
        let flat = EvenRational::new(vec![1.0, 1.0], vec![1.0, 1.0]);
        assert!(matches!(spectral_factorize(&flat), Err(Error::DegreeMismatch(_))));
        assert!(matches!(
            RationalSpectrum::new(vec![1.0], vec![-1.0, 1.0]),
            Err(Error::NonHurwitz { .. })
        ));
    }
}
