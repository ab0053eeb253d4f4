//! Real polynomials (ascending coefficients) and their complex roots.

use num_complex::Complex64;

/// Drops trailing (leading-order) zero coefficients.
pub fn trim(coeffs: &[f64]) -> Vec<f64> {
    let len = coeffs.iter().rposition(|&c| c != 0.0).map_or(0, |i| i + 1);
    coeffs[..len].to_vec()
}

/// Degree of the trimmed polynomial; `None` for the zero polynomial.
pub fn degree(coeffs: &[f64]) -> Option<usize> {
    coeffs.iter().rposition(|&c| c != 0.0)
}

pub fn eval(coeffs: &[f64], x: f64) -> f64 {
    coeffs.iter().rev().fold(0.0, |acc, &c| acc * x + c)
}

pub fn eval_complex(coeffs: &[f64], z: Complex64) -> Complex64 {
    coeffs
        .iter()
        .rev()
        .fold(Complex64::new(0.0, 0.0), |acc, &c| acc * z + c)
}

/// Monic real polynomial with the given roots; imaginary parts of the
/// product are dropped, so roots must come in conjugate pairs.
pub fn from_roots(roots: &[Complex64]) -> Vec<f64> {
    let mut acc = vec![Complex64::new(1.0, 0.0)];
    for &r in roots {
        let mut next = vec![Complex64::new(0.0, 0.0); acc.len() + 1];
        for (i, &a) in acc.iter().enumerate() {
            next[i + 1] += a;
            next[i] -= a * r;
        }
        acc = next;
    }
    acc.into_iter().map(|c| c.re).collect()
}

/// All complex roots of a real polynomial with nonzero leading coefficient.
/// Degrees one and two use closed forms; higher degrees use Aberth iteration
/// followed by Newton polishing.
pub fn roots(coeffs: &[f64]) -> Vec<Complex64> {
    let p = trim(coeffs);
    let n = match degree(&p) {
        None | Some(0) => return Vec::new(),
        Some(n) => n,
    };
    let lead = p[n];
    match n {
        1 => vec![Complex64::new(-p[0] / lead, 0.0)],
        2 => quadratic_roots(p[2], p[1], p[0]),
        _ => aberth(&p),
    }
}

fn quadratic_roots(a: f64, b: f64, c: f64) -> Vec<Complex64> {
    let disc = b * b - 4.0 * a * c;
    if disc >= 0.0 {
        // avoid cancellation: q = -(b + sign(b) sqrt(disc))/2
        let q = -0.5 * (b + b.signum() * disc.sqrt());
        if q == 0.0 {
            return vec![Complex64::new(0.0, 0.0); 2];
        }
        vec![Complex64::new(q / a, 0.0), Complex64::new(c / q, 0.0)]
    } else {
        let re = -b / (2.0 * a);
        let im = (-disc).sqrt() / (2.0 * a.abs());
        vec![Complex64::new(re, im), Complex64::new(re, -im)]
    }
}

fn aberth(p: &[f64]) -> Vec<Complex64> {
    let n = p.len() - 1;
    let dp: Vec<f64> = p.iter().enumerate().skip(1).map(|(i, &c)| c * i as f64).collect();
    // initial guesses on a circle bounded by the Cauchy radius
    let radius = 1.0 + p[..n].iter().map(|c| (c / p[n]).abs()).fold(0.0, f64::max);
    let mut z: Vec<Complex64> = (0..n)
        .map(|k| Complex64::from_polar(0.5 * radius, 2.0 * std::f64::consts::PI * (k as f64 + 0.25) / n as f64))
        .collect();
    for _ in 0..500 {
        let mut moved: f64 = 0.0;
        for k in 0..n {
            let ratio = eval_complex(p, z[k]) / eval_complex(&dp, z[k]);
            let repulsion: Complex64 = (0..n).filter(|&j| j != k).map(|j| 1.0 / (z[k] - z[j])).sum();
            let step = ratio / (1.0 - ratio * repulsion);
            if step.is_finite() {
                z[k] -= step;
                moved = moved.max(step.norm() / z[k].norm().max(1.0));
            }
        }
        if moved < 1e-15 {
            break;
        }
    }
    for r in z.iter_mut() {
        for _ in 0..3 {
            let step = eval_complex(p, *r) / eval_complex(&dp, *r);
            if step.is_finite() {
                *r -= step;
            }
        }
        if r.im.abs() <= 1e-14 * r.norm().max(1.0) {
            r.im = 0.0;
        }
    }
    z
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: Complex64, b: Complex64) -> bool {
        (a - b).norm() < 1e-10
    }

    #[test]
    fn quadratic_and_linear() {
        let r = roots(&[2.0, -3.0, 1.0]);
        assert!(r.iter().any(|&x| close(x, Complex64::new(1.0, 0.0))));
        assert!(r.iter().any(|&x| close(x, Complex64::new(2.0, 0.0))));
        let r = roots(&[0.5, 1.0, 1.0]);
        assert!(r.iter().any(|&x| close(x, Complex64::new(-0.5, 0.5))));
        assert_eq!(roots(&[3.0, 1.5]), vec![Complex64::new(-2.0, 0.0)]);
        assert!(roots(&[4.0]).is_empty());
    }

    #[test]
    fn quartic_roots_rebuild_the_polynomial() {
        let want = [
            Complex64::new(-1.0, 2.0),
            Complex64::new(-1.0, -2.0),
            Complex64::new(-0.3, 0.0),
            Complex64::new(-4.0, 0.0),
        ];
        let p: Vec<f64> = from_roots(&want).iter().map(|c| 3.0 * c).collect();
        let got = roots(&p);
        for w in want {
            assert!(got.iter().any(|&g| close(g, w)), "{w} missing from {got:?}");
        }
    }

    #[test]
    fn evaluation_and_trimming() {
        assert_eq!(eval(&[1.0, 2.0, 3.0], 2.0), 17.0);
        assert_eq!(trim(&[1.0, 0.0, 0.0]), vec![1.0]);
        assert_eq!(degree(&[0.0, 0.0]), None);
        assert_eq!(
            from_roots(&[Complex64::new(1.0, 0.0), Complex64::new(2.0, 0.0)]),
            vec![2.0, -3.0, 1.0]
        );
    }
}
