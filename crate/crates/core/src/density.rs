//! Discretized densities and their CSV form.

use std::fmt::Write as _;
use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::quadrature::trapezoid;

/// How a density grid was produced.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum DensityMethod {
    ClosedForm,
    Volterra,
    MonteCarlo,
    UpperBound,
    Wiener,
    Tabulated,
}

impl DensityMethod {
    pub fn as_str(self) -> &'static str {
        match self {
            DensityMethod::ClosedForm => "closed_form",
            DensityMethod::Volterra => "volterra",
            DensityMethod::MonteCarlo => "simulate",
            DensityMethod::UpperBound => "w1_bound",
            DensityMethod::Wiener => "wiener",
            DensityMethod::Tabulated => "tabulated",
        }
    }
}

/// Density ordinates on strictly increasing knots.
///
/// Point grids integrate with the trapezoid rule. Histogram grids carry a bin
/// width; their knots are bin midpoints and integrals use the rectangle rule,
/// so the mass equals the histogram mass exactly.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityGrid {
    knots: Vec<f64>,
    values: Vec<f64>,
    method: DensityMethod,
    bin_width: Option<f64>,
    total_mass: f64,
}

impl DensityGrid {
    pub fn new(knots: Vec<f64>, values: Vec<f64>, method: DensityMethod) -> Result<Self> {
        Self::build(knots, values, method, None)
    }

    pub fn histogram(midpoints: Vec<f64>, values: Vec<f64>, bin_width: f64) -> Result<Self> {
        if !(bin_width > 0.0) {
            return Err(Error::InvalidGrid(format!("bin width {bin_width} must be positive")));
        }
        Self::build(midpoints, values, DensityMethod::MonteCarlo, Some(bin_width))
    }

    fn build(knots: Vec<f64>, values: Vec<f64>, method: DensityMethod, bin_width: Option<f64>) -> Result<Self> {
        if knots.len() != values.len() {
            return Err(Error::InvalidGrid(format!(
                "{} knots but {} values",
                knots.len(),
                values.len()
            )));
        }
        if knots.is_empty() {
            return Err(Error::InvalidGrid("empty grid".into()));
        }
        if knots.windows(2).any(|w| !(w[1] > w[0])) {
            return Err(Error::InvalidGrid("knots must be strictly increasing".into()));
        }
        if let Some(v) = values.iter().find(|v| !(v.is_finite() && **v >= 0.0)) {
            return Err(Error::InvalidGrid(format!(
                "density value {v} is negative or not finite"
            )));
        }
        let total_mass = match bin_width {
            Some(w) => values.iter().sum::<f64>() * w,
            None => trapezoid(&knots, &values),
        };
        Ok(DensityGrid {
            knots,
            values,
            method,
            bin_width,
            total_mass,
        })
    }

    /// Tabulates `f` on the given knots.
    pub fn tabulate<F: Fn(f64) -> f64>(knots: Vec<f64>, method: DensityMethod, f: F) -> Result<Self> {
        let values = knots.iter().map(|&t| f(t)).collect();
        Self::new(knots, values, method)
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn method(&self) -> DensityMethod {
        self.method
    }

    pub fn bin_width(&self) -> Option<f64> {
        self.bin_width
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass
    }

    pub fn len(&self) -> usize {
        self.knots.len()
    }

    pub fn is_empty(&self) -> bool {
        self.knots.is_empty()
    }

    /// Location and height of the largest ordinate.
    pub fn mode(&self) -> (f64, f64) {
        let (i, v) = self.values.iter().enumerate().fold(
            (0, f64::NEG_INFINITY),
            |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
        );
        (self.knots[i], v)
    }

    /// Linear interpolation; zero outside the knot range.
    pub fn interpolate(&self, t: f64) -> f64 {
        let k = &self.knots;
        if t < k[0] || t > k[k.len() - 1] {
            return 0.0;
        }
        let i = k.partition_point(|&x| x <= t);
        if i == 0 {
            return self.values[0];
        }
        if i >= k.len() {
            return self.values[k.len() - 1];
        }
        let (x0, x1) = (k[i - 1], k[i]);
        let w = (t - x0) / (x1 - x0);
        self.values[i - 1] * (1.0 - w) + self.values[i] * w
    }

    /// Integral of the linear interpolant over `[lo, hi]` (zero outside the knots).
    pub fn integrate(&self, lo: f64, hi: f64) -> f64 {
        let k = &self.knots;
        let (lo, hi) = (lo.max(k[0]), hi.min(k[k.len() - 1]));
        if !(hi > lo) {
            return 0.0;
        }
        let mut xs = vec![lo];
        xs.extend(k.iter().copied().filter(|&x| x > lo && x < hi));
        xs.push(hi);
        xs.windows(2)
            .map(|w| 0.5 * (w[1] - w[0]) * (self.interpolate(w[0]) + self.interpolate(w[1])))
            .sum()
    }

    /// Averages of the interpolated density over the bins of a histogram grid.
    pub fn bin_averages(&self, histogram: &DensityGrid) -> Result<DensityGrid> {
        let w = histogram
            .bin_width
            .ok_or_else(|| Error::InvalidGrid("bin averages need a histogram grid".into()))?;
        let values = histogram
            .knots
            .iter()
            .map(|&mid| self.integrate(mid - 0.5 * w, mid + 0.5 * w) / w)
            .collect();
        DensityGrid::new(histogram.knots.clone(), values, self.method)
    }

    /// Writes the `t,g` table with 17 significant digits.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(48 * self.len() + 8);
        s.push_str("t,g\n");
        for (t, g) in self.knots.iter().zip(&self.values) {
            let _ = writeln!(s, "{t:.16e},{g:.16e}");
        }
        s
    }

    /// Reads a `t,g` table back as a point grid.
    pub fn read_csv<R: BufRead>(input: R, method: DensityMethod) -> Result<Self> {
        let mut lines = input.lines();
        match lines.next() {
            Some(Ok(h)) if h.trim() == "t,g" => {}
            _ => return Err(Error::InvalidGrid("missing 't,g' header".into())),
        }
        let (mut knots, mut values) = (Vec::new(), Vec::new());
        for line in lines {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let (a, b) = line
                .split_once(',')
                .ok_or_else(|| Error::InvalidGrid(format!("malformed row '{line}'")))?;
            let parse = |s: &str| {
                s.trim()
                    .parse::<f64>()
                    .map_err(|e| Error::InvalidGrid(format!("bad number '{s}': {e}")))
            };
            knots.push(parse(a)?);
            values.push(parse(b)?);
        }
        DensityGrid::new(knots, values, method)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn rejects_invalid_grids() {
        assert!(DensityGrid::new(vec![0.0, 1.0], vec![1.0], DensityMethod::Tabulated).is_err());
        assert!(DensityGrid::new(vec![1.0, 1.0], vec![1.0, 1.0], DensityMethod::Tabulated).is_err());
        assert!(DensityGrid::new(vec![0.0, 1.0], vec![1.0, -0.1], DensityMethod::Tabulated).is_err());
        assert!(DensityGrid::new(vec![], vec![], DensityMethod::Tabulated).is_err());
    }

    #[test]
    fn masses() {
        let g = DensityGrid::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0], DensityMethod::Tabulated).unwrap();
        assert_eq!(g.total_mass(), 1.0);
        let h = DensityGrid::histogram(vec![0.25, 0.75], vec![0.4, 1.2], 0.5).unwrap();
        assert!((h.total_mass() - 0.8).abs() < 1e-15);
        assert_eq!(h.mode(), (0.75, 1.2));
    }

    #[test]
    fn interpolation() {
        let g = DensityGrid::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 0.0], DensityMethod::Tabulated).unwrap();
        assert_eq!(g.interpolate(0.5), 1.0);
        assert_eq!(g.interpolate(2.0), 1.0);
        assert_eq!(g.interpolate(3.0), 0.0);
        assert_eq!(g.interpolate(-1.0), 0.0);
        assert_eq!(g.interpolate(1.0), 2.0);
    }

    #[test]
    fn exact_piecewise_linear_integrals() {
        let g = DensityGrid::new(vec![0.0, 1.0, 3.0], vec![0.0, 2.0, 0.0], DensityMethod::Tabulated).unwrap();
        assert!((g.integrate(-1.0, 5.0) - 3.0).abs() < 1e-15);
        assert!((g.integrate(0.0, 0.5) - 0.25).abs() < 1e-15);
        assert!((g.integrate(0.5, 2.0) - (0.75 + 1.5)).abs() < 1e-15);
        let h = DensityGrid::histogram(vec![0.5, 1.5, 2.5], vec![0.0; 3], 1.0).unwrap();
        let avg = g.bin_averages(&h).unwrap();
        assert!((avg.values()[0] - 1.0).abs() < 1e-15);
        assert!((avg.values()[1] - 1.5).abs() < 1e-15);
    }

    #[test]
    fn csv_header_and_precision() {
        let g = DensityGrid::new(vec![0.1, 0.2], vec![1.0 / 3.0, 0.0], DensityMethod::Tabulated).unwrap();
        let csv = g.to_csv();
        assert!(csv.starts_with("t,g\n"));
        assert!(csv.contains("3.3333333333333331e-1"));
    }

    proptest! {
        #[test]
        fn csv_round_trip_is_exact(values in proptest::collection::vec(0.0f64..1e6, 1..40)) {
            let knots: Vec<f64> = (0..values.len()).map(|i| 0.013 * i as f64 + 0.1).collect();
            let g = DensityGrid::new(knots, values, DensityMethod::Tabulated).unwrap();
            let back = DensityGrid::read_csv(g.to_csv().as_bytes(), DensityMethod::Tabulated).unwrap();
            prop_assert_eq!(back.knots(), g.knots());
            prop_assert_eq!(back.values(), g.values());
        }
    }
}
