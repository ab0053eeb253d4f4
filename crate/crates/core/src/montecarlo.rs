//! First-passage detection on simulated paths, histogram estimates and
//! distances between densities.

use std::fmt::Write as _;
use std::io::Write;

use rand::Rng;

use crate::boundary::BoundarySpec;
use crate::density::{DensityGrid, DensityMethod};
use crate::error::{Error, Result};
use crate::sim::streams::{crossing_rng, par_map_indexed, path_rng};
use crate::sim::{build_filter, spectral_factorize, EvenRational, PathEnsemble, PathModel};

/// How a crossing between two grid points is decided.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CrossingRule {
    /// Only grid values are tested; the time is the linear-interpolation root.
    Interpolation,
    /// Grid test plus a Brownian-bridge test for excursions between grid
    /// points of rough paths. Grid crossings are dated at the earlier of the
    /// interpolation root and the step midpoint; bridge crossings at the midpoint.
    Bridge,
}

impl CrossingRule {
    pub fn as_str(self) -> &'static str {
        match self {
            CrossingRule::Interpolation => "interpolation",
            CrossingRule::Bridge => "bridge",
        }
    }

    pub fn parse(s: &str) -> Result<Self> {
        match s {
            "interpolation" => Ok(CrossingRule::Interpolation),
            "bridge" => Ok(CrossingRule::Bridge),
            _ => Err(Error::Config(format!("unknown crossing rule '{s}'"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SimulationConfig {
    pub paths: usize,
    pub dt: f64,
    pub horizon: f64,
    pub seed: u64,
    pub rule: CrossingRule,
    /// Worker threads; `None` uses the global pool.
    pub threads: Option<usize>,
}

impl Default for SimulationConfig {
    fn default() -> Self {
        SimulationConfig {
            paths: 100_000,
            dt: 0.005,
            horizon: 10.0,
            seed: 1,
            rule: CrossingRule::Bridge,
            threads: None,
        }
    }
}

impl SimulationConfig {
    pub fn steps(&self) -> Result<usize> {
        if !(self.dt > 0.0 && self.dt.is_finite()) {
            return Err(Error::InvalidGrid(format!("time step {} must be positive", self.dt)));
        }
        if !(self.horizon > 0.0 && self.horizon.is_finite()) {
            return Err(Error::InvalidGrid(format!("horizon {} must be positive", self.horizon)));
        }
        if self.paths == 0 {
            return Err(Error::InvalidGrid("at least one path is required".into()));
        }
        Ok(((self.horizon / self.dt) - 1e-9).ceil().max(1.0) as usize)
    }
}

/// Per-path first-passage times (`None` = censored at the horizon).
#[derive(Debug, Clone, PartialEq)]
pub struct FptSampleSet {
    pub times: Vec<Option<f64>>,
    pub t0: f64,
    pub horizon: f64,
    pub dt: f64,
    pub seed: u64,
}

impl FptSampleSet {
    /// Sample set from explicit times, e.g. for tests or imported data.
    pub fn from_times(times: Vec<Option<f64>>, horizon: f64) -> Self {
        FptSampleSet {
            times,
            t0: 0.0,
            horizon,
            dt: 0.0,
            seed: 0,
        }
    }

    pub fn total(&self) -> usize {
        self.times.len()
    }

    pub fn crossed(&self) -> usize {
        self.times.iter().filter(|t| t.is_some()).count()
    }

    pub fn censored(&self) -> usize {
        self.total() - self.crossed()
    }

    pub fn crossing_fraction(&self) -> f64 {
        self.crossed() as f64 / self.total().max(1) as f64
    }

    pub fn sorted_times(&self) -> Vec<f64> {
        let mut v: Vec<f64> = self.times.iter().flatten().copied().collect();
        v.sort_by(f64::total_cmp);
        v
    }

    pub fn to_csv(&self) -> String {
        let mut s = String::with_capacity(32 * self.total() + 32);
        s.push_str("path_id,crossing_time,censored\n");
        for (i, t) in self.times.iter().enumerate() {
            let _ = match t {
                Some(t) => writeln!(s, "{i},{t:.16e},0"),
                None => writeln!(s, "{i},,1"),
            };
        }
        s
    }

    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        out.write_all(self.to_csv().as_bytes())?;
        Ok(())
    }
}

/// Boundary on the simulation grid plus the crossing test.
struct Detector {
    t0: f64,
    dt: f64,
    boundary: Vec<f64>,
    rates: Option<Vec<f64>>,
    rule: CrossingRule,
}

impl Detector {
    fn new(
        boundary: &BoundarySpec,
        t0: f64,
        dt: f64,
        steps: usize,
        rates: Option<Vec<f64>>,
        rule: CrossingRule,
    ) -> Self {
        Detector {
            t0,
            dt,
            boundary: (0..=steps).map(|k| boundary.value(t0 + dt * k as f64)).collect(),
            rates: if rule == CrossingRule::Bridge { rates } else { None },
            rule,
        }
    }

    fn check_start(&self, x0: f64) -> Result<()> {
        if !(x0 < self.boundary[0]) {
            return Err(Error::StartsAboveBoundary {
                x0,
                boundary: self.boundary[0],
            });
        }
        Ok(())
    }

    /// Crossing time within step `k` (from `t_{k-1}` to `t_k`), given the path
    /// did not cross up to `t_{k-1}`.
    #[inline]
    fn check(&self, k: usize, prev: f64, cur: f64, u: f64) -> Option<f64> {
        let (s_prev, s_cur) = (self.boundary[k - 1], self.boundary[k]);
        let start = self.t0 + self.dt * (k - 1) as f64;
        let mid = start + 0.5 * self.dt;
        if cur > s_cur {
            let (below, above) = (s_prev - prev, cur - s_cur);
            let root = start + self.dt * below / (below + above);
            return Some(match self.rule {
                CrossingRule::Interpolation => root,
                CrossingRule::Bridge => root.min(mid),
            });
        }
        let rate = self.rates.as_ref()?[k];
        if rate > 0.0 {
            let exponent = 2.0 * (s_prev - prev) * (s_cur - cur) / (rate * self.dt);
            if u < (-exponent).exp() {
                return Some(mid);
            }
        }
        None
    }
}

/// Crossing times of stored paths. Bridge tests draw their uniforms from the
/// per-path crossing streams of the ensemble seed, so results agree with
/// [`simulate_fpt`] for the same seed.
pub fn detect_crossings(ensemble: &PathEnsemble, boundary: &BoundarySpec, rule: CrossingRule) -> Result<FptSampleSet> {
    let steps = ensemble.steps();
    let det = Detector::new(
        boundary,
        ensemble.t0,
        ensemble.dt,
        steps,
        ensemble.bridge_rates.clone(),
        rule,
    );
    let mut times = Vec::with_capacity(ensemble.len());
    for (i, path) in ensemble.paths.iter().enumerate() {
        det.check_start(path[0])?;
        let mut uniforms = crossing_rng(ensemble.seed, i as u64);
        let mut hit = None;
        for k in 1..path.len() {
            let u: f64 = uniforms.random();
            if let Some(t) = det.check(k, path[k - 1], path[k], u) {
                hit = Some(t);
                break;
            }
        }
        times.push(hit);
    }
    Ok(FptSampleSet {
        times,
        t0: ensemble.t0,
        horizon: ensemble.time(steps),
        dt: ensemble.dt,
        seed: ensemble.seed,
    })
}

/// Simulates first-passage times path by path, stopping each path at its
/// first crossing. Bit-identical for any number of threads.
pub fn simulate_fpt<M: PathModel>(
    model: &M,
    x0: f64,
    boundary: &BoundarySpec,
    config: &SimulationConfig,
) -> Result<FptSampleSet> {
    let steps = config.steps()?;
    if (model.dt() - config.dt).abs() > 1e-12 * config.dt {
        return Err(Error::Config(format!(
            "model step {} differs from configured step {}",
            model.dt(),
            config.dt
        )));
    }
    let (t0, dt) = (model.start_time(), config.dt);
    let rates: Option<Vec<f64>> = (0..=steps)
        .map(|k| {
            if k == 0 {
                Some(0.0)
            } else {
                model.local_variance_rate(t0 + dt * (k as f64 - 0.5))
            }
        })
        .collect();
    let det = Detector::new(boundary, t0, dt, steps, rates, config.rule);
    det.check_start(x0)?;
    let start = model.prepare(x0, steps)?;
    let seed = config.seed;
    let times = par_map_indexed(config.paths, config.threads, |i| {
        let mut rng = path_rng(seed, i as u64);
        let mut uniforms = crossing_rng(seed, i as u64);
        let (mut prev, mut hit) = (x0, None);
        model.walk(&start, x0, &mut rng, &mut |k, x| {
            if k == 0 {
                return true;
            }
            let u: f64 = uniforms.random();
            if let Some(t) = det.check(k, prev, x, u) {
                hit = Some(t);
                return false;
            }
            prev = x;
            true
        });
        hit
    })?;
    Ok(FptSampleSet {
        times,
        t0,
        horizon: t0 + dt * steps as f64,
        dt,
        seed,
    })
}

/// First-passage times of the zero-mean, unit-variance stationary process
/// with the given rational spectrum, started at `x0`.
pub fn simulate_stationary_fpt(
    spectrum: &EvenRational,
    x0: f64,
    boundary: &BoundarySpec,
    config: &SimulationConfig,
) -> Result<FptSampleSet> {
    let filter = build_filter(&spectral_factorize(spectrum)?, config.dt)?;
    simulate_fpt(&filter, x0, boundary, config)
}

/// Histogram bin width selection.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Binning {
    /// Freedman-Diaconis width rounded to a positive multiple of the
    /// simulation step, so that bins hold whole steps.
    Auto,
    Count(usize),
    Width(f64),
}

/// Histogram density with per-bin standard errors.
#[derive(Debug, Clone, PartialEq)]
pub struct Histogram {
    pub density: DensityGrid,
    pub counts: Vec<u64>,
    pub standard_errors: Vec<f64>,
}

fn quantile(sorted: &[f64], p: f64) -> f64 {
    // linear interpolation between order statistics
    let h = p * (sorted.len() - 1) as f64;
    let (lo, frac) = (h.floor() as usize, h - h.floor());
    if lo + 1 < sorted.len() {
        sorted[lo] + frac * (sorted[lo + 1] - sorted[lo])
    } else {
        sorted[lo]
    }
}

fn bin_width(samples: &FptSampleSet, sorted: &[f64], binning: Binning) -> Result<f64> {
    let span = samples.horizon - samples.t0;
    let width = match binning {
        Binning::Width(w) => w,
        Binning::Count(c) if c > 0 => span / c as f64,
        Binning::Count(_) => return Err(Error::InvalidGrid("bin count must be positive".into())),
        Binning::Auto => {
            let iqr = quantile(sorted, 0.75) - quantile(sorted, 0.25);
            let raw = 2.0 * iqr / (sorted.len() as f64).cbrt();
            let raw = if raw > 0.0 { raw } else { span / 100.0 };
            if samples.dt > 0.0 {
                (raw / samples.dt).round().max(1.0) * samples.dt
            } else {
                raw
            }
        }
    };
    if !(width > 0.0 && width.is_finite()) {
        return Err(Error::InvalidGrid(format!("bin width {width} must be positive")));
    }
    Ok(width)
}

/// Histogram on bins `(t0 + i w, t0 + (i+1) w]` covering the horizon,
/// normalized by the total number of paths so that the mass equals the
/// crossing fraction.
pub fn histogram(samples: &FptSampleSet, binning: Binning) -> Result<Histogram> {
    let sorted = samples.sorted_times();
    if sorted.is_empty() {
        return Err(Error::AllCensored);
    }
    let w = bin_width(samples, &sorted, binning)?;
    let span = samples.horizon - samples.t0;
    let bins = ((span / w) - 1e-9).ceil().max(1.0) as usize;
    let mut counts = vec![0u64; bins];
    for &t in &sorted {
        let i = (((t - samples.t0) / w).ceil() as usize).saturating_sub(1).min(bins - 1);
        counts[i] += 1;
    }
    let n = samples.total() as f64;
    let values: Vec<f64> = counts.iter().map(|&c| c as f64 / (n * w)).collect();
    let standard_errors = counts
        .iter()
        .map(|&c| {
            let p = c as f64 / n;
            (p * (1.0 - p) / n).sqrt() / w
        })
        .collect();
    let mids = (0..bins).map(|i| samples.t0 + w * (i as f64 + 0.5)).collect();
    Ok(Histogram {
        density: DensityGrid::histogram(mids, values, w)?,
        counts,
        standard_errors,
    })
}

/// Histogram estimate of the FPT density; mass equals the crossing fraction.
pub fn estimate_density(samples: &FptSampleSet, binning: Binning) -> Result<DensityGrid> {
    histogram(samples, binning).map(|h| h.density)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FptStatistics {
    pub mean: f64,
    /// Unbiased sample variance (zero for a single sample).
    pub variance: f64,
    /// Midpoint of the tallest bin of the default histogram.
    pub mode: f64,
    pub quartiles: [f64; 3],
    pub crossed: usize,
    pub censored: usize,
}

pub fn sample_statistics(samples: &FptSampleSet) -> Result<FptStatistics> {
    let sorted = samples.sorted_times();
    if sorted.is_empty() {
        return Err(Error::AllCensored);
    }
    let n = sorted.len() as f64;
    let mean = sorted.iter().sum::<f64>() / n;
    let variance = if sorted.len() > 1 {
        sorted.iter().map(|t| (t - mean) * (t - mean)).sum::<f64>() / (n - 1.0)
    } else {
        0.0
    };
    let (mode, _) = estimate_density(samples, Binning::Auto)?.mode();
    Ok(FptStatistics {
        mean,
        variance,
        mode,
        quartiles: [quantile(&sorted, 0.25), quantile(&sorted, 0.5), quantile(&sorted, 0.75)],
        crossed: sorted.len(),
        censored: samples.censored(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DensityComparison {
    pub l1: f64,
    pub sup: f64,
    /// Largest gap between the cumulative integrals.
    pub ks: f64,
}

/// Distances between `a` and `b`, with `b` interpolated onto the knots of `a`.
/// Integrals follow `a`'s rule: rectangles for histograms, trapezoids otherwise.
pub fn compare_densities(a: &DensityGrid, b: &DensityGrid) -> Result<DensityComparison> {
    let (ka, kb) = (a.knots(), b.knots());
    let (lo, hi) = (ka[0].max(kb[0]), ka[ka.len() - 1].min(kb[kb.len() - 1]));
    if lo > hi {
        return Err(Error::DisjointSupports);
    }
    let diff: Vec<f64> = ka.iter().zip(a.values()).map(|(&t, &v)| v - b.interpolate(t)).collect();
    let sup = diff.iter().fold(0.0_f64, |m, d| m.max(d.abs()));
    let (mut l1, mut cumulative, mut ks) = (0.0, 0.0_f64, 0.0_f64);
    match a.bin_width() {
        Some(w) => {
            for d in &diff {
                l1 += d.abs() * w;
                cumulative += d * w;
                ks = ks.max(cumulative.abs());
            }
        }
        None => {
            for i in 1..diff.len() {
                let h = ka[i] - ka[i - 1];
                l1 += 0.5 * h * (diff[i - 1].abs() + diff[i].abs());
                cumulative += 0.5 * h * (diff[i - 1] + diff[i]);
                ks = ks.max(cumulative.abs());
            }
        }
    }
    Ok(DensityComparison { l1, sup, ks })
}

/// Point grid of a density evaluated at the knots of another grid.
pub fn resample<F: Fn(f64) -> f64>(like: &DensityGrid, method: DensityMethod, f: F) -> Result<DensityGrid> {
    DensityGrid::tabulate(like.knots().to_vec(), method, f)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::{build_filter, simulate_ensemble, spectral_factorize, EvenRational};

    fn two_step(x1: f64) -> PathEnsemble {
        PathEnsemble {
            dt: 0.1,
            t0: 0.0,
            x0: 0.0,
            seed: 0,
            paths: vec![vec![0.0, x1]],
            bridge_rates: None,
        }
    }

    #[test]
    fn interpolated_crossing_time() {
        let s = detect_crossings(
            &two_step(1.0),
            &BoundarySpec::constant(0.5),
            CrossingRule::Interpolation,
        )
        .unwrap();
        assert!((s.times[0].unwrap() - 0.05).abs() < 1e-15);
        let s = detect_crossings(
            &two_step(0.2),
            &BoundarySpec::constant(0.5),
            CrossingRule::Interpolation,
        )
        .unwrap();
        assert_eq!(s.times[0], None);
        assert!(matches!(
            detect_crossings(
                &two_step(0.2),
                &BoundarySpec::constant(0.0),
                CrossingRule::Interpolation
            ),
            Err(Error::StartsAboveBoundary { .. })
        ));
    }

    #[test]
    fn constant_path_never_crosses_soglia() {
        let e = PathEnsemble {
            paths: vec![vec![0.0; 2001]],
            dt: 0.005,
            ..two_step(0.0)
        };
        let s = detect_crossings(&e, &BoundarySpec::soglia(0.5, 0.25).unwrap(), CrossingRule::Bridge).unwrap();
        assert_eq!(s.censored(), 1);
    }

    #[test]
    fn streaming_matches_stored_ensemble() {
        let f = build_filter(
            &spectral_factorize(&EvenRational::exp_cos(0.5, 0.25).unwrap()).unwrap(),
            0.01,
        )
        .unwrap();
        let b = BoundarySpec::soglia(0.5, 0.5).unwrap();
        let cfg = SimulationConfig {
            paths: 200,
            dt: 0.01,
            horizon: 3.0,
            seed: 9,
            rule: CrossingRule::Bridge,
            threads: Some(2),
        };
        let streamed = simulate_fpt(&f, 0.0, &b, &cfg).unwrap();
        let e = simulate_ensemble(&f, 0.0, 200, cfg.steps().unwrap(), 9, Some(1)).unwrap();
        let stored = detect_crossings(&e, &b, CrossingRule::Bridge).unwrap();
        assert_eq!(streamed, stored);
    }

    #[test]
    fn histogram_mass_is_crossing_fraction() {
        let s = FptSampleSet::from_times(vec![Some(0.5), Some(1.5), None, Some(1.0), Some(2.0)], 2.0);
        let h = histogram(&s, Binning::Count(4)).unwrap();
        assert!((h.density.total_mass() + s.censored() as f64 / 5.0 - 1.0).abs() < 1e-15);
        // (0, 0.5], (0.5, 1], (1, 1.5], (1.5, 2]
        assert_eq!(h.counts, vec![1, 1, 1, 1]);
        let none = FptSampleSet::from_times(vec![None, None], 1.0);
        assert!(matches!(
            estimate_density(&none, Binning::Auto),
            Err(Error::AllCensored)
        ));
    }

    #[test]
    fn auto_bins_are_step_multiples() {
        let times = (1..1000).map(|i| Some(i as f64 * 0.00731)).collect();
        let s = FptSampleSet {
            dt: 0.005,
            ..FptSampleSet::from_times(times, 10.0)
        };
        let w = estimate_density(&s, Binning::Auto).unwrap().bin_width().unwrap();
        let r = w / 0.005;
        assert!((r - r.round()).abs() < 1e-9 && r >= 1.0);
    }

    #[test]
    fn statistics_of_two_samples() {
        let s = FptSampleSet::from_times(vec![Some(1.0), Some(3.0)], 4.0);
        let st = sample_statistics(&s).unwrap();
        assert_eq!(st.mean, 2.0);
        assert_eq!(st.variance, 2.0);
        assert_eq!(st.quartiles[1], 2.0);
    }

    #[test]
    fn comparison_metrics() {
        let a = DensityGrid::new(vec![0.0, 1.0, 2.0], vec![0.0, 1.0, 0.0], DensityMethod::Tabulated).unwrap();
        let c = compare_densities(&a, &a).unwrap();
        assert_eq!((c.l1, c.sup, c.ks), (0.0, 0.0, 0.0));
        let b = DensityGrid::new(vec![0.0, 1.0, 2.0], vec![0.0, 0.5, 0.0], DensityMethod::Tabulated).unwrap();
        let c = compare_densities(&a, &b).unwrap();
        assert!((c.l1 - 0.5).abs() < 1e-15 && (c.sup - 0.5).abs() < 1e-15 && (c.ks - 0.5).abs() < 1e-15);
        let far = DensityGrid::new(vec![5.0, 6.0], vec![1.0, 1.0], DensityMethod::Tabulated).unwrap();
        assert!(matches!(compare_densities(&a, &far), Err(Error::DisjointSupports)));
    }

    #[test]
    fn csv_layout() {
        let s = FptSampleSet::from_times(vec![Some(0.25), None], 1.0);
        assert_eq!(
            s.to_csv(),
            "path_id,crossing_time,censored\n0,2.5000000000000000e-1,0\n1,,1\n"
        );
    }
}
