//! Executes an experiment and writes its tables.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use serde_json::json;

use super::config::{label_number, ExperimentConfig, Method};
use crate::analytic::{w1_upper_bound, ClosedFormSoglia};
use crate::boundary::{BoundaryKind, BoundarySpec};
use crate::density::{DensityGrid, DensityMethod};
use crate::error::{Error, Result};
use crate::montecarlo::{
    compare_densities, histogram, sample_statistics, simulate_fpt, CrossingRule, DensityComparison, FptSampleSet,
    FptStatistics, SimulationConfig,
};
use crate::sim::{build_filter, spectral_factorize, GaussMarkovSampler};
use crate::volterra::{solve_volterra, SolverConfig};

#[derive(Debug, Clone, PartialEq)]
pub struct MetricRow {
    pub boundary: String,
    pub a: String,
    pub b: String,
    pub comparison: DensityComparison,
}

#[derive(Debug, Clone, PartialEq)]
pub struct StatisticsRow {
    pub boundary: String,
    pub alpha: Option<f64>,
    pub paths: usize,
    pub statistics: FptStatistics,
    /// Height of the tallest histogram bin.
    pub peak: f64,
    pub peak_standard_error: f64,
}

/// In-memory results of a run, alongside the files written.
#[derive(Debug, Clone)]
pub struct RunReport {
    pub output_dir: PathBuf,
    pub files: Vec<String>,
    pub densities: Vec<(String, DensityGrid)>,
    pub metrics: Vec<MetricRow>,
    pub statistics: Vec<StatisticsRow>,
    pub wall_time_seconds: f64,
}

impl RunReport {
    pub fn density(&self, name: &str) -> Option<&DensityGrid> {
        self.densities.iter().find(|(n, _)| n == name).map(|(_, g)| g)
    }
}

struct Writer {
    dir: PathBuf,
    files: Vec<String>,
}

impl Writer {
    fn put(&mut self, name: &str, contents: &str) -> Result<()> {
        let path = self.dir.join(name);
        fs::write(&path, contents).map_err(|e| Error::Io(format!("cannot write {}: {e}", path.display())))?;
        self.files.push(name.to_string());
        Ok(())
    }
}

fn grid(step: f64, horizon: f64) -> Vec<f64> {
    let n = ((horizon / step) - 1e-9).ceil().max(1.0) as usize;
    (0..=n).map(|k| step * k as f64).collect()
}

fn boundary_csv(b: &BoundarySpec, knots: &[f64]) -> String {
    let mut s = String::from("t,S,dS\n");
    for &t in knots {
        let _ = writeln!(s, "{t:.16e},{:.16e},{:.16e}", b.value(t), b.derivative(t));
    }
    s
}

fn alpha_suffix(alpha: Option<f64>) -> String {
    alpha.map_or(String::new(), |a| format!("_alpha{}", label_number(a)))
}

/// Runs every selected method for every boundary and writes per-method
/// density tables, `metrics.csv`, `statistics.csv` and `manifest.json`.
pub fn run(config: &ExperimentConfig) -> Result<RunReport> {
    let violations = config.validate();
    if !violations.is_empty() {
        return Err(Error::Config(violations.join("; ")));
    }
    let dir = config
        .output_dir
        .clone()
        .ok_or_else(|| Error::Config("no output directory given".into()))?;
    fs::create_dir_all(&dir).map_err(|e| Error::Io(format!("cannot create {}: {e}", dir.display())))?;
    let started = Instant::now();
    let mut out = Writer {
        dir: dir.clone(),
        files: Vec::new(),
    };
    let mut densities = Vec::new();
    let mut metrics = Vec::new();
    let mut statistics = Vec::new();
    let g = config.grid;
    let x0 = config.process.x0();
    let has = |m: Method| config.methods.contains(&m);

    for bc in &config.boundaries {
        let label = bc.label();
        let boundary = bc.spec()?;
        let mut points: Vec<(String, DensityGrid)> = Vec::new();
        let mut closed_form = None;

        if has(Method::Boundary) {
            out.put(
                &format!("boundary_{label}.csv"),
                &boundary_csv(&boundary, &grid(g.dt, g.horizon)),
            )?;
        }
        if has(Method::ClosedForm) {
            let BoundaryKind::Soglia { beta, d } = boundary.kind() else {
                return Err(Error::Config("closed form requires a soglia boundary".into()));
            };
            let cf = ClosedFormSoglia::new(beta, d)?;
            let density = cf.grid(grid(g.solver_step, g.horizon))?;
            out.put(&format!("closed_form_{label}.csv"), &density.to_csv())?;
            points.push(("closed_form".into(), density));
            closed_form = Some(cf);
        }
        if has(Method::Volterra) {
            let spec = config.process.spec(None)?;
            let sol = solve_volterra(&spec, &boundary, &SolverConfig::new(g.solver_step, g.horizon))?;
            out.put(&format!("volterra_{label}.csv"), &sol.density.to_csv())?;
            out.put(&format!("volterra_{label}_diagnostics.csv"), &sol.diagnostics_csv())?;
            points.push(("volterra".into(), sol.density));
        }
        if has(Method::W1Bound) {
            let spec = config.process.spec(None)?;
            let corr = spec
                .correlation()
                .ok_or_else(|| Error::Config("w1_bound requires a stationary correlation".into()))?;
            let knots = grid(g.solver_step, g.horizon);
            let values = knots
                .iter()
                .map(|&t| w1_upper_bound(corr, &boundary, x0, t))
                .collect::<Result<Vec<_>>>()?;
            let density = DensityGrid::new(knots, values, DensityMethod::UpperBound)?;
            out.put(&format!("w1_bound_{label}.csv"), &density.to_csv())?;
            points.push(("w1_bound".into(), density));
        }
        for i in 0..points.len() {
            for j in i + 1..points.len() {
                metrics.push(MetricRow {
                    boundary: label.clone(),
                    a: points[i].0.clone(),
                    b: points[j].0.clone(),
                    comparison: compare_densities(&points[i].1, &points[j].1)?,
                });
            }
        }

        if has(Method::Simulate) {
            let s = &config.simulation;
            let sim = SimulationConfig {
                paths: s.paths,
                dt: g.dt,
                horizon: g.horizon,
                seed: s.seed,
                rule: CrossingRule::parse(&s.crossing)?,
                threads: s.threads,
            };
            for alpha in config.alphas() {
                let samples = simulate_process(config, alpha, x0, &boundary, &sim)?;
                let suffix = alpha_suffix(alpha);
                out.put(&format!("fpt_samples_{label}{suffix}.csv"), &samples.to_csv())?;
                let h = histogram(&samples, s.bins.into())?;
                out.put(&format!("simulate_{label}{suffix}.csv"), &h.density.to_csv())?;
                let name = format!("simulate{suffix}");
                let (peak_index, peak) =
                    h.density
                        .values()
                        .iter()
                        .enumerate()
                        .fold(
                            (0, f64::NEG_INFINITY),
                            |acc, (i, &v)| if v > acc.1 { (i, v) } else { acc },
                        );
                statistics.push(StatisticsRow {
                    boundary: label.clone(),
                    alpha,
                    paths: samples.total(),
                    statistics: sample_statistics(&samples)?,
                    peak,
                    peak_standard_error: h.standard_errors[peak_index],
                });
                if let Some(cf) = &closed_form {
                    metrics.push(MetricRow {
                        boundary: label.clone(),
                        a: name.clone(),
                        b: "closed_form".into(),
                        comparison: compare_densities(&h.density, &cf.bin_averages(&h.density)?)?,
                    });
                }
                for (other, density) in points.iter().filter(|(n, _)| n != "closed_form") {
                    metrics.push(MetricRow {
                        boundary: label.clone(),
                        a: name.clone(),
                        b: other.clone(),
                        comparison: compare_densities(&h.density, &density.bin_averages(&h.density)?)?,
                    });
                }
                densities.push((format!("{name}_{label}"), h.density));
            }
        }
        densities.extend(points.into_iter().map(|(n, d)| (format!("{n}_{label}"), d)));
    }

    if !metrics.is_empty() {
        let mut s = String::from("boundary,a,b,l1,sup,ks\n");
        for m in &metrics {
            let c = m.comparison;
            let _ = writeln!(
                s,
                "{},{},{},{:.16e},{:.16e},{:.16e}",
                m.boundary, m.a, m.b, c.l1, c.sup, c.ks
            );
        }
        out.put("metrics.csv", &s)?;
    }
    if !statistics.is_empty() {
        let mut s =
            String::from("boundary,alpha,paths,crossed,censored,mean,variance,mode,peak,peak_se,q1,median,q3\n");
        for r in &statistics {
            let st = &r.statistics;
            let alpha = r.alpha.map_or(String::new(), |a| format!("{a:e}"));
            let _ = writeln!(
                s,
                "{},{alpha},{},{},{},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e},{:.16e}",
                r.boundary,
                r.paths,
                st.crossed,
                st.censored,
                st.mean,
                st.variance,
                st.mode,
                r.peak,
                r.peak_standard_error,
                st.quartiles[0],
                st.quartiles[1],
                st.quartiles[2]
            );
        }
        out.put("statistics.csv", &s)?;
    }

    let wall = started.elapsed().as_secs_f64();
    let manifest = json!({
        "name": config.name,
        "version": env!("CARGO_PKG_VERSION"),
        "seed": config.simulation.seed,
        "wall_time_seconds": wall,
        "files": out.files,
        "config": config,
    });
    let text = serde_json::to_string_pretty(&manifest).map_err(|e| Error::Io(e.to_string()))?;
    out.put("manifest.json", &text)?;

    Ok(RunReport {
        output_dir: dir,
        files: out.files,
        densities,
        metrics,
        statistics,
        wall_time_seconds: wall,
    })
}

fn simulate_process(
    config: &ExperimentConfig,
    alpha: Option<f64>,
    x0: f64,
    boundary: &BoundarySpec,
    sim: &SimulationConfig,
) -> Result<FptSampleSet> {
    match config.process.spectrum(alpha) {
        Some(spectrum) => {
            let filter = build_filter(&spectral_factorize(&spectrum?)?, sim.dt)?;
            simulate_fpt(&filter, x0, boundary, sim)
        }
        None => {
            let sampler = GaussMarkovSampler::new(config.process.spec(alpha)?, sim.dt)?;
            simulate_fpt(&sampler, x0, boundary, sim)
        }
    }
}

/// Reads a configuration, applies nothing, and runs it with the given output directory.
pub fn run_file(path: &Path, output_dir: Option<&Path>) -> Result<RunReport> {
    let mut config = ExperimentConfig::load(path)?;
    if let Some(dir) = output_dir {
        config.output_dir = Some(dir.to_path_buf());
    }
    run(&config)
}
