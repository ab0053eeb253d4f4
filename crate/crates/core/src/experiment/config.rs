//! Experiment configuration files.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::boundary::BoundarySpec;
use crate::error::{Error, Result};
use crate::montecarlo::{Binning, CrossingRule};
use crate::process::{make_ou_family, make_wiener_family, ProcessSpec, StationaryCorrelation};
use crate::sim::EvenRational;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Method {
    /// Tabulate the boundaries themselves.
    Boundary,
    ClosedForm,
    Volterra,
    Simulate,
    W1Bound,
}

impl Method {
    pub fn as_str(self) -> &'static str {
        match self {
            Method::Boundary => "boundary",
            Method::ClosedForm => "closed_form",
            Method::Volterra => "volterra",
            Method::Simulate => "simulate",
            Method::W1Bound => "w1_bound",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ProcessConfig {
    /// Zero-mean, unit-variance, correlation `exp(-beta|t|) cos(alpha t)`.
    ExpCos {
        beta: f64,
        #[serde(default)]
        alpha: f64,
        #[serde(default)]
        x0: f64,
    },
    /// Zero-mean, unit-variance, correlation `(1 + beta|t|) exp(-beta|t|)`.
    DampedLinear {
        beta: f64,
        #[serde(default)]
        x0: f64,
    },
    /// `m(t) = beta1 t + c`, `c(s,t) = sigma^2 s + c1`; starts at `c`.
    Wiener { beta1: f64, c: f64, sigma: f64, c1: f64 },
    /// `m(t) = -beta1/beta2 + c e^{beta2 t}`; starts at `-beta1/beta2 + c`.
    Ou {
        beta1: f64,
        beta2: f64,
        c: f64,
        c1: f64,
        c2: f64,
        sigma: f64,
    },
}

impl ProcessConfig {
    pub fn x0(&self) -> f64 {
        match *self {
            ProcessConfig::ExpCos { x0, .. } | ProcessConfig::DampedLinear { x0, .. } => x0,
            ProcessConfig::Wiener { c, .. } => c,
            ProcessConfig::Ou { beta1, beta2, c, .. } => -beta1 / beta2 + c,
        }
    }

    /// Process specification; for exp-cos `alpha` overrides the configured value.
    pub fn spec(&self, alpha: Option<f64>) -> Result<ProcessSpec> {
        match *self {
            ProcessConfig::ExpCos { beta, alpha: a, x0 } => {
                Ok(ProcessSpec::exp_cos(beta, alpha.unwrap_or(a))?.with_start(x0, 0.0))
            }
            ProcessConfig::DampedLinear { beta, x0 } => {
                Ok(ProcessSpec::stationary(StationaryCorrelation::damped_linear(beta)?).with_start(x0, 0.0))
            }
            ProcessConfig::Wiener { beta1, c, sigma, c1 } => make_wiener_family(beta1, c, sigma, c1),
            ProcessConfig::Ou {
                beta1,
                beta2,
                c,
                c1,
                c2,
                sigma,
            } => make_ou_family(beta1, beta2, c, c1, c2, sigma),
        }
    }

    /// Rational spectrum of the stationary families.
    pub fn spectrum(&self, alpha: Option<f64>) -> Option<Result<EvenRational>> {
        match *self {
            ProcessConfig::ExpCos { beta, alpha: a, .. } => Some(EvenRational::exp_cos(beta, alpha.unwrap_or(a))),
            ProcessConfig::DampedLinear { beta, .. } => Some(EvenRational::damped_linear(beta)),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum BoundaryConfig {
    Soglia { beta: f64, d: f64 },
    Linear { a: f64, b: f64 },
    Constant { a: f64 },
}

pub(crate) fn label_number(x: f64) -> String {
    let plain = format!("{x}");
    if plain.len() > 8 {
        format!("{x:e}")
    } else {
        plain
    }
}

impl BoundaryConfig {
    pub fn spec(&self) -> Result<BoundarySpec> {
        match *self {
            BoundaryConfig::Soglia { beta, d } => BoundarySpec::soglia(beta, d),
            BoundaryConfig::Linear { a, b } => {
                if !(a.is_finite() && b.is_finite()) {
                    return Err(Error::Domain("linear boundary needs finite a, b".into()));
                }
                Ok(BoundarySpec::linear(a, b))
            }
            BoundaryConfig::Constant { a } => {
                if !a.is_finite() {
                    return Err(Error::Domain("constant boundary needs a finite level".into()));
                }
                Ok(BoundarySpec::constant(a))
            }
        }
    }

    /// File-name friendly identifier.
    pub fn label(&self) -> String {
        match *self {
            BoundaryConfig::Soglia { beta, d } => format!("soglia_b{}_d{}", label_number(beta), label_number(d)),
            BoundaryConfig::Linear { a, b } => format!("linear_a{}_b{}", label_number(a), label_number(b)),
            BoundaryConfig::Constant { a } => format!("constant_a{}", label_number(a)),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridConfig {
    /// Simulation step and boundary tabulation step.
    #[serde(default = "default_dt")]
    pub dt: f64,
    #[serde(default = "default_horizon")]
    pub horizon: f64,
    /// Volterra step, also used to tabulate closed forms.
    #[serde(default = "default_solver_step")]
    pub solver_step: f64,
}

fn default_dt() -> f64 {
    0.005
}

fn default_horizon() -> f64 {
    10.0
}

fn default_solver_step() -> f64 {
    0.01
}

impl Default for GridConfig {
    fn default() -> Self {
        GridConfig {
            dt: default_dt(),
            horizon: default_horizon(),
            solver_step: default_solver_step(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BinsConfig {
    Auto,
    Count(usize),
    Width(f64),
}

impl From<BinsConfig> for Binning {
    fn from(b: BinsConfig) -> Self {
        match b {
            BinsConfig::Auto => Binning::Auto,
            BinsConfig::Count(c) => Binning::Count(c),
            BinsConfig::Width(w) => Binning::Width(w),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulationSection {
    #[serde(default = "default_paths")]
    pub paths: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_bins")]
    pub bins: BinsConfig,
    /// Memory parameters to sweep for the exp-cos family; empty means the
    /// process value.
    #[serde(default)]
    pub alphas: Vec<f64>,
    #[serde(default = "default_rule")]
    pub crossing: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub threads: Option<usize>,
}

fn default_paths() -> usize {
    100_000
}

fn default_seed() -> u64 {
    20_240_601
}

fn default_bins() -> BinsConfig {
    BinsConfig::Auto
}

fn default_rule() -> String {
    CrossingRule::Bridge.as_str().to_string()
}

impl Default for SimulationSection {
    fn default() -> Self {
        SimulationSection {
            paths: default_paths(),
            seed: default_seed(),
            bins: default_bins(),
            alphas: Vec::new(),
            crossing: default_rule(),
            threads: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub name: String,
    pub process: ProcessConfig,
    pub boundaries: Vec<BoundaryConfig>,
    pub methods: Vec<Method>,
    #[serde(default)]
    pub grid: GridConfig,
    #[serde(default)]
    pub simulation: SimulationSection,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub output_dir: Option<PathBuf>,
}

/// Command-line overrides applied on top of a configuration file.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Overrides {
    pub seed: Option<u64>,
    pub paths: Option<usize>,
    pub dt: Option<f64>,
    pub horizon: Option<f64>,
    pub threads: Option<usize>,
    pub output_dir: Option<PathBuf>,
}

impl ExperimentConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        // a run manifest embeds its configuration under "config"
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::Config(format!("invalid JSON: {e}")))?;
        let value = match value {
            serde_json::Value::Object(mut map) if map.contains_key("config") => {
                map.remove("config").unwrap_or_default()
            }
            other => other,
        };
        serde_json::from_value(value).map_err(|e| Error::Config(format!("invalid configuration: {e}")))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text =
            std::fs::read_to_string(path).map_err(|e| Error::Io(format!("cannot read {}: {e}", path.display())))?;
        Self::from_json(&text)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("configuration serializes")
    }

    pub fn apply(&mut self, o: &Overrides) {
        if let Some(s) = o.seed {
            self.simulation.seed = s;
        }
        if let Some(p) = o.paths {
            self.simulation.paths = p;
        }
        if let Some(dt) = o.dt {
            self.grid.dt = dt;
        }
        if let Some(h) = o.horizon {
            self.grid.horizon = h;
        }
        if let Some(t) = o.threads {
            self.simulation.threads = Some(t);
        }
        if let Some(dir) = &o.output_dir {
            self.output_dir = Some(dir.clone());
        }
    }

    /// Memory parameters simulated: the sweep, or the process value.
    pub fn alphas(&self) -> Vec<Option<f64>> {
        match self.process {
            ProcessConfig::ExpCos { .. } if !self.simulation.alphas.is_empty() => {
                self.simulation.alphas.iter().map(|&a| Some(a)).collect()
            }
            _ => vec![None],
        }
    }

    /// Every constraint violation; an empty list means the configuration is valid.
    pub fn validate(&self) -> Vec<String> {
        let mut v = Vec::new();
        if self.methods.is_empty() {
            v.push("at least one method must be selected".to_string());
        }
        if self.boundaries.is_empty() {
            v.push("at least one boundary must be given".to_string());
        }
        let g = &self.grid;
        for (name, x) in [("dt", g.dt), ("horizon", g.horizon), ("solver_step", g.solver_step)] {
            if !(x > 0.0 && x.is_finite()) {
                v.push(format!("grid.{name} must be positive (got {x})"));
            }
        }
        let s = &self.simulation;
        if s.paths == 0 {
            v.push("simulation.paths must be at least 1".to_string());
        }
        if s.threads == Some(0) {
            v.push("simulation.threads must be at least 1".to_string());
        }
        match s.bins {
            BinsConfig::Count(0) => v.push("simulation.bins count must be at least 1".to_string()),
            BinsConfig::Width(w) if !(w > 0.0 && w.is_finite()) => {
                v.push(format!("simulation.bins width must be positive (got {w})"))
            }
            _ => {}
        }
        if let Err(e) = CrossingRule::parse(&s.crossing) {
            v.push(e.to_string());
        }
        if !s.alphas.is_empty() && !matches!(self.process, ProcessConfig::ExpCos { .. }) {
            v.push("simulation.alphas applies only to the exp-cos family".to_string());
        }
        for &a in &s.alphas {
            if !(a >= 0.0 && a.is_finite()) {
                v.push(format!("alpha must be a finite nonnegative number (got {a})"));
            }
        }

        let process = match self.process.spec(None) {
            Ok(p) => Some(p),
            Err(e) => {
                v.push(format!("process: {e}"));
                None
            }
        };
        let x0 = self.process.x0();
        for b in &self.boundaries {
            match b.spec() {
                Ok(spec) if !(x0 < spec.value(0.0)) => v.push(format!(
                    "{}: start x0 = {x0} is not below S(0) = {}",
                    b.label(),
                    spec.value(0.0)
                )),
                Ok(_) => {}
                Err(e) => v.push(format!("{}: {e}", b.label())),
            }
        }

        for m in &self.methods {
            match m {
                Method::ClosedForm => match self.process {
                    ProcessConfig::ExpCos { alpha, beta, x0 } => {
                        if alpha != 0.0 {
                            v.push("closed form requires α=0".to_string());
                        }
                        if x0 != 0.0 {
                            v.push("closed form requires x0 = 0".to_string());
                        }
                        for b in &self.boundaries {
                            match *b {
                                BoundaryConfig::Soglia { beta: bb, .. } if bb == beta => {}
                                _ => v.push(format!(
                                    "closed form requires a soglia boundary with the process β ({})",
                                    b.label()
                                )),
                            }
                        }
                    }
                    _ => v.push("closed form requires the exp-cos family with α=0".to_string()),
                },
                Method::Volterra => {
                    if let Some(p) = &process {
                        if p.factors().is_err() {
                            v.push(
                                "volterra requires a Gauss-Markov process (exp-cos with α=0, wiener or ou)".to_string(),
                            );
                        }
                    }
                }
                Method::W1Bound => {
                    let smooth = process
                        .as_ref()
                        .and_then(|p| p.correlation())
                        .map(|c| c.derivative_variance().is_ok())
                        .unwrap_or(false);
                    if !smooth {
                        v.push("w1_bound requires a mean-square differentiable process (damped-linear)".to_string());
                    }
                }
                Method::Simulate => {
                    for a in self.alphas() {
                        if let Some(Err(e)) = self.process.spectrum(a) {
                            v.push(format!("simulate: {e}"));
                        }
                    }
                }
                Method::Boundary => {}
            }
        }
        v.dedup();
        v
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const FIG2: &str = r#"{
        "name": "t",
        "process": {"family": "exp-cos", "beta": 0.5, "alpha": 0.0},
        "boundaries": [{"kind": "soglia", "beta": 0.5, "d": 0.25}],
        "methods": ["closed_form", "volterra", "simulate"],
        "simulation": {"alphas": [1e-10, 0.25, 0.5]}
    }"#;

    #[test]
    fn defaults_and_round_trip() {
        let c = ExperimentConfig::from_json(FIG2).unwrap();
        assert_eq!(c.grid, GridConfig::default());
        assert_eq!(c.simulation.paths, 100_000);
        assert!(c.validate().is_empty(), "{:?}", c.validate());
        let back = ExperimentConfig::from_json(&c.to_json()).unwrap();
        assert_eq!(back, c);
        let manifest = format!("{{\"config\": {}, \"wall_time_seconds\": 1.0}}", c.to_json());
        assert_eq!(ExperimentConfig::from_json(&manifest).unwrap(), c);
    }

    #[test]
    fn closed_form_scope() {
        let mut c = ExperimentConfig::from_json(FIG2).unwrap();
        c.process = ProcessConfig::ExpCos {
            beta: 0.5,
            alpha: 0.25,
            x0: 0.0,
        };
        let v = c.validate();
        assert!(v.iter().any(|m| m == "closed form requires α=0"), "{v:?}");
        assert!(v.iter().any(|m| m.starts_with("volterra requires")));
    }

    #[test]
    fn boundary_violation() {
        let mut c = ExperimentConfig::from_json(FIG2).unwrap();
        c.boundaries = vec![BoundaryConfig::Soglia { beta: 0.5, d: -1.0 }];
        assert!(c.validate().iter().any(|m| m.contains("d > 0")));
    }

    #[test]
    fn rejects_unknown_fields_and_bad_json() {
        assert!(ExperimentConfig::from_json("{").is_err());
        let extra = FIG2.replace("\"name\": \"t\",", "\"name\": \"t\", \"bogus\": 1,");
        assert!(matches!(ExperimentConfig::from_json(&extra), Err(Error::Config(_))));
    }

    #[test]
    fn overrides() {
        let mut c = ExperimentConfig::from_json(FIG2).unwrap();
        c.apply(&Overrides {
            seed: Some(3),
            paths: Some(10),
            dt: Some(0.01),
            horizon: Some(2.0),
            threads: Some(2),
            output_dir: Some("x".into()),
        });
        assert_eq!(
            (c.simulation.seed, c.simulation.paths, c.simulation.threads),
            (3, 10, Some(2))
        );
        assert_eq!((c.grid.dt, c.grid.horizon), (0.01, 2.0));
        assert_eq!(c.output_dir, Some(PathBuf::from("x")));
    }

    #[test]
    fn labels() {
        assert_eq!(
            BoundaryConfig::Soglia { beta: 0.5, d: 0.25 }.label(),
            "soglia_b0.5_d0.25"
        );
        assert_eq!(label_number(1e-10), "1e-10");
    }
}
