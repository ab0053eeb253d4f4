use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use gaussfpt::experiment::{self, ExperimentConfig, Overrides, RunReport};
use gaussfpt::{Error, Result};

/// Default output directory when neither `--out` nor the configuration names one.
const OUT_DIR_ENV: &str = "GAUSSFPT_OUT_DIR";

#[derive(Parser)]
#[command(
    name = "gaussfpt",
    version,
    about = "First-passage-time densities of Gaussian processes"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment described by a JSON configuration (or a run manifest).
    Run {
        config: PathBuf,
        #[command(flatten)]
        flags: Flags,
    },
    /// Report every constraint violation of a configuration.
    Validate { config: PathBuf },
    /// Run one of the bundled presets: figure-1, figure-2, figure-3.
    Preset {
        name: String,
        /// Print the preset configuration instead of running it.
        #[arg(long)]
        print: bool,
        #[command(flatten)]
        flags: Flags,
    },
}

#[derive(Args)]
struct Flags {
    /// Output directory.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    seed: Option<u64>,
    /// Number of simulated paths.
    #[arg(long)]
    paths: Option<usize>,
    /// Simulation time step.
    #[arg(long)]
    dt: Option<f64>,
    #[arg(long)]
    horizon: Option<f64>,
    /// Worker threads for simulation.
    #[arg(long)]
    threads: Option<usize>,
}

impl Flags {
    fn overrides(&self) -> Overrides {
        Overrides {
            seed: self.seed,
            paths: self.paths,
            dt: self.dt,
            horizon: self.horizon,
            threads: self.threads,
            output_dir: self.out.clone(),
        }
    }
}

fn execute(mut config: ExperimentConfig, flags: &Flags) -> Result<RunReport> {
    config.apply(&flags.overrides());
    if config.output_dir.is_none() {
        config.output_dir = std::env::var_os(OUT_DIR_ENV).map(PathBuf::from);
    }
    if config.output_dir.is_none() {
        return Err(Error::Config(format!(
            "no output directory: pass --out or set {OUT_DIR_ENV}"
        )));
    }
    experiment::run(&config)
}

fn summarize(report: &RunReport) {
    println!("wrote {} files to {}", report.files.len(), report.output_dir.display());
    for m in &report.metrics {
        let c = m.comparison;
        println!(
            "{} {} vs {}: l1={:.4e} sup={:.4e} ks={:.4e}",
            m.boundary, m.a, m.b, c.l1, c.sup, c.ks
        );
    }
    for r in &report.statistics {
        let alpha = r.alpha.map_or(String::new(), |a| format!(" alpha={a:e}"));
        println!(
            "{}{alpha}: crossed={} censored={} mode={:.4} peak={:.4}",
            r.boundary, r.statistics.crossed, r.statistics.censored, r.statistics.mode, r.peak
        );
    }
    println!("wall time {:.2}s", report.wall_time_seconds);
}

fn main_inner(cli: Cli) -> Result<ExitCode> {
    match cli.command {
        Command::Run { config, flags } => {
            summarize(&execute(ExperimentConfig::load(&config)?, &flags)?);
        }
        Command::Validate { config } => {
            let violations = ExperimentConfig::load(&config)?.validate();
            if violations.is_empty() {
                println!("ok");
            } else {
                for v in &violations {
                    println!("{v}");
                }
                return Ok(ExitCode::from(2));
            }
        }
        Command::Preset { name, print, flags } => {
            let mut config = experiment::preset(&name)?;
            if print {
                config.apply(&flags.overrides());
                println!("{}", config.to_json());
            } else {
                summarize(&execute(config, &flags)?);
            }
        }
    }
    Ok(ExitCode::SUCCESS)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match main_inner(cli) {
        Ok(code) => code,
        Err(e) => {
            let category = e.category();
            let message = e.to_string().replace('\n', " ");
            eprintln!("error: {}: {message}", category.as_str());
            ExitCode::from(category.exit_code() as u8)
        }
    }
}
