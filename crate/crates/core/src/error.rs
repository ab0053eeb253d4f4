use thiserror::Error;

/// Errors raised by the numerical routines and the experiment runner.
#[derive(Debug, Error, Clone, PartialEq)]
pub enum Error {
    #[error("parameter constraint violated: {0}")]
    ParameterConstraint(String),
    #[error("domain error: {0}")]
    Domain(String),
    #[error("time {t} outside working interval [{start}, {end}]")]
    OutOfInterval { t: f64, start: f64, end: f64 },
    #[error("degenerate conditional variance {variance:e} between t={from} and t={to}")]
    DegenerateVariance { variance: f64, from: f64, to: f64 },
    #[error("nonpositive diffusion coefficient {0:e}")]
    NonpositiveDiffusion(f64),
    #[error("time map r(t) is not strictly increasing near t={0}")]
    NonInvertibleTimeMap(f64),
    #[error("initial state {x0} is not below the boundary value {boundary} at t0")]
    StartsAboveBoundary { x0: f64, boundary: f64 },
    #[error("correlation is not mean-square differentiable: {0}")]
    NotMsDifferentiable(String),
    #[error("kernel evaluated at coincident times t={t}, tau={tau}")]
    CoincidentTimes { t: f64, tau: f64 },
    #[error("diagonal kernel extrapolation did not converge at t={t} (residual {residual:e})")]
    DiagonalNotConverged { t: f64, residual: f64 },
    #[error("ill-conditioned step at t={t}: |1 - 2 w psi| = {pivot:e}")]
    IllConditioned { t: f64, pivot: f64 },
    #[error("spectral density is not positive (value {0:e})")]
    NotPositive(f64),
    #[error("degree mismatch: {0}")]
    DegreeMismatch(String),
    #[error("denominator polynomial is not Hurwitz (root {re} + {im}i)")]
    NonHurwitz { re: f64, im: f64 },
    #[error("matrix is not positive definite: {0}")]
    NotPositiveDefinite(String),
    #[error("observation of the stationary state has zero variance")]
    DegenerateObservation,
    #[error("every sample path is censored")]
    AllCensored,
    #[error("densities have disjoint supports")]
    DisjointSupports,
    #[error("invalid density grid: {0}")]
    InvalidGrid(String),
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("{0}")]
    Io(String),
}

/// Coarse error category, used for CLI exit codes and machine-readable messages.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ErrorCategory {
    Config,
    Numerical,
    Io,
}

impl ErrorCategory {
    pub fn as_str(self) -> &'static str {
        match self {
            ErrorCategory::Config => "config",
            ErrorCategory::Numerical => "numerical",
            ErrorCategory::Io => "io",
        }
    }

    /// Process exit status for the command-line tool.
    pub fn exit_code(self) -> i32 {
        match self {
            ErrorCategory::Config => 2,
            ErrorCategory::Numerical => 3,
            ErrorCategory::Io => 1,
        }
    }
}

impl Error {
    pub fn category(&self) -> ErrorCategory {
        match self {
            Error::Config(_) | Error::ParameterConstraint(_) => ErrorCategory::Config,
            Error::Io(_) => ErrorCategory::Io,
            _ => ErrorCategory::Numerical,
        }
    }
}

impl From<std::io::Error> for Error {
    fn from(e: std::io::Error) -> Self {
        Error::Io(e.to_string())
    }
}

pub type Result<T, E = Error> = std::result::Result<T, E>;
