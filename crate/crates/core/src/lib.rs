//! First-passage-time densities of Gaussian processes through time-varying
//! boundaries: closed forms, a Volterra integral-equation solver for
//! Gauss-Markov processes and Monte Carlo simulation for general stationary
//! Gaussian processes with rational spectra.

// `!(x > 0.0)` is used on purpose so that NaN is rejected too.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod analytic;
pub mod boundary;
pub mod density;
pub mod error;
pub mod experiment;
pub mod montecarlo;
pub mod process;
pub mod quadrature;
pub mod sim;
pub mod volterra;

pub use analytic::{closed_form_soglia, w1_upper_bound, wiener_linear_fpt, ClosedFormSoglia};
pub use boundary::{soglia_derivative, soglia_eval, BoundaryKind, BoundarySpec, Soglia};
pub use density::{DensityGrid, DensityMethod};
pub use error::{Error, ErrorCategory, Result};
pub use process::{
    make_ou_family, make_wiener_family, markov_condition_check, transform_to_wiener, Covariance, CovarianceFactors,
    Interval, MeanFunction, ProcessFamily, ProcessSpec, SmoothFn, StationaryCorrelation,
};
pub use volterra::{psi_diagonal, psi_kernel, solve_volterra, Scheme, SolverConfig, VolterraSolution};
