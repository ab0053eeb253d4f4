//! Sample-path simulation of Gaussian processes with rational spectra.

pub mod ensemble;
pub mod filter;
pub mod model;
pub mod poly;
pub mod spectrum;
pub mod streams;

pub use ensemble::{simulate_ensemble, simulate_oracle_cholesky, PathEnsemble};
pub use filter::{build_filter, StateSpaceFilter};
pub use model::{GaussMarkovSampler, PathModel};
pub use spectrum::{spectral_density_expcos, spectral_factorize, EvenRational, RationalSpectrum};
