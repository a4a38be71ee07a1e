//! Finite random-series priors built on B-splines.
//!
//! Posterior moments for density estimation and identity-link binary and
//! Poisson regression are computed in closed form by expanding the likelihood
//! into conjugate terms, either exhaustively or by sampling terms. Gaussian
//! and functional regression use a g-prior with an inverse-gamma variance.
//! The [`rates`] module evaluates contraction-rate exponents and checks the
//! sieve inequalities numerically.

pub mod basis;
pub mod config;
pub mod density;
pub mod error;
mod expansion;
pub mod harness;
pub mod logspace;
pub mod priors;
pub mod quadrature;
pub mod rates;
pub mod regression;
pub mod summary;

pub use basis::{Basis, LocalBasis, Norm, TensorBasis};
pub use config::KeyValues;
pub use density::{DensityDataset, DensityModel, TermIndex};
pub use error::{Error, Result};
pub use harness::TrueDensity;
pub use priors::{CoefficientPrior, Hyper, ModelSizePrior, SizeFamily};
pub use rates::{rate_exponents, solve_sieve, BasisFamily, RateProblem};
pub use regression::{
    BinaryModel, Covariates, GaussianModel, PoissonModel, RegressionDataset, ResponseKind,
};
pub use summary::{Evaluation, Moments, PosteriorSummary};
