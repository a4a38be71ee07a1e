//! Series regression: Gaussian and functional responses under a g-prior,
//! binary and Poisson responses with identity link and conjugate priors.

mod conjugate;
pub mod design;
pub mod gaussian;

pub use conjugate::{BinaryModel, PoissonModel};
pub use design::{design_matrix, Covariates};
pub use gaussian::{fit_component, GPriorParams, GaussianComponent, GaussianModel, GaussianPosterior, Prediction};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ResponseKind {
    Gaussian,
    Binary,
    Count,
}

/// Scalar covariates `Z_i ∈ [0, 1]` with responses of one kind.
#[derive(Debug, Clone, PartialEq)]
pub struct RegressionDataset {
    covariates: Vec<f64>,
    responses: Vec<f64>,
    kind: ResponseKind,
}

impl RegressionDataset {
    pub fn new(covariates: Vec<f64>, responses: Vec<f64>, kind: ResponseKind) -> Result<Self> {
        if covariates.len() != responses.len() {
            return Err(Error::invalid(format!(
                "{} covariates but {} responses",
                covariates.len(),
                responses.len()
            )));
        }
        if let Some(&z) = covariates.iter().find(|z| !(0.0..=1.0).contains(*z)) {
            return Err(Error::Domain { value: z });
        }
        let bad = responses.iter().find(|&&x| match kind {
            ResponseKind::Gaussian => !x.is_finite(),
            ResponseKind::Binary => x != 0.0 && x != 1.0,
            ResponseKind::Count => !(x >= 0.0 && x.fract() == 0.0 && x < u32::MAX as f64),
        });
        if let Some(x) = bad {
            return Err(Error::invalid(format!("response {x} is not valid for {kind:?} data")));
        }
        Ok(Self {
            covariates,
            responses,
            kind,
        })
    }

    pub fn covariates(&self) -> &[f64] {
        &self.covariates
    }

    pub fn responses(&self) -> &[f64] {
        &self.responses
    }

    pub fn kind(&self) -> ResponseKind {
        self.kind
    }

    pub fn len(&self) -> usize {
        self.responses.len()
    }

    pub fn is_empty(&self) -> bool {
        self.responses.is_empty()
    }
}
