//! Gaussian series regression with a Zellner g-prior on the coefficients,
//! `σ² ∼ IG(a, b)`, and model averaging over `J`.

use nalgebra::{DMatrix, DVector, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

use super::design::{design_matrix, Covariates};
use crate::basis::Basis;
use crate::error::{Error, Result};
use crate::logspace::log_sum_exp;
use crate::priors::ModelSizePrior;

/// Smallest accepted eigenvalue ratio of `WᵀW`.
const RANK_TOLERANCE: f64 = 1e-12;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GPriorParams {
    /// `None` means `g = n`.
    pub g: Option<f64>,
    pub a: f64,
    pub b: f64,
}

impl Default for GPriorParams {
    fn default() -> Self {
        Self {
            g: None,
            a: 1.0,
            b: 1.0,
        }
    }
}

impl GPriorParams {
    fn validate(&self) -> Result<()> {
        let ok = self.g.is_none_or(|g| g > 0.0 && g.is_finite())
            && self.a > 0.0
            && self.b > 0.0
            && self.a.is_finite()
            && self.b.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid g-prior parameters {self:?}")))
        }
    }
}

/// Conjugate posterior for one `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianComponent {
    pub dimension: usize,
    /// `g/(1+g) · θ̂_OLS`.
    pub coefficients: DVector<f64>,
    /// `(WᵀW)⁻¹`.
    pub gram_inverse: DMatrix<f64>,
    pub shrinkage: f64,
    /// Posterior `σ² ∼ IG(shape, scale)`.
    pub shape: f64,
    pub scale: f64,
    pub log_marginal: f64,
}

impl GaussianComponent {
    /// Posterior mean of `σ²`.
    pub fn sigma2_mean(&self) -> f64 {
        self.scale / (self.shape - 1.0)
    }

    /// Posterior covariance of the coefficients (σ² integrated out).
    pub fn covariance(&self) -> DMatrix<f64> {
        &self.gram_inverse * (self.shrinkage * self.sigma2_mean())
    }

    /// Predictive mean and variance (noise included) for one design row.
    pub fn predict_row(&self, row: &[f64]) -> (f64, f64) {
        let w = DVector::from_column_slice(row);
        let mean = w.dot(&self.coefficients);
        let quad = (self.gram_inverse.clone() * &w).dot(&w);
        (mean, self.sigma2_mean() * (1.0 + self.shrinkage * quad))
    }
}

/// Fits one `J` given its design matrix.
pub fn fit_component(w: &DMatrix<f64>, x: &[f64], params: GPriorParams) -> Result<GaussianComponent> {
    params.validate()?;
    let (n, j) = w.shape();
    if x.len() != n {
        return Err(Error::invalid(format!("{n} design rows but {} responses", x.len())));
    }
    if n == 0 {
        return Err(Error::invalid("no observations"));
    }
    let gram = w.transpose() * w;
    let eig = SymmetricEigen::new(gram.clone());
    let max = eig.eigenvalues.max();
    let min = eig.eigenvalues.min();
    if max.is_nan() || max <= 0.0 || min <= RANK_TOLERANCE * max {
        return Err(Error::Infeasible {
            dimension: j,
            reason: "design matrix is rank deficient".into(),
        });
    }
    let chol = gram.cholesky().ok_or_else(|| Error::Infeasible {
        dimension: j,
        reason: "Gram matrix is not positive definite".into(),
    })?;
    let xv = DVector::from_column_slice(x);
    let wtx = w.transpose() * &xv;
    let ols = chol.solve(&wtx);
    let g = params.g.unwrap_or(n as f64);
    let shrinkage = g / (1.0 + g);
    let s = (xv.dot(&xv) - shrinkage * wtx.dot(&ols)).max(0.0);
    let half_n = n as f64 / 2.0;
    let shape = params.a + half_n;
    let scale = params.b + s / 2.0;
    if shape <= 1.0 {
        return Err(Error::invalid("posterior σ² has no mean (a + n/2 ≤ 1)"));
    }
    let log_marginal = ln_gamma(shape) + params.a * params.b.ln()
        - ln_gamma(params.a)
        - half_n * (2.0 * std::f64::consts::PI).ln()
        - (j as f64 / 2.0) * g.ln_1p()
        - shape * scale.ln();
    Ok(GaussianComponent {
        dimension: j,
        coefficients: ols * shrinkage,
        gram_inverse: chol.inverse(),
        shrinkage,
        shape,
        scale,
        log_marginal,
    })
}

/// Model-averaged Gaussian posterior.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianPosterior {
    pub order: usize,
    pub components: Vec<GaussianComponent>,
    /// Posterior probability of each entry of `components`.
    pub j_weights: Vec<f64>,
    /// Dimensions excluded from the average, with the reason.
    pub infeasible: Vec<(usize, String)>,
}

/// Predictive mean and variance of one response.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Prediction {
    pub mean: f64,
    pub variance: f64,
}

/// g-prior regression model over a truncated range of `J`.
#[derive(Debug, Clone, PartialEq)]
pub struct GaussianModel {
    pub order: usize,
    pub size_prior: ModelSizePrior,
    pub params: GPriorParams,
}

impl GaussianModel {
    pub fn new(order: usize, size_prior: ModelSizePrior, params: GPriorParams) -> Result<Self> {
        params.validate()?;
        if order == 0 || size_prior.min() < order {
            return Err(Error::invalid(format!(
                "J.min = {} is below the spline order {order}",
                size_prior.min()
            )));
        }
        Ok(Self {
            order,
            size_prior,
            params,
        })
    }

    pub fn fit(&self, covariates: &Covariates, x: &[f64]) -> Result<GaussianPosterior> {
        let mut components = Vec::new();
        let mut infeasible = Vec::new();
        for j in self.size_prior.support() {
            let basis = Basis::with_dimension(self.order, j)?;
            let w = design_matrix(covariates, &basis)?;
            match fit_component(&w, x, self.params) {
                Ok(c) => components.push(c),
                Err(Error::Infeasible { dimension, reason }) => infeasible.push((dimension, reason)),
                Err(e) => return Err(e),
            }
        }
        if components.is_empty() {
            return Err(Error::Infeasible {
                dimension: self.size_prior.max(),
                reason: "every J in the truncation range is rank deficient".into(),
            });
        }
        let log_post: Vec<f64> = components
            .iter()
            .map(|c| self.size_prior.log_pmf(c.dimension) + c.log_marginal)
            .collect();
        let norm = log_sum_exp(&log_post);
        let j_weights = log_post.iter().map(|l| (l - norm).exp()).collect();
        Ok(GaussianPosterior {
            order: self.order,
            components,
            j_weights,
            infeasible,
        })
    }
}

impl GaussianPosterior {
    /// Model-averaged predictive means and variances; the variance adds the
    /// between-model spread to the within-model predictive variance.
    pub fn predict(&self, covariates: &Covariates) -> Result<Vec<Prediction>> {
        let n = covariates.len();
        let mut first = vec![0.0; n];
        let mut second = vec![0.0; n];
        for (c, &weight) in self.components.iter().zip(&self.j_weights) {
            let basis = Basis::with_dimension(self.order, c.dimension)?;
            let w = design_matrix(covariates, &basis)?;
            for i in 0..n {
                let row: Vec<f64> = w.row(i).iter().copied().collect();
                let (m, v) = c.predict_row(&row);
                first[i] += weight * m;
                second[i] += weight * (v + m * m);
            }
        }
        Ok(first
            .into_iter()
            .zip(second)
            .map(|(m, s)| Prediction {
                mean: m,
                variance: (s - m * m).max(0.0),
            })
            .collect())
    }

    /// Predictions for explicit design rows of a single-component posterior.
    pub fn predict_rows(&self, rows: &DMatrix<f64>) -> Result<Vec<Prediction>> {
        if self.components.len() != 1 {
            return Err(Error::invalid("explicit rows need a single-J posterior"));
        }
        let c = &self.components[0];
        if rows.ncols() != c.dimension {
            return Err(Error::invalid(format!(
                "rows have {} columns, model has J = {}",
                rows.ncols(),
                c.dimension
            )));
        }
        Ok((0..rows.nrows())
            .map(|i| {
                let row: Vec<f64> = rows.row(i).iter().copied().collect();
                let (mean, variance) = c.predict_row(&row);
                Prediction { mean, variance }
            })
            .collect())
    }

    /// Posterior mean of the coefficient function `Σ θ_k B_k(t)` on `grid`.
    pub fn mean_function(&self, grid: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; grid.len()];
        for (c, &weight) in self.components.iter().zip(&self.j_weights) {
            let basis = Basis::with_dimension(self.order, c.dimension)?;
            for (o, &t) in out.iter_mut().zip(grid) {
                *o += weight * basis.combine(c.coefficients.as_slice(), t)?;
            }
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn shrinks_least_squares() {
        let w = DMatrix::from_row_slice(4, 2, &[1.0, 0.0, 0.5, 0.5, 0.0, 1.0, 0.2, 0.8]);
        let x = [1.0, 2.0, 2.5, 2.0];
        let c = fit_component(&w, &x, GPriorParams { g: Some(3.0), a: 1.0, b: 1.0 }).unwrap();
        let ols = (w.transpose() * &w)
            .cholesky()
            .unwrap()
            .solve(&(w.transpose() * DVector::from_column_slice(&x)));
        for k in 0..2 {
            assert_relative_eq!(c.coefficients[k], 0.75 * ols[k], epsilon = 1e-12);
        }
    }

    #[test]
    fn rank_deficient_is_infeasible() {
        let w = DMatrix::from_row_slice(3, 2, &[1.0, 1.0, 2.0, 2.0, 3.0, 3.0]);
        assert!(matches!(
            fit_component(&w, &[1.0, 2.0, 3.0], GPriorParams::default()),
            Err(Error::Infeasible { .. })
        ));
    }

    #[test]
    fn single_model_prediction() {
        let z: Vec<f64> = (0..20).map(|i| (i as f64 + 0.5) / 20.0).collect();
        let x: Vec<f64> = z.iter().map(|v| 2.0 * v).collect();
        let model = GaussianModel::new(2, ModelSizePrior::fixed(3).unwrap(), GPriorParams::default()).unwrap();
        let cov = Covariates::scalar(z).unwrap();
        let post = model.fit(&cov, &x).unwrap();
        assert_eq!(post.j_weights, vec![1.0]);
        let p = post.predict(&cov).unwrap();
        let basis = Basis::with_dimension(2, 3).unwrap();
        let w = design_matrix(&cov, &basis).unwrap();
        let direct = post.predict_rows(&w).unwrap();
        for (a, b) in p.iter().zip(&direct) {
            assert_relative_eq!(a.mean, b.mean, epsilon = 1e-12);
            assert_relative_eq!(a.variance, b.variance, epsilon = 1e-10);
        }
    }
}
