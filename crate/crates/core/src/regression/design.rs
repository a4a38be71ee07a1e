use nalgebra::DMatrix;

use crate::basis::Basis;
use crate::error::{Error, Result};

/// Covariates of a regression dataset.
#[derive(Debug, Clone, PartialEq)]
pub enum Covariates {
    /// `Z_i ∈ [0, 1]`; `W_ik = B_k(Z_i)`.
    Scalar(Vec<f64>),
    /// Curves `Z_i(t)` on a common grid; `W_ik = ∫ Z_i(t) B_k(t) dt` by the
    /// trapezoid rule.
    Functional { grid: Vec<f64>, curves: Vec<Vec<f64>> },
    /// One measurement `Z_i(T_i)` per subject; `W_ik = Z_i(T_i) B_k(T_i)`.
    Longitudinal { times: Vec<f64>, values: Vec<f64> },
}

impl Covariates {
    pub fn functional(grid: Vec<f64>, curves: Vec<Vec<f64>>) -> Result<Self> {
        if grid.len() < 2 {
            return Err(Error::invalid("functional covariates need at least 2 grid points"));
        }
        if let Some(&t) = grid.iter().find(|t| !(0.0..=1.0).contains(*t)) {
            return Err(Error::Domain { value: t });
        }
        if grid.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::invalid("curve grid must be strictly increasing"));
        }
        if let Some((i, c)) = curves.iter().enumerate().find(|(_, c)| c.len() != grid.len()) {
            return Err(Error::invalid(format!(
                "curve {i} has {} values for {} grid points",
                c.len(),
                grid.len()
            )));
        }
        Ok(Covariates::Functional { grid, curves })
    }

    pub fn scalar(z: Vec<f64>) -> Result<Self> {
        if let Some(&v) = z.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain { value: v });
        }
        Ok(Covariates::Scalar(z))
    }

    pub fn longitudinal(times: Vec<f64>, values: Vec<f64>) -> Result<Self> {
        if times.len() != values.len() {
            return Err(Error::invalid("times and values differ in length"));
        }
        if let Some(&v) = times.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Domain { value: v });
        }
        Ok(Covariates::Longitudinal { times, values })
    }

    pub fn len(&self) -> usize {
        match self {
            Covariates::Scalar(z) => z.len(),
            Covariates::Functional { curves, .. } => curves.len(),
            Covariates::Longitudinal { times, .. } => times.len(),
        }
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Rows `ids` in the given order.
    pub fn select(&self, ids: &[usize]) -> Self {
        match self {
            Covariates::Scalar(z) => Covariates::Scalar(ids.iter().map(|&i| z[i]).collect()),
            Covariates::Functional { grid, curves } => Covariates::Functional {
                grid: grid.clone(),
                curves: ids.iter().map(|&i| curves[i].clone()).collect(),
            },
            Covariates::Longitudinal { times, values } => Covariates::Longitudinal {
                times: ids.iter().map(|&i| times[i]).collect(),
                values: ids.iter().map(|&i| values[i]).collect(),
            },
        }
    }
}

/// The `n × J` design matrix for `basis`.
pub fn design_matrix(covariates: &Covariates, basis: &Basis) -> Result<DMatrix<f64>> {
    let j = basis.dimension();
    let n = covariates.len();
    let mut w = DMatrix::zeros(n, j);
    match covariates {
        Covariates::Scalar(z) => {
            for (i, &x) in z.iter().enumerate() {
                for (k, v) in basis.eval_local(x)?.nonzero() {
                    w[(i, k)] = v;
                }
            }
        }
        Covariates::Longitudinal { times, values } => {
            for (i, (&t, &z)) in times.iter().zip(values).enumerate() {
                for (k, v) in basis.eval_local(t)?.nonzero() {
                    w[(i, k)] = z * v;
                }
            }
        }
        Covariates::Functional { grid, curves } => {
            if grid.len() < 2 {
                return Err(Error::invalid("functional covariates need at least 2 grid points"));
            }
            // trapezoid weights times basis values, shared by all curves
            let g = grid.len();
            let mut weights = vec![0.0; g];
            for s in 0..g - 1 {
                let h = grid[s + 1] - grid[s];
                weights[s] += h / 2.0;
                weights[s + 1] += h / 2.0;
            }
            let locals = grid
                .iter()
                .map(|&t| basis.eval_local(t))
                .collect::<Result<Vec<_>>>()?;
            for (i, curve) in curves.iter().enumerate() {
                for ((local, &z), &h) in locals.iter().zip(curve).zip(&weights) {
                    for (k, v) in local.nonzero() {
                        w[(i, k)] += h * z * v;
                    }
                }
            }
        }
    }
    Ok(w)
}
