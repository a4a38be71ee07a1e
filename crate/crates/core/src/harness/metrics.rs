use crate::error::{Error, Result};

/// `points` cell midpoints `(i + 1/2)/points`, avoiding the endpoints where
/// some true densities are unbounded.
pub fn metric_grid(points: usize) -> Vec<f64> {
    (0..points).map(|i| (i as f64 + 0.5) / points as f64).collect()
}

/// Grid errors between an estimate and the truth.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridErrors {
    /// Mean absolute error.
    pub l1: f64,
    /// Mean squared error.
    pub l2: f64,
}

pub fn grid_metrics(estimate: &[f64], truth: &[f64]) -> Result<GridErrors> {
    if estimate.len() != truth.len() {
        return Err(Error::invalid(format!(
            "{} estimates for {} true values",
            estimate.len(),
            truth.len()
        )));
    }
    if estimate.is_empty() {
        return Err(Error::invalid("empty grid"));
    }
    let n = estimate.len() as f64;
    let (mut l1, mut l2) = (0.0, 0.0);
    for (e, t) in estimate.iter().zip(truth) {
        let d = e - t;
        l1 += d.abs();
        l2 += d * d;
    }
    Ok(GridErrors {
        l1: l1 / n,
        l2: l2 / n,
    })
}

/// Sample mean and its standard error `sd/√m`.
pub fn mean_and_se(values: &[f64]) -> (f64, f64) {
    let m = values.len() as f64;
    if values.is_empty() {
        return (f64::NAN, f64::NAN);
    }
    let mean = values.iter().sum::<f64>() / m;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|v| (v - mean).powi(2)).sum::<f64>() / (m - 1.0);
    (mean, (var / m).sqrt())
}
