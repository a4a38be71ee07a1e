//! Posterior summaries on an evaluation grid and pointwise credible bands.

use statrs::distribution::{ContinuousCDF, Normal};

use crate::error::{Error, Result};

/// Largest number of terms exact enumeration accepts per `J` by default.
pub const DEFAULT_TERM_CAP: f64 = 1e7;

/// Which posterior moments to compute.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Moments {
    /// `E f(x)` only.
    First,
    /// `E f(x)` and `E f(x)²`.
    Second,
}

impl Moments {
    pub fn from_order(m: u8) -> Result<Self> {
        match m {
            1 => Ok(Moments::First),
            2 => Ok(Moments::Second),
            _ => Err(Error::invalid(format!("moment order must be 1 or 2, got {m}"))),
        }
    }
}

/// How the term sums are evaluated.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Evaluation {
    /// Enumerate every term; fails if some `J` exceeds the cap.
    Exact,
    /// Sample `draws` terms per `J`.
    MonteCarlo { draws: usize, seed: u64 },
    /// Exact when every `J` is within the cap, otherwise Monte-Carlo.
    Auto { draws: usize, seed: u64 },
}

/// How the moments were obtained.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Computation {
    Exact,
    MonteCarlo { draws: usize },
}

/// Pointwise credible band `mean ± z·sd`, floored at zero.
#[derive(Debug, Clone, PartialEq)]
pub struct Band {
    pub level: f64,
    pub low: Vec<f64>,
    pub high: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PosteriorSummary {
    pub grid: Vec<f64>,
    /// Posterior mean of the function at each grid point.
    pub mean: Vec<f64>,
    /// Posterior mean of its square, when requested.
    pub second_moment: Option<Vec<f64>>,
    pub band: Option<Band>,
    /// Monte-Carlo standard error of `mean` (zero for exact computation).
    pub mc_se: Vec<f64>,
    /// Model sizes in the truncation range.
    pub j_values: Vec<usize>,
    /// Posterior probability of each entry of `j_values`.
    pub j_weights: Vec<f64>,
    /// Estimated log marginal likelihood of each `J` (without the prior).
    pub j_log_marginal: Vec<f64>,
    pub computation: Computation,
}

impl PosteriorSummary {
    /// Pointwise posterior standard deviation, `sqrt(max(E f² − (E f)², 0))`.
    pub fn sd(&self) -> Option<Vec<f64>> {
        self.second_moment.as_ref().map(|m2| {
            m2.iter()
                .zip(&self.mean)
                .map(|(s, m)| (s - m * m).max(0.0).sqrt())
                .collect()
        })
    }

    /// Adds a pointwise band at `level` from the first two moments.
    pub fn with_credible_band(mut self, level: f64) -> Result<Self> {
        self.band = Some(credible_band(&self, level)?);
        Ok(self)
    }
}

/// Two-sided standard normal quantile for `level` coverage.
pub fn normal_multiplier(level: f64) -> Result<f64> {
    if !(level > 0.0 && level < 1.0) {
        return Err(Error::invalid(format!("band level {level} outside (0, 1)")));
    }
    let std = Normal::new(0.0, 1.0).map_err(|e| Error::Internal(e.to_string()))?;
    Ok(std.inverse_cdf(0.5 + level / 2.0))
}

pub fn credible_band(summary: &PosteriorSummary, level: f64) -> Result<Band> {
    let z = normal_multiplier(level)?;
    let sd = summary
        .sd()
        .ok_or_else(|| Error::invalid("credible bands need the second moment"))?;
    let low = summary
        .mean
        .iter()
        .zip(&sd)
        .map(|(m, s)| (m - z * s).max(0.0))
        .collect();
    let high = summary.mean.iter().zip(&sd).map(|(m, s)| m + z * s).collect();
    Ok(Band { level, low, high })
}
