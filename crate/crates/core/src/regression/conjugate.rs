//! Identity-link binary (Beta priors) and Poisson (Gamma priors) regression
//! via the conjugate term expansion.

use statrs::function::gamma::ln_gamma;

use crate::basis::{Basis, LocalBasis};
use crate::error::{Error, Result};
use crate::expansion::{self, Choice, Conjugate, Factor, Problem};
use crate::priors::{Hyper, ModelSizePrior};
use crate::summary::{Evaluation, Moments, PosteriorSummary, DEFAULT_TERM_CAP};

use super::{RegressionDataset, ResponseKind};

fn ln_beta(a: f64, b: f64) -> f64 {
    ln_gamma(a) + ln_gamma(b) - ln_gamma(a + b)
}

fn table(base: f64, upto: u32) -> Vec<f64> {
    (0..=upto).map(|c| ln_gamma(base + c as f64)).collect()
}

/// Independent `Beta(a_k, b_k)`; statistic `2k` counts successes assigned
/// to `θ_k`, `2k + 1` failures assigned to `1 − θ_k`.
struct BetaFamily {
    a: Vec<f64>,
    b: Vec<f64>,
    ln_a: Vec<Vec<f64>>,
    ln_b: Vec<Vec<f64>>,
    ln_ab: Vec<Vec<f64>>,
    constant: f64,
}

impl BetaFamily {
    fn new(a: Vec<f64>, b: Vec<f64>, successes: u32, failures: u32) -> Self {
        let constant = -a.iter().zip(&b).map(|(&x, &y)| ln_beta(x, y)).sum::<f64>();
        Self {
            ln_a: a.iter().map(|&v| table(v, successes)).collect(),
            ln_b: b.iter().map(|&v| table(v, failures)).collect(),
            ln_ab: a
                .iter()
                .zip(&b)
                .map(|(&x, &y)| table(x + y, successes + failures))
                .collect(),
            a,
            b,
            constant,
        }
    }
}

impl Conjugate for BetaFamily {
    fn stats_len(&self) -> usize {
        2 * self.a.len()
    }

    fn categories(&self) -> usize {
        self.a.len()
    }

    fn category_of(&self, stat: usize) -> usize {
        stat / 2
    }

    fn constant(&self) -> f64 {
        self.constant
    }

    fn category_log(&self, k: usize, stats: &[u32]) -> f64 {
        let (m, l) = (stats[2 * k] as usize, stats[2 * k + 1] as usize);
        self.ln_a[k][m] + self.ln_b[k][l] - self.ln_ab[k][m + l]
    }

    fn moments(&self, point: &LocalBasis, stats: &[u32], second: bool) -> (f64, f64) {
        let mut mean = 0.0;
        let mut var = 0.0;
        for (r, &v) in point.values.iter().enumerate() {
            let k = point.first + r;
            let al = self.a[k] + stats[2 * k] as f64;
            let be = self.b[k] + stats[2 * k + 1] as f64;
            let t = al + be;
            mean += v * al / t;
            if second {
                var += v * v * al * be / (t * t * (t + 1.0));
            }
        }
        (mean, if second { mean * mean + var } else { 0.0 })
    }
}

/// Independent `Gamma(shape_k, rate_k)` with the exposure `c_k = Σ_i B_k(Z_i)`
/// folded into the rate.
struct GammaFamily {
    shape: Vec<f64>,
    post_rate: Vec<f64>,
    ln_shape: Vec<Vec<f64>>,
    ln_rate: Vec<f64>,
    constant: f64,
}

impl GammaFamily {
    fn new(shape: Vec<f64>, rate: Vec<f64>, exposure: &[f64], total: u32) -> Self {
        let post_rate: Vec<f64> = rate.iter().zip(exposure).map(|(b, c)| b + c).collect();
        let constant = shape
            .iter()
            .zip(&rate)
            .zip(&post_rate)
            .map(|((&a, &b), &bc)| a * b.ln() - ln_gamma(a) - a * bc.ln())
            .sum();
        Self {
            ln_shape: shape.iter().map(|&a| table(a, total)).collect(),
            ln_rate: post_rate.iter().map(|v| v.ln()).collect(),
            shape,
            post_rate,
            constant,
        }
    }
}

impl Conjugate for GammaFamily {
    fn stats_len(&self) -> usize {
        self.shape.len()
    }

    fn categories(&self) -> usize {
        self.shape.len()
    }

    fn category_of(&self, stat: usize) -> usize {
        stat
    }

    fn constant(&self) -> f64 {
        self.constant
    }

    fn category_log(&self, k: usize, stats: &[u32]) -> f64 {
        let m = stats[k];
        self.ln_shape[k][m as usize] - (m as f64) * self.ln_rate[k]
    }

    fn moments(&self, point: &LocalBasis, stats: &[u32], second: bool) -> (f64, f64) {
        let mut mean = 0.0;
        let mut var = 0.0;
        for (r, &v) in point.values.iter().enumerate() {
            let k = point.first + r;
            let al = self.shape[k] + stats[k] as f64;
            let be = self.post_rate[k];
            mean += v * al / be;
            if second {
                var += v * v * al / (be * be);
            }
        }
        (mean, if second { mean * mean + var } else { 0.0 })
    }
}

/// All compositions of `total` into `parts` nonnegative integers.
fn compositions(total: u32, parts: usize) -> Vec<Vec<u32>> {
    fn rec(left: u32, parts: usize, cur: &mut Vec<u32>, out: &mut Vec<Vec<u32>>) {
        if parts == 1 {
            cur.push(left);
            out.push(cur.clone());
            cur.pop();
            return;
        }
        for m in (0..=left).rev() {
            cur.push(m);
            rec(left - m, parts - 1, cur, out);
            cur.pop();
        }
    }
    let mut out = Vec::new();
    if parts > 0 {
        rec(total, parts, &mut Vec::with_capacity(parts), &mut out);
    }
    out
}

/// `log C(total + parts − 1, parts − 1)`.
fn log_composition_count(total: u32, parts: usize) -> f64 {
    let (t, p) = (total as f64, parts as f64);
    ln_gamma(t + p) - ln_gamma(t + 1.0) - ln_gamma(p)
}

fn ln_factorial(m: u32) -> f64 {
    ln_gamma(m as f64 + 1.0)
}

fn check_model(order: usize, size_prior: &ModelSizePrior) -> Result<()> {
    if order == 0 || size_prior.min() < order {
        return Err(Error::invalid(format!(
            "J.min = {} is below the spline order {order}",
            size_prior.min()
        )));
    }
    Ok(())
}

/// Sorted `(z, x)` pairs so the output does not depend on input order.
fn sorted_pairs(data: &RegressionDataset) -> Vec<(f64, f64)> {
    let mut pairs: Vec<(f64, f64)> = data
        .covariates()
        .iter()
        .copied()
        .zip(data.responses().iter().copied())
        .collect();
    pairs.sort_by(|p, q| p.0.total_cmp(&q.0).then(p.1.total_cmp(&q.1)));
    pairs
}

fn grid_points(basis: &Basis, grid: &[f64]) -> Result<Vec<LocalBasis>> {
    grid.iter().map(|&z| basis.eval_local(z)).collect()
}

/// Binary regression `P(X = 1 | Z = z) = Σ θ_k B_k(z)` with
/// `θ_k ∼ Beta(a_k, b_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct BinaryModel {
    order: usize,
    size_prior: ModelSizePrior,
    a: Hyper,
    b: Hyper,
    term_cap: f64,
}

impl BinaryModel {
    pub fn new(order: usize, size_prior: ModelSizePrior, a: Hyper, b: Hyper) -> Result<Self> {
        check_model(order, &size_prior)?;
        for j in size_prior.support() {
            a.resolve(j, "Beta a")?;
            b.resolve(j, "Beta b")?;
        }
        Ok(Self {
            order,
            size_prior,
            a,
            b,
            term_cap: DEFAULT_TERM_CAP,
        })
    }

    pub fn with_term_cap(mut self, cap: f64) -> Self {
        self.term_cap = cap;
        self
    }

    fn problems(&self, data: &RegressionDataset, grid: &[f64]) -> Result<Vec<Problem<BetaFamily>>> {
        if data.kind() != ResponseKind::Binary {
            return Err(Error::invalid("binary model needs 0/1 responses"));
        }
        let pairs = sorted_pairs(data);
        let successes = pairs.iter().filter(|p| p.1 == 1.0).count() as u32;
        let failures = pairs.len() as u32 - successes;
        self.size_prior
            .support()
            .map(|j| {
                let basis = Basis::with_dimension(self.order, j)?;
                let factors = pairs
                    .iter()
                    .map(|&(z, x)| {
                        let offset = usize::from(x == 0.0);
                        Ok(Factor {
                            choices: basis
                                .eval_local(z)?
                                .nonzero()
                                .map(|(k, v)| Choice {
                                    log_weight: v.ln(),
                                    bumps: vec![(2 * k + offset, 1)],
                                })
                                .collect(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                Ok(Problem {
                    dimension: j,
                    factors,
                    family: BetaFamily::new(
                        self.a.resolve(j, "Beta a")?,
                        self.b.resolve(j, "Beta b")?,
                        successes,
                        failures,
                    ),
                    points: grid_points(&basis, grid)?,
                })
            })
            .collect()
    }

    /// Posterior moments of `f(z)` on `grid`.
    pub fn posterior(
        &self,
        data: &RegressionDataset,
        grid: &[f64],
        moments: Moments,
        evaluation: Evaluation,
    ) -> Result<PosteriorSummary> {
        let problems = self.problems(data, grid)?;
        expansion::combine(&problems, &self.size_prior, grid, moments, evaluation, self.term_cap)
    }
}

/// Poisson regression `X | Z = z ∼ Poi(Σ θ_k B_k(z))` with
/// `θ_k ∼ Gamma(shape_k, rate_k)`.
#[derive(Debug, Clone, PartialEq)]
pub struct PoissonModel {
    order: usize,
    size_prior: ModelSizePrior,
    shape: Hyper,
    rate: Hyper,
    term_cap: f64,
}

impl PoissonModel {
    pub fn new(order: usize, size_prior: ModelSizePrior, shape: Hyper, rate: Hyper) -> Result<Self> {
        check_model(order, &size_prior)?;
        for j in size_prior.support() {
            shape.resolve(j, "Gamma shape")?;
            rate.resolve(j, "Gamma rate")?;
        }
        Ok(Self {
            order,
            size_prior,
            shape,
            rate,
            term_cap: DEFAULT_TERM_CAP,
        })
    }

    pub fn with_term_cap(mut self, cap: f64) -> Self {
        self.term_cap = cap;
        self
    }

    /// Number of expansion terms at dimension `j`: the product over
    /// observations of the number of compositions of `X_i` over the active set.
    pub fn term_count(&self, data: &RegressionDataset, j: usize) -> Result<f64> {
        let basis = Basis::with_dimension(self.order, j)?;
        let mut log = 0.0;
        for (&z, &x) in data.covariates().iter().zip(data.responses()) {
            log += log_composition_count(x as u32, basis.active_set(z)?.len());
        }
        Ok(log.exp())
    }

    fn problems(&self, data: &RegressionDataset, grid: &[f64]) -> Result<Vec<Problem<GammaFamily>>> {
        if data.kind() != ResponseKind::Count {
            return Err(Error::invalid("Poisson model needs count responses"));
        }
        let pairs = sorted_pairs(data);
        let total: u32 = pairs.iter().map(|p| p.1 as u32).sum();
        self.size_prior
            .support()
            .map(|j| {
                let basis = Basis::with_dimension(self.order, j)?;
                let mut exposure = vec![0.0; j];
                let mut factors = Vec::new();
                for &(z, x) in &pairs {
                    let local = basis.eval_local(z)?;
                    let active: Vec<(usize, f64)> = local.nonzero().collect();
                    for &(k, v) in &active {
                        exposure[k] += v;
                    }
                    let x = x as u32;
                    if x == 0 {
                        continue;
                    }
                    if log_composition_count(x, active.len()) > self.term_cap.ln() {
                        return Err(Error::TooManyTerms {
                            dimension: j,
                            terms: log_composition_count(x, active.len()).exp(),
                            cap: self.term_cap,
                        });
                    }
                    let choices = compositions(x, active.len())
                        .into_iter()
                        .map(|parts| {
                            let mut log_weight = 0.0;
                            let mut bumps = Vec::new();
                            for (&m, &(k, v)) in parts.iter().zip(&active) {
                                if m > 0 {
                                    // multinomial coefficient and 1/X_i! leave Π 1/m!
                                    log_weight += m as f64 * v.ln() - ln_factorial(m);
                                    bumps.push((k, m));
                                }
                            }
                            Choice { log_weight, bumps }
                        })
                        .collect();
                    factors.push(Factor { choices });
                }
                Ok(Problem {
                    dimension: j,
                    factors,
                    family: GammaFamily::new(
                        self.shape.resolve(j, "Gamma shape")?,
                        self.rate.resolve(j, "Gamma rate")?,
                        &exposure,
                        total,
                    ),
                    points: grid_points(&basis, grid)?,
                })
            })
            .collect()
    }

    /// Posterior moments of `f(z)` on `grid`.
    pub fn posterior(
        &self,
        data: &RegressionDataset,
        grid: &[f64],
        moments: Moments,
        evaluation: Evaluation,
    ) -> Result<PosteriorSummary> {
        let problems = self.problems(data, grid)?;
        expansion::combine(&problems, &self.size_prior, grid, moments, evaluation, self.term_cap)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn composition_enumeration() {
        let c = compositions(3, 2);
        assert_eq!(c.len(), 4);
        assert_eq!(compositions(4, 3).len(), 15);
        assert_abs_diff_eq!(log_composition_count(4, 3).exp(), 15.0, epsilon = 1e-9);
        assert!(c.iter().all(|v| v.iter().sum::<u32>() == 3));
    }

    #[test]
    fn binary_prior_mean() {
        let data = RegressionDataset::new(vec![], vec![], ResponseKind::Binary).unwrap();
        let model = BinaryModel::new(
            2,
            ModelSizePrior::fixed(4).unwrap(),
            Hyper::Scalar(1.0),
            Hyper::Scalar(3.0),
        )
        .unwrap();
        let s = model.posterior(&data, &[0.2, 0.7], Moments::First, Evaluation::Exact).unwrap();
        assert_abs_diff_eq!(s.mean[0], 0.25, epsilon = 1e-12);
        assert_abs_diff_eq!(s.mean[1], 0.25, epsilon = 1e-12);
    }

    #[test]
    fn binary_single_success() {
        let data = RegressionDataset::new(vec![0.1], vec![1.0], ResponseKind::Binary).unwrap();
        let model =
            BinaryModel::new(1, ModelSizePrior::fixed(3).unwrap(), Hyper::default(), Hyper::default())
                .unwrap();
        let s = model
            .posterior(&data, &[0.1, 0.5, 0.9], Moments::First, Evaluation::Exact)
            .unwrap();
        assert_abs_diff_eq!(s.mean[0], 2.0 / 3.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.mean[1], 0.5, epsilon = 1e-12);
        assert_abs_diff_eq!(s.mean[2], 0.5, epsilon = 1e-12);
    }

    #[test]
    fn poisson_prior_and_update() {
        let empty = RegressionDataset::new(vec![], vec![], ResponseKind::Count).unwrap();
        let model = PoissonModel::new(
            1,
            ModelSizePrior::fixed(2).unwrap(),
            Hyper::Scalar(2.0),
            Hyper::Scalar(4.0),
        )
        .unwrap();
        let s = model.posterior(&empty, &[0.3], Moments::First, Evaluation::Exact).unwrap();
        assert_abs_diff_eq!(s.mean[0], 0.5, epsilon = 1e-12);

        let data = RegressionDataset::new(vec![0.2], vec![3.0], ResponseKind::Count).unwrap();
        let model =
            PoissonModel::new(1, ModelSizePrior::fixed(2).unwrap(), Hyper::default(), Hyper::default())
                .unwrap();
        let s = model
            .posterior(&data, &[0.2, 0.8], Moments::Second, Evaluation::Exact)
            .unwrap();
        assert_abs_diff_eq!(s.mean[0], 2.0, epsilon = 1e-12);
        assert_abs_diff_eq!(s.mean[1], 1.0, epsilon = 1e-12);
        // Gamma(4, 2): E θ² = 4·5/4
        assert_abs_diff_eq!(s.second_moment.unwrap()[0], 5.0, epsilon = 1e-12);
    }
}
