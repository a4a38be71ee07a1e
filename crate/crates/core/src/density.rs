//! Posterior moments of a density `p(x) = Σ_k θ_k B*_k(x)` with a Dirichlet
//! prior on `θ` and a truncated prior on `J`, computed without MCMC by
//! expanding the likelihood into Dirichlet-conjugate terms.

use statrs::function::gamma::ln_gamma;

use crate::basis::{Basis, LocalBasis};
use crate::error::{Error, Result};
use crate::expansion::{self, Choice, Conjugate, Factor, Problem};
use crate::priors::{log_dirichlet_normalizer, Hyper, ModelSizePrior};
use crate::summary::{Evaluation, Moments, PosteriorSummary, DEFAULT_TERM_CAP};

/// Observations on `[0, 1]`.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityDataset {
    observations: Vec<f64>,
}

/// Affine map used by [`DensityDataset::rescaled`]: `u = (x − min)/(max − min)`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Rescale {
    pub min: f64,
    pub max: f64,
}

impl Rescale {
    pub fn forward(&self, x: f64) -> f64 {
        (x - self.min) / (self.max - self.min)
    }

    pub fn backward(&self, u: f64) -> f64 {
        self.min + u * (self.max - self.min)
    }

    /// Jacobian for mapping a density on `[0, 1]` back to the data scale.
    pub fn density_factor(&self) -> f64 {
        1.0 / (self.max - self.min)
    }
}

impl DensityDataset {
    pub fn new(observations: Vec<f64>) -> Result<Self> {
        if let Some(&bad) = observations.iter().find(|x| !(0.0..=1.0).contains(*x)) {
            return Err(Error::Domain { value: bad });
        }
        Ok(Self { observations })
    }

    /// Min–max rescales arbitrary finite data onto `[0, 1]`.
    pub fn rescaled(raw: Vec<f64>) -> Result<(Self, Rescale)> {
        if raw.is_empty() {
            return Err(Error::invalid("cannot rescale an empty sample"));
        }
        if let Some(bad) = raw.iter().find(|x| !x.is_finite()) {
            return Err(Error::invalid(format!("non-finite observation {bad}")));
        }
        let min = raw.iter().copied().fold(f64::INFINITY, f64::min);
        let max = raw.iter().copied().fold(f64::NEG_INFINITY, f64::max);
        if max <= min {
            return Err(Error::invalid("cannot rescale a constant sample"));
        }
        let map = Rescale { min, max };
        let observations = raw.iter().map(|&x| map.forward(x).clamp(0.0, 1.0)).collect();
        Ok((Self { observations }, map))
    }

    pub fn observations(&self) -> &[f64] {
        &self.observations
    }

    pub fn len(&self) -> usize {
        self.observations.len()
    }

    pub fn is_empty(&self) -> bool {
        self.observations.is_empty()
    }

    fn sorted(&self) -> Vec<f64> {
        let mut v = self.observations.clone();
        v.sort_by(f64::total_cmp);
        v
    }
}

/// One term of the expansion: a basis index for every observation and for
/// every extra evaluation point.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TermIndex {
    pub observations: Vec<usize>,
    pub points: Vec<usize>,
}

/// Log value of a single term, including the Dirichlet normalizer so terms
/// are comparable across `J`:
///
/// `Σ_s log B*_{i_s}(X_s) + Σ_k log Γ(a_k + I_k) − log Γ(A + n + m) + log Γ(A) − Σ_k log Γ(a_k)`
///
/// where `I_k` counts the indices equal to `k` among observations and the
/// `m` extra points.
pub fn log_term(
    basis: &Basis,
    term: &TermIndex,
    data: &DensityDataset,
    points: &[f64],
    alpha: &[f64],
) -> Result<f64> {
    let j = basis.dimension();
    if alpha.len() != j {
        return Err(Error::invalid(format!(
            "{} Dirichlet parameters for J = {j}",
            alpha.len()
        )));
    }
    if term.observations.len() != data.len() || term.points.len() != points.len() {
        return Err(Error::invalid("term index does not match the data"));
    }
    let mut counts = vec![0u32; j];
    let mut log_b = 0.0;
    let locations = data.observations().iter().chain(points);
    let indices = term.observations.iter().chain(&term.points);
    for (&x, &k) in locations.zip(indices) {
        if k >= j {
            return Err(Error::invalid(format!("index {k} out of range for J = {j}")));
        }
        let v = basis.eval_normalized(x)?[k];
        if v <= 0.0 {
            return Err(Error::invalid(format!(
                "basis function {k} vanishes at {x}"
            )));
        }
        log_b += v.ln();
        counts[k] += 1;
    }
    let total: f64 = alpha.iter().sum();
    let m = (data.len() + points.len()) as f64;
    let gammas: f64 = alpha
        .iter()
        .zip(&counts)
        .map(|(&a, &c)| ln_gamma(a + c as f64))
        .sum();
    Ok(log_b + gammas - ln_gamma(total + m) + log_dirichlet_normalizer(alpha)?)
}

struct DirichletFamily {
    alpha: Vec<f64>,
    /// `log Γ(a_k + c)` for `c = 0..=n`.
    table: Vec<Vec<f64>>,
    constant: f64,
    posterior_total: f64,
}

impl DirichletFamily {
    fn new(alpha: Vec<f64>, n: usize) -> Result<Self> {
        let total: f64 = alpha.iter().sum();
        let constant = log_dirichlet_normalizer(&alpha)? - ln_gamma(total + n as f64);
        let table = alpha
            .iter()
            .map(|&a| (0..=n).map(|c| ln_gamma(a + c as f64)).collect())
            .collect();
        Ok(Self {
            alpha,
            table,
            constant,
            posterior_total: total + n as f64,
        })
    }
}

impl Conjugate for DirichletFamily {
    fn stats_len(&self) -> usize {
        self.alpha.len()
    }

    fn categories(&self) -> usize {
        self.alpha.len()
    }

    fn category_of(&self, stat: usize) -> usize {
        stat
    }

    fn constant(&self) -> f64 {
        self.constant
    }

    fn category_log(&self, k: usize, stats: &[u32]) -> f64 {
        self.table[k][stats[k] as usize]
    }

    fn moments(&self, point: &LocalBasis, stats: &[u32], second: bool) -> (f64, f64) {
        // Dirichlet(a + I): E θ_k = α_k/T, E θ_k θ_l = α_k(α_l + δ_kl)/(T(T + 1)).
        let mut s1 = 0.0;
        let mut s2 = 0.0;
        for (r, &v) in point.values.iter().enumerate() {
            let k = point.first + r;
            let a = self.alpha[k] + stats[k] as f64;
            s1 += v * a;
            s2 += v * v * a;
        }
        let t = self.posterior_total;
        let mean = s1 / t;
        let sq = if second {
            (s1 * s1 + s2) / (t * (t + 1.0))
        } else {
            0.0
        };
        (mean, sq)
    }
}

/// Density model: spline order, prior on `J`, Dirichlet parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityModel {
    order: usize,
    size_prior: ModelSizePrior,
    alpha: Hyper,
    term_cap: f64,
}

impl DensityModel {
    pub fn new(order: usize, size_prior: ModelSizePrior, alpha: Hyper) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("spline order must be positive"));
        }
        if size_prior.min() < order {
            return Err(Error::invalid(format!(
                "J.min = {} is below the spline order {order}",
                size_prior.min()
            )));
        }
        for j in size_prior.support() {
            alpha.resolve(j, "Dirichlet a")?;
        }
        Ok(Self {
            order,
            size_prior,
            alpha,
            term_cap: DEFAULT_TERM_CAP,
        })
    }

    pub fn with_term_cap(mut self, cap: f64) -> Self {
        self.term_cap = cap;
        self
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn size_prior(&self) -> &ModelSizePrior {
        &self.size_prior
    }

    pub fn basis(&self, j: usize) -> Result<Basis> {
        Basis::with_dimension(self.order, j)
    }

    /// `Π_s |active_set(X_s)|` at dimension `j`.
    pub fn term_count(&self, data: &DensityDataset, j: usize) -> Result<f64> {
        let basis = self.basis(j)?;
        data.observations().iter().try_fold(1.0, |acc, &x| {
            Ok(acc * basis.active_set(x)?.len() as f64)
        })
    }

    fn problems(&self, data: &DensityDataset, grid: &[f64]) -> Result<Vec<Problem<DirichletFamily>>> {
        let sorted = data.sorted();
        self.size_prior
            .support()
            .map(|j| {
                let basis = self.basis(j)?;
                let factors = sorted
                    .iter()
                    .map(|&x| {
                        let local = basis.eval_normalized_local(x)?;
                        Ok(Factor {
                            choices: local
                                .nonzero()
                                .map(|(k, v)| Choice {
                                    log_weight: v.ln(),
                                    bumps: vec![(k, 1)],
                                })
                                .collect(),
                        })
                    })
                    .collect::<Result<Vec<_>>>()?;
                let points = grid
                    .iter()
                    .map(|&x| basis.eval_normalized_local(x))
                    .collect::<Result<Vec<_>>>()?;
                Ok(Problem {
                    dimension: j,
                    factors,
                    family: DirichletFamily::new(self.alpha.resolve(j, "Dirichlet a")?, sorted.len())?,
                    points,
                })
            })
            .collect()
    }

    /// Posterior moments of `p` on `grid`.
    pub fn posterior(
        &self,
        data: &DensityDataset,
        grid: &[f64],
        moments: Moments,
        evaluation: Evaluation,
    ) -> Result<PosteriorSummary> {
        let problems = self.problems(data, grid)?;
        expansion::combine(&problems, &self.size_prior, grid, moments, evaluation, self.term_cap)
    }

    /// Exhaustive enumeration; refuses when some `J` exceeds the term cap.
    pub fn exact_moment(
        &self,
        data: &DensityDataset,
        grid: &[f64],
        moments: Moments,
    ) -> Result<PosteriorSummary> {
        self.posterior(data, grid, moments, Evaluation::Exact)
    }

    /// `draws` sampled terms per `J`, reproducible from `seed`.
    pub fn mc_moment(
        &self,
        data: &DensityDataset,
        grid: &[f64],
        moments: Moments,
        draws: usize,
        seed: u64,
    ) -> Result<PosteriorSummary> {
        self.posterior(data, grid, moments, Evaluation::MonteCarlo { draws, seed })
    }

    /// Posterior probabilities of each `J` in the truncation range.
    pub fn j_posterior(&self, data: &DensityDataset, evaluation: Evaluation) -> Result<Vec<(usize, f64)>> {
        let s = self.posterior(data, &[], Moments::First, evaluation)?;
        Ok(s.j_values.into_iter().zip(s.j_weights).collect())
    }
}
