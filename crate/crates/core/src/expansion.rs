//! Conjugate term expansion shared by the density, binary and Poisson
//! posteriors.
//!
//! For a fixed `J` the likelihood is a product of per-observation factors,
//! each a finite sum of monomials in the coefficients ("choices"). Expanding
//! the product gives one term per combination of choices; each term
//! integrates in closed form against the coefficient prior and depends on the
//! combination only through sufficient statistics (counts). Given the counts,
//! the conditional posterior moments of `f(x) = Σ θ_k φ_k(x)` are also closed
//! form, so posterior moments are ratios of weighted term sums.
//!
//! Terms are enumerated exhaustively ([`enumerate`]) or sampled uniformly
//! per factor ([`sample`]); the estimates from each `J` are then mixed with
//! the model-size prior ([`combine`]).

use rand::Rng;
use rayon::prelude::*;

use crate::basis::LocalBasis;
use crate::error::{Error, Result};
use crate::logspace::{log_sum_exp, WeightedLogSum};
use crate::priors::ModelSizePrior;
use crate::summary::{Computation, Evaluation, Moments, PosteriorSummary};

/// One monomial of a likelihood factor: its log coefficient and the
/// statistics it increments.
#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Choice {
    pub log_weight: f64,
    pub bumps: Vec<(usize, u32)>,
}

#[derive(Debug, Clone, PartialEq)]
pub(crate) struct Factor {
    pub choices: Vec<Choice>,
}

/// Closed-form integration of a term against the coefficient prior.
///
/// The log integral must decompose as `constant + Σ_c category_log(c, stats)`
/// where each category reads only its own statistics.
pub(crate) trait Conjugate: Sync {
    fn stats_len(&self) -> usize;
    fn categories(&self) -> usize;
    fn category_of(&self, stat: usize) -> usize;
    fn constant(&self) -> f64;
    fn category_log(&self, category: usize, stats: &[u32]) -> f64;
    /// Conditional `E[f(x)]` and (if `second`) `E[f(x)²]` given the counts;
    /// `point` holds the basis values at `x`.
    fn moments(&self, point: &LocalBasis, stats: &[u32], second: bool) -> (f64, f64);
}

/// Everything needed to expand the posterior for one `J`.
pub(crate) struct Problem<C> {
    pub dimension: usize,
    pub factors: Vec<Factor>,
    pub family: C,
    pub points: Vec<LocalBasis>,
}

impl<C: Conjugate> Problem<C> {
    /// `log Π_s |choices_s|`.
    pub fn log_term_count(&self) -> f64 {
        self.factors
            .iter()
            .map(|f| (f.choices.len() as f64).ln())
            .sum()
    }

    fn apply(&self, choice: &Choice, stats: &mut [u32], sign_add: bool) {
        for &(s, amount) in &choice.bumps {
            if sign_add {
                stats[s] += amount;
            } else {
                stats[s] -= amount;
            }
        }
    }

    fn refresh(&self, choice: &Choice, stats: &[u32], cat_log: &mut [f64]) {
        for &(s, _) in &choice.bumps {
            let c = self.family.category_of(s);
            cat_log[c] = self.family.category_log(c, stats);
        }
    }

    fn accumulate_moments(&self, acc: &mut WeightedLogSum, w: f64, stats: &[u32], second: bool) {
        if w == 0.0 {
            return;
        }
        let g = self.points.len();
        let comp = acc.companion_mut();
        for (i, p) in self.points.iter().enumerate() {
            let (m1, m2) = self.family.moments(p, stats, second);
            comp[i] += w * m1;
            if second {
                comp[g + i] += w * m2;
            }
        }
    }
}

/// Result of expanding one `J`.
#[derive(Debug, Clone)]
pub(crate) struct Component {
    pub dimension: usize,
    /// log of the (estimated) marginal likelihood `Σ terms`.
    pub log_marginal: f64,
    pub mean: Vec<f64>,
    pub second: Option<Vec<f64>>,
    pub draws: Option<Draws>,
}

/// Sampled terms kept for the standard-error pass.
#[derive(Debug, Clone)]
pub(crate) struct Draws {
    pub log_terms: Vec<f64>,
    pub stats: Vec<Vec<u32>>,
}

/// Exhaustive enumeration of every combination of choices.
pub(crate) fn enumerate<C: Conjugate>(problem: &Problem<C>, second: bool) -> Result<Component> {
    let g = problem.points.len();
    let mut acc = WeightedLogSum::new(if second { 2 * g } else { g });
    let family = &problem.family;
    let mut stats = vec![0u32; family.stats_len()];
    let factors = &problem.factors;
    if factors.iter().any(|f| f.choices.is_empty()) {
        return Err(Error::Internal("factor without choices".into()));
    }
    let mut idx = vec![0usize; factors.len()];
    for f in factors {
        problem.apply(&f.choices[0], &mut stats, true);
    }
    let mut cat_log: Vec<f64> = (0..family.categories())
        .map(|c| family.category_log(c, &stats))
        .collect();
    let constant = family.constant();
    loop {
        let log_w: f64 = factors
            .iter()
            .zip(&idx)
            .map(|(f, &i)| f.choices[i].log_weight)
            .sum();
        let ell = constant + cat_log.iter().sum::<f64>() + log_w;
        let w = acc.admit(ell);
        problem.accumulate_moments(&mut acc, w, &stats, second);

        // odometer step
        let mut pos = 0;
        loop {
            if pos == factors.len() {
                return Ok(finish_exact(problem.dimension, &acc, g, second));
            }
            let f = &factors[pos];
            problem.apply(&f.choices[idx[pos]], &mut stats, false);
            problem.refresh(&f.choices[idx[pos]], &stats, &mut cat_log);
            idx[pos] += 1;
            if idx[pos] < f.choices.len() {
                problem.apply(&f.choices[idx[pos]], &mut stats, true);
                problem.refresh(&f.choices[idx[pos]], &stats, &mut cat_log);
                break;
            }
            idx[pos] = 0;
            problem.apply(&f.choices[0], &mut stats, true);
            problem.refresh(&f.choices[0], &stats, &mut cat_log);
            pos += 1;
        }
    }
}

fn finish_exact(dimension: usize, acc: &WeightedLogSum, g: usize, second: bool) -> Component {
    let normalized = acc.normalized_companions();
    Component {
        dimension,
        log_marginal: acc.log_total(),
        mean: normalized[..g].to_vec(),
        second: second.then(|| normalized[g..].to_vec()),
        draws: None,
    }
}

/// `draws` terms, each drawn by picking one choice per factor uniformly.
/// The scaled sample mean `Π|choices_s| · mean(term)` is unbiased for the
/// full sum.
pub(crate) fn sample<C: Conjugate, R: Rng>(
    problem: &Problem<C>,
    second: bool,
    draws: usize,
    rng: &mut R,
) -> Result<Component> {
    if draws < 2 {
        return Err(Error::invalid("Monte-Carlo mode needs at least 2 draws"));
    }
    let family = &problem.family;
    let constant = family.constant();
    let mut log_terms = Vec::with_capacity(draws);
    let mut all_stats = Vec::with_capacity(draws);
    for _ in 0..draws {
        let mut stats = vec![0u32; family.stats_len()];
        let mut log_w = 0.0;
        for f in &problem.factors {
            let c = &f.choices[rng.random_range(0..f.choices.len())];
            log_w += c.log_weight;
            problem.apply(c, &mut stats, true);
        }
        let cat: f64 = (0..family.categories())
            .map(|c| family.category_log(c, &stats))
            .sum();
        log_terms.push(constant + cat + log_w);
        all_stats.push(stats);
    }
    let max = log_terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return Err(Error::Internal(format!(
            "all sampled terms vanish at J = {}",
            problem.dimension
        )));
    }
    let g = problem.points.len();
    let mut acc = WeightedLogSum::new(if second { 2 * g } else { g });
    for (ell, stats) in log_terms.iter().zip(&all_stats) {
        let w = acc.admit(*ell);
        problem.accumulate_moments(&mut acc, w, stats, second);
    }
    let normalized = acc.normalized_companions();
    Ok(Component {
        dimension: problem.dimension,
        log_marginal: problem.log_term_count() + acc.log_total() - (draws as f64).ln(),
        mean: normalized[..g].to_vec(),
        second: second.then(|| normalized[g..].to_vec()),
        draws: Some(Draws {
            log_terms,
            stats: all_stats,
        }),
    })
}

/// Delta-method variance contribution of one sampled `J` to the overall
/// ratio estimate `ratio` at every grid point, given its posterior weight.
///
/// With `w_t = exp(ℓ_t − max ℓ)` and conditional means `h_t(x)`, the
/// linearized error of the ratio is `Σ_J weight_J · mean_t(w_t(h_t − R)) /
/// mean_t(w_t)`, independent across `J`.
fn variance_contribution<C: Conjugate>(
    problem: &Problem<C>,
    draws: &Draws,
    weight: f64,
    ratio: &[f64],
) -> Vec<f64> {
    let n = draws.log_terms.len() as f64;
    let max = draws
        .log_terms
        .iter()
        .copied()
        .fold(f64::NEG_INFINITY, f64::max);
    let w: Vec<f64> = draws.log_terms.iter().map(|l| (l - max).exp()).collect();
    let w_bar = w.iter().sum::<f64>() / n;
    problem
        .points
        .iter()
        .zip(ratio)
        .map(|(p, &r)| {
            let z: Vec<f64> = w
                .iter()
                .zip(&draws.stats)
                .map(|(wt, st)| wt * (problem.family.moments(p, st, false).0 - r))
                .collect();
            let z_bar = z.iter().sum::<f64>() / n;
            let var = z.iter().map(|v| (v - z_bar).powi(2)).sum::<f64>() / (n - 1.0);
            weight * weight * var / (w_bar * w_bar * n)
        })
        .collect()
}

/// How each `J` is expanded.
#[derive(Debug, Clone, Copy, PartialEq)]
enum Expand {
    Exact,
    Sampled { draws: usize, seed: u64 },
}

fn resolve<C: Conjugate>(problems: &[Problem<C>], evaluation: Evaluation, cap: f64) -> Result<Expand> {
    let oversized = problems
        .iter()
        .map(|p| (p.dimension, p.log_term_count().exp()))
        .find(|(_, count)| *count > cap);
    match (evaluation, oversized) {
        (Evaluation::Exact, None) => Ok(Expand::Exact),
        (Evaluation::Exact, Some((dimension, terms))) => Err(Error::TooManyTerms {
            dimension,
            terms,
            cap,
        }),
        (Evaluation::Auto { .. }, None) => Ok(Expand::Exact),
        (Evaluation::MonteCarlo { draws, seed }, _) | (Evaluation::Auto { draws, seed }, Some(_)) => {
            Ok(Expand::Sampled { draws, seed })
        }
    }
}

/// Expands every `J` in parallel and mixes them with the model-size prior.
///
/// Sampling for `J` uses its own ChaCha stream, so results do not depend on
/// the number of worker threads.
pub(crate) fn combine<C: Conjugate + Send>(
    problems: &[Problem<C>],
    prior: &ModelSizePrior,
    grid: &[f64],
    moments: Moments,
    evaluation: Evaluation,
    cap: f64,
) -> Result<PosteriorSummary> {
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    if problems.is_empty() {
        return Err(Error::invalid("empty truncation range"));
    }
    let second = moments == Moments::Second;
    let expand = resolve(problems, evaluation, cap)?;
    let components: Vec<Component> = problems
        .par_iter()
        .map(|p| match expand {
            Expand::Exact => enumerate(p, second),
            Expand::Sampled { draws, seed } => {
                let mut rng = ChaCha8Rng::seed_from_u64(seed);
                rng.set_stream(p.dimension as u64);
                sample(p, second, draws, &mut rng)
            }
        })
        .collect::<Result<_>>()?;

    let log_post: Vec<f64> = components
        .iter()
        .map(|c| prior.log_pmf(c.dimension) + c.log_marginal)
        .collect();
    let norm = log_sum_exp(&log_post);
    if !norm.is_finite() {
        return Err(Error::Numerical("posterior over J is degenerate".into()));
    }
    let weights: Vec<f64> = log_post.iter().map(|l| (l - norm).exp()).collect();

    let g = grid.len();
    let mut mean = vec![0.0; g];
    let mut second_moment = second.then(|| vec![0.0; g]);
    for (c, w) in components.iter().zip(&weights) {
        for (m, v) in mean.iter_mut().zip(&c.mean) {
            *m += w * v;
        }
        if let (Some(acc), Some(s)) = (second_moment.as_mut(), c.second.as_ref()) {
            for (m, v) in acc.iter_mut().zip(s) {
                *m += w * v;
            }
        }
    }

    let mc_se = match expand {
        Expand::Exact => vec![0.0; g],
        Expand::Sampled { .. } => {
            let parts: Vec<Vec<f64>> = problems
                .par_iter()
                .zip(components.par_iter())
                .zip(weights.par_iter())
                .map(|((p, c), &w)| match &c.draws {
                    // a single possible term is sampled without error
                    Some(d) if p.log_term_count() > 0.0 => variance_contribution(p, d, w, &mean),
                    _ => vec![0.0; g],
                })
                .collect();
            (0..g)
                .map(|i| parts.iter().map(|v| v[i]).sum::<f64>().sqrt())
                .collect()
        }
    };

    Ok(PosteriorSummary {
        grid: grid.to_vec(),
        mean,
        second_moment,
        band: None,
        mc_se,
        j_values: components.iter().map(|c| c.dimension).collect(),
        j_weights: weights,
        j_log_marginal: components.iter().map(|c| c.log_marginal).collect(),
        computation: match expand {
            Expand::Exact => Computation::Exact,
            Expand::Sampled { draws, .. } => Computation::MonteCarlo { draws },
        },
    })
}
