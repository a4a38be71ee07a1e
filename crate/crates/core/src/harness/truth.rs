use std::f64::consts::PI;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use crate::basis::{unit_grid, Basis};
use crate::density::DensityDataset;
use crate::error::{Error, Result};
use crate::quadrature::simpson;

/// Panels for normalizing constants.
const NORMALIZER_PANELS: usize = 10_000;
/// Grid used to locate the supremum for rejection sampling.
const SUP_GRID: usize = 10_001;
/// Rejection sampling gives up below this acceptance rate.
const MIN_ACCEPTANCE: f64 = 0.01;

/// Known densities on `[0, 1]` used in simulations.
#[derive(Debug, Clone, PartialEq)]
pub enum TrueDensity {
    /// `Beta(1/2, 1/2)`.
    BetaHalf,
    /// `∝ (3/4)·3e^{−3x} + (1/4)·√32/√π·e^{−32(x − 3/4)²}` on `[0, 1]`.
    Mixture51 { normalizer: f64, sup: f64 },
    /// `Σ θ_k B*_k(x)` for a fixed spline basis and `θ` on the simplex.
    CustomSpline { basis: Basis, theta: Vec<f64> },
}

fn mixture_unnormalized(x: f64) -> f64 {
    0.75 * 3.0 * (-3.0 * x).exp()
        + 0.25 * (32.0f64).sqrt() / PI.sqrt() * (-32.0 * (x - 0.75).powi(2)).exp()
}

impl TrueDensity {
    pub fn mixture_51() -> Self {
        let normalizer = simpson(mixture_unnormalized, 0.0, 1.0, NORMALIZER_PANELS);
        let sup = unit_grid(SUP_GRID)
            .into_iter()
            .map(|x| mixture_unnormalized(x) / normalizer)
            .fold(0.0, f64::max);
        TrueDensity::Mixture51 { normalizer, sup }
    }

    /// `θ` is normalized onto the simplex.
    pub fn custom_spline(order: usize, theta: Vec<f64>) -> Result<Self> {
        let basis = Basis::with_dimension(order, theta.len())?;
        if theta.iter().any(|t| !(*t >= 0.0 && t.is_finite())) {
            return Err(Error::invalid("spline weights must be nonnegative"));
        }
        let total: f64 = theta.iter().sum();
        if total <= 0.0 {
            return Err(Error::invalid("spline weights sum to zero"));
        }
        let theta = theta.iter().map(|t| t / total).collect();
        Ok(TrueDensity::CustomSpline { basis, theta })
    }

    /// Default spline truth: cubic-order basis, eight weights.
    pub fn default_custom_spline() -> Self {
        Self::custom_spline(3, vec![1.0, 3.0, 5.0, 2.0, 1.0, 4.0, 6.0, 2.0])
            .expect("valid default spline")
    }

    pub fn name(&self) -> &'static str {
        match self {
            TrueDensity::BetaHalf => "beta-half",
            TrueDensity::Mixture51 { .. } => "mixture-51",
            TrueDensity::CustomSpline { .. } => "custom-spline",
        }
    }

    /// Density at `x`; infinite at the endpoints for `beta-half`.
    pub fn pdf(&self, x: f64) -> Result<f64> {
        if !(0.0..=1.0).contains(&x) {
            return Err(Error::Domain { value: x });
        }
        Ok(match self {
            TrueDensity::BetaHalf => 1.0 / (PI * (x * (1.0 - x)).sqrt()),
            TrueDensity::Mixture51 { normalizer, .. } => mixture_unnormalized(x) / normalizer,
            TrueDensity::CustomSpline { basis, theta } => basis.combine_normalized(theta, x)?,
        })
    }

    /// `n` independent draws, reproducible from `seed`.
    pub fn sample(&self, n: usize, seed: u64) -> Result<DensityDataset> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let draws = match self {
            TrueDensity::BetaHalf => (0..n)
                .map(|_| {
                    let u: f64 = rng.random();
                    (PI * u / 2.0).sin().powi(2)
                })
                .collect(),
            TrueDensity::Mixture51 { normalizer, sup } => {
                let envelope = sup * (1.0 + 1e-3);
                rejection(n, &mut rng, |x| mixture_unnormalized(x) / normalizer / envelope)?
            }
            TrueDensity::CustomSpline { basis, theta } => sample_spline(basis, theta, n, &mut rng)?,
        };
        DensityDataset::new(draws)
    }
}

impl FromStr for TrueDensity {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "beta-half" => Ok(TrueDensity::BetaHalf),
            "mixture-51" => Ok(TrueDensity::mixture_51()),
            "custom-spline" => Ok(TrueDensity::default_custom_spline()),
            other => Err(Error::invalid(format!(
                "unknown density {other:?} (expected beta-half, mixture-51, custom-spline)"
            ))),
        }
    }
}

/// Uniform-envelope rejection sampling; `ratio(x)` is the acceptance
/// probability at `x` and must lie in `[0, 1]`.
fn rejection<R: Rng, F: Fn(f64) -> f64>(n: usize, rng: &mut R, ratio: F) -> Result<Vec<f64>> {
    let mut out = Vec::with_capacity(n);
    let mut attempts = 0usize;
    while out.len() < n {
        attempts += 1;
        let x: f64 = rng.random();
        let u: f64 = rng.random();
        let r = ratio(x);
        if r > 1.0 {
            return Err(Error::Internal(format!("rejection envelope too low at {x}")));
        }
        if u < r {
            out.push(x);
        }
        if attempts >= 1000 && (out.len() as f64) < MIN_ACCEPTANCE * attempts as f64 {
            return Err(Error::Internal("rejection acceptance rate below 1%".into()));
        }
    }
    Ok(out)
}

/// Picks a component by weight, then draws from `B*_k` by rejection on its
/// support (`B_k ≤ 1`).
fn sample_spline<R: Rng>(basis: &Basis, theta: &[f64], n: usize, rng: &mut R) -> Result<Vec<f64>> {
    let q = basis.order();
    let knots = basis.knots();
    let mut cumulative = Vec::with_capacity(theta.len());
    let mut acc = 0.0;
    for t in theta {
        acc += t;
        cumulative.push(acc);
    }
    let mut out = Vec::with_capacity(n);
    for _ in 0..n {
        let u: f64 = rng.random::<f64>() * acc;
        let k = cumulative.partition_point(|c| *c <= u).min(theta.len() - 1);
        let (lo, hi) = (knots[k], knots[k + q]);
        let mut attempts = 0;
        loop {
            attempts += 1;
            let x = lo + (hi - lo) * rng.random::<f64>();
            let v = basis.eval(x)?[k];
            if rng.random::<f64>() < v {
                out.push(x);
                break;
            }
            if attempts > 10_000 {
                return Err(Error::Internal("rejection acceptance rate below 1%".into()));
            }
        }
    }
    Ok(out)
}
