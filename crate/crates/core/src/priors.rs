//! Priors on the number of basis functions `J` and on the coefficients
//! given `J`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use statrs::function::gamma::ln_gamma;

use crate::config::KeyValues;
use crate::error::{Error, Result};
use crate::logspace::log_sum_exp;

/// Untruncated family for `J ∈ {1, 2, …}`. Each family is placed on
/// `J − 1 ∈ {0, 1, …}`, so `geometric(p)` has `P(J = j) = p (1 − p)^{j−1}`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum SizeFamily {
    Geometric { p: f64 },
    Poisson { lambda: f64 },
    NegativeBinomial { r: f64, p: f64 },
}

impl SizeFamily {
    fn validate(&self) -> Result<()> {
        let ok = match *self {
            SizeFamily::Geometric { p } => p > 0.0 && p < 1.0,
            SizeFamily::Poisson { lambda } => lambda > 0.0 && lambda.is_finite(),
            SizeFamily::NegativeBinomial { r, p } => r > 0.0 && r.is_finite() && p > 0.0 && p < 1.0,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::invalid(format!("invalid model-size family {self:?}")))
        }
    }

    /// Untruncated `log P(J = j)` for `j ≥ 1`.
    pub fn log_pmf(&self, j: usize) -> f64 {
        if j == 0 {
            return f64::NEG_INFINITY;
        }
        let k = (j - 1) as f64;
        match *self {
            SizeFamily::Geometric { p } => p.ln() + k * (-p).ln_1p(),
            SizeFamily::Poisson { lambda } => -lambda + k * lambda.ln() - ln_gamma(k + 1.0),
            SizeFamily::NegativeBinomial { r, p } => {
                ln_gamma(k + r) - ln_gamma(r) - ln_gamma(k + 1.0) + r * p.ln() + k * (-p).ln_1p()
            }
        }
    }

    /// Tail exponents `(t1, t2)` with
    /// `exp(−c1 j log^{t1} j) ≤ P(J = j) ≤ exp(−c2 j log^{t2} j)`.
    pub fn tail_exponents(&self) -> (f64, f64) {
        match self {
            SizeFamily::Geometric { .. } | SizeFamily::NegativeBinomial { .. } => (0.0, 0.0),
            SizeFamily::Poisson { .. } => (1.0, 1.0),
        }
    }
}

/// A model-size prior truncated to `min..=max` and renormalized.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelSizePrior {
    family: SizeFamily,
    min: usize,
    max: usize,
    log_pmf: Vec<f64>,
}

impl ModelSizePrior {
    pub fn new(family: SizeFamily, min: usize, max: usize) -> Result<Self> {
        family.validate()?;
        if min == 0 {
            return Err(Error::invalid("J.min must be at least 1"));
        }
        if max < min {
            return Err(Error::invalid(format!(
                "empty truncation range [{min}, {max}]"
            )));
        }
        let raw: Vec<f64> = (min..=max).map(|j| family.log_pmf(j)).collect();
        let norm = log_sum_exp(&raw);
        if !norm.is_finite() {
            return Err(Error::Numerical(format!(
                "{family:?} has no mass on [{min}, {max}]"
            )));
        }
        let log_pmf = raw.iter().map(|v| v - norm).collect();
        Ok(ModelSizePrior {
            family,
            min,
            max,
            log_pmf,
        })
    }

    /// Point mass at a single `J`.
    pub fn fixed(j: usize) -> Result<Self> {
        Self::new(SizeFamily::Geometric { p: 0.5 }, j, j)
    }

    pub fn family(&self) -> SizeFamily {
        self.family
    }

    pub fn min(&self) -> usize {
        self.min
    }

    pub fn max(&self) -> usize {
        self.max
    }

    pub fn support(&self) -> std::ops::RangeInclusive<usize> {
        self.min..=self.max
    }

    /// Truncated log-probability; `-inf` outside the truncation range.
    pub fn log_pmf(&self, j: usize) -> f64 {
        if j < self.min || j > self.max {
            f64::NEG_INFINITY
        } else {
            self.log_pmf[j - self.min]
        }
    }

    pub fn pmf(&self, j: usize) -> f64 {
        self.log_pmf(j).exp()
    }

    /// Reads `J.prior`, `J.p`, `J.lambda`, `J.r`, `J.min`, `J.max`.
    pub fn from_config(kv: &KeyValues, default_min: usize, default_max: usize) -> Result<Self> {
        let family = match kv.get("J.prior").unwrap_or("geometric") {
            "geometric" => SizeFamily::Geometric {
                p: kv.parsed_or("J.p", 0.5)?,
            },
            "poisson" => SizeFamily::Poisson {
                lambda: kv.parsed_or("J.lambda", 10.0)?,
            },
            "negbin" | "negative-binomial" => SizeFamily::NegativeBinomial {
                r: kv.parsed_or("J.r", 2.0)?,
                p: kv.parsed_or("J.p", 0.5)?,
            },
            other => return Err(Error::invalid(format!("unknown J.prior {other:?}"))),
        };
        Self::new(
            family,
            kv.parsed_or("J.min", default_min)?,
            kv.parsed_or("J.max", default_max)?,
        )
    }
}

/// A hyperparameter given once for all coordinates or per coordinate.
#[derive(Debug, Clone, PartialEq)]
pub enum Hyper {
    Scalar(f64),
    PerCoordinate(Vec<f64>),
}

impl Default for Hyper {
    fn default() -> Self {
        Hyper::Scalar(1.0)
    }
}

impl Hyper {
    /// Expands to a length-`j` vector of strictly positive values.
    pub fn resolve(&self, j: usize, name: &str) -> Result<Vec<f64>> {
        let values = match self {
            Hyper::Scalar(v) => vec![*v; j],
            Hyper::PerCoordinate(v) if v.len() == j => v.clone(),
            Hyper::PerCoordinate(v) => {
                return Err(Error::invalid(format!(
                    "{name} has {} entries but J = {j}",
                    v.len()
                )))
            }
        };
        if let Some(bad) = values.iter().find(|v| !(**v > 0.0 && v.is_finite())) {
            return Err(Error::invalid(format!("{name} must be positive, got {bad}")));
        }
        Ok(values)
    }

    fn from_list(values: Vec<f64>) -> Self {
        if values.len() == 1 {
            Hyper::Scalar(values[0])
        } else {
            Hyper::PerCoordinate(values)
        }
    }
}

/// Coefficient prior given `J`.
#[derive(Debug, Clone, PartialEq)]
pub enum CoefficientPrior {
    /// `θ ∼ Dir(a_1, …, a_J)` on the simplex.
    Dirichlet { alpha: Hyper },
    /// `θ_i ∼ Beta(a_i, b_i)` independently.
    Beta { a: Hyper, b: Hyper },
    /// `θ_i ∼ Gamma(shape_i, rate_i)` independently.
    Gamma { shape: Hyper, rate: Hyper },
    /// Zellner g-prior with `σ² ∼ IG(a, b)`; `g = None` means `g = n`.
    GPrior { g: Option<f64>, a: f64, b: f64 },
}

impl CoefficientPrior {
    pub fn dirichlet_default() -> Self {
        CoefficientPrior::Dirichlet {
            alpha: Hyper::default(),
        }
    }

    pub fn beta_default() -> Self {
        CoefficientPrior::Beta {
            a: Hyper::default(),
            b: Hyper::default(),
        }
    }

    pub fn gamma_default() -> Self {
        CoefficientPrior::Gamma {
            shape: Hyper::default(),
            rate: Hyper::default(),
        }
    }

    pub fn g_prior_default() -> Self {
        CoefficientPrior::GPrior {
            g: None,
            a: 1.0,
            b: 1.0,
        }
    }

    /// Reads `theta.prior`, `theta.a`, `theta.b`, `theta.g`.
    pub fn from_config(kv: &KeyValues, default_family: &str) -> Result<Self> {
        let a = kv.float_list("theta.a")?.map(Hyper::from_list);
        let b = kv.float_list("theta.b")?.map(Hyper::from_list);
        match kv.get("theta.prior").unwrap_or(default_family) {
            "dirichlet" => Ok(CoefficientPrior::Dirichlet {
                alpha: a.unwrap_or_default(),
            }),
            "beta" => Ok(CoefficientPrior::Beta {
                a: a.unwrap_or_default(),
                b: b.unwrap_or_default(),
            }),
            "gamma" => Ok(CoefficientPrior::Gamma {
                shape: a.unwrap_or_default(),
                rate: b.unwrap_or_default(),
            }),
            "gprior" | "g-prior" => {
                let scalar = |h: Option<Hyper>, name: &str| match h {
                    None => Ok(1.0),
                    Some(Hyper::Scalar(v)) if v > 0.0 => Ok(v),
                    Some(_) => Err(Error::invalid(format!("{name} must be one positive value"))),
                };
                let g = kv.parsed::<f64>("theta.g")?;
                if matches!(g, Some(g) if g <= 0.0) {
                    return Err(Error::invalid("theta.g must be positive"));
                }
                Ok(CoefficientPrior::GPrior {
                    g,
                    a: scalar(a, "theta.a")?,
                    b: scalar(b, "theta.b")?,
                })
            }
            other => Err(Error::invalid(format!("unknown theta.prior {other:?}"))),
        }
    }

    /// Draws one coefficient vector of length `j`, reproducibly from `seed`.
    pub fn sample(&self, j: usize, seed: u64) -> Result<Vec<f64>> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(j, &mut rng)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, j: usize, rng: &mut R) -> Result<Vec<f64>> {
        if j == 0 {
            return Err(Error::invalid("J must be at least 1"));
        }
        match self {
            CoefficientPrior::Dirichlet { alpha } => {
                let alpha = alpha.resolve(j, "dirichlet alpha")?;
                sample_dirichlet(&alpha, rng)
            }
            CoefficientPrior::Beta { a, b } => {
                let a = a.resolve(j, "beta a")?;
                let b = b.resolve(j, "beta b")?;
                a.iter()
                    .zip(&b)
                    .map(|(&a, &b)| {
                        let x = log_gamma_draw(a, rng)?;
                        let y = log_gamma_draw(b, rng)?;
                        Ok(1.0 / (1.0 + (y - x).exp()))
                    })
                    .collect()
            }
            CoefficientPrior::Gamma { shape, rate } => {
                let shape = shape.resolve(j, "gamma shape")?;
                let rate = rate.resolve(j, "gamma rate")?;
                shape
                    .iter()
                    .zip(&rate)
                    .map(|(&s, &r)| Ok(log_gamma_draw(s, rng)?.exp() / r))
                    .collect()
            }
            CoefficientPrior::GPrior { .. } => Err(Error::invalid(
                "g-prior draws depend on the design matrix; sample from the regression posterior instead",
            )),
        }
    }
}

/// `log G` for `G ∼ Gamma(shape, 1)`, stable for small shapes.
fn log_gamma_draw<R: Rng + ?Sized>(shape: f64, rng: &mut R) -> Result<f64> {
    if shape >= 1.0 {
        let g = Gamma::new(shape, 1.0).map_err(|e| Error::invalid(e.to_string()))?;
        Ok(g.sample(rng).ln())
    } else {
        // G(a) = G(a + 1) U^{1/a}
        let g = Gamma::new(shape + 1.0, 1.0).map_err(|e| Error::invalid(e.to_string()))?;
        let u: f64 = rng.random::<f64>();
        Ok(g.sample(rng).ln() + u.max(f64::MIN_POSITIVE).ln() / shape)
    }
}

/// One Dirichlet draw, normalized in log space.
pub fn sample_dirichlet<R: Rng + ?Sized>(alpha: &[f64], rng: &mut R) -> Result<Vec<f64>> {
    let logs = alpha
        .iter()
        .map(|&a| log_gamma_draw(a, rng))
        .collect::<Result<Vec<_>>>()?;
    let norm = log_sum_exp(&logs);
    Ok(logs.iter().map(|l| (l - norm).exp()).collect())
}

/// `log Γ(Σa) − Σ log Γ(a_k)`, the log normalizing constant of `Dir(a)`.
pub fn log_dirichlet_normalizer(alpha: &[f64]) -> Result<f64> {
    if alpha.is_empty() {
        return Err(Error::invalid("empty Dirichlet parameter"));
    }
    if let Some(bad) = alpha.iter().find(|a| !(**a > 0.0 && a.is_finite())) {
        return Err(Error::invalid(format!(
            "Dirichlet parameters must be positive, got {bad}"
        )));
    }
    let total: f64 = alpha.iter().sum();
    Ok(ln_gamma(total) - alpha.iter().map(|&a| ln_gamma(a)).sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_abs_diff_eq;

    #[test]
    fn geometric_first_mass() {
        let prior = ModelSizePrior::new(SizeFamily::Geometric { p: 0.5 }, 1, 1_000_000).unwrap();
        assert_abs_diff_eq!(prior.log_pmf(1), 0.5f64.ln(), epsilon = 1e-12);
    }

    #[test]
    fn truncated_geometric_ratio() {
        let prior = ModelSizePrior::new(SizeFamily::Geometric { p: 0.3 }, 5, 25).unwrap();
        for j in 5..25 {
            assert_abs_diff_eq!(prior.pmf(j + 1) / prior.pmf(j), 0.7, epsilon = 1e-12);
        }
        assert_eq!(prior.log_pmf(4), f64::NEG_INFINITY);
        assert_eq!(prior.log_pmf(26), f64::NEG_INFINITY);
    }

    #[test]
    fn invalid_priors() {
        assert!(ModelSizePrior::new(SizeFamily::Geometric { p: 0.5 }, 0, 3).is_err());
        assert!(ModelSizePrior::new(SizeFamily::Geometric { p: 0.5 }, 5, 4).is_err());
        assert!(ModelSizePrior::new(SizeFamily::Geometric { p: 1.5 }, 1, 4).is_err());
        assert!(ModelSizePrior::new(SizeFamily::Poisson { lambda: -1.0 }, 1, 4).is_err());
    }

    #[test]
    fn tail_exponents_per_family() {
        assert_eq!(SizeFamily::Geometric { p: 0.2 }.tail_exponents(), (0.0, 0.0));
        assert_eq!(SizeFamily::Poisson { lambda: 3.0 }.tail_exponents(), (1.0, 1.0));
        assert_eq!(
            SizeFamily::NegativeBinomial { r: 2.0, p: 0.4 }.tail_exponents(),
            (0.0, 0.0)
        );
    }

    #[test]
    fn dirichlet_normalizer_values() {
        assert_abs_diff_eq!(log_dirichlet_normalizer(&[1.0, 1.0]).unwrap(), 0.0, epsilon = 1e-14);
        assert_abs_diff_eq!(
            log_dirichlet_normalizer(&[1.0, 1.0, 1.0]).unwrap(),
            2f64.ln(),
            epsilon = 1e-14
        );
        assert_abs_diff_eq!(
            log_dirichlet_normalizer(&[0.5, 0.5]).unwrap(),
            -std::f64::consts::PI.ln(),
            epsilon = 1e-13
        );
        assert!(log_dirichlet_normalizer(&[1.0, 0.0]).is_err());
    }

    #[test]
    fn config_round_trip() {
        let kv = KeyValues::parse(
            "J.prior=geometric\nJ.p=0.5\nJ.min=5\nJ.max=25\ntheta.prior=dirichlet\ntheta.a=1.0\n",
            "t",
        )
        .unwrap();
        let m = ModelSizePrior::from_config(&kv, 1, 2).unwrap();
        assert_eq!(m.support(), 5..=25);
        assert_eq!(m.family(), SizeFamily::Geometric { p: 0.5 });
        let c = CoefficientPrior::from_config(&kv, "beta").unwrap();
        assert_eq!(c, CoefficientPrior::Dirichlet { alpha: Hyper::Scalar(1.0) });
    }

    #[test]
    fn dimension_mismatch() {
        let prior = CoefficientPrior::Dirichlet {
            alpha: Hyper::PerCoordinate(vec![1.0, 2.0]),
        };
        assert!(prior.sample(3, 1).is_err());
        assert!(CoefficientPrior::g_prior_default().sample(3, 1).is_err());
    }

    #[test]
    fn small_alpha_dirichlet_stays_on_simplex() {
        let prior = CoefficientPrior::Dirichlet {
            alpha: Hyper::Scalar(0.01),
        };
        let draw = prior.sample(6, 9).unwrap();
        assert!((draw.iter().sum::<f64>() - 1.0).abs() < 1e-12);
        assert!(draw.iter().all(|v| *v >= 0.0));
    }
}
