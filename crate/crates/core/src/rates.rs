//! Contraction-rate exponents for finite random-series priors and numerical
//! checks of the sieve inequalities.
//!
//! Every supported basis family approximates a smooth function with error
//! `e(J) ≍ J^{−κ}`; the rate is then `ε_n ≍ n^{−γ} (log n)^δ` with
//! `γ = κ/(2κ + 1)` and `δ = γ + (1 − t2)/2`.

use std::fmt;
use std::str::FromStr;

use num_rational::Ratio;

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

/// Parses `"3"`, `"3/2"` or a terminating decimal such as `"0.25"`.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let t = text.trim();
    let bad = || Error::invalid(format!("cannot read {t:?} as a rational number"));
    if let Some((num, den)) = t.split_once('/') {
        let n: i64 = num.trim().parse().map_err(|_| bad())?;
        let d: i64 = den.trim().parse().map_err(|_| bad())?;
        if d == 0 {
            return Err(bad());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((int, frac)) = t.split_once('.') {
        if frac.len() > 12 || !frac.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = int.starts_with('-');
        let whole: i64 = if int.is_empty() || int == "-" {
            0
        } else {
            int.parse().map_err(|_| bad())?
        };
        let scale = 10i64.pow(frac.len() as u32);
        let f: i64 = if frac.is_empty() { 0 } else { frac.parse().map_err(|_| bad())? };
        let f = if negative { -f } else { f };
        return Ok(Rational::new(whole * scale + f, scale));
    }
    t.parse::<i64>().map(Rational::from_integer).map_err(|_| bad())
}

fn to_f64(r: Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum BasisFamily {
    Fourier,
    Legendre,
    BSpline,
    Wavelet,
    Bernstein,
    CoarsenedBernstein,
    TensorBSpline,
}

impl FromStr for BasisFamily {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Ok(match s {
            "fourier" => BasisFamily::Fourier,
            "legendre" | "polynomial" => BasisFamily::Legendre,
            "bspline" | "b-spline" => BasisFamily::BSpline,
            "wavelet" => BasisFamily::Wavelet,
            "bernstein" => BasisFamily::Bernstein,
            "coarsened-bernstein" => BasisFamily::CoarsenedBernstein,
            "tensor-bspline" => BasisFamily::TensorBSpline,
            other => return Err(Error::invalid(format!("unknown basis family {other:?}"))),
        })
    }
}

impl fmt::Display for BasisFamily {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            BasisFamily::Fourier => "fourier",
            BasisFamily::Legendre => "legendre",
            BasisFamily::BSpline => "bspline",
            BasisFamily::Wavelet => "wavelet",
            BasisFamily::Bernstein => "bernstein",
            BasisFamily::CoarsenedBernstein => "coarsened-bernstein",
            BasisFamily::TensorBSpline => "tensor-bspline",
        })
    }
}

/// Metric in which approximation and Lipschitz conditions hold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Metric {
    L2,
    Sup,
}

impl FromStr for Metric {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "2" | "l2" | "L2" => Ok(Metric::L2),
            "inf" | "infinity" | "sup" | "linf" | "Linf" => Ok(Metric::Sup),
            other => Err(Error::invalid(format!("metric must be 2 or inf, got {other:?}"))),
        }
    }
}

/// Exponent `K0` in `‖(θ1 − θ2)ᵀξ‖_r ≤ C J^{K0} ‖θ1 − θ2‖_2`.
pub fn k0(family: BasisFamily, metric: Metric) -> Rational {
    match (family, metric) {
        (BasisFamily::Wavelet, _) => Rational::from_integer(1),
        (_, Metric::L2) => Rational::new(1, 2),
        (_, Metric::Sup) => Rational::from_integer(1),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct RateProblem {
    pub family: BasisFamily,
    /// Smoothness; one entry per coordinate for the tensor family.
    pub alpha: Vec<Rational>,
    pub t1: Rational,
    pub t2: Rational,
    pub t3: Rational,
    pub metric: Metric,
}

impl RateProblem {
    /// Univariate problem with `t1 = t2`, `t3 = 1`, sup metric.
    pub fn new(family: BasisFamily, alpha: Rational, t2: Rational) -> Self {
        Self {
            family,
            alpha: vec![alpha],
            t1: t2,
            t2,
            t3: Rational::from_integer(1),
            metric: Metric::Sup,
        }
    }

    pub fn dimension(&self) -> usize {
        self.alpha.len()
    }

    pub fn k0(&self) -> Rational {
        k0(self.family, self.metric)
    }

    pub fn validate(&self) -> Result<()> {
        let zero = Rational::from_integer(0);
        let one = Rational::from_integer(1);
        if self.alpha.is_empty() || self.alpha.iter().any(|a| *a <= zero) {
            return Err(Error::invalid("smoothness must be positive"));
        }
        if self.family != BasisFamily::TensorBSpline && self.alpha.len() != 1 {
            return Err(Error::invalid(format!(
                "{} takes a single smoothness value",
                self.family
            )));
        }
        if !(zero <= self.t2 && self.t2 <= self.t1 && self.t1 <= one) {
            return Err(Error::invalid("need 0 ≤ t2 ≤ t1 ≤ 1"));
        }
        if self.t3 <= zero {
            return Err(Error::invalid("t3 must be positive"));
        }
        let alpha = self.alpha[0];
        match self.family {
            BasisFamily::Bernstein if alpha > Rational::from_integer(2) => Err(Error::invalid(
                "Bernstein polynomials adapt only for smoothness up to 2",
            )),
            BasisFamily::CoarsenedBernstein if alpha > one => Err(Error::invalid(
                "coarsened Bernstein polynomials adapt only for smoothness up to 1",
            )),
            _ => Ok(()),
        }
    }

    /// Harmonic mean `s / Σ α_k⁻¹`.
    pub fn harmonic_smoothness(&self) -> Rational {
        let s = Rational::from_integer(self.alpha.len() as i64);
        let inv: Rational = self.alpha.iter().map(|a| a.recip()).sum();
        s / inv
    }

    /// Approximation exponent `κ` with `e(J) ≍ J^{−κ}`.
    pub fn approximation_exponent(&self) -> Rational {
        match self.family {
            BasisFamily::Bernstein => self.alpha[0] / 2,
            BasisFamily::TensorBSpline => {
                self.harmonic_smoothness() / Rational::from_integer(self.alpha.len() as i64)
            }
            _ => self.alpha[0],
        }
    }
}

/// `ε_n ≍ n^{−gamma} (log n)^{delta}`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct RateExponents {
    pub gamma: Rational,
    pub delta: Rational,
}

impl fmt::Display for RateExponents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "gamma={} delta={}", self.gamma, self.delta)
    }
}

pub fn rate_exponents(problem: &RateProblem) -> Result<RateExponents> {
    problem.validate()?;
    let kappa = problem.approximation_exponent();
    let one = Rational::from_integer(1);
    let gamma = kappa / (kappa * 2 + one);
    let delta = gamma + (one - problem.t2) / 2;
    Ok(RateExponents { gamma, delta })
}

/// Generic positive constants in the sieve inequalities.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SieveConstants {
    pub c1: f64,
    pub c3: f64,
    pub c0: f64,
    pub b: f64,
}

impl Default for SieveConstants {
    fn default() -> Self {
        Self {
            c1: 1.0,
            c3: 1.0,
            c0: 1.0,
            b: 1.0,
        }
    }
}

/// Which inequalities hold at one `n`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct SieveChecks {
    /// `b n ε̄² ≤ J_n log^{t2} J_n`
    pub prior_mass_dimension: bool,
    /// `log J_n + n ε̄² ≤ M_n^{t3}`
    pub coefficient_bound: bool,
    /// `J̄^{−κ} ≤ ε̄`
    pub approximation: bool,
    /// `J̄ {c1 log^{t1} J̄ + c3 K0 log J̄ + c3 log(1/ε̄)} ≤ 2 n ε̄²`
    pub prior_concentration: bool,
    /// `ε_n ≥ ε̄_n`
    pub ordering: bool,
    /// `J̄ ≥ 1`, `J_n ≥ 1`, `ε_n < 1`
    pub well_posed: bool,
}

impl SieveChecks {
    pub fn all(&self) -> bool {
        self.prior_mass_dimension
            && self.coefficient_bound
            && self.approximation
            && self.prior_concentration
            && self.ordering
            && self.well_posed
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SieveRow {
    pub n: f64,
    pub j_bar: f64,
    pub j_n: f64,
    pub eps_bar: f64,
    pub eps_n: f64,
    pub m_n: f64,
    pub checks: SieveChecks,
}

#[derive(Debug, Clone, PartialEq)]
pub struct SieveReport {
    pub exponents: RateExponents,
    pub rows: Vec<SieveRow>,
    /// Smallest grid `n` from which every later row passes, if any.
    pub threshold: Option<f64>,
}

/// Relative slack for floating-point comparisons.
const SLACK: f64 = 1e-12;

fn le(a: f64, b: f64) -> bool {
    a <= b + SLACK * b.abs().max(a.abs())
}

/// Sieve sequences at one `n` (requires `n > e`).
pub fn sieve_row(problem: &RateProblem, constants: SieveConstants, n: f64) -> Result<SieveRow> {
    problem.validate()?;
    if n.is_nan() || n <= std::f64::consts::E {
        return Err(Error::invalid(format!("sample size {n} too small for the sieve")));
    }
    let kappa = to_f64(problem.approximation_exponent());
    let (t1, t2, t3, k0) = (
        to_f64(problem.t1),
        to_f64(problem.t2),
        to_f64(problem.t3),
        to_f64(problem.k0()),
    );
    let ln_n = n.ln();
    let p = 1.0 / (2.0 * kappa + 1.0);
    let j_bar = (n / ln_n).powf(p).ceil();
    let eps_bar = (n / ln_n).powf(-kappa * p);
    let j_n = (n.powf(p) * ln_n.powf(2.0 * kappa * p - t2)).ceil();
    let m_n = n.powf(1.0 / t3);
    let bracket = (k0 + 1.0) * j_n.ln() + m_n.ln() + constants.c0 * ln_n;
    let eps_n = (j_n * bracket / n).sqrt();
    let n_eps_bar2 = n * eps_bar * eps_bar;
    let ln_j_bar = j_bar.ln();
    let concentration = j_bar
        * (constants.c1 * ln_j_bar.powf(t1) + constants.c3 * k0 * ln_j_bar
            + constants.c3 * (1.0 / eps_bar).ln());
    let checks = SieveChecks {
        prior_mass_dimension: le(constants.b * n_eps_bar2, j_n * j_n.ln().powf(t2)),
        coefficient_bound: le(j_n.ln() + n_eps_bar2, m_n.powf(t3)),
        approximation: le(j_bar.powf(-kappa), eps_bar),
        prior_concentration: le(concentration, 2.0 * n_eps_bar2),
        ordering: le(eps_bar, eps_n),
        well_posed: j_bar >= 1.0 && j_n >= 1.0 && eps_n < 1.0,
    };
    Ok(SieveRow {
        n,
        j_bar,
        j_n,
        eps_bar,
        eps_n,
        m_n,
        checks,
    })
}

/// Evaluates the sieve on an increasing grid of sample sizes.
pub fn solve_sieve(problem: &RateProblem, constants: SieveConstants, n_grid: &[f64]) -> Result<SieveReport> {
    let exponents = rate_exponents(problem)?;
    for c in [constants.c1, constants.c3, constants.c0, constants.b] {
        if !(c > 0.0 && c.is_finite()) {
            return Err(Error::invalid("sieve constants must be positive"));
        }
    }
    if n_grid.windows(2).any(|w| w[1] <= w[0]) {
        return Err(Error::invalid("sample-size grid must be increasing"));
    }
    let rows = n_grid
        .iter()
        .map(|&n| sieve_row(problem, constants, n))
        .collect::<Result<Vec<_>>>()?;
    let first_good = rows
        .iter()
        .rposition(|r| !r.checks.all())
        .map_or(0, |i| i + 1);
    let threshold = rows.get(first_good).map(|r| r.n);
    Ok(SieveReport {
        exponents,
        rows,
        threshold,
    })
}

/// `count` sample sizes spaced evenly in `log n` over `[lo, hi]`.
pub fn log_grid(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    if count < 2 {
        return vec![lo];
    }
    let (a, b) = (lo.ln(), hi.ln());
    (0..count)
        .map(|i| (a + (b - a) * i as f64 / (count - 1) as f64).exp().round())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn r(n: i64, d: i64) -> Rational {
        Rational::new(n, d)
    }

    #[test]
    fn fourier_example() {
        let e = rate_exponents(&RateProblem::new(BasisFamily::Fourier, r(1, 1), r(0, 1))).unwrap();
        assert_eq!(e.to_string(), "gamma=1/3 delta=5/6");
    }

    #[test]
    fn bernstein_range() {
        let e = rate_exponents(&RateProblem::new(BasisFamily::Bernstein, r(2, 1), r(0, 1))).unwrap();
        assert_eq!(e.gamma, r(1, 3));
        assert!(rate_exponents(&RateProblem::new(BasisFamily::Bernstein, r(5, 2), r(0, 1))).is_err());
        assert!(rate_exponents(&RateProblem::new(BasisFamily::CoarsenedBernstein, r(3, 2), r(0, 1))).is_err());
    }

    #[test]
    fn tensor_harmonic_mean() {
        let mut p = RateProblem::new(BasisFamily::TensorBSpline, r(1, 1), r(0, 1));
        p.alpha = vec![r(1, 1), r(1, 1)];
        assert_eq!(p.harmonic_smoothness(), r(1, 1));
        assert_eq!(rate_exponents(&p).unwrap().gamma, r(1, 4));
        p.alpha = vec![r(1, 1), r(3, 1)];
        assert_eq!(p.harmonic_smoothness(), r(3, 2));
        assert_eq!(rate_exponents(&p).unwrap().gamma, r(3, 10));
    }

    #[test]
    fn k0_table() {
        for f in [BasisFamily::BSpline, BasisFamily::Fourier, BasisFamily::Legendre] {
            assert_eq!(k0(f, Metric::L2), r(1, 2));
            assert_eq!(k0(f, Metric::Sup), r(1, 1));
        }
        assert_eq!(k0(BasisFamily::Wavelet, Metric::L2), r(1, 1));
        assert_eq!(k0(BasisFamily::Wavelet, Metric::Sup), r(1, 1));
    }

    #[test]
    fn rational_parsing() {
        assert_eq!(parse_rational("3/2").unwrap(), r(3, 2));
        assert_eq!(parse_rational("0.25").unwrap(), r(1, 4));
        assert_eq!(parse_rational("2").unwrap(), r(2, 1));
        assert_eq!(parse_rational("-0.5").unwrap(), r(-1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
    }

    #[test]
    fn validation() {
        let mut p = RateProblem::new(BasisFamily::BSpline, r(1, 1), r(1, 2));
        p.t1 = r(0, 1);
        assert!(rate_exponents(&p).is_err());
        let p = RateProblem::new(BasisFamily::BSpline, r(0, 1), r(0, 1));
        assert!(rate_exponents(&p).is_err());
    }

    #[test]
    fn unit_constants_at_one_million() {
        let p = RateProblem::new(BasisFamily::BSpline, r(1, 1), r(0, 1));
        let row = sieve_row(&p, SieveConstants::default(), 1e6).unwrap();
        assert!(row.checks.all(), "{row:?}");
    }
}
