mod common;

use common::*;
use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use series_prior::harness::metric_grid;
use series_prior::rates::{log_grid, solve_sieve, SieveConstants};
use series_prior::regression::{design_matrix, fit_component, GPriorParams};
use series_prior::{
    rate_exponents, Basis, BasisFamily, BinaryModel, Covariates, DensityDataset, DensityModel,
    Evaluation, Hyper, ModelSizePrior, Moments, PoissonModel, RateProblem, RegressionDataset,
    ResponseKind, SizeFamily, TrueDensity,
};

fn uniform_points(n: usize, seed: u64) -> Vec<f64> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..n).map(|_| rng.random::<f64>()).collect()
}

fn density_exact(order: usize, j: usize, obs: &[f64], grid: &[f64]) -> series_prior::PosteriorSummary {
    let model = DensityModel::new(order, ModelSizePrior::fixed(j).unwrap(), Hyper::Scalar(1.0)).unwrap();
    let data = DensityDataset::new(obs.to_vec()).unwrap();
    model.posterior(&data, grid, Moments::First, Evaluation::Exact).unwrap()
}

#[test]
fn gauss_rules_are_exact_on_polynomials() {
    let (t, w) = gauss_legendre(6);
    let v: f64 = t.iter().zip(&w).map(|(t, w)| w * t.powi(11)).sum();
    assert!((v - 1.0 / 12.0).abs() < 1e-14);
    let (u, w) = gauss_laguerre(10);
    let v: f64 = u.iter().zip(&w).map(|(u, w)| w * u.powi(7)).sum();
    assert!((v - 5040.0).abs() < 1e-8);
}

#[test]
fn basis_matches_cox_de_boor() {
    let mut rng = ChaCha8Rng::seed_from_u64(5);
    for q in 1..=4 {
        for intervals in [1, 2, 5, 13] {
            let basis = Basis::new(q, intervals).unwrap();
            for _ in 0..200 {
                let x: f64 = rng.random();
                let v = basis.eval(x).unwrap();
                for (k, vk) in v.iter().enumerate() {
                    let naive = cox_de_boor(basis.knots(), q, k, x);
                    assert!((vk - naive).abs() < 1e-13, "q={q} K={intervals} k={k} x={x}");
                }
            }
        }
    }
}

#[test]
fn density_marginal_matches_simplex_quadrature() {
    // n = 3, J = 3, q = 2
    let obs = [0.2, 0.55, 0.9];
    let grid = [0.1, 0.5, 0.8];
    let s = density_exact(2, 3, &obs, &grid);
    let basis = Basis::with_dimension(2, 3).unwrap();
    let oracle = simplex_quadrature(&rows(&basis, &obs, true), &rows(&basis, &grid, true), 8);
    let exact = s.j_log_marginal[0].exp();
    assert!((exact / oracle.marginal - 1.0).abs() < 1e-4, "{exact} vs {}", oracle.marginal);
    for (a, b) in s.mean.iter().zip(&oracle.mean) {
        assert!((a - b).abs() < 1e-10);
    }
}

#[test]
fn density_model_average_matches_quadrature() {
    let obs = uniform_points(5, 21);
    let grid = metric_grid(10);
    let prior = ModelSizePrior::new(SizeFamily::Geometric { p: 0.4 }, 3, 5).unwrap();
    let model = DensityModel::new(2, prior.clone(), Hyper::Scalar(1.0)).unwrap();
    let data = DensityDataset::new(obs.clone()).unwrap();
    let s = model.posterior(&data, &grid, Moments::First, Evaluation::Exact).unwrap();
    let mut num = vec![0.0; grid.len()];
    let mut den = 0.0;
    for j in 3..=5 {
        let basis = Basis::with_dimension(2, j).unwrap();
        let o = simplex_quadrature(&rows(&basis, &obs, true), &rows(&basis, &grid, true), 8);
        let w = prior.pmf(j) * o.marginal;
        den += w;
        for (n, m) in num.iter_mut().zip(&o.mean) {
            *n += w * m;
        }
    }
    for (a, n) in s.mean.iter().zip(&num) {
        assert!((a - n / den).abs() < 1e-9, "{a} vs {}", n / den);
    }
}

#[test]
fn density_matches_importance_sampling() {
    let obs = uniform_points(4, 8);
    let grid = metric_grid(10);
    let s = density_exact(3, 5, &obs, &grid);
    let basis = Basis::with_dimension(3, 5).unwrap();
    let (mean, se) = importance_sampling(&rows(&basis, &obs, true), &rows(&basis, &grid, true), 1 << 20, 3);
    for g in 0..grid.len() {
        assert!((s.mean[g] - mean[g]).abs() <= 3.0 * se[g], "{g}: {} vs {} ± {}", s.mean[g], mean[g], se[g]);
    }
}

#[test]
fn histogram_engine_matches_direct_formula() {
    let obs = TrueDensity::mixture_51().sample(50, 4).unwrap();
    let grid = metric_grid(100);
    let prior = ModelSizePrior::new(SizeFamily::Geometric { p: 0.5 }, 5, 25).unwrap();
    let model = DensityModel::new(1, prior.clone(), Hyper::Scalar(1.0)).unwrap();
    let s = model.posterior(&obs, &grid, Moments::First, Evaluation::Exact).unwrap();
    let direct = histogram_posterior(obs.observations(), &grid, &|j| prior.log_pmf(j), 5..=25, 1.0);
    for (a, b) in s.mean.iter().zip(&direct) {
        assert!((a - b).abs() < 1e-10 * b.max(1.0), "{a} vs {b}");
    }
}

#[test]
fn binary_matches_tensor_quadrature() {
    let z = [0.1, 0.35, 0.6, 0.85];
    let x = [0.0, 1.0, 1.0, 0.0];
    let grid = [0.05, 0.3, 0.5, 0.7, 0.95];
    let basis = Basis::with_dimension(2, 4).unwrap();
    let data = RegressionDataset::new(z.to_vec(), x.to_vec(), ResponseKind::Binary).unwrap();
    for (a, b) in [(1u32, 1u32), (2, 3)] {
        let model = BinaryModel::new(
            2,
            ModelSizePrior::fixed(4).unwrap(),
            Hyper::Scalar(a as f64),
            Hyper::Scalar(b as f64),
        )
        .unwrap();
        let s = model.posterior(&data, &grid, Moments::First, Evaluation::Exact).unwrap();
        let oracle = binary_quadrature(&rows(&basis, &z, false), &x, &rows(&basis, &grid, false), &[a; 4], &[b; 4], 8);
        for (e, o) in s.mean.iter().zip(&oracle) {
            assert!((e / o - 1.0).abs() < 1e-4, "Beta({a},{b}): {e} vs {o}");
        }
    }
}

#[test]
fn poisson_matches_gauss_laguerre() {
    let z = [0.15, 0.5, 0.8];
    let x = [1.0, 2.0, 0.0];
    let grid = [0.05, 0.3, 0.5, 0.7, 0.95];
    let basis = Basis::with_dimension(2, 4).unwrap();
    let data = RegressionDataset::new(z.to_vec(), x.to_vec(), ResponseKind::Count).unwrap();
    let model = PoissonModel::new(2, ModelSizePrior::fixed(4).unwrap(), Hyper::Scalar(2.0), Hyper::Scalar(1.5)).unwrap();
    let s = model.posterior(&data, &grid, Moments::First, Evaluation::Exact).unwrap();
    let oracle = poisson_quadrature(&rows(&basis, &z, false), &x, &rows(&basis, &grid, false), &[2; 4], &[1.5; 4], 12);
    for (e, o) in s.mean.iter().zip(&oracle) {
        assert!((e / o - 1.0).abs() < 1e-4, "{e} vs {o}");
    }
}

#[test]
fn gaussian_marginal_matches_2d_quadrature() {
    let w = [0.3, 0.8, 1.1, 0.5, 0.9];
    let x = [0.5, 1.2, 1.9, 0.4, 1.6];
    for (g, a, b) in [(5.0, 1.0, 1.0), (2.0, 3.0, 0.5)] {
        let comp = fit_component(
            &DMatrix::from_column_slice(5, 1, &w),
            &x,
            GPriorParams { g: Some(g), a, b },
        )
        .unwrap();
        let oracle = gaussian_marginal_2d(&w, &x, g, a, b);
        assert!(
            (comp.log_marginal - oracle).abs() < 1e-4,
            "g={g}: {} vs {oracle}",
            comp.log_marginal
        );
    }
}

#[test]
fn trapezoid_design_for_identity_curve() {
    // the indicator jump at 1/2 costs about h/4, so h = 1e-6
    let grid: Vec<f64> = (0..=1_000_000).map(|i| i as f64 / 1e6).collect();
    let cov = Covariates::functional(grid.clone(), vec![grid.clone()]).unwrap();
    let w = design_matrix(&cov, &Basis::new(1, 2).unwrap()).unwrap();
    assert!((w[(0, 0)] - 0.125).abs() < 1e-6, "{}", w[(0, 0)]);
    assert!((w[(0, 1)] - 0.375).abs() < 1e-6, "{}", w[(0, 1)]);
}

#[test]
fn trapezoid_design_converges_quadratically() {
    let basis = Basis::with_dimension(3, 6).unwrap();
    let design = |points: usize| {
        let grid: Vec<f64> = (0..points).map(|i| i as f64 / (points - 1) as f64).collect();
        let curve: Vec<f64> = grid.iter().map(|t| (3.0 * t).sin() + t * t).collect();
        design_matrix(&Covariates::functional(grid, vec![curve]).unwrap(), &basis).unwrap()
    };
    let ws: Vec<_> = [17, 33, 65, 129].iter().map(|&g| design(g)).collect();
    for i in 0..2 {
        let d1 = (&ws[i + 1] - &ws[i]).amax();
        let d2 = (&ws[i + 2] - &ws[i + 1]).amax();
        let ratio = d1 / d2;
        assert!((3.0..=5.0).contains(&ratio), "ratio {ratio}");
    }
}

#[test]
fn beta_half_sampler_ks() {
    let d = TrueDensity::BetaHalf.sample(100_000, 12).unwrap();
    let mut xs = d.observations().to_vec();
    xs.sort_by(|a, b| a.partial_cmp(b).unwrap());
    let n = xs.len() as f64;
    let cdf = |x: f64| 2.0 / std::f64::consts::PI * x.sqrt().asin();
    let ks = xs
        .iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max);
    assert!(ks < 0.01, "KS {ks}");
}

#[test]
fn sieve_slope_recovers_gamma() {
    for (family, alpha) in [(BasisFamily::Fourier, 1), (BasisFamily::BSpline, 2), (BasisFamily::Bernstein, 2)] {
        let rational = series_prior::rates::Rational::from_integer;
        let problem = RateProblem::new(family, rational(alpha), rational(0));
        let exps = rate_exponents(&problem).unwrap();
        let report = solve_sieve(&problem, SieveConstants::default(), &log_grid(1e4, 1e8, 41)).unwrap();
        let delta = *exps.delta.numer() as f64 / *exps.delta.denom() as f64;
        let gamma = *exps.gamma.numer() as f64 / *exps.gamma.denom() as f64;
        let x: Vec<f64> = report.rows.iter().map(|r| r.n.ln()).collect();
        // remove the (log n)^δ factor before the log-log fit
        let y: Vec<f64> = report
            .rows
            .iter()
            .map(|r| r.eps_n.ln() - delta * r.n.ln().ln())
            .collect();
        let s = slope(&x, &y);
        assert!((s + gamma).abs() < 0.01, "{family}: slope {s}, gamma {gamma}");
    }
}
