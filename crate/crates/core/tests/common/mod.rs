//! Brute-force oracles shared by the integration tests.
#![allow(dead_code)]

use nalgebra::{DMatrix, SymmetricEigen};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use series_prior::Basis;

/// Golub–Welsch nodes and weights from a symmetric Jacobi matrix.
fn golub_welsch(diag: &[f64], off: &[f64], mu0: f64) -> (Vec<f64>, Vec<f64>) {
    let m = diag.len();
    let mut jac = DMatrix::<f64>::zeros(m, m);
    for i in 0..m {
        jac[(i, i)] = diag[i];
        if i + 1 < m {
            jac[(i, i + 1)] = off[i];
            jac[(i + 1, i)] = off[i];
        }
    }
    let eig = SymmetricEigen::new(jac);
    let mut pairs: Vec<(f64, f64)> = (0..m)
        .map(|i| (eig.eigenvalues[i], mu0 * eig.eigenvectors[(0, i)].powi(2)))
        .collect();
    pairs.sort_by(|a, b| a.0.partial_cmp(&b.0).unwrap());
    pairs.into_iter().unzip()
}

/// `m`-point Gauss–Legendre rule on `[0, 1]`.
pub fn gauss_legendre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let off: Vec<f64> = (1..m)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    let (t, w) = golub_welsch(&vec![0.0; m], &off, 2.0);
    (
        t.iter().map(|t| (t + 1.0) / 2.0).collect(),
        w.iter().map(|w| w / 2.0).collect(),
    )
}

/// `m`-point Gauss–Laguerre rule for weight `e^{−u}` on `(0, ∞)`.
pub fn gauss_laguerre(m: usize) -> (Vec<f64>, Vec<f64>) {
    let diag: Vec<f64> = (0..m).map(|k| 2.0 * k as f64 + 1.0).collect();
    let off: Vec<f64> = (1..m).map(|k| k as f64).collect();
    golub_welsch(&diag, &off, 1.0)
}

/// `∫ f` as a sum of `m`-point Gauss–Legendre rules between consecutive breaks.
pub fn piecewise_integral<F: Fn(f64) -> f64>(f: F, breaks: &[f64], m: usize) -> f64 {
    let (t, w) = gauss_legendre(m);
    breaks
        .windows(2)
        .map(|ab| {
            let h = ab[1] - ab[0];
            t.iter().zip(&w).map(|(t, w)| w * h * f(ab[0] + h * t)).sum::<f64>()
        })
        .sum()
}

/// Textbook Cox–de Boor recursion for `B_{k,q}` on `knots`, right-continuous
/// except at the last knot.
pub fn cox_de_boor(knots: &[f64], q: usize, k: usize, x: f64) -> f64 {
    if q == 1 {
        let (a, b) = (knots[k], knots[k + 1]);
        let last = *knots.last().unwrap();
        return if (a <= x && x < b) || (x == last && b == last && a < b) {
            1.0
        } else {
            0.0
        };
    }
    let mut v = 0.0;
    let d1 = knots[k + q - 1] - knots[k];
    if d1 > 0.0 {
        v += (x - knots[k]) / d1 * cox_de_boor(knots, q - 1, k, x);
    }
    let d2 = knots[k + q] - knots[k + 1];
    if d2 > 0.0 {
        v += (knots[k + q] - x) / d2 * cox_de_boor(knots, q - 1, k + 1, x);
    }
    v
}

/// Dense rows of `B*` (normalized) or `B` at the given points.
pub fn rows(basis: &Basis, points: &[f64], normalized: bool) -> Vec<Vec<f64>> {
    points
        .iter()
        .map(|&x| {
            if normalized {
                basis.eval_normalized(x).unwrap()
            } else {
                basis.eval(x).unwrap()
            }
        })
        .collect()
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

/// Quadrature estimate of a posterior mean on a grid and the marginal
/// likelihood `∫ L dΠ`.
#[derive(Debug, Clone)]
pub struct OracleMoments {
    pub marginal: f64,
    pub mean: Vec<f64>,
}

/// Density posterior under a uniform prior on the simplex, by tensor
/// Gauss–Legendre on the stick-breaking cube.
///
/// `data[i]` and `grid[g]` are rows of `B*`. Exact for the polynomial
/// integrands when `2m − 1 ≥ n + J`.
pub fn simplex_quadrature(data: &[Vec<f64>], grid: &[Vec<f64>], m: usize) -> OracleMoments {
    let j = grid.first().or(data.first()).map(Vec::len).expect("some rows");
    let (t, w) = gauss_legendre(m);
    let dims = j - 1;
    let total = m.pow(dims as u32);
    let log_fact: f64 = (1..j).map(|k| (k as f64).ln()).sum();
    let (mass, sums) = (0..total)
        .into_par_iter()
        .map(|mut index| {
            let mut theta = vec![0.0; j];
            let mut stick = 1.0;
            let mut weight = 1.0;
            for (k, th) in theta.iter_mut().enumerate().take(dims) {
                let i = index % m;
                index /= m;
                let u = t[i];
                weight *= w[i];
                *th = u * stick;
                // Jacobian of the stick-breaking map
                weight *= (1.0 - u).powi((dims - 1 - k) as i32);
                stick *= 1.0 - u;
            }
            theta[dims] = stick;
            let like: f64 = data.iter().map(|r| dot(r, &theta)).product();
            let mass = weight * like;
            let values: Vec<f64> = grid.iter().map(|r| mass * dot(r, &theta)).collect();
            (mass, values)
        })
        .reduce(
            || (0.0, vec![0.0; grid.len()]),
            |(a, mut va), (b, vb)| {
                for (x, y) in va.iter_mut().zip(vb) {
                    *x += y;
                }
                (a + b, va)
            },
        );
    OracleMoments {
        marginal: mass * log_fact.exp(),
        mean: sums.iter().map(|s| s / mass).collect(),
    }
}

/// Self-normalized importance sampling with `draws` prior draws from the
/// uniform distribution on the simplex; returns means and delta-method
/// standard errors.
pub fn importance_sampling(data: &[Vec<f64>], grid: &[Vec<f64>], draws: usize, seed: u64) -> (Vec<f64>, Vec<f64>) {
    let j = grid[0].len();
    let g = grid.len();
    let chunks = 64;
    let per = draws / chunks;
    // [Σw, Σw², then per grid point Σwp, Σw²p, Σw²p²]
    let sums = (0..chunks)
        .into_par_iter()
        .map(|c| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            rng.set_stream(c as u64);
            let mut theta = vec![0.0; j];
            let mut acc = vec![0.0; 2 + 3 * g];
            for _ in 0..per {
                let mut total = 0.0;
                for th in theta.iter_mut() {
                    let u: f64 = rng.random();
                    *th = -(1.0 - u).ln();
                    total += *th;
                }
                theta.iter_mut().for_each(|t| *t /= total);
                let l: f64 = data.iter().map(|r| dot(r, &theta)).product();
                acc[0] += l;
                acc[1] += l * l;
                for (k, r) in grid.iter().enumerate() {
                    let p = dot(r, &theta);
                    acc[2 + 3 * k] += l * p;
                    acc[3 + 3 * k] += l * l * p;
                    acc[4 + 3 * k] += l * l * p * p;
                }
            }
            acc
        })
        .reduce(
            || vec![0.0; 2 + 3 * g],
            |mut a, b| {
                a.iter_mut().zip(b).for_each(|(x, y)| *x += y);
                a
            },
        );
    let (sw, sw2) = (sums[0], sums[1]);
    let mut mean = Vec::with_capacity(g);
    let mut se = Vec::with_capacity(g);
    for k in 0..g {
        let m = sums[2 + 3 * k] / sw;
        let var = sums[4 + 3 * k] - 2.0 * m * sums[3 + 3 * k] + m * m * sw2;
        mean.push(m);
        se.push(var.max(0.0).sqrt() / sw);
    }
    (mean, se)
}

/// Binary regression posterior mean of `f` under independent
/// `Beta(a_k, b_k)` priors with integer parameters, by tensor Gauss–Legendre.
/// `design[i]` and `grid[g]` are rows of `B`.
pub fn binary_quadrature(design: &[Vec<f64>], x: &[f64], grid: &[Vec<f64>], a: &[u32], b: &[u32], m: usize) -> Vec<f64> {
    let j = grid[0].len();
    let (t, w) = gauss_legendre(m);
    let total = m.pow(j as u32);
    let (mass, sums) = (0..total)
        .into_par_iter()
        .map(|mut index| {
            let mut theta = vec![0.0; j];
            let mut weight = 1.0;
            for k in 0..j {
                let i = index % m;
                index /= m;
                theta[k] = t[i];
                weight *= w[i] * t[i].powi(a[k] as i32 - 1) * (1.0 - t[i]).powi(b[k] as i32 - 1);
            }
            let like: f64 = design
                .iter()
                .zip(x)
                .map(|(r, &xi)| {
                    let f = dot(r, &theta);
                    if xi == 1.0 {
                        f
                    } else {
                        1.0 - f
                    }
                })
                .product();
            let mass = weight * like;
            (mass, grid.iter().map(|r| mass * dot(r, &theta)).collect::<Vec<_>>())
        })
        .reduce(
            || (0.0, vec![0.0; grid.len()]),
            |(a, mut va), (b, vb)| {
                for (x, y) in va.iter_mut().zip(vb) {
                    *x += y;
                }
                (a + b, va)
            },
        );
    sums.iter().map(|s| s / mass).collect()
}

/// Poisson regression posterior mean of `f` under independent
/// `Gamma(a_k, rate b_k)` priors with integer shapes, by tensor
/// Gauss–Laguerre after scaling out `e^{−(b_k + c_k) θ_k}`.
pub fn poisson_quadrature(design: &[Vec<f64>], x: &[f64], grid: &[Vec<f64>], a: &[u32], b: &[f64], m: usize) -> Vec<f64> {
    let j = grid[0].len();
    let c: Vec<f64> = (0..j).map(|k| design.iter().map(|r| r[k]).sum()).collect();
    let (u, w) = gauss_laguerre(m);
    let total = m.pow(j as u32);
    let (mass, sums) = (0..total)
        .into_par_iter()
        .map(|mut index| {
            let mut theta = vec![0.0; j];
            let mut weight = 1.0;
            for k in 0..j {
                let i = index % m;
                index /= m;
                let scale = b[k] + c[k];
                theta[k] = u[i] / scale;
                weight *= w[i] * theta[k].powi(a[k] as i32 - 1) / scale;
            }
            let like: f64 = design
                .iter()
                .zip(x)
                .map(|(r, &xi)| dot(r, &theta).powi(xi as i32))
                .product();
            let mass = weight * like;
            (mass, grid.iter().map(|r| mass * dot(r, &theta)).collect::<Vec<_>>())
        })
        .reduce(
            || (0.0, vec![0.0; grid.len()]),
            |(a, mut va), (b, vb)| {
                for (x, y) in va.iter_mut().zip(vb) {
                    *x += y;
                }
                (a + b, va)
            },
        );
    sums.iter().map(|s| s / mass).collect()
}

/// Composite Simpson rule with `panels` (even) panels.
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let h = (b - a) / panels as f64;
    let mut s = f(a) + f(b);
    for i in 1..panels {
        s += f(a + i as f64 * h) * if i % 2 == 1 { 4.0 } else { 2.0 };
    }
    s * h / 3.0
}

/// Log marginal likelihood of `X = wθ + ε` with a single column `w`,
/// `θ | σ² ∼ N(0, g σ² / wᵀw)`, `σ² ∼ IG(a, b)`, by 2-D Simpson over
/// `(θ, log σ²)`.
pub fn gaussian_marginal_2d(w: &[f64], x: &[f64], g: f64, a: f64, b: f64) -> f64 {
    use std::f64::consts::PI;
    use statrs::function::gamma::ln_gamma;
    let n = x.len() as f64;
    let ww = dot(w, w);
    let wx = dot(w, x);
    let ols = wx / ww;
    let shrink = g / (1.0 + g);
    let log_inner = |theta: f64, s2: f64| {
        let rss: f64 = w.iter().zip(x).map(|(wi, xi)| (xi - wi * theta).powi(2)).sum();
        let prior_var = g * s2 / ww;
        -0.5 * n * (2.0 * PI * s2).ln() - rss / (2.0 * s2) - 0.5 * (2.0 * PI * prior_var).ln()
            - theta * theta / (2.0 * prior_var)
    };
    let log_ig = |s2: f64| a * b.ln() - ln_gamma(a) - (a + 1.0) * s2.ln() - b / s2;
    // reference level to keep exponentials in range
    let s2_ref = (b + 0.5 * (dot(x, x) - shrink * wx * ols)) / (a + n / 2.0 + 1.0);
    let reference = log_inner(shrink * ols, s2_ref) + log_ig(s2_ref);
    let inner = |ls2: f64| {
        let s2 = ls2.exp();
        let sd = (s2 * shrink / ww).sqrt();
        let centre = shrink * ols;
        let v = simpson(
            |t| (log_inner(t, s2) + log_ig(s2) - reference).exp(),
            centre - 14.0 * sd,
            centre + 14.0 * sd,
            800,
        );
        v * s2
    };
    let c = s2_ref.ln();
    simpson(inner, c - 18.0, c + 14.0, 6000).ln() + reference
}

/// Direct posterior for `q = 1`: given `J`, weights are
/// `Dirichlet(a + counts)`; the marginal is `J^n Γ(Ja)/Γ(Ja + n) Π Γ(a + N_k)/Γ(a)`.
pub fn histogram_posterior(obs: &[f64], grid: &[f64], log_prior: &dyn Fn(usize) -> f64, js: std::ops::RangeInclusive<usize>, a: f64) -> Vec<f64> {
    use statrs::function::gamma::ln_gamma;
    let n = obs.len() as f64;
    let bin = |x: f64, j: usize| ((x * j as f64).floor() as usize).min(j - 1);
    let mut logs = Vec::new();
    let mut means = Vec::new();
    for j in js {
        let mut counts = vec![0.0; j];
        for &x in obs {
            counts[bin(x, j)] += 1.0;
        }
        let jf = j as f64;
        let log_m = n * jf.ln() + ln_gamma(jf * a) - ln_gamma(jf * a + n)
            + counts.iter().map(|c| ln_gamma(a + c) - ln_gamma(a)).sum::<f64>();
        logs.push(log_prior(j) + log_m);
        means.push(
            grid.iter()
                .map(|&x| jf * (a + counts[bin(x, j)]) / (jf * a + n))
                .collect::<Vec<_>>(),
        );
    }
    let top = logs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let weights: Vec<f64> = logs.iter().map(|l| (l - top).exp()).collect();
    let total: f64 = weights.iter().sum();
    (0..grid.len())
        .map(|g| weights.iter().zip(&means).map(|(w, m)| w * m[g]).sum::<f64>() / total)
        .collect()
}

/// Least-squares slope of `y` on `x`.
pub fn slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx).powi(2)).sum();
    sxy / sxx
}
