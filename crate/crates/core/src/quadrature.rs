//! Quadrature rules shared by construction-time cross-checks and oracles.

use nalgebra::{DMatrix, SymmetricEigen};
use statrs::function::gamma::ln_gamma;

/// Composite Simpson rule with `panels` subintervals (rounded up to even).
pub fn simpson<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, panels: usize) -> f64 {
    let m = (panels.max(2) + 1) & !1;
    let h = (b - a) / m as f64;
    let mut acc = f(a) + f(b);
    for i in 1..m {
        let x = a + h * i as f64;
        acc += if i % 2 == 1 { 4.0 } else { 2.0 } * f(x);
    }
    acc * h / 3.0
}

/// Simpson on each piece between consecutive breakpoints. Exact for
/// piecewise cubics whose pieces are delimited by `breaks`.
pub fn simpson_piecewise<F: Fn(f64) -> f64>(f: F, breaks: &[f64], panels_per_piece: usize) -> f64 {
    breaks
        .windows(2)
        .filter(|w| w[1] > w[0])
        .map(|w| simpson(&f, w[0], w[1], panels_per_piece))
        .sum()
}

/// A set of nodes and weights.
#[derive(Debug, Clone)]
pub struct Rule {
    pub nodes: Vec<f64>,
    pub weights: Vec<f64>,
}

fn golub_welsch(diag: &[f64], off: &[f64], mass: f64) -> Rule {
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
        .map(|i| {
            let v0 = eig.eigenvectors[(0, i)];
            (eig.eigenvalues[i], mass * v0 * v0)
        })
        .collect();
    pairs.sort_by(|a, b| a.0.total_cmp(&b.0));
    Rule {
        nodes: pairs.iter().map(|p| p.0).collect(),
        weights: pairs.iter().map(|p| p.1).collect(),
    }
}

/// `m`-point Gauss–Legendre rule on `[0, 1]`; exact for degree `2m − 1`.
pub fn gauss_legendre(m: usize) -> Rule {
    assert!(m >= 1, "need at least one node");
    let diag = vec![0.0; m];
    let off: Vec<f64> = (1..m)
        .map(|k| {
            let k = k as f64;
            k / (4.0 * k * k - 1.0).sqrt()
        })
        .collect();
    let rule = golub_welsch(&diag, &off, 2.0);
    Rule {
        nodes: rule.nodes.iter().map(|t| 0.5 * (t + 1.0)).collect(),
        weights: rule.weights.iter().map(|w| 0.5 * w).collect(),
    }
}

/// `m`-point generalized Gauss–Laguerre rule for `∫₀^∞ x^α e^{−x} g(x) dx`.
pub fn gauss_laguerre(m: usize, alpha: f64) -> Rule {
    assert!(m >= 1 && alpha > -1.0, "invalid Laguerre rule");
    let diag: Vec<f64> = (0..m).map(|k| 2.0 * k as f64 + alpha + 1.0).collect();
    let off: Vec<f64> = (1..m)
        .map(|k| {
            let k = k as f64;
            (k * (k + alpha)).sqrt()
        })
        .collect();
    golub_welsch(&diag, &off, ln_gamma(alpha + 1.0).exp())
}
