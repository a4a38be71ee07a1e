//! Clamped uniform B-spline bases on `[0, 1]`, their normalized versions,
//! tensor products, and least-squares approximation.
//!
//! A basis of order `q` on `K` equal subintervals has dimension
//! `J = q + K − 1`. Knots are `0` and `1` repeated `q` times around the
//! interior breakpoints `1/K, …, (K−1)/K`. Intervals are closed on the left;
//! `x = 1` belongs to the last interval.

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};
use crate::quadrature;

/// Number of points in the uniform grid used by [`fit_coefficients`].
pub const FIT_GRID_POINTS: usize = 1000;

/// Default upper bound on the dimension of a [`TensorBasis`].
pub const DEFAULT_TENSOR_CAP: usize = 1 << 22;

/// A univariate B-spline basis.
#[derive(Debug, Clone, PartialEq)]
pub struct Basis {
    order: usize,
    intervals: usize,
    knots: Vec<f64>,
    integrals: Vec<f64>,
}

/// The non-zero window of a basis evaluation: `values[r]` is the value of
/// basis function `first + r`. Entries may still be exactly zero at knots.
#[derive(Debug, Clone, PartialEq)]
pub struct LocalBasis {
    pub first: usize,
    pub values: Vec<f64>,
}

impl LocalBasis {
    /// Iterates `(index, value)` over strictly positive entries.
    pub fn nonzero(&self) -> impl Iterator<Item = (usize, f64)> + '_ {
        self.values
            .iter()
            .enumerate()
            .filter(|(_, v)| **v > 0.0)
            .map(move |(r, v)| (self.first + r, *v))
    }

    pub fn to_dense(&self, dimension: usize) -> Vec<f64> {
        let mut out = vec![0.0; dimension];
        out[self.first..self.first + self.values.len()].copy_from_slice(&self.values);
        out
    }
}

fn check_unit(x: f64) -> Result<()> {
    if (0.0..=1.0).contains(&x) {
        Ok(())
    } else {
        Err(Error::Domain { value: x })
    }
}

impl Basis {
    /// Builds the order-`order` basis on `intervals` equal subintervals.
    ///
    /// Integrals come from the span identity `(t_{j+q} − t_j)/q` and are
    /// cross-checked against Gauss–Legendre quadrature on every knot interval.
    pub fn new(order: usize, intervals: usize) -> Result<Self> {
        if order == 0 {
            return Err(Error::invalid("spline order must be at least 1"));
        }
        if intervals == 0 {
            return Err(Error::invalid("interval count must be at least 1"));
        }
        let q = order;
        let k = intervals;
        let mut knots = Vec::with_capacity(2 * q + k - 1);
        knots.extend(std::iter::repeat_n(0.0, q - 1));
        knots.extend((0..=k).map(|i| i as f64 / k as f64));
        knots.extend(std::iter::repeat_n(1.0, q - 1));
        let dimension = q + k - 1;
        let integrals = (0..dimension)
            .map(|j| (knots[j + q] - knots[j]) / q as f64)
            .collect();
        let basis = Basis {
            order,
            intervals,
            knots,
            integrals,
        };
        basis.verify_integrals()?;
        Ok(basis)
    }

    /// Builds the order-`order` basis of dimension `dimension`.
    pub fn with_dimension(order: usize, dimension: usize) -> Result<Self> {
        if order == 0 || dimension < order {
            return Err(Error::invalid(format!(
                "dimension {dimension} is below the spline order {order}"
            )));
        }
        Basis::new(order, dimension + 1 - order)
    }

    fn verify_integrals(&self) -> Result<()> {
        let rule = quadrature::gauss_legendre(self.order.div_ceil(2) + 1);
        let mut acc = vec![0.0; self.dimension()];
        let h = 1.0 / self.intervals as f64;
        for m in 0..self.intervals {
            let a = m as f64 * h;
            for (node, weight) in rule.nodes.iter().zip(&rule.weights) {
                let local = self.eval_local(a + node * h)?;
                for (r, v) in local.values.iter().enumerate() {
                    acc[local.first + r] += weight * h * v;
                }
            }
        }
        for (j, (quad, span)) in acc.iter().zip(&self.integrals).enumerate() {
            if (quad - span).abs() > 1e-10 {
                return Err(Error::Numerical(format!(
                    "integral of B_{j}: span identity {span} vs quadrature {quad}"
                )));
            }
        }
        Ok(())
    }

    pub fn order(&self) -> usize {
        self.order
    }

    pub fn intervals(&self) -> usize {
        self.intervals
    }

    pub fn dimension(&self) -> usize {
        self.order + self.intervals - 1
    }

    pub fn knots(&self) -> &[f64] {
        &self.knots
    }

    /// `∫₀¹ B_j` for every `j`.
    pub fn integrals(&self) -> &[f64] {
        &self.integrals
    }

    /// Breakpoints `0, 1/K, …, 1`.
    pub fn breakpoints(&self) -> Vec<f64> {
        (0..=self.intervals)
            .map(|i| i as f64 / self.intervals as f64)
            .collect()
    }

    fn breakpoint(&self, i: usize) -> f64 {
        self.knots[self.order - 1 + i]
    }

    /// Index `m` of the interval `[m/K, (m+1)/K)` containing `x`.
    pub fn interval_of(&self, x: f64) -> Result<usize> {
        check_unit(x)?;
        let k = self.intervals;
        let mut m = ((x * k as f64).floor() as usize).min(k - 1);
        while m + 1 < k && x >= self.breakpoint(m + 1) {
            m += 1;
        }
        while m > 0 && x < self.breakpoint(m) {
            m -= 1;
        }
        Ok(m)
    }

    /// Values of the `q` basis functions `m, …, m + q − 1` that can be
    /// non-zero at `x`, by the de Boor triangular recursion.
    pub fn eval_local(&self, x: f64) -> Result<LocalBasis> {
        let m = self.interval_of(x)?;
        let p = self.order - 1;
        let span = p + m;
        let t = &self.knots;
        let mut values = vec![0.0; self.order];
        let mut left = vec![0.0; self.order];
        let mut right = vec![0.0; self.order];
        values[0] = 1.0;
        for d in 1..=p {
            left[d] = x - t[span + 1 - d];
            right[d] = t[span + d] - x;
            let mut saved = 0.0;
            for r in 0..d {
                let temp = values[r] / (right[r + 1] + left[d - r]);
                values[r] = saved + right[r + 1] * temp;
                saved = left[d - r] * temp;
            }
            values[d] = saved;
        }
        Ok(LocalBasis { first: m, values })
    }

    /// Full length-`J` vector `(B_1(x), …, B_J(x))`.
    pub fn eval(&self, x: f64) -> Result<Vec<f64>> {
        Ok(self.eval_local(x)?.to_dense(self.dimension()))
    }

    /// Local window of the normalized basis `B*_j = B_j / ∫B_j`.
    pub fn eval_normalized_local(&self, x: f64) -> Result<LocalBasis> {
        let mut local = self.eval_local(x)?;
        for (r, v) in local.values.iter_mut().enumerate() {
            *v /= self.integrals[local.first + r];
        }
        Ok(local)
    }

    /// Full length-`J` vector of normalized basis values.
    pub fn eval_normalized(&self, x: f64) -> Result<Vec<f64>> {
        Ok(self.eval_normalized_local(x)?.to_dense(self.dimension()))
    }

    /// Indices of the basis functions that are strictly positive at `x`.
    pub fn active_set(&self, x: f64) -> Result<Vec<usize>> {
        Ok(self.eval_local(x)?.nonzero().map(|(j, _)| j).collect())
    }

    /// `Σ_j coefficients[j] B_j(x)`.
    pub fn combine(&self, coefficients: &[f64], x: f64) -> Result<f64> {
        self.check_len(coefficients)?;
        let local = self.eval_local(x)?;
        Ok(local
            .values
            .iter()
            .enumerate()
            .map(|(r, v)| v * coefficients[local.first + r])
            .sum())
    }

    /// `Σ_j coefficients[j] B*_j(x)`.
    pub fn combine_normalized(&self, coefficients: &[f64], x: f64) -> Result<f64> {
        self.check_len(coefficients)?;
        let local = self.eval_normalized_local(x)?;
        Ok(local
            .values
            .iter()
            .enumerate()
            .map(|(r, v)| v * coefficients[local.first + r])
            .sum())
    }

    fn check_len(&self, coefficients: &[f64]) -> Result<()> {
        if coefficients.len() != self.dimension() {
            return Err(Error::invalid(format!(
                "expected {} coefficients, got {}",
                self.dimension(),
                coefficients.len()
            )));
        }
        Ok(())
    }
}

/// Uniform grid of `points` values spanning `[0, 1]` inclusive.
pub fn unit_grid(points: usize) -> Vec<f64> {
    match points {
        0 => Vec::new(),
        1 => vec![0.5],
        _ => (0..points)
            .map(|i| i as f64 / (points - 1) as f64)
            .collect(),
    }
}

/// Discrepancy used to report approximation error.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Norm {
    /// Root mean square residual over the fitting grid.
    L2,
    /// Largest absolute residual over the fitting grid.
    Linf,
}

#[derive(Debug, Clone)]
pub struct Fit {
    pub coefficients: Vec<f64>,
    pub error: f64,
    pub norm: Norm,
}

fn least_squares(design: &DMatrix<f64>, target: &DVector<f64>) -> Result<DVector<f64>> {
    let gram = design.transpose() * design;
    let rhs = design.transpose() * target;
    let chol = gram
        .cholesky()
        .ok_or_else(|| Error::Numerical("singular normal equations".into()))?;
    Ok(chol.solve(&rhs))
}

fn design_on(basis: &Basis, grid: &[f64]) -> Result<DMatrix<f64>> {
    let mut w = DMatrix::<f64>::zeros(grid.len(), basis.dimension());
    for (i, &x) in grid.iter().enumerate() {
        let local = basis.eval_local(x)?;
        for (r, v) in local.values.iter().enumerate() {
            w[(i, local.first + r)] = *v;
        }
    }
    Ok(w)
}

fn residual_norm(residuals: impl Iterator<Item = f64>, norm: Norm) -> f64 {
    match norm {
        Norm::Linf => residuals.fold(0.0, |m, r| m.max(r.abs())),
        Norm::L2 => {
            let (sum, count) = residuals.fold((0.0, 0usize), |(s, c), r| (s + r * r, c + 1));
            (sum / count as f64).sqrt()
        }
    }
}

/// Least-squares spline approximation of `f` on a [`FIT_GRID_POINTS`] grid.
///
/// Both norms share the least-squares coefficients; `norm` only selects the
/// reported residual.
pub fn fit_coefficients<F: Fn(f64) -> f64>(f: F, basis: &Basis, norm: Norm) -> Result<Fit> {
    let grid = unit_grid(FIT_GRID_POINTS);
    let design = design_on(basis, &grid)?;
    let target = DVector::from_iterator(grid.len(), grid.iter().map(|&x| f(x)));
    let theta = least_squares(&design, &target)?;
    let fitted = &design * &theta;
    let error = residual_norm((0..grid.len()).map(|i| fitted[i] - target[i]), norm);
    Ok(Fit {
        coefficients: theta.iter().copied().collect(),
        error,
        norm,
    })
}

/// Relative size below which negative fitted coefficients are rounding noise.
const SIMPLEX_ROUNDOFF: f64 = 1e-10;

/// Coefficients on the simplex for the normalized basis.
#[derive(Debug, Clone)]
pub struct SimplexFit {
    /// Weights `θ ∈ Δ_J` of the normalized basis.
    pub theta: Vec<f64>,
    /// Grid sup error of `θᵀB*` against the density.
    pub error: f64,
    /// Grid sup error of the unconstrained least-squares fit.
    pub unconstrained_error: f64,
}

/// Approximates a density by a mixture of normalized B-splines.
///
/// Fits nonnegative coefficients `η₁` for `B`, rescales `η₂_j = η₁_j ∫B_j` and
/// renormalizes onto the simplex. A negative `η₁` entry means the basis is
/// too coarse for this density and is reported as [`Error::Infeasible`];
/// entries at rounding level (a density vanishing at an endpoint) are set to 0.
pub fn simplex_coefficients<F: Fn(f64) -> f64>(f: F, basis: &Basis) -> Result<SimplexFit> {
    let fit = fit_coefficients(&f, basis, Norm::Linf)?;
    let largest = fit.coefficients.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let tolerance = SIMPLEX_ROUNDOFF * largest;
    if let Some((j, v)) = fit
        .coefficients
        .iter()
        .enumerate()
        .find(|(_, v)| **v < -tolerance)
    {
        return Err(Error::Infeasible {
            dimension: basis.dimension(),
            reason: format!("fitted coefficient {j} is {v:.3e} (negative)"),
        });
    }
    let scaled: Vec<f64> = fit
        .coefficients
        .iter()
        .zip(basis.integrals())
        .map(|(c, i)| c.max(0.0) * i)
        .collect();
    let total: f64 = scaled.iter().sum();
    let theta: Vec<f64> = scaled.iter().map(|v| v / total).collect();
    let grid = unit_grid(FIT_GRID_POINTS);
    let mut error = 0.0f64;
    for &x in &grid {
        let approx = basis.combine_normalized(&theta, x)?;
        error = error.max((approx - f(x)).abs());
    }
    Ok(SimplexFit {
        theta,
        error,
        unconstrained_error: fit.error,
    })
}

/// Tensor product of univariate bases on `[0, 1]^s`.
///
/// Flat indices are row-major: the last factor varies fastest.
#[derive(Debug, Clone)]
pub struct TensorBasis {
    factors: Vec<Basis>,
    dimension: usize,
}

impl TensorBasis {
    pub fn new(factors: Vec<Basis>) -> Result<Self> {
        Self::with_cap(factors, DEFAULT_TENSOR_CAP)
    }

    pub fn with_cap(factors: Vec<Basis>, cap: usize) -> Result<Self> {
        if factors.is_empty() || factors.len() > 4 {
            return Err(Error::invalid(format!(
                "tensor bases support 1 to 4 factors, got {}",
                factors.len()
            )));
        }
        let mut dimension: usize = 1;
        for f in &factors {
            dimension = dimension
                .checked_mul(f.dimension())
                .filter(|d| *d <= cap)
                .ok_or_else(|| {
                    Error::invalid(format!("tensor dimension exceeds the cap of {cap}"))
                })?;
        }
        Ok(TensorBasis { factors, dimension })
    }

    pub fn factors(&self) -> &[Basis] {
        &self.factors
    }

    pub fn dimension(&self) -> usize {
        self.dimension
    }

    /// Non-zero window as `(flat index, value)` pairs.
    pub fn eval_sparse(&self, point: &[f64]) -> Result<Vec<(usize, f64)>> {
        if point.len() != self.factors.len() {
            return Err(Error::invalid(format!(
                "point has {} coordinates, basis has {} factors",
                point.len(),
                self.factors.len()
            )));
        }
        let mut out = vec![(0usize, 1.0f64)];
        for (factor, &x) in self.factors.iter().zip(point) {
            let local = factor.eval_local(x)?;
            let jk = factor.dimension();
            out = out
                .iter()
                .flat_map(|&(idx, val)| {
                    local
                        .values
                        .iter()
                        .enumerate()
                        .map(move |(r, v)| (idx * jk + local.first + r, val * v))
                })
                .collect();
        }
        Ok(out)
    }

    pub fn eval(&self, point: &[f64]) -> Result<Vec<f64>> {
        let mut out = vec![0.0; self.dimension];
        for (idx, v) in self.eval_sparse(point)? {
            out[idx] = v;
        }
        Ok(out)
    }
}

#[derive(Debug, Clone)]
pub struct TensorFit {
    pub coefficients: Vec<f64>,
    /// Sup residual over the fitting grid.
    pub error: f64,
}

/// Applies `matrix` (rows × dims[axis]) along `axis` of a row-major array.
fn mode_product(data: &[f64], dims: &[usize], axis: usize, matrix: &DMatrix<f64>) -> Vec<f64> {
    let outer: usize = dims[..axis].iter().product();
    let inner: usize = dims[axis + 1..].iter().product();
    let n_in = dims[axis];
    let n_out = matrix.nrows();
    let mut out = vec![0.0; outer * n_out * inner];
    for o in 0..outer {
        for r in 0..n_out {
            for c in 0..n_in {
                let a = matrix[(r, c)];
                if a == 0.0 {
                    continue;
                }
                let src = &data[(o * n_in + c) * inner..(o * n_in + c + 1) * inner];
                let dst = &mut out[(o * n_out + r) * inner..(o * n_out + r + 1) * inner];
                for (d, s) in dst.iter_mut().zip(src) {
                    *d += a * s;
                }
            }
        }
    }
    out
}

/// Least-squares tensor-spline approximation on a `grid_points^s` tensor grid.
///
/// The tensor least-squares problem separates: the coefficient array is the
/// data array with each axis projected by its univariate least-squares map.
pub fn fit_tensor<F: Fn(&[f64]) -> f64>(
    f: F,
    basis: &TensorBasis,
    grid_points: usize,
) -> Result<TensorFit> {
    let s = basis.factors.len();
    let total = (grid_points as f64).powi(s as i32);
    if grid_points < 2 || total > 1.6e7 {
        return Err(Error::invalid(format!(
            "tensor grid of {grid_points}^{s} points is out of range"
        )));
    }
    let grid = unit_grid(grid_points);
    let designs: Vec<DMatrix<f64>> = basis
        .factors
        .iter()
        .map(|b| design_on(b, &grid))
        .collect::<Result<_>>()?;
    let projectors: Vec<DMatrix<f64>> = designs
        .iter()
        .map(|w| {
            let gram = w.transpose() * w;
            let chol = gram
                .cholesky()
                .ok_or_else(|| Error::Numerical("singular normal equations".into()))?;
            Ok(chol.solve(&w.transpose()))
        })
        .collect::<Result<_>>()?;

    let n = grid_points.pow(s as u32);
    let mut values = Vec::with_capacity(n);
    let mut point = vec![0.0; s];
    for flat in 0..n {
        let mut rem = flat;
        for axis in (0..s).rev() {
            point[axis] = grid[rem % grid_points];
            rem /= grid_points;
        }
        values.push(f(&point));
    }

    let mut dims = vec![grid_points; s];
    let mut coef = values.clone();
    for (axis, p) in projectors.iter().enumerate() {
        coef = mode_product(&coef, &dims, axis, p);
        dims[axis] = p.nrows();
    }
    let mut fitted = coef.clone();
    for (axis, w) in designs.iter().enumerate() {
        fitted = mode_product(&fitted, &dims, axis, w);
        dims[axis] = w.nrows();
    }
    let error = fitted
        .iter()
        .zip(&values)
        .fold(0.0f64, |m, (a, b)| m.max((a - b).abs()));
    Ok(TensorFit {
        coefficients: coef,
        error,
    })
}
