//! Deterministic numerical primitives: covariance, regression residual
//! variances, symmetric-definite generalized eigenvalues and chi-squared
//! distribution functions. Everything here is a pure function of its inputs.
//!
//! Conventions: variances use maximum-likelihood denominators (divide by n),
//! regressions always include an intercept, and matrices about to be inverted
//! receive a relative ridge of `RIDGE_EPS` times the mean diagonal.

use ndarray::{Array1, Array2, ArrayView1, ArrayView2};

use crate::error::{Error, Result};

/// Relative ridge added to a matrix diagonal before factorization.
pub const RIDGE_EPS: f64 = 1e-10;

/// Eigenvalues of the whitened problem are clamped into [0, 1 - EIG_CLAMP].
pub const EIG_CLAMP: f64 = 1e-12;

/// Dense symmetric real matrix.
#[derive(Debug, Clone)]
pub struct SymMatrix {
    dim: usize,
    data: Array2<f64>,
}

impl SymMatrix {
    /// Wraps a square matrix, checking symmetry (1e-12 relative) and finiteness.
    pub fn new(data: Array2<f64>) -> Result<Self> {
        let dim = data.nrows();
        if data.ncols() != dim {
            return Err(Error::InvalidArgument("matrix not square".into()));
        }
        let scale = data.iter().fold(0.0f64, |a, v| a.max(v.abs())).max(1.0);
        for i in 0..dim {
            for j in (i + 1)..dim {
                if (data[[i, j]] - data[[j, i]]).abs() > 1e-12 * scale {
                    return Err(Error::InvalidArgument("matrix not symmetric".into()));
                }
            }
        }
        if data.iter().any(|v| !v.is_finite()) {
            return Err(Error::InvalidArgument("non-finite matrix entry".into()));
        }
        Ok(SymMatrix { dim, data })
    }

    pub fn zeros(dim: usize) -> Self {
        SymMatrix { dim, data: Array2::zeros((dim, dim)) }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn view(&self) -> ArrayView2<'_, f64> {
        self.data.view()
    }

    pub fn add(&self, other: &SymMatrix) -> Result<SymMatrix> {
        if self.dim != other.dim {
            return Err(Error::InvalidArgument("dimension mismatch".into()));
        }
        Ok(SymMatrix { dim: self.dim, data: &self.data + &other.data })
    }
}

/// Eigenvalues (descending) of a whitened generalized problem, with the
/// optional matching basis.
#[derive(Debug, Clone)]
pub struct EigenResult {
    pub values: Vec<f64>,
    pub vectors: Option<Array2<f64>>,
}

/// Maximum-likelihood covariance of the rows, centered at the (weighted) mean.
///
/// Weights, when given, must be nonnegative and sum to one; without weights
/// every row carries 1/n. Divides by n, not n - 1.
pub fn cov_matrix(rows: ArrayView2<'_, f64>, weights: Option<&[f64]>) -> Result<SymMatrix> {
    let n = rows.nrows();
    let d = rows.ncols();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    let w: Vec<f64> = match weights {
        Some(w) => {
            if w.len() != n {
                return Err(Error::InvalidArgument("weight length mismatch".into()));
            }
            if w.iter().any(|&v| v < 0.0) {
                return Err(Error::InvalidArgument("negative weight".into()));
            }
            let s: f64 = w.iter().sum();
            if (s - 1.0).abs() > 1e-8 {
                return Err(Error::InvalidArgument("weights must sum to 1".into()));
            }
            w.to_vec()
        }
        None => vec![1.0 / n as f64; n],
    };
    let mut mean = Array1::<f64>::zeros(d);
    for (i, row) in rows.outer_iter().enumerate() {
        mean.scaled_add(w[i], &row);
    }
    let mut cov = Array2::<f64>::zeros((d, d));
    for (i, row) in rows.outer_iter().enumerate() {
        let c = &row - &mean;
        for a in 0..d {
            let wa = w[i] * c[a];
            for b in a..d {
                cov[[a, b]] += wa * c[b];
            }
        }
    }
    for a in 0..d {
        for b in 0..a {
            cov[[a, b]] = cov[[b, a]];
        }
    }
    SymMatrix::new(cov)
}

/// MLE residual variance (RSS/n) of OLS of `target` on `covariates` plus an
/// intercept. With zero covariates this is the plain MLE variance.
pub fn residual_variance(target: ArrayView1<'_, f64>, covariates: ArrayView2<'_, f64>) -> Result<f64> {
    let n = target.len();
    let d = covariates.ncols();
    if n == 0 {
        return Err(Error::EmptySample);
    }
    if covariates.nrows() != n {
        return Err(Error::InvalidArgument("row count mismatch".into()));
    }
    if n <= d + 1 {
        return Err(Error::SliceTooSmall { n, d });
    }
    let ybar = target.sum() / n as f64;
    let tc: Array1<f64> = target.mapv(|v| v - ybar);
    if d == 0 {
        return Ok(tc.dot(&tc) / n as f64);
    }
    let mut zc = covariates.to_owned();
    for mut col in zc.columns_mut() {
        let mean = col.sum() / n as f64;
        col.mapv_inplace(|v| v - mean);
    }
    let gram = zc.t().dot(&zc);
    let chol = factor_guarded(&gram).ok_or(Error::DegenerateCovariance)?;
    let rhs = zc.t().dot(&tc);
    let coef = chol_solve(&chol, &rhs);
    let resid = &tc - &zc.dot(&coef);
    Ok(resid.dot(&resid) / n as f64)
}

/// Top-q eigenvalues of Omega^{-1} B, computed by Cholesky-whitening Omega
/// and solving the symmetric problem. Values are clamped into
/// [0, 1 - 1e-12] and padded with zeros past the rank.
pub fn profile_eigenvalues(b: &SymMatrix, omega: &SymMatrix, q: usize) -> Result<EigenResult> {
    let dim = b.dim();
    if omega.dim() != dim {
        return Err(Error::InvalidArgument("dimension mismatch".into()));
    }
    if dim == 0 {
        return Ok(EigenResult { values: vec![0.0; q], vectors: None });
    }
    let l = factor_guarded(&omega.data).ok_or(Error::DegenerateCovariance)?;
    // A = L^-1 B L^-T, solved column-wise.
    let y = forward_solve_matrix(&l, &b.data); // L^-1 B
    let a = forward_solve_matrix(&l, &y.t().to_owned()); // L^-1 (L^-1 B)^T
    let mut sym = Array2::<f64>::zeros((dim, dim));
    for i in 0..dim {
        for j in 0..dim {
            sym[[i, j]] = 0.5 * (a[[i, j]] + a[[j, i]]);
        }
    }
    let mut values = jacobi_eigenvalues(&sym);
    values.sort_by(|x, y| y.partial_cmp(x).unwrap());
    let mut out: Vec<f64> = values
        .into_iter()
        .take(q)
        .map(|v| v.clamp(0.0, 1.0 - EIG_CLAMP))
        .collect();
    while out.len() < q {
        out.push(0.0);
    }
    Ok(EigenResult { values: out, vectors: None })
}

pub(crate) fn ridge_in_place(m: &mut Array2<f64>, eps_rel: f64) {
    let d = m.nrows();
    if d == 0 {
        return;
    }
    let mean_diag = (0..d).map(|i| m[[i, i]]).sum::<f64>() / d as f64;
    let eps = eps_rel * if mean_diag > 0.0 { mean_diag } else { 1.0 };
    for i in 0..d {
        m[[i, i]] += eps;
    }
}

/// Factorization with the ridge guard: a plain Cholesky is attempted first
/// so that well-conditioned inputs stay in exact arithmetic; only when the
/// pivots collapse is the relative ridge added and the factorization
/// retried. Returns None when the matrix stays degenerate after repair.
pub(crate) fn factor_guarded(m: &Array2<f64>) -> Option<Array2<f64>> {
    if let Some(l) = cholesky(m) {
        return Some(l);
    }
    let mut ridged = m.clone();
    ridge_in_place(&mut ridged, RIDGE_EPS);
    cholesky(&ridged)
}

/// Lower-triangular Cholesky factor; None when a pivot falls below a
/// relative floor (the matrix is not positive definite to working
/// precision).
pub(crate) fn cholesky(m: &Array2<f64>) -> Option<Array2<f64>> {
    let n = m.nrows();
    let scale = (0..n).map(|i| m[[i, i]]).fold(0.0f64, f64::max);
    let floor = 1e-13 * scale.max(1e-300);
    let mut l = Array2::<f64>::zeros((n, n));
    for i in 0..n {
        for j in 0..=i {
            let mut s = m[[i, j]];
            for k in 0..j {
                s -= l[[i, k]] * l[[j, k]];
            }
            if i == j {
                if s <= floor || !s.is_finite() {
                    return None;
                }
                l[[i, j]] = s.sqrt();
            } else {
                l[[i, j]] = s / l[[j, j]];
            }
        }
    }
    Some(l)
}

/// Solves L L^T x = b for one right-hand side.
pub(crate) fn chol_solve(l: &Array2<f64>, b: &Array1<f64>) -> Array1<f64> {
    let n = l.nrows();
    let mut x = b.clone();
    for i in 0..n {
        for k in 0..i {
            let v = x[k];
            x[i] -= l[[i, k]] * v;
        }
        x[i] /= l[[i, i]];
    }
    for i in (0..n).rev() {
        for k in (i + 1)..n {
            let v = x[k];
            x[i] -= l[[k, i]] * v;
        }
        x[i] /= l[[i, i]];
    }
    x
}

/// Log-determinant of L L^T from the factor L.
pub(crate) fn chol_log_det(l: &Array2<f64>) -> f64 {
    (0..l.nrows()).map(|i| l[[i, i]].ln()).sum::<f64>() * 2.0
}

fn forward_solve_matrix(l: &Array2<f64>, b: &Array2<f64>) -> Array2<f64> {
    let n = l.nrows();
    let m = b.ncols();
    let mut x = b.clone();
    for c in 0..m {
        for i in 0..n {
            let mut s = x[[i, c]];
            for k in 0..i {
                s -= l[[i, k]] * x[[k, c]];
            }
            x[[i, c]] = s / l[[i, i]];
        }
    }
    x
}

/// Eigenvalues of a symmetric matrix by cyclic Jacobi rotations.
fn jacobi_eigenvalues(m: &Array2<f64>) -> Vec<f64> {
    let n = m.nrows();
    if n == 1 {
        return vec![m[[0, 0]]];
    }
    let mut a = m.clone();
    for _sweep in 0..100 {
        let mut off = 0.0;
        for i in 0..n {
            for j in (i + 1)..n {
                off += a[[i, j]] * a[[i, j]];
            }
        }
        if off.sqrt() < 1e-14 * (1.0 + a.iter().fold(0.0f64, |x, v| x.max(v.abs()))) {
            break;
        }
        for p in 0..n {
            for q in (p + 1)..n {
                let apq = a[[p, q]];
                if apq.abs() < 1e-300 {
                    continue;
                }
                let theta = (a[[q, q]] - a[[p, p]]) / (2.0 * apq);
                let t = if theta >= 0.0 {
                    1.0 / (theta + (1.0 + theta * theta).sqrt())
                } else {
                    1.0 / (theta - (1.0 + theta * theta).sqrt())
                };
                let c = 1.0 / (1.0 + t * t).sqrt();
                let s = t * c;
                for k in 0..n {
                    let akp = a[[k, p]];
                    let akq = a[[k, q]];
                    a[[k, p]] = c * akp - s * akq;
                    a[[k, q]] = s * akp + c * akq;
                }
                for k in 0..n {
                    let apk = a[[p, k]];
                    let aqk = a[[q, k]];
                    a[[p, k]] = c * apk - s * aqk;
                    a[[q, k]] = s * apk + c * aqk;
                }
            }
        }
    }
    (0..n).map(|i| a[[i, i]]).collect()
}

// --- chi-squared and normal distribution functions ---

/// ln Gamma(x) by the Lanczos series (x > 0).
pub fn ln_gamma(x: f64) -> f64 {
    const COEFFS: [f64; 6] = [
        76.180_091_729_471_46,
        -86.505_320_329_416_77,
        24.014_098_240_830_91,
        -1.231_739_572_450_155,
        0.120_865_097_386_617_9e-2,
        -0.539_523_938_495_3e-5,
    ];
    let tmp = x + 5.5;
    let tmp = tmp - (x + 0.5) * tmp.ln();
    let mut ser = 1.000_000_000_190_015;
    for (j, &c) in COEFFS.iter().enumerate() {
        ser += c / (x + 1.0 + j as f64);
    }
    -tmp + (2.506_628_274_631_000_5 * ser / x).ln()
}

/// Regularized lower incomplete gamma P(a, x).
pub fn reg_gamma_p(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x < a + 1.0 {
        gamma_series(a, x)
    } else {
        1.0 - gamma_cont_fraction(a, x)
    }
}

/// Regularized upper incomplete gamma Q(a, x) = 1 - P(a, x).
pub fn reg_gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_series(a, x)
    } else {
        gamma_cont_fraction(a, x)
    }
}

fn gamma_series(a: f64, x: f64) -> f64 {
    let mut ap = a;
    let mut sum = 1.0 / a;
    let mut del = sum;
    for _ in 0..500 {
        ap += 1.0;
        del *= x / ap;
        sum += del;
        if del.abs() < sum.abs() * 1e-16 {
            break;
        }
    }
    sum * (-x + a * x.ln() - ln_gamma(a)).exp()
}

fn gamma_cont_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..500 {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-16 {
            break;
        }
    }
    h * (-x + a * x.ln() - ln_gamma(a)).exp()
}

/// CDF of the chi-squared distribution with `dof` degrees of freedom.
pub fn chisq_cdf(x: f64, dof: usize) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    reg_gamma_p(dof as f64 / 2.0, x / 2.0)
}

/// Upper-tail probability of the chi-squared distribution.
pub fn chisq_sf(x: f64, dof: usize) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    reg_gamma_q(dof as f64 / 2.0, x / 2.0)
}

/// Inverse CDF of the chi-squared distribution, by monotone bracketing and
/// bisection on the regularized incomplete gamma. Relative accuracy 1e-10.
pub fn chisq_quantile(alpha: f64, dof: usize) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0,1), got {}",
            alpha
        )));
    }
    if dof == 0 {
        return Err(Error::InvalidArgument("dof must be positive".into()));
    }
    let k = dof as f64;
    let mut lo = 0.0f64;
    let mut hi = k + 10.0 * (2.0 * k).sqrt() + 10.0;
    while chisq_cdf(hi, dof) < alpha {
        lo = hi;
        hi *= 2.0;
        if hi > 1e12 {
            break;
        }
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if chisq_cdf(mid, dof) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if (hi - lo) <= 1e-12 * hi.max(1.0) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Standard normal CDF via the incomplete gamma identity.
pub fn normal_cdf(x: f64) -> f64 {
    let z = x / std::f64::consts::SQRT_2;
    if z >= 0.0 {
        1.0 - 0.5 * reg_gamma_q(0.5, z * z)
    } else {
        0.5 * reg_gamma_q(0.5, z * z)
    }
}

/// Standard normal quantile by bisection on `normal_cdf`.
pub fn normal_quantile(alpha: f64) -> Result<f64> {
    if !(alpha > 0.0 && alpha < 1.0) {
        return Err(Error::InvalidArgument(format!(
            "alpha must lie in (0,1), got {}",
            alpha
        )));
    }
    let mut lo = -40.0f64;
    let mut hi = 40.0f64;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if normal_cdf(mid) < alpha {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}
