//! Likelihood-ratio statistics for stepwise selection under sliced inverse
//! models.
//!
//! Two statistics are computed against a selected set C and a candidate j:
//! the homoscedastic statistic, a sum over the leading profile-R^2
//! eigenvalue gaps that is sensitive to slice-mean shifts, and the augmented
//! statistic, a pooled-versus-per-slice log residual variance contrast that
//! also reacts to slice-variance changes. Scaled by n, their null laws are
//! chi-squared with q and (H-1)(d+2) degrees of freedom respectively.

use ndarray::{Array1, Array2};
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numkit::{
    chisq_sf, chol_solve, cov_matrix, factor_guarded, profile_eigenvalues, SymMatrix, EIG_CLAMP,
};
use crate::slicing::SlicingScheme;

/// A computed test statistic with its null reference.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct StatValue {
    /// The raw statistic (clamped at zero).
    pub raw: f64,
    /// n times the raw statistic, the chi-squared scale.
    pub scaled: f64,
    /// Null degrees of freedom.
    pub dof: usize,
    /// Upper-tail probability of `scaled` under the null chi-squared law.
    pub p_value: f64,
    /// Set when an eigenvalue clamp engaged, the raw value was clamped up to
    /// zero, or the direction count was truncated; signals near-degenerate
    /// slicing.
    pub clamped: bool,
}

/// Null degrees of freedom of the homoscedastic statistic.
pub fn null_dof_hom(q: usize) -> usize {
    q
}

/// Null degrees of freedom of the augmented statistic: (H-1)(d+2).
pub fn null_dof_aug(h: usize, d: usize) -> usize {
    h.saturating_sub(1) * (d + 2)
}

/// Evaluation context: a dataset, its slicing, the selected set C and the
/// direction count q for the homoscedastic model. Immutable and cheap to
/// share across concurrent candidate scans.
pub struct StatContext<'a> {
    data: &'a Dataset,
    scheme: &'a SlicingScheme,
    selected: Vec<usize>,
    q: usize,
}

impl<'a> StatContext<'a> {
    pub fn new(
        data: &'a Dataset,
        scheme: &'a SlicingScheme,
        selected: &[usize],
        q: usize,
    ) -> Result<Self> {
        if scheme.n() != data.n() {
            return Err(Error::InvalidArgument("scheme size mismatch".into()));
        }
        let mut seen = vec![false; data.p()];
        for &j in selected {
            if j >= data.p() {
                return Err(Error::InvalidArgument(format!("index {} out of range", j)));
            }
            if seen[j] {
                return Err(Error::InvalidArgument(format!("duplicate index {}", j)));
            }
            seen[j] = true;
        }
        Ok(StatContext { data, scheme, selected: selected.to_vec(), q })
    }

    pub fn selected(&self) -> &[usize] {
        &self.selected
    }

    pub fn q(&self) -> usize {
        self.q
    }

    /// Homoscedastic statistic for candidate j given C.
    pub fn d_hom(&self, j: usize) -> Result<StatValue> {
        let (lam0, lam1, q_eff, truncated) = self.profile_pair(j)?;
        let n = self.data.n() as f64;
        let mut raw = 0.0;
        let mut clamped = truncated;
        for k in 0..q_eff {
            if lam1[k] >= 1.0 - 2.0 * EIG_CLAMP {
                clamped = true;
            }
            raw += (1.0 + (lam1[k] - lam0[k]) / (1.0 - lam1[k])).ln();
        }
        if raw < 0.0 {
            raw = 0.0;
            clamped = true;
        }
        let scaled = n * raw;
        let dof = null_dof_hom(q_eff);
        Ok(StatValue { raw, scaled, dof, p_value: chisq_sf(scaled, dof), clamped })
    }

    /// Correlation-pursuit statistic for candidate j given C; asymptotically
    /// equal to n times the homoscedastic statistic.
    pub fn cop_statistic(&self, j: usize) -> Result<f64> {
        let (lam0, lam1, q_eff, _) = self.profile_pair(j)?;
        let n = self.data.n() as f64;
        let mut sum = 0.0;
        for k in 0..q_eff {
            sum += (lam1[k] - lam0[k]) / (1.0 - lam1[k]);
        }
        Ok((n * sum).max(0.0))
    }

    /// Augmented statistic for candidate j given C.
    pub fn d_star(&self, j: usize) -> Result<StatValue> {
        self.check_candidate(j)?;
        let scanner = DStarScanner::new(self.data, self.scheme, &self.selected)?;
        scanner.stat(j)
    }

    fn check_candidate(&self, j: usize) -> Result<()> {
        if j >= self.data.p() {
            return Err(Error::InvalidArgument(format!("index {} out of range", j)));
        }
        if self.selected.contains(&j) {
            return Err(Error::InvalidArgument(format!("candidate {} already selected", j)));
        }
        Ok(())
    }

    /// Leading profile-R^2 values on C and on C + {j}.
    fn profile_pair(&self, j: usize) -> Result<(Vec<f64>, Vec<f64>, usize, bool)> {
        self.check_candidate(j)?;
        if self.q < 1 {
            return Err(Error::InvalidArgument(
                "homoscedastic statistic needs q >= 1".into(),
            ));
        }
        let h = self.scheme.h();
        let d = self.selected.len();
        if self.scheme.min_count() < d + 2 {
            return Err(Error::SliceTooSmall { n: self.scheme.min_count(), d });
        }
        // Rank of the between-slice covariance is at most H-1.
        let q_eff = self.q.min(h.saturating_sub(1)).max(1);
        let truncated = q_eff < self.q;
        let lam0 = if d == 0 {
            vec![0.0; q_eff]
        } else {
            let (b, om) = between_within(self.data, self.scheme, &self.selected)?;
            profile_eigenvalues(&b, &om, q_eff)?.values
        };
        let mut with_j = self.selected.clone();
        with_j.push(j);
        let (b1, om1) = between_within(self.data, self.scheme, &with_j)?;
        let lam1 = profile_eigenvalues(&b1, &om1, q_eff)?.values;
        Ok((lam0, lam1, q_eff, truncated))
    }
}

/// Between-slice covariance of slice means (weighted by s_h) and
/// Omega = B + W on the given columns, with MLE denominators throughout.
fn between_within(
    data: &Dataset,
    scheme: &SlicingScheme,
    cols: &[usize],
) -> Result<(SymMatrix, SymMatrix)> {
    let d = cols.len();
    let weights = scheme.weights();
    let mut means = Array2::<f64>::zeros((scheme.h(), d));
    let mut within = Array2::<f64>::zeros((d, d));
    for (s, rows) in scheme.slice_rows().iter().enumerate() {
        let mut block = Array2::<f64>::zeros((rows.len(), d));
        for (r, &i) in rows.iter().enumerate() {
            for (c, &col) in cols.iter().enumerate() {
                block[[r, c]] = data.predictors()[[i, col]];
            }
        }
        for c in 0..d {
            means[[s, c]] = block.column(c).sum() / rows.len() as f64;
        }
        let cov = cov_matrix(block.view(), None)?;
        within.scaled_add(weights[s], &cov.view());
    }
    let b = cov_matrix(means.view(), Some(weights))?;
    let omega = SymMatrix::new(&b.view().to_owned() + &within)?;
    Ok((b, omega))
}

/// Residual-variance engine for the augmented statistic: factors the
/// selected-column regressions once, then prices any candidate in O(n d).
pub struct DStarScanner<'a> {
    data: &'a Dataset,
    pooled: GroupReg,
    slices: Vec<GroupReg>,
    weights: Vec<f64>,
    h: usize,
    d: usize,
}

impl<'a> DStarScanner<'a> {
    pub fn new(data: &'a Dataset, scheme: &SlicingScheme, selected: &[usize]) -> Result<Self> {
        if scheme.n() != data.n() {
            return Err(Error::InvalidArgument("scheme size mismatch".into()));
        }
        let d = selected.len();
        let all_rows: Vec<usize> = (0..data.n()).collect();
        let pooled = GroupReg::new(data, &all_rows, selected)?;
        let mut slices = Vec::with_capacity(scheme.h());
        for rows in scheme.slice_rows() {
            slices.push(GroupReg::new(data, &rows, selected)?);
        }
        Ok(DStarScanner { data, pooled, slices, weights: scheme.weights().to_vec(), h: scheme.h(), d })
    }

    /// Augmented statistic for candidate j against the cached selected set.
    pub fn stat(&self, j: usize) -> Result<StatValue> {
        let n = self.data.n();
        let (pooled_var, _) = self.pooled.residual_variance(self.data, j);
        let mut slice_term = 0.0;
        for (s, group) in self.slices.iter().enumerate() {
            let (v, marginal) = group.residual_variance(self.data, j);
            // A residual variance this far below the candidate's own scale
            // only arises from an (up to rounding) exact linear dependence.
            if v <= 1e-300 || v <= 1e-20 * marginal {
                return Err(Error::DegenerateSliceRegression { slice: s });
            }
            slice_term += self.weights[s] * v.ln();
        }
        let mut clamped = false;
        let mut raw = if self.h == 1 {
            0.0
        } else {
            pooled_var.max(1e-300).ln() - slice_term
        };
        if raw < 0.0 {
            raw = 0.0;
            clamped = true;
        }
        let scaled = n as f64 * raw;
        let dof = null_dof_aug(self.h, self.d);
        let p_value = if dof == 0 { 1.0 } else { chisq_sf(scaled, dof) };
        Ok(StatValue { raw, scaled, dof, p_value, clamped })
    }
}

/// Centered OLS of any candidate column on a fixed covariate block over a
/// fixed row set.
struct GroupReg {
    rows: Vec<usize>,
    zc: Array2<f64>,
    chol: Option<Array2<f64>>,
}

impl GroupReg {
    fn new(data: &Dataset, rows: &[usize], selected: &[usize]) -> Result<Self> {
        let n = rows.len();
        let d = selected.len();
        if n == 0 {
            return Err(Error::EmptySample);
        }
        if n <= d + 1 {
            return Err(Error::SliceTooSmall { n, d });
        }
        let mut zc = Array2::<f64>::zeros((n, d));
        for (c, &col) in selected.iter().enumerate() {
            let mut mean = 0.0;
            for &i in rows {
                mean += data.predictors()[[i, col]];
            }
            mean /= n as f64;
            for (r, &i) in rows.iter().enumerate() {
                zc[[r, c]] = data.predictors()[[i, col]] - mean;
            }
        }
        let chol = if d == 0 {
            None
        } else {
            let gram = zc.t().dot(&zc);
            Some(factor_guarded(&gram).ok_or(Error::DegenerateCovariance)?)
        };
        Ok(GroupReg { rows: rows.to_vec(), zc, chol })
    }

    /// MLE residual variance of column j regressed (with intercept) on the
    /// cached covariate block, over this group's rows, paired with the
    /// column's marginal MLE variance in the group.
    fn residual_variance(&self, data: &Dataset, j: usize) -> (f64, f64) {
        let n = self.rows.len();
        let mut mean = 0.0;
        for &i in &self.rows {
            mean += data.predictors()[[i, j]];
        }
        mean /= n as f64;
        let mut tc = Array1::<f64>::zeros(n);
        for (r, &i) in self.rows.iter().enumerate() {
            tc[r] = data.predictors()[[i, j]] - mean;
        }
        let marginal = tc.dot(&tc) / n as f64;
        match &self.chol {
            None => (marginal, marginal),
            Some(l) => {
                let rhs = self.zc.t().dot(&tc);
                let coef = chol_solve(l, &rhs);
                let resid = &tc - &self.zc.dot(&coef);
                (resid.dot(&resid) / n as f64, marginal)
            }
        }
    }
}
