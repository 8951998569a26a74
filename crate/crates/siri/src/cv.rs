//! K-fold cross-validation for hyperparameter selection, with per-slice
//! Gaussian prediction models and the CE/AE performance measures.

use ndarray::{Array1, Array2, ArrayView1};
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numkit::{chol_log_det, chol_solve, cholesky, cov_matrix, ridge_in_place};
use crate::select::{siri_with_scheme, HyperParams, SelectionState, ThresholdSpec};
use crate::slicing::{assign_slice, SlicingScheme};

/// Ridge for prediction covariances; stronger than the solver guard because
/// held-out densities are exponentiated.
const MODEL_RIDGE: f64 = 1e-6;

/// A balanced assignment of n observations to K folds.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct FoldPlan {
    pub k: usize,
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    pub fn fold_rows(&self, fold: usize) -> (Vec<usize>, Vec<usize>) {
        let mut train = Vec::new();
        let mut test = Vec::new();
        for (i, &f) in self.assignment.iter().enumerate() {
            if f == fold {
                test.push(i);
            } else {
                train.push(i);
            }
        }
        (train, test)
    }
}

/// Random balanced K-fold split, reproducible by seed. Fold sizes differ by
/// at most one.
pub fn kfold_split(n: usize, k: usize, seed: u64) -> Result<FoldPlan> {
    if k < 2 || k > n {
        return Err(Error::InvalidArgument(format!(
            "fold count {} must lie in [2, {}]",
            k, n
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    order.shuffle(&mut rng);
    let mut assignment = vec![0usize; n];
    for (pos, &i) in order.iter().enumerate() {
        assignment[i] = pos % k;
    }
    Ok(FoldPlan { k, assignment })
}

/// Per-slice Gaussian model on the selected columns: means, ridge-guarded
/// covariances, slice priors and per-slice training response means.
pub struct SliceModel {
    selected: Vec<usize>,
    priors: Vec<f64>,
    means: Vec<Array1<f64>>,
    chols: Vec<Array2<f64>>,
    log_dets: Vec<f64>,
    ybar: Vec<f64>,
    scheme: SlicingScheme,
}

impl SliceModel {
    pub fn priors(&self) -> &[f64] {
        &self.priors
    }

    pub fn ybar(&self) -> &[f64] {
        &self.ybar
    }

    pub fn scheme(&self) -> &SlicingScheme {
        &self.scheme
    }

    pub fn slice_mean(&self, h: usize) -> ArrayView1<'_, f64> {
        self.means[h].view()
    }

    /// The (ridge-regularized) covariance the model uses for slice h.
    pub fn slice_cov(&self, h: usize) -> Array2<f64> {
        let l = &self.chols[h];
        l.dot(&l.t())
    }
}

/// Fits the per-slice maximum-likelihood Gaussian on columns `selected`.
/// With an empty selection the model carries only priors and response means.
pub fn fit_slice_model(
    data: &Dataset,
    selected: &[usize],
    scheme: &SlicingScheme,
) -> Result<SliceModel> {
    let d = selected.len();
    let n = data.n();
    if scheme.n() != n {
        return Err(Error::InvalidArgument("scheme size mismatch".into()));
    }
    let mut priors = Vec::new();
    let mut means = Vec::new();
    let mut chols = Vec::new();
    let mut log_dets = Vec::new();
    let mut ybar = Vec::new();
    for rows in scheme.slice_rows() {
        let nh = rows.len();
        // n_h = d + 1 points still give a full-rank MLE covariance; the
        // ridge below guards anything thinner in practice.
        if d > 0 && nh <= d {
            return Err(Error::SliceTooSmall { n: nh, d });
        }
        priors.push(nh as f64 / n as f64);
        ybar.push(rows.iter().map(|&i| data.response()[i]).sum::<f64>() / nh as f64);
        if d == 0 {
            means.push(Array1::zeros(0));
            chols.push(Array2::zeros((0, 0)));
            log_dets.push(0.0);
            continue;
        }
        let mut block = Array2::<f64>::zeros((nh, d));
        for (r, &i) in rows.iter().enumerate() {
            for (c, &col) in selected.iter().enumerate() {
                block[[r, c]] = data.predictors()[[i, col]];
            }
        }
        let mut mean = Array1::<f64>::zeros(d);
        for c in 0..d {
            mean[c] = block.column(c).sum() / nh as f64;
        }
        let cov = cov_matrix(block.view(), None)?;
        let mut m = cov.view().to_owned();
        ridge_in_place(&mut m, MODEL_RIDGE);
        let l = cholesky(&m).ok_or(Error::DegenerateCovariance)?;
        log_dets.push(chol_log_det(&l));
        chols.push(l);
        means.push(mean);
    }
    Ok(SliceModel {
        selected: selected.to_vec(),
        priors,
        means,
        chols,
        log_dets,
        ybar,
        scheme: scheme.clone(),
    })
}

/// Posterior slice probabilities of a predictor row: proportional to
/// s_h times the Gaussian density on the selected columns, normalized via
/// log-densities with max subtraction.
pub fn slice_posterior(model: &SliceModel, x: ArrayView1<'_, f64>) -> Vec<f64> {
    let h = model.priors.len();
    let d = model.selected.len();
    if d == 0 {
        return model.priors.clone();
    }
    let logp: Vec<f64> = (0..h)
        .map(|s| {
            let mut dev = Array1::<f64>::zeros(d);
            for (c, &col) in model.selected.iter().enumerate() {
                dev[c] = x[col] - model.means[s][c];
            }
            let z = chol_solve(&model.chols[s], &dev);
            model.priors[s].ln() - 0.5 * dev.dot(&z) - 0.5 * model.log_dets[s]
        })
        .collect();
    let mx = logp.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let mut w: Vec<f64> = logp.iter().map(|v| (v - mx).exp()).collect();
    let sum: f64 = w.iter().sum();
    for v in &mut w {
        *v /= sum;
    }
    w
}

/// Mean rate of argmax-posterior misclassification; argmax ties take the
/// lowest slice id.
pub fn classification_error(posteriors: &[Vec<f64>], truth: &[usize]) -> f64 {
    let m = truth.len();
    let mut wrong = 0usize;
    for (p, &t) in posteriors.iter().zip(truth) {
        let mut best = 0usize;
        for (s, &v) in p.iter().enumerate() {
            if v > p[best] {
                best = s;
            }
        }
        if best != t {
            wrong += 1;
        }
    }
    wrong as f64 / m as f64
}

/// Mean absolute error of the posterior-weighted response prediction.
pub fn absolute_error(posteriors: &[Vec<f64>], ybar: &[f64], y: &[f64]) -> f64 {
    let m = y.len();
    let mut total = 0.0;
    for (p, &yj) in posteriors.iter().zip(y) {
        let pred: f64 = p.iter().zip(ybar).map(|(a, b)| a * b).sum();
        total += (yj - pred).abs();
    }
    total / m as f64
}

/// Cross-validation scoring measure.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Measure {
    Ce,
    Ae,
}

/// One scored grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvEntry {
    pub q: usize,
    pub alpha: f64,
    pub fold_errors: Vec<f64>,
    pub mean_error: f64,
    pub chosen: bool,
}

/// The full cross-validation table plus the winning grid point.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct CvReport {
    pub measure: Measure,
    pub folds: usize,
    pub entries: Vec<CvEntry>,
    pub best_q: usize,
    pub best_alpha: f64,
}

/// Scores one (q, alpha) grid point: per fold, select on the training rows,
/// fit the per-slice Gaussian on the resulting set, and score the held-out
/// fold. Any failing fold scores the grid point as infinite.
fn score_grid_point(
    data: &Dataset,
    plan: &FoldPlan,
    base: &HyperParams,
    q: usize,
    alpha: f64,
    measure: Measure,
) -> Vec<f64> {
    let mut hyper = base.clone();
    hyper.q = q;
    hyper.hom_thresholds = ThresholdSpec::Alpha(alpha);
    hyper.aug_thresholds = ThresholdSpec::Alpha(alpha);
    let mut errors = Vec::with_capacity(plan.k);
    for fold in 0..plan.k {
        let (train_rows, test_rows) = plan.fold_rows(fold);
        let train = data.select_rows(&train_rows);
        let err = (|| -> Result<f64> {
            let scheme = crate::select::build_scheme(&train, &hyper)?;
            let state = siri_with_scheme(&train, &scheme, &hyper)?;
            let model = fit_slice_model(&train, &state.selected, &scheme)?;
            let mut posteriors = Vec::with_capacity(test_rows.len());
            let mut truth = Vec::with_capacity(test_rows.len());
            let mut y_test = Vec::with_capacity(test_rows.len());
            for &i in &test_rows {
                posteriors.push(slice_posterior(&model, data.predictors().row(i)));
                truth.push(assign_slice(&scheme, data.response()[i])?);
                y_test.push(data.response()[i]);
            }
            Ok(match measure {
                Measure::Ce => classification_error(&posteriors, &truth),
                Measure::Ae => absolute_error(&posteriors, model.ybar(), &y_test),
            })
        })();
        errors.push(err.unwrap_or(f64::INFINITY));
    }
    errors
}

/// Grid search over (q, alpha) by K-fold cross-validation. Ties go to the
/// smaller q, then the larger alpha (the sparser model). Returns the chosen
/// hyperparameters and the full table.
#[allow(clippy::too_many_arguments)]
pub fn select_hyperparams(
    data: &Dataset,
    q_grid: &[usize],
    alphas: &[f64],
    base: &HyperParams,
    k: usize,
    measure: Measure,
    seed: u64,
) -> Result<(HyperParams, CvReport)> {
    if q_grid.is_empty() || alphas.is_empty() {
        return Err(Error::InvalidArgument("empty hyperparameter grid".into()));
    }
    let plan = kfold_split(data.n(), k, seed)?;
    let points: Vec<(usize, f64)> = q_grid
        .iter()
        .flat_map(|&q| alphas.iter().map(move |&a| (q, a)))
        .collect();
    let scored: Vec<(usize, f64, Vec<f64>)> = points
        .par_iter()
        .map(|&(q, a)| {
            let errs = score_grid_point(data, &plan, base, q, a, measure);
            (q, a, errs)
        })
        .collect();

    let mut entries: Vec<CvEntry> = scored
        .into_iter()
        .map(|(q, alpha, fold_errors)| {
            let mean_error = fold_errors.iter().sum::<f64>() / fold_errors.len() as f64;
            CvEntry { q, alpha, fold_errors, mean_error, chosen: false }
        })
        .collect();

    let mut best = 0usize;
    for (i, e) in entries.iter().enumerate() {
        let b = &entries[best];
        let better = e.mean_error < b.mean_error
            || (e.mean_error == b.mean_error
                && (e.q < b.q || (e.q == b.q && e.alpha > b.alpha)));
        if i > 0 && better {
            best = i;
        }
    }
    if !entries[best].mean_error.is_finite() {
        return Err(Error::InvalidArgument(
            "every grid point failed cross-validation".into(),
        ));
    }
    entries[best].chosen = true;
    let best_q = entries[best].q;
    let best_alpha = entries[best].alpha;

    let mut hyper = base.clone();
    hyper.q = best_q;
    hyper.hom_thresholds = ThresholdSpec::Alpha(best_alpha);
    hyper.aug_thresholds = ThresholdSpec::Alpha(best_alpha);
    let report =
        CvReport { measure, folds: k, entries, best_q, best_alpha };
    Ok((hyper, report))
}

/// Runs the full pipeline: CV-selected hyperparameters, then selection on
/// the whole dataset with the winner.
#[allow(clippy::too_many_arguments)]
pub fn cv_select(
    data: &Dataset,
    q_grid: &[usize],
    alphas: &[f64],
    base: &HyperParams,
    k: usize,
    measure: Measure,
    seed: u64,
) -> Result<(HyperParams, CvReport, SelectionState)> {
    let (hyper, report) = select_hyperparams(data, q_grid, alphas, base, k, measure, seed)?;
    let state = crate::select::siri(data, &hyper)?;
    Ok((hyper, report, state))
}
