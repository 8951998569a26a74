//! Stepwise forward-addition/backward-deletion selection, marginal and
//! conditional screening, threshold grids, and the cross-stitching driver.

use std::collections::BTreeSet;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::numkit::chisq_quantile;
use crate::slicing::{build_slices, build_slices_discrete, SlicingScheme};
use crate::stats::{null_dof_aug, DStarScanner, StatContext};

/// Which likelihood-ratio statistic drives a stepwise run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum StatKind {
    /// Slice-mean statistic on profile-R^2 gaps; null chi-squared(q).
    Hom,
    /// Pooled-versus-per-slice residual variance statistic; null
    /// chi-squared((H-1)(d+2)).
    Aug,
}

/// Addition and deletion thresholds on the scaled (chi-squared) statistic.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ThresholdPair {
    pub nu_a: f64,
    pub nu_d: f64,
}

/// Threshold policy for a stepwise run. `Alpha` re-materializes the pair at
/// every step from the current conditioning-set size; `Fixed` uses the pair
/// as given.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub enum ThresholdSpec {
    Fixed(ThresholdPair),
    Alpha(f64),
}

/// The five-point significance grid for dimension p.
pub fn alpha_grid(p: usize) -> [f64; 5] {
    let pinv = 1.0 / p as f64;
    [
        1.0 - pinv,
        1.0 - 0.5 * pinv,
        1.0 - 0.1 * pinv,
        1.0 - 0.05 * pinv,
        1.0 - 0.01 * pinv,
    ]
}

/// Finite-sample inflation factor n / (n - H(d+2)) for augmented-model
/// thresholds.
pub fn aug_inflation(n: usize, h: usize, d: usize) -> Result<f64> {
    let used = h * (d + 2);
    if n <= used {
        return Err(Error::SliceTooSmall { n, d });
    }
    Ok(n as f64 / (n - used) as f64)
}

/// Materializes a threshold pair for one step: chi-squared quantiles at
/// (alpha, alpha - 0.05), with dof q for the homoscedastic statistic and
/// dof (H-1)(d+2) times the n/(n-H(d+2)) inflation for the augmented one.
pub fn materialize_thresholds(
    spec: &ThresholdSpec,
    kind: StatKind,
    q: usize,
    n: usize,
    h: usize,
    d: usize,
) -> Result<ThresholdPair> {
    match spec {
        ThresholdSpec::Fixed(pair) => Ok(*pair),
        ThresholdSpec::Alpha(alpha) => {
            let (dof, factor) = match kind {
                StatKind::Hom => (q.max(1), 1.0),
                StatKind::Aug => (null_dof_aug(h, d), aug_inflation(n, h, d)?),
            };
            let nu_a = factor * chisq_quantile(*alpha, dof)?;
            let nu_d = factor * chisq_quantile(alpha - 0.05, dof)?;
            Ok(ThresholdPair { nu_a, nu_d })
        }
    }
}

/// The spec grid of threshold pairs for the five alphas, at a given
/// conditioning-set size d.
pub fn threshold_grid(
    p: usize,
    q: usize,
    n: usize,
    h: usize,
    d: usize,
    kind: StatKind,
) -> Result<Vec<ThresholdPair>> {
    alpha_grid(p)
        .iter()
        .map(|&a| materialize_thresholds(&ThresholdSpec::Alpha(a), kind, q, n, h, d))
        .collect()
}

/// One scored candidate from a screening pass.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScreenScore {
    pub index: usize,
    /// n times the augmented statistic; 0 when the candidate failed.
    pub scaled: f64,
    pub p_value: f64,
    /// Set when the statistic errored for this candidate (score forced to 0).
    pub failed: bool,
}

/// Ranks every predictor outside `selected` by the augmented statistic given
/// `selected`, descending, and keeps the top `budget`. Per-candidate errors
/// score 0 with a flag; the scan never aborts on one variable.
pub fn conditional_screen(
    data: &Dataset,
    scheme: &SlicingScheme,
    selected: &[usize],
    budget: usize,
) -> Result<Vec<ScreenScore>> {
    if budget < 1 {
        return Err(Error::InvalidArgument("budget must be at least 1".into()));
    }
    let scanner = DStarScanner::new(data, scheme, selected)?;
    let mut scores: Vec<ScreenScore> = (0..data.p())
        .into_par_iter()
        .filter(|j| !selected.contains(j))
        .map(|j| match scanner.stat(j) {
            Ok(v) => ScreenScore { index: j, scaled: v.scaled, p_value: v.p_value, failed: false },
            Err(_) => ScreenScore { index: j, scaled: 0.0, p_value: 1.0, failed: true },
        })
        .collect();
    scores.sort_by(|a, b| {
        b.scaled
            .partial_cmp(&a.scaled)
            .unwrap()
            .then(a.index.cmp(&b.index))
    });
    scores.truncate(budget);
    Ok(scores)
}

/// Marginal screening: ranks all p predictors by the augmented statistic
/// with an empty conditioning set.
pub fn sis_star(data: &Dataset, scheme: &SlicingScheme, budget: usize) -> Result<Vec<ScreenScore>> {
    conditional_screen(data, scheme, &[], budget)
}

/// One recorded selection event.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(tag = "step", rename_all = "lowercase")]
pub enum TraceEvent {
    Add { index: usize, kind: StatKind, value: f64, threshold: f64 },
    Delete { index: usize, kind: StatKind, value: f64, threshold: f64 },
    Screen { kept: Vec<usize> },
    Note { message: String },
}

/// Result of a stepwise run or of the full driver: the ordered selection,
/// the current screened pool and the event trace that produced them.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SelectionState {
    pub selected: Vec<usize>,
    pub screened: Vec<usize>,
    pub trace: Vec<TraceEvent>,
}

impl SelectionState {
    /// Replays add/delete events on top of `initial`; equals `selected` for
    /// any state produced by this module.
    pub fn replay(&self, initial: &[usize]) -> Vec<usize> {
        let mut c: Vec<usize> = initial.to_vec();
        for ev in &self.trace {
            match ev {
                TraceEvent::Add { index, .. } => c.push(*index),
                TraceEvent::Delete { index, .. } => c.retain(|&j| j != *index),
                _ => {}
            }
        }
        c
    }

    /// Union of every screened pool in the trace plus the selection itself.
    pub fn screened_union(&self) -> BTreeSet<usize> {
        let mut u: BTreeSet<usize> = self.selected.iter().copied().collect();
        for ev in &self.trace {
            if let TraceEvent::Screen { kept } = ev {
                u.extend(kept.iter().copied());
            }
        }
        u
    }
}

struct StepwiseOutcome {
    state: SelectionState,
    deleted: BTreeSet<usize>,
}

/// Evaluates the statistic of `j` given `selected`, by kind.
fn stat_scaled(
    data: &Dataset,
    scheme: &SlicingScheme,
    kind: StatKind,
    q: usize,
    selected: &[usize],
    j: usize,
) -> Result<f64> {
    let ctx = StatContext::new(data, scheme, selected, q.max(1))?;
    let v = match kind {
        StatKind::Hom => ctx.d_hom(j)?,
        StatKind::Aug => ctx.d_star(j)?,
    };
    Ok(v.scaled)
}

/// Core stepwise loop. `frozen` columns always condition the statistics and
/// are never candidates for deletion; the deletable selection is `c0`. The
/// public entry points pass an empty `frozen`.
#[allow(clippy::too_many_arguments)]
fn run_stepwise(
    data: &Dataset,
    scheme: &SlicingScheme,
    kind: StatKind,
    q: usize,
    thresholds: &ThresholdSpec,
    frozen: &[usize],
    c0: &[usize],
    pool: &[usize],
    max_iters: usize,
    no_readd: bool,
) -> Result<StepwiseOutcome> {
    if max_iters < 1 {
        return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
    }
    let n = data.n();
    let h = scheme.h();
    let mut c: Vec<usize> = c0.to_vec();
    let mut deleted: BTreeSet<usize> = BTreeSet::new();
    let mut trace: Vec<TraceEvent> = Vec::new();
    let mut additions_open = true;
    let full = |c: &[usize]| -> Vec<usize> {
        let mut v = frozen.to_vec();
        v.extend_from_slice(c);
        v
    };

    for _ in 0..max_iters {
        let mut changed = false;

        // Addition: argmax of the scaled statistic over the pool, lowest
        // index winning ties; added only above nu_a.
        if additions_open {
            let cand: Vec<usize> = pool
                .iter()
                .copied()
                .filter(|j| {
                    !c.contains(j) && !frozen.contains(j) && !(no_readd && deleted.contains(j))
                })
                .collect();
            if !cand.is_empty() {
                let cond = full(&c);
                match materialize_thresholds(thresholds, kind, q, n, h, cond.len()) {
                    Err(e) => {
                        trace.push(TraceEvent::Note {
                            message: format!("additions stopped: {}", e),
                        });
                        additions_open = false;
                    }
                    Ok(pair) => {
                        let evals: Vec<(usize, Result<f64>)> = if kind == StatKind::Aug {
                            match DStarScanner::new(data, scheme, &cond) {
                                Ok(scanner) => cand
                                    .par_iter()
                                    .map(|&j| (j, scanner.stat(j).map(|v| v.scaled)))
                                    .collect(),
                                Err(e) => {
                                    trace.push(TraceEvent::Note {
                                        message: format!("additions stopped: {}", e),
                                    });
                                    additions_open = false;
                                    Vec::new()
                                }
                            }
                        } else {
                            cand.par_iter()
                                .map(|&j| (j, stat_scaled(data, scheme, kind, q, &cond, j)))
                                .collect()
                        };
                        let mut skipped = 0usize;
                        let mut best: Option<(usize, f64)> = None;
                        for (j, r) in &evals {
                            match r {
                                Ok(v) => {
                                    if best.is_none_or(|(_, bv)| *v > bv) {
                                        best = Some((*j, *v));
                                    }
                                }
                                Err(_) => skipped += 1,
                            }
                        }
                        if skipped > 0 {
                            trace.push(TraceEvent::Note {
                                message: format!("{} candidates skipped on error", skipped),
                            });
                        }
                        if let Some((j, v)) = best {
                            if v > pair.nu_a {
                                c.push(j);
                                trace.push(TraceEvent::Add {
                                    index: j,
                                    kind,
                                    value: v,
                                    threshold: pair.nu_a,
                                });
                                changed = true;
                            }
                        }
                    }
                }
            }
        }

        // Deletion: argmin over deletable members of the statistic against
        // the rest; removed only below nu_d evaluated at the reduced size.
        if !c.is_empty() {
            let mut best: Option<(usize, f64, f64)> = None;
            for &j in &c {
                let rest: Vec<usize> = full(&c).into_iter().filter(|&k| k != j).collect();
                let pair = match materialize_thresholds(thresholds, kind, q, n, h, rest.len()) {
                    Ok(p) => p,
                    Err(_) => continue,
                };
                match stat_scaled(data, scheme, kind, q, &rest, j) {
                    Ok(v) => {
                        if best.is_none_or(|(_, bv, _)| v < bv) {
                            best = Some((j, v, pair.nu_d));
                        }
                    }
                    Err(_) => continue,
                }
            }
            if let Some((j, v, nu_d)) = best {
                if v < nu_d {
                    c.retain(|&k| k != j);
                    deleted.insert(j);
                    trace.push(TraceEvent::Delete { index: j, kind, value: v, threshold: nu_d });
                    changed = true;
                }
            }
        }

        if !changed {
            break;
        }
    }

    Ok(StepwiseOutcome {
        state: SelectionState { selected: c, screened: pool.to_vec(), trace },
        deleted,
    })
}

/// The stepwise procedure: repeated argmax additions above nu_a and argmin
/// deletions below nu_d until neither step changes the selection or
/// `max_iters` is reached. Members of `c0` are deletable.
#[allow(clippy::too_many_arguments)]
pub fn stepwise(
    data: &Dataset,
    scheme: &SlicingScheme,
    kind: StatKind,
    q: usize,
    thresholds: &ThresholdSpec,
    c0: &[usize],
    pool: &[usize],
    max_iters: usize,
) -> Result<SelectionState> {
    run_stepwise(data, scheme, kind, q, thresholds, &[], c0, pool, max_iters, false)
        .map(|out| out.state)
}

/// Variant with the sweep ("modified") addition step: candidates are tried
/// in index order and every one clearing nu_a is added immediately, then the
/// deletion loop runs. Less stable than `stepwise`; provided for
/// completeness.
#[allow(clippy::too_many_arguments)]
pub fn stepwise_sequential(
    data: &Dataset,
    scheme: &SlicingScheme,
    kind: StatKind,
    q: usize,
    thresholds: &ThresholdSpec,
    c0: &[usize],
    pool: &[usize],
    max_iters: usize,
) -> Result<SelectionState> {
    if max_iters < 1 {
        return Err(Error::InvalidArgument("max_iters must be at least 1".into()));
    }
    let n = data.n();
    let h = scheme.h();
    let mut c: Vec<usize> = c0.to_vec();
    let mut trace: Vec<TraceEvent> = Vec::new();
    let mut sweep_order: Vec<usize> = pool.to_vec();
    sweep_order.sort_unstable();

    for _ in 0..max_iters {
        let mut changed = false;
        // Sweep addition in index order; the conditioning set grows as we go.
        for &j in &sweep_order {
            if c.contains(&j) {
                continue;
            }
            let pair = match materialize_thresholds(thresholds, kind, q, n, h, c.len()) {
                Ok(p) => p,
                Err(e) => {
                    trace.push(TraceEvent::Note { message: format!("additions stopped: {}", e) });
                    break;
                }
            };
            match stat_scaled(data, scheme, kind, q, &c, j) {
                Ok(v) if v > pair.nu_a => {
                    c.push(j);
                    trace.push(TraceEvent::Add { index: j, kind, value: v, threshold: pair.nu_a });
                    changed = true;
                }
                _ => {}
            }
        }
        // Deletion loop: repeated argmin deletions until none qualifies.
        loop {
            let mut best: Option<(usize, f64, f64)> = None;
            for &j in &c {
                let rest: Vec<usize> = c.iter().copied().filter(|&k| k != j).collect();
                let pair = match materialize_thresholds(thresholds, kind, q, n, h, rest.len()) {
                    Ok(p) => p,
                    Err(_) => continue,
                };
                if let Ok(v) = stat_scaled(data, scheme, kind, q, &rest, j) {
                    if best.is_none_or(|(_, bv, _)| v < bv) {
                        best = Some((j, v, pair.nu_d));
                    }
                }
            }
            match best {
                Some((j, v, nu_d)) if v < nu_d => {
                    c.retain(|&k| k != j);
                    trace.push(TraceEvent::Delete { index: j, kind, value: v, threshold: nu_d });
                    changed = true;
                }
                _ => break,
            }
        }
        if !changed {
            break;
        }
    }
    Ok(SelectionState { selected: c, screened: pool.to_vec(), trace })
}

/// Hyperparameters of the cross-stitching driver.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct HyperParams {
    /// Slice count H for continuous responses.
    pub slices: usize,
    /// Treat the response as class labels (one slice per distinct value).
    pub discrete_response: bool,
    /// Direction count q of the homoscedastic model; q = 0 skips that step.
    pub q: usize,
    pub hom_thresholds: ThresholdSpec,
    pub aug_thresholds: ThresholdSpec,
    /// Screening budget; None means floor(n / ln n).
    pub budget: Option<usize>,
    /// Cap on screening/selection cycles.
    pub max_cycles: usize,
    /// Cap on iterations inside each stepwise run.
    pub max_steps: usize,
}

impl HyperParams {
    /// Paper-style defaults for a p-column problem: H = 5, q, the given
    /// significance level on both grids, budget floor(n / ln n).
    pub fn with_alpha(q: usize, alpha: f64) -> Self {
        HyperParams {
            slices: 5,
            discrete_response: false,
            q,
            hom_thresholds: ThresholdSpec::Alpha(alpha),
            aug_thresholds: ThresholdSpec::Alpha(alpha),
            budget: None,
            max_cycles: 20,
            max_steps: 200,
        }
    }
}

/// floor(n / ln n), clamped to [1, p].
pub fn default_budget(n: usize, p: usize) -> usize {
    let b = (n as f64 / (n as f64).ln()).floor() as usize;
    b.clamp(1, p)
}

/// Builds the slicing scheme named by the hyperparameters.
pub fn build_scheme(data: &Dataset, hyper: &HyperParams) -> Result<SlicingScheme> {
    let y = data.response().to_vec();
    if hyper.discrete_response {
        build_slices_discrete(&y)
    } else {
        build_slices(&y, hyper.slices)
    }
}

/// The cross-stitching driver: marginal screening, a homoscedastic stepwise
/// pass (skipped when q = 0), an augmented stepwise pass, then a conditional
/// re-screen, cycling until the selection is stable or the cycle cap hits.
/// A variable deleted in a cycle is not re-added within that cycle.
pub fn siri(data: &Dataset, hyper: &HyperParams) -> Result<SelectionState> {
    let scheme = build_scheme(data, hyper)?;
    siri_with_scheme(data, &scheme, hyper)
}

pub fn siri_with_scheme(
    data: &Dataset,
    scheme: &SlicingScheme,
    hyper: &HyperParams,
) -> Result<SelectionState> {
    let n = data.n();
    let p = data.p();
    let budget = hyper.budget.unwrap_or_else(|| default_budget(n, p)).clamp(1, p);
    let mut trace: Vec<TraceEvent> = Vec::new();
    if scheme.is_thin() {
        trace.push(TraceEvent::Note {
            message: format!(
                "thin slices: min count {} is below the recommended 40",
                scheme.min_count()
            ),
        });
    }

    let initial = sis_star(data, scheme, budget)?;
    let mut pool: Vec<usize> = initial.iter().map(|s| s.index).collect();
    trace.push(TraceEvent::Screen { kept: pool.clone() });

    let mut c: Vec<usize> = Vec::new();
    for _cycle in 0..hyper.max_cycles {
        let before: BTreeSet<usize> = c.iter().copied().collect();
        let mut blocked: BTreeSet<usize> = BTreeSet::new();

        // The slice-mean pass conditions on the inherited selection but may
        // only delete its own additions: membership justified by the
        // augmented statistic is not reexamined under the mean-only one.
        if hyper.q >= 1 {
            let sub_pool: Vec<usize> = pool
                .iter()
                .copied()
                .filter(|j| !c.contains(j) && !blocked.contains(j))
                .collect();
            let out = run_stepwise(
                data,
                scheme,
                StatKind::Hom,
                hyper.q,
                &hyper.hom_thresholds,
                &c,
                &[],
                &sub_pool,
                hyper.max_steps,
                true,
            )?;
            c.extend(out.state.selected);
            trace.extend(out.state.trace);
            blocked.extend(out.deleted);
        }

        // The augmented pass reexamines every member of the selection.
        let sub_pool: Vec<usize> = pool
            .iter()
            .copied()
            .filter(|j| !c.contains(j) && !blocked.contains(j))
            .collect();
        let out = run_stepwise(
            data,
            scheme,
            StatKind::Aug,
            hyper.q,
            &hyper.aug_thresholds,
            &[],
            &c,
            &sub_pool,
            hyper.max_steps,
            true,
        )?;
        c = out.state.selected;
        trace.extend(out.state.trace);
        blocked.extend(out.deleted);

        // Conditional re-screen given the current selection.
        if c.len() < p && scheme.min_count() >= c.len() + 2 {
            let scores = conditional_screen(data, scheme, &c, budget)?;
            pool = scores.iter().map(|s| s.index).collect();
            trace.push(TraceEvent::Screen { kept: pool.clone() });
        } else if c.len() < p {
            trace.push(TraceEvent::Note {
                message: "re-screen skipped: slices too small for conditioning set".into(),
            });
        }

        let after: BTreeSet<usize> = c.iter().copied().collect();
        if after == before {
            break;
        }
    }

    Ok(SelectionState { selected: c, screened: pool, trace })
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::{Array1, Array2};

    fn assert_close(a: f64, b: f64, tol: f64) {
        assert!((a - b).abs() <= tol, "{} vs {} (tol {})", a, b, tol);
    }

    /// Deterministic uniform noise in (-0.5, 0.5).
    struct Xorshift(u64);
    impl Xorshift {
        fn next(&mut self) -> f64 {
            self.0 ^= self.0 << 13;
            self.0 ^= self.0 >> 7;
            self.0 ^= self.0 << 17;
            (self.0 % 100_000) as f64 / 100_000.0 - 0.5
        }
    }

    fn noise_dataset(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = Xorshift(seed);
        let xs: Vec<f64> = (0..n * p).map(|_| rng.next()).collect();
        let y: Vec<f64> = (0..n).map(|_| rng.next()).collect();
        Dataset::new(Array2::from_shape_vec((n, p), xs).unwrap(), Array1::from(y)).unwrap()
    }

    #[test]
    fn alpha_grid_p1000() {
        let g = alpha_grid(1000);
        let want = [0.999, 0.9995, 0.9999, 0.99995, 0.99999];
        for (a, w) in g.iter().zip(want) {
            assert_close(*a, w, 1e-12);
        }
    }

    #[test]
    fn threshold_grid_hom_q1() {
        let g = threshold_grid(1000, 1, 200, 5, 0, StatKind::Hom).unwrap();
        assert_close(g[0].nu_a, 10.8276, 1e-3);
        assert!(g[0].nu_a > g[0].nu_d);
    }

    #[test]
    fn aug_inflation_factor() {
        let f = aug_inflation(200, 5, 0).unwrap();
        assert_close(f, 200.0 / 190.0, 1e-12);
        assert!(aug_inflation(10, 5, 0).is_err());
    }

    #[test]
    fn aug_thresholds_inflate() {
        let base = chisq_quantile(0.999, 8).unwrap();
        let pair = materialize_thresholds(&ThresholdSpec::Alpha(0.999), StatKind::Aug, 1, 200, 5, 0)
            .unwrap();
        assert_close(pair.nu_a, base * 200.0 / 190.0, 1e-9);
    }

    #[test]
    fn sis_star_single_column() {
        let data = noise_dataset(20, 1, 3);
        let scheme = build_slices(&data.response().to_vec(), 2).unwrap();
        let r = sis_star(&data, &scheme, 1).unwrap();
        assert_eq!(r.len(), 1);
        assert_eq!(r[0].index, 0);
    }

    #[test]
    fn sis_star_variance_pattern_ranking() {
        // Per-slice variance patterns (1,1), (1,4), (1,9) with equal means:
        // direct arithmetic gives statistics 0, ln(2.5) - ln 2, ln 5 - ln 3,
        // hence ranking (3, 2, 1) in one-based labels.
        let x = vec![
            // columns: x1, x2, x3; slice 1 rows then slice 2 rows
            -1.0, -1.0, -1.0, //
            1.0, 1.0, 1.0, //
            -1.0, -2.0, -3.0, //
            1.0, 2.0, 3.0,
        ];
        let data = Dataset::new(
            Array2::from_shape_vec((4, 3), x).unwrap(),
            Array1::from(vec![0.0, 0.0, 1.0, 1.0]),
        )
        .unwrap();
        let scheme = build_slices(&data.response().to_vec(), 2).unwrap();
        let r = sis_star(&data, &scheme, 3).unwrap();
        let order: Vec<usize> = r.iter().map(|s| s.index).collect();
        assert_eq!(order, vec![2, 1, 0]);
        assert_close(r[0].scaled, 4.0 * ((5.0f64).ln() - (3.0f64).ln()), 1e-9);
        assert_close(r[1].scaled, 4.0 * (2.5f64.ln() - 2.0f64.ln()), 1e-9);
        assert_close(r[2].scaled, 0.0, 1e-12);
    }

    #[test]
    fn sis_star_full_budget_is_permutation() {
        let data = noise_dataset(40, 13, 7);
        let scheme = build_slices(&data.response().to_vec(), 4).unwrap();
        let r = sis_star(&data, &scheme, 13).unwrap();
        let mut idx: Vec<usize> = r.iter().map(|s| s.index).collect();
        idx.sort_unstable();
        assert_eq!(idx, (0..13).collect::<Vec<_>>());
    }

    #[test]
    fn conditional_screen_empty_c_equals_sis_star() {
        let data = noise_dataset(30, 6, 11);
        let scheme = build_slices(&data.response().to_vec(), 3).unwrap();
        let a = sis_star(&data, &scheme, 6).unwrap();
        let b = conditional_screen(&data, &scheme, &[], 6).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert_eq!(x.index, y.index);
            assert_close(x.scaled, y.scaled, 1e-12);
        }
    }

    #[test]
    fn conditional_screen_duplicate_ranked_last() {
        // Column 1 duplicates column 0 (selected): degenerate regression,
        // flagged and scored 0.
        let n = 12;
        let mut rng = Xorshift(19);
        let mut xs = Vec::new();
        let mut y = Vec::new();
        for i in 0..n {
            let a = rng.next();
            xs.push(a);
            xs.push(a);
            xs.push(rng.next() + if i % 2 == 0 { 2.0 } else { 0.0 });
            y.push(rng.next());
        }
        let data = Dataset::new(Array2::from_shape_vec((n, 3), xs).unwrap(), Array1::from(y)).unwrap();
        let scheme = build_slices(&data.response().to_vec(), 2).unwrap();
        let r = conditional_screen(&data, &scheme, &[0], 2).unwrap();
        assert_eq!(r.last().unwrap().index, 1);
        assert!(r.last().unwrap().failed);
        assert_eq!(r.last().unwrap().scaled, 0.0);
    }

    /// Data with one column whose slice means shift hugely.
    fn shifted_dataset(n: usize, p: usize, seed: u64) -> Dataset {
        let mut rng = Xorshift(seed);
        let mut xs = vec![0.0; n * p];
        let mut y = vec![0.0; n];
        for i in 0..n {
            y[i] = rng.next();
            for j in 0..p {
                xs[i * p + j] = rng.next();
            }
            // column 2 tracks the response strongly
            xs[i * p + 2] += if y[i] > 0.0 { 8.0 } else { -8.0 };
        }
        Dataset::new(Array2::from_shape_vec((n, p), xs).unwrap(), Array1::from(y)).unwrap()
    }

    #[test]
    fn stepwise_finds_single_relevant_variable() {
        let data = shifted_dataset(60, 5, 23);
        let scheme = build_slices(&data.response().to_vec(), 3).unwrap();
        let thr = ThresholdSpec::Alpha(0.999);
        let state = stepwise(&data, &scheme, StatKind::Hom, 1, &thr, &[], &[0, 1, 2, 3, 4], 50)
            .unwrap();
        assert_eq!(state.selected, vec![2]);

        // Oracle: exhaustively evaluate every candidate statistic at C = {}
        // and at C = {2}; only column 2 clears the addition threshold.
        let pair = materialize_thresholds(&thr, StatKind::Hom, 1, 60, 3, 0).unwrap();
        for j in [0usize, 1, 3, 4] {
            let v = stat_scaled(&data, &scheme, StatKind::Hom, 1, &[], j).unwrap();
            assert!(v < pair.nu_a, "noise column {} cleared the threshold", j);
        }
        let v2 = stat_scaled(&data, &scheme, StatKind::Hom, 1, &[], 2).unwrap();
        assert!(v2 > pair.nu_a);
        for j in [0usize, 1, 3, 4] {
            let v = stat_scaled(&data, &scheme, StatKind::Hom, 1, &[2], j).unwrap();
            let p1 = materialize_thresholds(&thr, StatKind::Hom, 1, 60, 3, 1).unwrap();
            assert!(v < p1.nu_a);
        }
    }

    #[test]
    fn stepwise_infinite_nu_a_keeps_c0() {
        let data = noise_dataset(40, 4, 31);
        let scheme = build_slices(&data.response().to_vec(), 2).unwrap();
        let thr = ThresholdSpec::Fixed(ThresholdPair { nu_a: f64::INFINITY, nu_d: 0.0 });
        let state =
            stepwise(&data, &scheme, StatKind::Aug, 1, &thr, &[1, 3], &[0, 1, 2, 3], 50).unwrap();
        assert_eq!(state.selected, vec![1, 3]);
    }

    #[test]
    fn stepwise_empty_pool_deletions_only() {
        let data = noise_dataset(40, 4, 37);
        let scheme = build_slices(&data.response().to_vec(), 2).unwrap();
        // Finite nu_d far above any noise statistic forces deletions.
        let thr = ThresholdSpec::Fixed(ThresholdPair { nu_a: f64::INFINITY, nu_d: 1e6 });
        let state = stepwise(&data, &scheme, StatKind::Aug, 1, &thr, &[0, 2], &[], 50).unwrap();
        assert!(state.selected.is_empty());
        let dels = state
            .trace
            .iter()
            .filter(|e| matches!(e, TraceEvent::Delete { .. }))
            .count();
        assert_eq!(dels, 2);
    }

    #[test]
    fn stepwise_sequential_matches_on_simple_case() {
        let data = shifted_dataset(60, 5, 41);
        let scheme = build_slices(&data.response().to_vec(), 3).unwrap();
        let thr = ThresholdSpec::Alpha(0.999);
        let a = stepwise(&data, &scheme, StatKind::Hom, 1, &thr, &[], &[0, 1, 2, 3, 4], 50)
            .unwrap();
        let b = stepwise_sequential(&data, &scheme, StatKind::Hom, 1, &thr, &[], &[0, 1, 2, 3, 4], 50)
            .unwrap();
        assert_eq!(a.selected, b.selected);

        // Infinite nu_a keeps the initial set.
        let c = stepwise_sequential(
            &data,
            &scheme,
            StatKind::Aug,
            1,
            &ThresholdSpec::Fixed(ThresholdPair { nu_a: f64::INFINITY, nu_d: 0.0 }),
            &[1],
            &[0, 1, 2, 3, 4],
            50,
        )
        .unwrap();
        assert_eq!(c.selected, vec![1]);

        // Empty pool leaves only the deletion loop, which here empties C.
        let d = stepwise_sequential(
            &data,
            &scheme,
            StatKind::Aug,
            1,
            &ThresholdSpec::Fixed(ThresholdPair { nu_a: f64::INFINITY, nu_d: 1e6 }),
            &[0, 3],
            &[],
            50,
        )
        .unwrap();
        assert!(d.selected.is_empty());

        // Sweep order is ascending index: with permissive thresholds every
        // pool member is taken in order on the first pass.
        let e = stepwise_sequential(
            &data,
            &scheme,
            StatKind::Aug,
            1,
            &ThresholdSpec::Fixed(ThresholdPair { nu_a: -1.0, nu_d: -2.0 }),
            &[],
            &[4, 0, 2],
            50,
        )
        .unwrap();
        assert_eq!(e.selected, vec![0, 2, 4]);
    }

    #[test]
    fn trace_replays_to_selection() {
        let data = shifted_dataset(60, 5, 53);
        let scheme = build_slices(&data.response().to_vec(), 3).unwrap();
        let thr = ThresholdSpec::Alpha(0.999);
        let state = stepwise(&data, &scheme, StatKind::Aug, 1, &thr, &[4], &[0, 1, 2, 3], 50)
            .unwrap();
        assert_eq!(state.replay(&[4]), state.selected);
    }

    #[test]
    fn siri_infinite_thresholds_full_budget() {
        let data = noise_dataset(30, 8, 59);
        let mut hyper = HyperParams::with_alpha(1, 0.999);
        hyper.slices = 3;
        hyper.budget = Some(8);
        let inf = ThresholdPair { nu_a: f64::INFINITY, nu_d: 0.0 };
        hyper.hom_thresholds = ThresholdSpec::Fixed(inf);
        hyper.aug_thresholds = ThresholdSpec::Fixed(inf);
        let state = siri(&data, &hyper).unwrap();
        assert!(state.selected.is_empty());
        let mut screened = state.screened.clone();
        screened.sort_unstable();
        assert_eq!(screened, (0..8).collect::<Vec<_>>());
    }

    #[test]
    fn siri_deterministic() {
        let data = shifted_dataset(80, 6, 61);
        let mut hyper = HyperParams::with_alpha(1, 0.999);
        hyper.slices = 4;
        let a = siri(&data, &hyper).unwrap();
        let b = siri(&data, &hyper).unwrap();
        assert_eq!(a.selected, b.selected);
        assert_eq!(
            serde_json::to_string(&a.trace).unwrap(),
            serde_json::to_string(&b.trace).unwrap()
        );
        // screening containment
        let u = a.screened_union();
        for j in &a.selected {
            assert!(u.contains(j));
        }
    }

    #[test]
    fn default_budget_formula() {
        assert_eq!(default_budget(200, 1000), 37);
        assert_eq!(default_budget(200, 10), 10);
    }
}
