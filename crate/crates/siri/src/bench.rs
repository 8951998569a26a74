//! Monte-Carlo harness: screening-proportion experiments and FP/FN tables
//! over the generative scenarios.

use std::time::Instant;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::cv::{cv_select, Measure};
use crate::dataset::Dataset;
use crate::error::{Error, Result};
use crate::select::{alpha_grid, default_budget, sis_star, siri_with_scheme, HyperParams};
use crate::sim::{derive_seed, generate, ScenarioSpec};
use crate::slicing::build_slices;

/// False positives |selected \ truth| and false negatives |truth \ selected|.
pub fn fp_fn(selected: &[usize], truth: &[usize], p: usize) -> (usize, usize) {
    let fp = selected.iter().filter(|j| !truth.contains(j)).count();
    let fn_ = truth.iter().filter(|j| !selected.contains(j)).count();
    debug_assert!(fp <= p - truth.len());
    debug_assert!(fn_ <= truth.len());
    (fp, fn_)
}

/// How a screening run ranks predictors.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ScreenMethod {
    /// One-shot marginal ranking by the augmented statistic.
    SisStar,
    /// The full driver; a variable counts as screened when any screening
    /// round kept it (or it was selected).
    Iterative,
    /// Plain ranking by |sample correlation with the response|.
    Correlation,
}

impl ScreenMethod {
    fn name(&self) -> &'static str {
        match self {
            ScreenMethod::SisStar => "sis-star",
            ScreenMethod::Iterative => "sis-star-iterative",
            ScreenMethod::Correlation => "correlation",
        }
    }
}

/// Settings for a screening experiment.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
pub struct ScreeningConfig {
    /// Top-k budget; None means floor(n / ln n).
    pub budget: Option<usize>,
    pub slices: usize,
    /// Direction count for the iterative driver.
    pub q: usize,
    /// Significance level for the iterative driver; None means 1 - 1/p.
    pub alpha: Option<f64>,
}

impl Default for ScreeningConfig {
    fn default() -> Self {
        ScreeningConfig { budget: None, slices: 5, q: 1, alpha: None }
    }
}

/// Per-variable inclusion rate.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct VarRate {
    pub index: usize,
    pub name: String,
    pub rate: f64,
}

/// Screening-proportion experiment result.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ScreeningReport {
    pub scenario: String,
    pub method: String,
    pub n: usize,
    pub p: usize,
    pub budget: usize,
    pub replications: usize,
    pub rates: Vec<VarRate>,
    pub seconds: f64,
}

fn correlation_ranking(data: &Dataset, budget: usize) -> Vec<usize> {
    let n = data.n() as f64;
    let y = data.response();
    let my = y.sum() / n;
    let syy: f64 = y.iter().map(|v| (v - my) * (v - my)).sum();
    let mut scored: Vec<(usize, f64)> = (0..data.p())
        .into_par_iter()
        .map(|j| {
            let col = data.column(j);
            let mx = col.sum() / n;
            let mut sxy = 0.0;
            let mut sxx = 0.0;
            for (a, b) in col.iter().zip(y.iter()) {
                sxy += (a - mx) * (b - my);
                sxx += (a - mx) * (a - mx);
            }
            let denom = (sxx * syy).sqrt();
            let c = if denom > 0.0 { (sxy / denom).abs() } else { 0.0 };
            (j, c)
        })
        .collect();
    scored.sort_by(|a, b| b.1.partial_cmp(&a.1).unwrap().then(a.0.cmp(&b.0)));
    scored.truncate(budget);
    scored.into_iter().map(|(j, _)| j).collect()
}

/// Fraction of replications in which each relevant predictor lands inside
/// the screening budget, for the chosen ranking method.
pub fn screening_proportion(
    spec: &ScenarioSpec,
    method: ScreenMethod,
    cfg: &ScreeningConfig,
    replications: usize,
    master_seed: u64,
) -> Result<ScreeningReport> {
    if replications == 0 {
        return Err(Error::InvalidArgument("need at least one replication".into()));
    }
    let started = Instant::now();
    let tracked = spec.truth();
    let budget = cfg.budget.unwrap_or_else(|| default_budget(spec.n, spec.p));
    let alpha = cfg.alpha.unwrap_or_else(|| alpha_grid(spec.p)[0]);

    let hits: Vec<Vec<bool>> = (0..replications)
        .into_par_iter()
        .map(|rep| {
            let mut s = *spec;
            s.seed = derive_seed(master_seed, rep as u64);
            let (data, _) = generate(&s)?;
            let kept: Vec<usize> = match method {
                ScreenMethod::Correlation => correlation_ranking(&data, budget),
                ScreenMethod::SisStar => {
                    let scheme = build_slices(&data.response().to_vec(), cfg.slices)?;
                    sis_star(&data, &scheme, budget)?
                        .into_iter()
                        .map(|sc| sc.index)
                        .collect()
                }
                ScreenMethod::Iterative => {
                    let mut hyper = HyperParams::with_alpha(cfg.q, alpha);
                    hyper.slices = cfg.slices;
                    hyper.budget = Some(budget);
                    let scheme = build_slices(&data.response().to_vec(), cfg.slices)?;
                    let state = siri_with_scheme(&data, &scheme, &hyper)?;
                    state.screened_union().into_iter().collect()
                }
            };
            Ok(tracked.iter().map(|t| kept.contains(t)).collect::<Vec<bool>>())
        })
        .collect::<Result<_>>()?;

    let names: Vec<String> = tracked.iter().map(|&j| format!("x{}", j + 1)).collect();
    let rates = tracked
        .iter()
        .enumerate()
        .map(|(k, &index)| VarRate {
            index,
            name: names[k].clone(),
            rate: hits.iter().filter(|h| h[k]).count() as f64 / replications as f64,
        })
        .collect();
    Ok(ScreeningReport {
        scenario: spec.id.to_string(),
        method: method.name().to_string(),
        n: spec.n,
        p: spec.p,
        budget,
        replications,
        rates,
        seconds: started.elapsed().as_secs_f64(),
    })
}

/// A selection pipeline to benchmark.
#[derive(Debug, Clone, Copy, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SelectMethod {
    /// Fixed hyperparameters, no cross-validation.
    Fixed { q: usize, alpha: f64 },
    /// Per-replication 10-fold CV over the (q, alpha) grids, CE measure.
    CvCe,
    /// Same with the absolute-error measure.
    CvAe,
}

impl SelectMethod {
    pub fn name(&self) -> String {
        match self {
            SelectMethod::Fixed { q, alpha } => format!("fixed(q={},alpha={})", q, alpha),
            SelectMethod::CvCe => "siri-ce".to_string(),
            SelectMethod::CvAe => "siri-ae".to_string(),
        }
    }
}

/// FP/FN summary of one scenario-method cell.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct BenchReport {
    pub scenario: String,
    pub method: String,
    pub n: usize,
    pub p: usize,
    pub replications: usize,
    pub mean_fp: f64,
    pub se_fp: f64,
    pub mean_fn: f64,
    pub se_fn: f64,
    pub per_rep: Vec<(usize, usize)>,
    pub seconds: f64,
}

fn mean_se(values: &[usize]) -> (f64, f64) {
    let r = values.len() as f64;
    let mean = values.iter().sum::<usize>() as f64 / r;
    if values.len() < 2 {
        return (mean, 0.0);
    }
    let var = values.iter().map(|&v| (v as f64 - mean).powi(2)).sum::<f64>() / (r - 1.0);
    (mean, (var / r).sqrt())
}

/// Runs one selection pipeline on one generated dataset.
pub fn run_selection(
    data: &Dataset,
    method: SelectMethod,
    slices: usize,
    folds: usize,
    cv_seed: u64,
) -> Result<Vec<usize>> {
    match method {
        SelectMethod::Fixed { q, alpha } => {
            let mut hyper = HyperParams::with_alpha(q, alpha);
            hyper.slices = slices;
            let scheme = build_slices(&data.response().to_vec(), slices)?;
            Ok(siri_with_scheme(data, &scheme, &hyper)?.selected)
        }
        SelectMethod::CvCe | SelectMethod::CvAe => {
            let measure = if matches!(method, SelectMethod::CvCe) { Measure::Ce } else { Measure::Ae };
            let mut base = HyperParams::with_alpha(0, 0.999);
            base.slices = slices;
            let q_grid: Vec<usize> = (0..=4).collect();
            let alphas = alpha_grid(data.p());
            let (_, _, state) = cv_select(data, &q_grid, &alphas, &base, folds, measure, cv_seed)?;
            Ok(state.selected)
        }
    }
}

/// The FP/FN table: for every scenario and method, R replications of
/// generate, select, count. Per-replication seeds derive from the master
/// seed, so parallel execution never changes results.
pub fn run_table(
    specs: &[ScenarioSpec],
    methods: &[SelectMethod],
    replications: usize,
    master_seed: u64,
) -> Result<Vec<BenchReport>> {
    if replications == 0 {
        return Err(Error::InvalidArgument("need at least one replication".into()));
    }
    let mut reports = Vec::new();
    for (si, spec) in specs.iter().enumerate() {
        for &method in methods {
            let started = Instant::now();
            let cell_seed = derive_seed(master_seed, si as u64);
            let per_rep: Vec<(usize, usize)> = (0..replications)
                .into_par_iter()
                .map(|rep| {
                    let mut s = *spec;
                    s.seed = derive_seed(cell_seed, rep as u64);
                    let (data, truth) = generate(&s)?;
                    let selected = run_selection(
                        &data,
                        method,
                        5,
                        10,
                        derive_seed(s.seed, 101),
                    )?;
                    Ok(fp_fn(&selected, &truth, s.p))
                })
                .collect::<Result<_>>()?;
            let fps: Vec<usize> = per_rep.iter().map(|&(a, _)| a).collect();
            let fns: Vec<usize> = per_rep.iter().map(|&(_, b)| b).collect();
            let (mean_fp, se_fp) = mean_se(&fps);
            let (mean_fn, se_fn) = mean_se(&fns);
            reports.push(BenchReport {
                scenario: spec.id.to_string(),
                method: method.name(),
                n: spec.n,
                p: spec.p,
                replications,
                mean_fp,
                se_fp,
                mean_fn,
                se_fn,
                per_rep,
                seconds: started.elapsed().as_secs_f64(),
            });
        }
    }
    Ok(reports)
}

/// Aligned-column text rendering of FP/FN reports.
pub fn format_table(reports: &[BenchReport]) -> String {
    let mut out = String::new();
    out.push_str(&format!(
        "{:<10} {:<24} {:>6} {:>6} {:>4} {:>12} {:>12} {:>9}\n",
        "scenario", "method", "n", "p", "R", "FP (se)", "FN (se)", "secs"
    ));
    for r in reports {
        out.push_str(&format!(
            "{:<10} {:<24} {:>6} {:>6} {:>4} {:>5.2} ({:<4.2}) {:>5.2} ({:<4.2}) {:>9.1}\n",
            r.scenario,
            r.method,
            r.n,
            r.p,
            r.replications,
            r.mean_fp,
            r.se_fp,
            r.mean_fn,
            r.se_fn,
            r.seconds
        ));
    }
    out
}

/// Text rendering of screening reports.
pub fn format_screening(reports: &[ScreeningReport]) -> String {
    let mut out = String::new();
    for r in reports {
        out.push_str(&format!(
            "scenario {} method {} budget {} R {}:",
            r.scenario, r.method, r.budget, r.replications
        ));
        for v in &r.rates {
            out.push_str(&format!(" {}={:.2}", v.name, v.rate));
        }
        out.push('\n');
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::sim::ScenarioId;

    #[test]
    fn fp_fn_cases() {
        assert_eq!(fp_fn(&[1, 2], &[1, 2], 10), (0, 0));
        assert_eq!(fp_fn(&[1, 2, 3], &[1, 2], 10), (1, 0));
        assert_eq!(fp_fn(&[], &[0, 1, 2, 3, 4, 5, 6, 7], 10), (0, 8));
    }

    #[test]
    fn fp_fn_permutation_symmetry() {
        // Relabeling indices consistently leaves the counts unchanged.
        let perm = |v: &[usize]| -> Vec<usize> { v.iter().map(|&j| (j * 7 + 3) % 97).collect() };
        let selected = [3usize, 10, 25, 40];
        let truth = [10usize, 40, 77];
        let a = fp_fn(&selected, &truth, 97);
        let b = fp_fn(&perm(&selected), &perm(&truth), 97);
        assert_eq!(a, b);
    }

    #[test]
    fn run_table_single_rep_matches_direct_call() {
        let spec = ScenarioSpec::with_defaults(ScenarioId::S2_1, 30, 5);
        let method = SelectMethod::Fixed { q: 0, alpha: 0.999 };
        let reports = run_table(&[spec], &[method], 1, 7).unwrap();
        assert_eq!(reports.len(), 1);
        let mut s = spec;
        s.seed = derive_seed(derive_seed(7, 0), 0);
        let (data, truth) = generate(&s).unwrap();
        let selected = run_selection(&data, method, 5, 10, derive_seed(s.seed, 101)).unwrap();
        let (fp, fn_) = fp_fn(&selected, &truth, s.p);
        assert_eq!(reports[0].per_rep, vec![(fp, fn_)]);
        assert_eq!(reports[0].mean_fp, fp as f64);
        assert_eq!(reports[0].mean_fn, fn_ as f64);
    }

    #[test]
    fn screening_budget_p_includes_everything() {
        let spec = ScenarioSpec::with_defaults(ScenarioId::S2_1, 20, 4);
        let cfg = ScreeningConfig { budget: Some(20), ..Default::default() };
        let r = screening_proportion(&spec, ScreenMethod::SisStar, &cfg, 3, 11).unwrap();
        for v in &r.rates {
            assert_eq!(v.rate, 1.0);
        }
    }

    #[test]
    fn table_formatting_has_rows() {
        let spec = ScenarioSpec::with_defaults(ScenarioId::S2_1, 20, 4);
        let reports =
            run_table(&[spec], &[SelectMethod::Fixed { q: 0, alpha: 0.9999 }], 2, 3).unwrap();
        let text = format_table(&reports);
        assert!(text.lines().count() >= 2);
        assert!(text.contains("2.1"));
    }
}
