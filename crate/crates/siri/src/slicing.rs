//! Partition of observations into response slices.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-slice guidance: below this count a scheme is flagged as thin.
pub const RECOMMENDED_MIN_SLICE: usize = 40;

/// How new response values are mapped to slices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub enum SliceBoundaries {
    /// H-1 cut points; intervals are left-closed/right-open and values
    /// beyond the extremes map to the end slices.
    Continuous(Vec<f64>),
    /// Distinct class labels in first-appearance order.
    Discrete(Vec<f64>),
}

/// A partition of n observations into H response slices.
#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct SlicingScheme {
    h: usize,
    membership: Vec<usize>,
    counts: Vec<usize>,
    weights: Vec<f64>,
    boundaries: SliceBoundaries,
}

impl SlicingScheme {
    pub fn h(&self) -> usize {
        self.h
    }

    pub fn n(&self) -> usize {
        self.membership.len()
    }

    /// Slice id (0-based) of each training observation.
    pub fn membership(&self) -> &[usize] {
        &self.membership
    }

    pub fn counts(&self) -> &[usize] {
        &self.counts
    }

    /// s_h = n_h / n, summing to one.
    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn boundaries(&self) -> &SliceBoundaries {
        &self.boundaries
    }

    pub fn min_count(&self) -> usize {
        self.counts.iter().copied().min().unwrap_or(0)
    }

    /// True when some slice is below the recommended 40-observation floor.
    pub fn is_thin(&self) -> bool {
        self.min_count() < RECOMMENDED_MIN_SLICE
    }

    /// Row indices belonging to each slice, in original order.
    pub fn slice_rows(&self) -> Vec<Vec<usize>> {
        let mut rows = vec![Vec::new(); self.h];
        for (i, &s) in self.membership.iter().enumerate() {
            rows[s].push(i);
        }
        rows
    }
}

/// Equal-size slices by response order. The first (n mod H) slices receive
/// one extra observation; ties in y are broken by original index.
pub fn build_slices(y: &[f64], h: usize) -> Result<SlicingScheme> {
    let n = y.len();
    if h < 1 {
        return Err(Error::InvalidArgument("slice count must be at least 1".into()));
    }
    if h > n {
        return Err(Error::InvalidArgument(format!(
            "cannot form {} slices from {} observations",
            h, n
        )));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| y[a].partial_cmp(&y[b]).unwrap().then(a.cmp(&b)));
    let base = n / h;
    let rem = n % h;
    let mut membership = vec![0usize; n];
    let mut counts = Vec::with_capacity(h);
    let mut cuts = Vec::with_capacity(h.saturating_sub(1));
    let mut pos = 0usize;
    for s in 0..h {
        let c = base + usize::from(s < rem);
        for &i in &order[pos..pos + c] {
            membership[i] = s;
        }
        pos += c;
        counts.push(c);
        if s + 1 < h {
            cuts.push(y[order[pos]]);
        }
    }
    let weights = counts.iter().map(|&c| c as f64 / n as f64).collect();
    Ok(SlicingScheme {
        h,
        membership,
        counts,
        weights,
        boundaries: SliceBoundaries::Continuous(cuts),
    })
}

/// One slice per distinct label, ordered by first appearance. Labels are
/// compared exactly.
pub fn build_slices_discrete(y: &[f64]) -> Result<SlicingScheme> {
    if y.is_empty() {
        return Err(Error::EmptySample);
    }
    let mut labels: Vec<f64> = Vec::new();
    let mut membership = Vec::with_capacity(y.len());
    for &v in y {
        let s = match labels.iter().position(|&l| l == v) {
            Some(s) => s,
            None => {
                labels.push(v);
                labels.len() - 1
            }
        };
        membership.push(s);
    }
    let h = labels.len();
    let mut counts = vec![0usize; h];
    for &s in &membership {
        counts[s] += 1;
    }
    let n = y.len();
    let weights = counts.iter().map(|&c| c as f64 / n as f64).collect();
    Ok(SlicingScheme {
        h,
        membership,
        counts,
        weights,
        boundaries: SliceBoundaries::Discrete(labels),
    })
}

/// Slice id for a new response value under a trained scheme.
pub fn assign_slice(scheme: &SlicingScheme, y_new: f64) -> Result<usize> {
    match &scheme.boundaries {
        SliceBoundaries::Continuous(cuts) => {
            // Left-closed/right-open: a value equal to a cut belongs to the
            // slice on the right; values beyond the extremes clamp.
            let mut s = 0usize;
            while s < cuts.len() && y_new >= cuts[s] {
                s += 1;
            }
            Ok(s)
        }
        SliceBoundaries::Discrete(labels) => labels
            .iter()
            .position(|&l| l == y_new)
            .ok_or_else(|| Error::UnknownClass(format!("{}", y_new))),
    }
}
