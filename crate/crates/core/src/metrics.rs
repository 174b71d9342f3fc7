//! Accuracy, per-class recall, average precision and mAP.
//!
//! Average precision is the non-interpolated "precision at each positive
//! rank" variant: samples are ranked by descending score (ties by ascending
//! sample index) and precision is averaged over the ranks of the positives.
//! Classes without positives have no defined AP; they are left out of the
//! mean and listed in [`MetricReport::skipped_classes`].

use alloc::string::String;
use alloc::vec::Vec;
use core::cmp::Ordering;

use serde::Serialize;
use thiserror::Error;

use crate::engine::ScoreMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum MetricError {
    #[error("length mismatch: {predictions} predictions vs {truth} ground-truth entries")]
    LengthMismatch { predictions: usize, truth: usize },
    #[error("no samples to evaluate")]
    Empty,
    #[error("class index {index} out of range for {n_classes} classes")]
    ClassOutOfRange { index: usize, n_classes: usize },
    #[error("no positive samples")]
    NoPositives,
    #[error("no class has a positive sample")]
    NoPositiveClass,
    #[error("non-finite score for sample {0}")]
    NonFinite(usize),
    #[error("cannot compare a {a:?} report with a {b:?} report")]
    KindMismatch { a: MetricKind, b: MetricKind },
    #[error("reports cover different class sets")]
    ClassSetMismatch,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum MetricKind {
    Accuracy,
    #[serde(rename = "map")]
    MeanAveragePrecision,
}

impl MetricKind {
    pub fn per_class_kind(self) -> PerClassKind {
        match self {
            MetricKind::Accuracy => PerClassKind::Recall,
            MetricKind::MeanAveragePrecision => PerClassKind::AveragePrecision,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum PerClassKind {
    Recall,
    AveragePrecision,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PerClassPerformance {
    pub class_index: usize,
    pub value: f64,
    #[serde(skip)]
    pub kind: PerClassKind,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricReport {
    pub overall: f64,
    pub kind: MetricKind,
    pub per_class: Vec<PerClassPerformance>,
    pub skipped_classes: Vec<usize>,
    pub n_samples: usize,
}

impl MetricReport {
    /// Per-class values indexed by class, `None` where undefined.
    pub fn per_class_values(&self, n_classes: usize) -> Vec<Option<f64>> {
        let mut out = alloc::vec![None; n_classes];
        for p in &self.per_class {
            if let Some(slot) = out.get_mut(p.class_index) {
                *slot = Some(p.value);
            }
        }
        out
    }
}

/// Fraction of correct predictions, with per-class recall.
///
/// Classes that never occur in `truth` have no recall and are reported in
/// `skipped_classes`.
pub fn accuracy(
    predictions: &[usize],
    truth: &[usize],
    n_classes: usize,
) -> Result<MetricReport, MetricError> {
    if predictions.len() != truth.len() {
        return Err(MetricError::LengthMismatch {
            predictions: predictions.len(),
            truth: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(MetricError::Empty);
    }
    let mut support = alloc::vec![0usize; n_classes];
    let mut hits = alloc::vec![0usize; n_classes];
    let mut correct = 0usize;
    for (&p, &t) in predictions.iter().zip(truth) {
        for index in [p, t] {
            if index >= n_classes {
                return Err(MetricError::ClassOutOfRange { index, n_classes });
            }
        }
        support[t] += 1;
        if p == t {
            hits[t] += 1;
            correct += 1;
        }
    }
    let mut per_class = Vec::new();
    let mut skipped_classes = Vec::new();
    for c in 0..n_classes {
        if support[c] == 0 {
            skipped_classes.push(c);
        } else {
            per_class.push(PerClassPerformance {
                class_index: c,
                value: hits[c] as f64 / support[c] as f64,
                kind: PerClassKind::Recall,
            });
        }
    }
    Ok(MetricReport {
        overall: correct as f64 / truth.len() as f64,
        kind: MetricKind::Accuracy,
        per_class,
        skipped_classes,
        n_samples: truth.len(),
    })
}

/// Non-interpolated average precision of one class.
pub fn average_precision(scores: &[f64], relevant: &[bool]) -> Result<f64, MetricError> {
    if scores.len() != relevant.len() {
        return Err(MetricError::LengthMismatch {
            predictions: scores.len(),
            truth: relevant.len(),
        });
    }
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(MetricError::NonFinite(i));
    }
    let positives = relevant.iter().filter(|&&r| r).count();
    if positives == 0 {
        return Err(MetricError::NoPositives);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    // Stable sort keeps ascending index among equal scores.
    order.sort_by(|&a, &b| scores[b].partial_cmp(&scores[a]).unwrap_or(Ordering::Equal));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank0, &i) in order.iter().enumerate() {
        if relevant[i] {
            hits += 1;
            sum += hits as f64 / (rank0 + 1) as f64;
        }
        if hits == positives {
            break;
        }
    }
    Ok(sum / positives as f64)
}

/// Unweighted mean of per-class AP over classes with at least one positive.
///
/// `truth[i]` is the class set of score row `i`.
pub fn mean_average_precision<T: AsRef<[usize]>>(
    scores: &ScoreMatrix,
    truth: &[T],
) -> Result<MetricReport, MetricError> {
    if scores.rows() != truth.len() {
        return Err(MetricError::LengthMismatch {
            predictions: scores.rows(),
            truth: truth.len(),
        });
    }
    if truth.is_empty() {
        return Err(MetricError::Empty);
    }
    let n_classes = scores.cols();
    let mut relevant = alloc::vec![alloc::vec![false; truth.len()]; n_classes];
    for (i, set) in truth.iter().enumerate() {
        for &c in set.as_ref() {
            if c >= n_classes {
                return Err(MetricError::ClassOutOfRange {
                    index: c,
                    n_classes,
                });
            }
            relevant[c][i] = true;
        }
    }
    let mut per_class = Vec::new();
    let mut skipped_classes = Vec::new();
    let mut column = Vec::with_capacity(truth.len());
    for (c, rel) in relevant.iter().enumerate() {
        column.clear();
        column.extend(scores.column(c));
        match average_precision(&column, rel) {
            Ok(value) => per_class.push(PerClassPerformance {
                class_index: c,
                value,
                kind: PerClassKind::AveragePrecision,
            }),
            Err(MetricError::NoPositives) => skipped_classes.push(c),
            Err(e) => return Err(e),
        }
    }
    if per_class.is_empty() {
        return Err(MetricError::NoPositiveClass);
    }
    let overall = per_class.iter().fold(0.0, |acc, p| acc + p.value) / per_class.len() as f64;
    Ok(MetricReport {
        overall,
        kind: MetricKind::MeanAveragePrecision,
        per_class,
        skipped_classes,
        n_samples: truth.len(),
    })
}

/// Per-class change from `a` to `b`, in percentage points.
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassDelta {
    pub class_index: usize,
    pub delta: f64,
}

/// Per-class deltas `100 * (b - a)`, largest improvement first. Equal deltas
/// keep ascending class order.
pub fn per_class_table(a: &MetricReport, b: &MetricReport) -> Result<Vec<ClassDelta>, MetricError> {
    if a.kind != b.kind {
        return Err(MetricError::KindMismatch {
            a: a.kind,
            b: b.kind,
        });
    }
    if a.per_class.len() != b.per_class.len()
        || a.per_class
            .iter()
            .zip(&b.per_class)
            .any(|(x, y)| x.class_index != y.class_index)
    {
        return Err(MetricError::ClassSetMismatch);
    }
    let mut rows: Vec<ClassDelta> = a
        .per_class
        .iter()
        .zip(&b.per_class)
        .map(|(x, y)| ClassDelta {
            class_index: x.class_index,
            delta: 100.0 * (y.value - x.value),
        })
        .collect();
    rows.sort_by(|x, y| y.delta.partial_cmp(&x.delta).unwrap_or(Ordering::Equal));
    Ok(rows)
}

/// `"<label> +40.12"` style row.
pub fn format_delta_row(label: &str, delta: f64) -> String {
    alloc::format!("{label} {delta:+.2}")
}
