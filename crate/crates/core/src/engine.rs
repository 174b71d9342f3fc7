//! Cosine scoring, argmax classification and text-embedding ensembling.

use alloc::string::String;
use alloc::vec::Vec;

use thiserror::Error;

use crate::manifest::TaskType;
use crate::matrix::{EmbeddingMatrix, MatrixError};

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EngineError {
    #[error("dimension mismatch: audio has {audio}, text has {text}")]
    DimMismatch { audio: usize, text: usize },
    #[error("{0} embeddings are not flagged as L2-normalized")]
    NotNormalized(&'static str),
    #[error("score row {0} is empty")]
    EmptyRow(usize),
    #[error("non-finite score at ({row}, {col})")]
    NonFinite { row: usize, col: usize },
    #[error("cannot ensemble an empty list of matrices")]
    EmptyEnsemble,
    #[error("ensemble member {index} is {found:?}, expected {expected:?} (rows, dim)")]
    ShapeMismatch {
        index: usize,
        expected: (usize, usize),
        found: (usize, usize),
    },
    #[error("ensemble member {0} is not normalized")]
    UnnormalizedMember(usize),
    #[error("mean embedding of class {0} has zero norm")]
    ZeroNormMean(usize),
    #[error("score matrix shape {rows}x{cols} does not match {len} values / {sources} sources")]
    ScoreShape {
        rows: usize,
        cols: usize,
        len: usize,
        sources: usize,
    },
    #[error(transparent)]
    Matrix(#[from] MatrixError),
}

/// `N x K` similarity scores between audio rows and class columns.
///
/// Each column remembers which text setup produced it; a composed matrix
/// may draw different columns from different setups.
#[derive(Debug, Clone, PartialEq)]
pub struct ScoreMatrix {
    rows: usize,
    cols: usize,
    values: Vec<f64>,
    sources: Vec<String>,
}

impl ScoreMatrix {
    pub fn new(
        rows: usize,
        cols: usize,
        values: Vec<f64>,
        sources: Vec<String>,
    ) -> Result<Self, EngineError> {
        if rows.checked_mul(cols) != Some(values.len()) || sources.len() != cols {
            return Err(EngineError::ScoreShape {
                rows,
                cols,
                len: values.len(),
                sources: sources.len(),
            });
        }
        Ok(Self {
            rows,
            cols,
            values,
            sources,
        })
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn get(&self, row: usize, col: usize) -> f64 {
        self.values[row * self.cols + col]
    }

    pub fn row(&self, row: usize) -> &[f64] {
        &self.values[row * self.cols..(row + 1) * self.cols]
    }

    pub fn column(&self, col: usize) -> impl ExactSizeIterator<Item = f64> + '_ {
        (0..self.rows).map(move |r| self.get(r, col))
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Setup id that produced each column.
    pub fn sources(&self) -> &[String] {
        &self.sources
    }

    /// Tags every column with `source`.
    pub fn with_source(mut self, source: &str) -> Self {
        for s in &mut self.sources {
            s.clear();
            s.push_str(source);
        }
        self
    }

    /// Builds a matrix whose column `k` is column `k` of `parts[choice[k]]`.
    pub fn compose(parts: &[&ScoreMatrix], choice: &[usize]) -> Result<Self, EngineError> {
        let rows = parts.first().map_or(0, |p| p.rows);
        let cols = choice.len();
        let mut values = Vec::with_capacity(rows * cols);
        for r in 0..rows {
            for (k, &p) in choice.iter().enumerate() {
                values.push(parts[p].get(r, k));
            }
        }
        let sources = choice
            .iter()
            .enumerate()
            .map(|(k, &p)| parts[p].sources[k].clone())
            .collect();
        Self::new(rows, cols, values, sources)
    }

    /// Keeps only the given rows, in the given order.
    pub fn select_rows(&self, rows: &[usize]) -> Self {
        let mut values = Vec::with_capacity(rows.len() * self.cols);
        for &r in rows {
            values.extend_from_slice(self.row(r));
        }
        Self {
            rows: rows.len(),
            cols: self.cols,
            values,
            sources: self.sources.clone(),
        }
    }
}

/// Cosine similarity of every audio row against every text row.
///
/// Both inputs must carry the normalized flag, so the dot product is the
/// cosine. Each dot product is accumulated in `f64` in index order and
/// clamped to `[-1, 1]` to absorb rounding.
pub fn similarity(
    audio: &EmbeddingMatrix,
    text: &EmbeddingMatrix,
) -> Result<ScoreMatrix, EngineError> {
    if !audio.is_normalized() {
        return Err(EngineError::NotNormalized("audio"));
    }
    if !text.is_normalized() {
        return Err(EngineError::NotNormalized("text"));
    }
    if audio.dim() != text.dim() {
        return Err(EngineError::DimMismatch {
            audio: audio.dim(),
            text: text.dim(),
        });
    }
    let mut values = Vec::with_capacity(audio.rows() * text.rows());
    for a in audio.iter_rows() {
        for t in text.iter_rows() {
            values.push(dot(a, t).clamp(-1.0, 1.0));
        }
    }
    Ok(ScoreMatrix {
        rows: audio.rows(),
        cols: text.rows(),
        values,
        sources: alloc::vec![String::new(); text.rows()],
    })
}

fn dot(a: &[f32], b: &[f32]) -> f64 {
    a.iter()
        .zip(b)
        .map(|(&x, &y)| f64::from(x) * f64::from(y))
        .fold(0.0, |acc, v| acc + v)
}

/// Index of the highest score in each row; ties go to the lowest index.
pub fn classify(scores: &ScoreMatrix) -> Result<Vec<usize>, EngineError> {
    (0..scores.rows())
        .map(|r| argmax_row(scores.row(r), r))
        .collect()
}

pub(crate) fn argmax_row(row: &[f64], r: usize) -> Result<usize, EngineError> {
    let mut best: Option<(usize, f64)> = None;
    for (k, &v) in row.iter().enumerate() {
        if !v.is_finite() {
            return Err(EngineError::NonFinite { row: r, col: k });
        }
        match best {
            Some((_, b)) if v <= b => {}
            _ => best = Some((k, v)),
        }
    }
    best.map(|(k, _)| k).ok_or(EngineError::EmptyRow(r))
}

/// Per-task prediction: a class per sample, or the ranked score rows.
#[derive(Debug, Clone, PartialEq)]
pub enum Predictions {
    Classes(Vec<usize>),
    Scores(ScoreMatrix),
}

pub fn predict(scores: ScoreMatrix, task: TaskType) -> Result<Predictions, EngineError> {
    match task {
        TaskType::SingleLabel => classify(&scores).map(Predictions::Classes),
        TaskType::MultiLabel => {
            for (i, v) in scores.values().iter().enumerate() {
                if !v.is_finite() {
                    return Err(EngineError::NonFinite {
                        row: i / scores.cols(),
                        col: i % scores.cols(),
                    });
                }
            }
            Ok(Predictions::Scores(scores))
        }
    }
}

/// Averages per-class text embeddings across prompt setups and renormalizes.
///
/// The per-element sum runs over the member values in sorted order, so the
/// result does not depend on the order of `embeddings`. A single member is
/// returned unchanged.
pub fn ensemble_text(embeddings: &[&EmbeddingMatrix]) -> Result<EmbeddingMatrix, EngineError> {
    let first = *embeddings.first().ok_or(EngineError::EmptyEnsemble)?;
    let shape = (first.rows(), first.dim());
    for (index, m) in embeddings.iter().enumerate() {
        if (m.rows(), m.dim()) != shape {
            return Err(EngineError::ShapeMismatch {
                index,
                expected: shape,
                found: (m.rows(), m.dim()),
            });
        }
        if !m.is_normalized() {
            return Err(EngineError::UnnormalizedMember(index));
        }
    }
    if embeddings.len() == 1 {
        return Ok(first.clone());
    }

    let (rows, dim) = shape;
    let count = embeddings.len() as f64;
    let mut column = Vec::with_capacity(embeddings.len());
    let mut mean = alloc::vec![0f64; dim];
    let mut values = Vec::with_capacity(rows * dim);
    for r in 0..rows {
        for (j, slot) in mean.iter_mut().enumerate() {
            column.clear();
            column.extend(embeddings.iter().map(|m| f64::from(m.row(r)[j])));
            column.sort_unstable_by(f64::total_cmp);
            *slot = column.iter().fold(0.0, |acc, v| acc + v) / count;
        }
        let norm = libm::sqrt(mean.iter().map(|v| v * v).fold(0.0, |acc, v| acc + v));
        if norm == 0.0 {
            return Err(EngineError::ZeroNormMean(r));
        }
        values.extend(mean.iter().map(|v| (v / norm) as f32));
    }
    Ok(EmbeddingMatrix::new_normalized(rows, dim, values)?)
}
