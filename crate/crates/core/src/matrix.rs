//! Dense row-major `f32` embedding matrices.

use alloc::vec::Vec;

use thiserror::Error;

/// Maximum deviation of a row's Euclidean norm from 1.0 for a matrix to be
/// accepted as normalized.
pub const NORM_TOLERANCE: f64 = 1e-4;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MatrixError {
    #[error("shape {rows}x{dim} needs {expected} values, got {found}")]
    Shape {
        rows: usize,
        dim: usize,
        expected: usize,
        found: usize,
    },
    #[error("non-finite value at row {row}, column {col}")]
    NonFinite { row: usize, col: usize },
    #[error("row {row} has zero norm")]
    ZeroNorm { row: usize },
    #[error("row {row} has norm {norm}, expected 1 within {NORM_TOLERANCE}")]
    NotNormalized { row: usize, norm: f64 },
}

/// A `rows x dim` matrix of audio or text embeddings, one embedding per row.
///
/// Values are always finite. When `normalized` is set every row has unit
/// Euclidean norm within [`NORM_TOLERANCE`].
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingMatrix {
    rows: usize,
    dim: usize,
    values: Vec<f32>,
    normalized: bool,
}

impl EmbeddingMatrix {
    /// Builds an unnormalized matrix, checking shape and finiteness.
    pub fn new(rows: usize, dim: usize, values: Vec<f32>) -> Result<Self, MatrixError> {
        let expected = rows.checked_mul(dim).ok_or(MatrixError::Shape {
            rows,
            dim,
            expected: usize::MAX,
            found: values.len(),
        })?;
        if expected != values.len() {
            return Err(MatrixError::Shape {
                rows,
                dim,
                expected,
                found: values.len(),
            });
        }
        if let Some(pos) = values.iter().position(|v| !v.is_finite()) {
            return Err(MatrixError::NonFinite {
                row: pos / dim,
                col: pos % dim,
            });
        }
        Ok(Self {
            rows,
            dim,
            values,
            normalized: false,
        })
    }

    /// Builds a matrix and marks it normalized after checking every row norm.
    pub fn new_normalized(rows: usize, dim: usize, values: Vec<f32>) -> Result<Self, MatrixError> {
        Self::new(rows, dim, values)?.mark_normalized()
    }

    pub fn from_rows<R: AsRef<[f32]>>(rows: &[R]) -> Result<Self, MatrixError> {
        let dim = rows.first().map_or(0, |r| r.as_ref().len());
        let mut values = Vec::with_capacity(rows.len() * dim);
        for (i, row) in rows.iter().enumerate() {
            let row = row.as_ref();
            if row.len() != dim {
                return Err(MatrixError::Shape {
                    rows: rows.len(),
                    dim,
                    expected: (i + 1) * dim,
                    found: values.len() + row.len(),
                });
            }
            values.extend_from_slice(row);
        }
        Self::new(rows.len(), dim, values)
    }

    /// Sets the normalized flag, failing if any row is not unit-norm.
    pub fn mark_normalized(mut self) -> Result<Self, MatrixError> {
        for row in 0..self.rows {
            let norm = row_norm(self.row(row));
            if (norm - 1.0).abs() > NORM_TOLERANCE {
                return Err(MatrixError::NotNormalized { row, norm });
            }
        }
        self.normalized = true;
        Ok(self)
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn is_normalized(&self) -> bool {
        self.normalized
    }

    pub fn values(&self) -> &[f32] {
        &self.values
    }

    pub fn into_values(self) -> Vec<f32> {
        self.values
    }

    /// Row `i`. Panics if `i >= rows`.
    pub fn row(&self, i: usize) -> &[f32] {
        &self.values[i * self.dim..(i + 1) * self.dim]
    }

    pub fn iter_rows(&self) -> impl ExactSizeIterator<Item = &[f32]> + '_ {
        (0..self.rows).map(move |i| self.row(i))
    }
}

/// Euclidean norm accumulated in `f64`, left to right.
pub(crate) fn row_norm(row: &[f32]) -> f64 {
    libm::sqrt(
        row.iter()
            .map(|&v| f64::from(v) * f64::from(v))
            .sum::<f64>(),
    )
}

/// Scales every row to unit Euclidean norm.
///
/// Zero rows are rejected rather than skipped: cosine similarity is undefined
/// for them.
pub fn l2_normalize(matrix: &EmbeddingMatrix) -> Result<EmbeddingMatrix, MatrixError> {
    let mut values = Vec::with_capacity(matrix.values.len());
    for (row, data) in matrix.iter_rows().enumerate() {
        let norm = row_norm(data);
        if norm == 0.0 {
            return Err(MatrixError::ZeroNorm { row });
        }
        values.extend(data.iter().map(|&v| (f64::from(v) / norm) as f32));
    }
    Ok(EmbeddingMatrix {
        rows: matrix.rows,
        dim: matrix.dim,
        values,
        normalized: true,
    })
}
