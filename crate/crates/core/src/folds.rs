//! Deterministic k-fold assignment.

use alloc::vec::Vec;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use thiserror::Error;

use crate::manifest::{DatasetManifest, TaskType};

pub const DEFAULT_FOLDS: usize = 5;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum FoldError {
    #[error("need at least 1 fold")]
    ZeroFolds,
    #[error("{n_samples} samples cannot fill {n_folds} folds")]
    TooFewSamples { n_samples: usize, n_folds: usize },
}

/// Fold index of every manifest sample, in manifest sample order.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct FoldPlan {
    pub n_folds: usize,
    pub seed: u64,
    pub assignment: Vec<usize>,
}

impl FoldPlan {
    /// Sample positions (manifest order) held out in `fold`.
    pub fn test_samples(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] == fold)
            .collect()
    }

    /// Sample positions used for training when `fold` is held out.
    pub fn train_samples(&self, fold: usize) -> Vec<usize> {
        (0..self.assignment.len())
            .filter(|&i| self.assignment[i] != fold)
            .collect()
    }

    pub fn fold_sizes(&self) -> Vec<usize> {
        let mut sizes = alloc::vec![0; self.n_folds];
        for &f in &self.assignment {
            sizes[f] += 1;
        }
        sizes
    }
}

/// Splits the manifest's samples into `n_folds` folds.
///
/// Single-label data is stratified: each class's samples are shuffled and
/// dealt round-robin, so a class with at least `n_folds` samples appears in
/// every fold. Classes smaller than `n_folds` are pooled, shuffled and dealt
/// after them. Multi-label data is shuffled once and cut into contiguous
/// folds. The deal cursor never resets, so fold sizes differ by at most one.
pub fn make_folds(
    manifest: &DatasetManifest,
    n_folds: usize,
    seed: u64,
) -> Result<FoldPlan, FoldError> {
    let n = manifest.n_samples();
    if n_folds == 0 {
        return Err(FoldError::ZeroFolds);
    }
    if n < n_folds {
        return Err(FoldError::TooFewSamples {
            n_samples: n,
            n_folds,
        });
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut assignment = alloc::vec![0usize; n];
    match manifest.task_type() {
        TaskType::SingleLabel => {
            let mut by_class: Vec<Vec<usize>> = alloc::vec![Vec::new(); manifest.n_classes()];
            for (i, s) in manifest.samples().iter().enumerate() {
                by_class[s.truth[0]].push(i);
            }
            let mut order = Vec::with_capacity(n);
            let mut small = Vec::new();
            for mut members in by_class {
                members.shuffle(&mut rng);
                if members.len() >= n_folds {
                    order.extend(members);
                } else {
                    small.extend(members);
                }
            }
            small.sort_unstable();
            small.shuffle(&mut rng);
            order.extend(small);
            for (pos, i) in order.into_iter().enumerate() {
                assignment[i] = pos % n_folds;
            }
        }
        TaskType::MultiLabel => {
            let mut order: Vec<usize> = (0..n).collect();
            order.shuffle(&mut rng);
            for f in 0..n_folds {
                for &i in &order[f * n / n_folds..(f + 1) * n / n_folds] {
                    assignment[i] = f;
                }
            }
        }
    }
    Ok(FoldPlan {
        n_folds,
        seed,
        assignment,
    })
}
