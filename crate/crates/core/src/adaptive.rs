//! Adaptive class-description selection.
//!
//! For every class, pick between the label-only prompt and one or more
//! label + description prompts, using per-class performance measured on
//! training folds. A description setup replaces the baseline only when it is
//! strictly better; equal performance keeps the baseline. With several
//! description setups the best one wins and ties go to the earlier setup in
//! priority order (baseline first, then the order the setups were given).
//!
//! Training performance is always measured under uniform setups (every
//! class prompted the same way). The composed, mixed setup only exists at
//! application time, so its own training performance is never optimized and
//! carries no monotonicity guarantee.

use alloc::string::{String, ToString};
use alloc::vec::Vec;

use serde::Serialize;
use thiserror::Error;

use crate::engine::{argmax_row, similarity, EngineError, ScoreMatrix};
use crate::folds::FoldPlan;
use crate::manifest::{DatasetManifest, TaskType};
use crate::matrix::EmbeddingMatrix;
use crate::metrics::{
    accuracy, average_precision, mean_average_precision, per_class_table, ClassDelta, MetricError,
    MetricKind, MetricReport,
};
use crate::prompt::PromptSpec;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum AdaptiveError {
    #[error("no candidate setups given")]
    NoSetups,
    #[error("baseline setup `{0}` is missing")]
    MissingBaseline(String),
    #[error("duplicate setup id `{0}`")]
    DuplicateSetup(String),
    #[error("setup `{setup}` covers {found} classes, expected {expected}")]
    CoverageMismatch {
        setup: String,
        expected: usize,
        found: usize,
    },
    #[error("selection map refers to unknown setup `{0}`")]
    DanglingSetup(String),
    #[error("sample subset is empty")]
    EmptySubset,
    #[error("accuracy needs single-label ground truth")]
    AccuracyOnMultiLabel,
    #[error("fold plan covers {plan} samples, manifest has {manifest}")]
    FoldMismatch { plan: usize, manifest: usize },
    #[error(transparent)]
    Engine(#[from] EngineError),
    #[error(transparent)]
    Metric(#[from] MetricError),
}

/// A text-embedding set competing for classes.
#[derive(Debug, Clone, PartialEq)]
pub struct CandidateSetup {
    pub setup_id: String,
    pub text: EmbeddingMatrix,
    pub spec: PromptSpec,
}

/// The setup chosen for each class, indexed by class.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SelectionMap {
    pub baseline: String,
    pub choices: Vec<String>,
}

impl SelectionMap {
    pub fn all_baseline(baseline: &str, n_classes: usize) -> Self {
        Self {
            baseline: baseline.to_string(),
            choices: alloc::vec![baseline.to_string(); n_classes],
        }
    }

    /// Classes whose choice differs from the baseline.
    pub fn switched_classes(&self) -> Vec<usize> {
        (0..self.choices.len())
            .filter(|&k| self.choices[k] != self.baseline)
            .collect()
    }
}

/// Natural per-class metric of a task: recall for single-label, AP for
/// multi-label.
pub fn default_metric(task: TaskType) -> MetricKind {
    match task {
        TaskType::SingleLabel => MetricKind::Accuracy,
        TaskType::MultiLabel => MetricKind::MeanAveragePrecision,
    }
}

/// Per-class performance of one setup's scores on a subset of samples
/// (positions in manifest order). `None` marks classes that are undefined on
/// the subset: no member for recall, no positive for AP.
pub fn per_class_perf(
    scores: &ScoreMatrix,
    manifest: &DatasetManifest,
    subset: &[usize],
) -> Result<Vec<Option<f64>>, AdaptiveError> {
    per_class_perf_with(
        scores,
        manifest,
        subset,
        default_metric(manifest.task_type()),
    )
}

pub fn per_class_perf_with(
    scores: &ScoreMatrix,
    manifest: &DatasetManifest,
    subset: &[usize],
    kind: MetricKind,
) -> Result<Vec<Option<f64>>, AdaptiveError> {
    if subset.is_empty() {
        return Err(AdaptiveError::EmptySubset);
    }
    let k = manifest.n_classes();
    let samples = manifest.samples();
    match kind {
        MetricKind::Accuracy => {
            if manifest.task_type() != TaskType::SingleLabel {
                return Err(AdaptiveError::AccuracyOnMultiLabel);
            }
            let mut support = alloc::vec![0usize; k];
            let mut hits = alloc::vec![0usize; k];
            for &i in subset {
                let s = &samples[i];
                let t = s.truth[0];
                support[t] += 1;
                if argmax_row(scores.row(s.row), s.row)? == t {
                    hits[t] += 1;
                }
            }
            Ok((0..k)
                .map(|c| (support[c] > 0).then(|| hits[c] as f64 / support[c] as f64))
                .collect())
        }
        MetricKind::MeanAveragePrecision => {
            let mut column = Vec::with_capacity(subset.len());
            let mut relevant = Vec::with_capacity(subset.len());
            (0..k)
                .map(|c| {
                    column.clear();
                    relevant.clear();
                    for &i in subset {
                        let s = &samples[i];
                        column.push(scores.get(s.row, c));
                        relevant.push(s.truth.contains(&c));
                    }
                    match average_precision(&column, &relevant) {
                        Ok(v) => Ok(Some(v)),
                        Err(MetricError::NoPositives) => Ok(None),
                        Err(e) => Err(e.into()),
                    }
                })
                .collect()
        }
    }
}

/// Evaluates scores on a subset of samples (positions in manifest order).
pub fn evaluate_subset(
    scores: &ScoreMatrix,
    manifest: &DatasetManifest,
    subset: &[usize],
    kind: MetricKind,
) -> Result<MetricReport, AdaptiveError> {
    if subset.is_empty() {
        return Err(AdaptiveError::EmptySubset);
    }
    let samples = manifest.samples();
    match kind {
        MetricKind::Accuracy => {
            if manifest.task_type() != TaskType::SingleLabel {
                return Err(AdaptiveError::AccuracyOnMultiLabel);
            }
            let mut predictions = Vec::with_capacity(subset.len());
            let mut truth = Vec::with_capacity(subset.len());
            for &i in subset {
                let s = &samples[i];
                predictions.push(argmax_row(scores.row(s.row), s.row)?);
                truth.push(s.truth[0]);
            }
            Ok(accuracy(&predictions, &truth, manifest.n_classes())?)
        }
        MetricKind::MeanAveragePrecision => {
            let rows: Vec<usize> = subset.iter().map(|&i| samples[i].row).collect();
            let truth: Vec<&[usize]> = subset.iter().map(|&i| &samples[i].truth[..]).collect();
            Ok(mean_average_precision(&scores.select_rows(&rows), &truth)?)
        }
    }
}

/// Chooses a setup per class from training performance.
///
/// `perf_by_setup` lists `(setup_id, per-class performance)` in tie-break
/// priority order; the baseline always has top priority regardless of its
/// position. Classes where the baseline is undefined stay on the baseline.
pub fn build_selection_map<P: AsRef<[Option<f64>]>>(
    perf_by_setup: &[(&str, P)],
    baseline_id: &str,
) -> Result<SelectionMap, AdaptiveError> {
    let (_, baseline) = perf_by_setup
        .iter()
        .find(|(id, _)| *id == baseline_id)
        .ok_or_else(|| AdaptiveError::MissingBaseline(baseline_id.to_string()))?;
    let baseline = baseline.as_ref();
    let k = baseline.len();
    for (i, (id, perf)) in perf_by_setup.iter().enumerate() {
        if perf_by_setup[..i].iter().any(|(other, _)| other == id) {
            return Err(AdaptiveError::DuplicateSetup(id.to_string()));
        }
        if perf.as_ref().len() != k {
            return Err(AdaptiveError::CoverageMismatch {
                setup: id.to_string(),
                expected: k,
                found: perf.as_ref().len(),
            });
        }
    }

    let mut map = SelectionMap::all_baseline(baseline_id, k);
    for (c, choice) in map.choices.iter_mut().enumerate() {
        let Some(mut best) = baseline[c] else {
            continue;
        };
        for (id, perf) in perf_by_setup.iter().filter(|(id, _)| *id != baseline_id) {
            if let Some(v) = perf.as_ref()[c] {
                if v > best {
                    best = v;
                    *choice = id.to_string();
                }
            }
        }
    }
    Ok(map)
}

fn compose(
    map: &SelectionMap,
    ids: &[&str],
    scores: &[&ScoreMatrix],
) -> Result<ScoreMatrix, AdaptiveError> {
    let choice = map
        .choices
        .iter()
        .map(|c| {
            ids.iter()
                .position(|id| id == c)
                .ok_or_else(|| AdaptiveError::DanglingSetup(c.clone()))
        })
        .collect::<Result<Vec<_>, _>>()?;
    for (id, s) in ids.iter().zip(scores) {
        if s.cols() != map.choices.len() {
            return Err(AdaptiveError::CoverageMismatch {
                setup: id.to_string(),
                expected: map.choices.len(),
                found: s.cols(),
            });
        }
    }
    Ok(ScoreMatrix::compose(scores, &choice)?)
}

/// Scores `audio` against a per-class mix of setups: column `k` comes from
/// the setup the map chose for class `k`.
pub fn apply_selection(
    map: &SelectionMap,
    setups: &[CandidateSetup],
    audio: &EmbeddingMatrix,
) -> Result<ScoreMatrix, AdaptiveError> {
    let mut ids: Vec<&str> = Vec::new();
    let mut scores = Vec::new();
    for id in &map.choices {
        if ids.contains(&id.as_str()) {
            continue;
        }
        let setup = setups
            .iter()
            .find(|s| &s.setup_id == id)
            .ok_or_else(|| AdaptiveError::DanglingSetup(id.clone()))?;
        ids.push(id.as_str());
        scores.push(similarity(audio, &setup.text)?.with_source(id));
    }
    let refs: Vec<&ScoreMatrix> = scores.iter().collect();
    compose(map, &ids, &refs)
}

/// One held-out fold of a cross-validated run.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldOutcome {
    pub fold: usize,
    pub n_train: usize,
    pub n_test: usize,
    pub map: SelectionMap,
    /// Classes absent from the training portion; they fall back to baseline.
    pub undefined_classes: Vec<usize>,
    pub report: MetricReport,
    pub baseline_report: MetricReport,
}

/// Result of cross-validated adaptive selection.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EvalReport {
    pub baseline: String,
    pub setups: Vec<String>,
    pub kind: MetricKind,
    pub folds: Vec<FoldOutcome>,
    /// Unweighted mean of the per-fold composed scores.
    pub mean: f64,
    /// Unweighted mean of the per-fold baseline scores.
    pub baseline_mean: f64,
    /// Every sample scored by the map of the fold that held it out.
    pub pooled: MetricReport,
    pub baseline_pooled: MetricReport,
    /// Per-class change from baseline to the pooled composed setup.
    pub deltas: Vec<ClassDelta>,
}

/// Cross-validated adaptive selection: for each fold, build the map on the
/// other folds and evaluate the composed setup on the held-out one.
///
/// Setups are listed in tie-break priority order.
pub fn crossval_evaluate(
    setups: &[CandidateSetup],
    audio: &EmbeddingMatrix,
    manifest: &DatasetManifest,
    folds: &FoldPlan,
    baseline: &str,
    kind: MetricKind,
) -> Result<EvalReport, AdaptiveError> {
    if setups.is_empty() {
        return Err(AdaptiveError::NoSetups);
    }
    if folds.assignment.len() != manifest.n_samples() {
        return Err(AdaptiveError::FoldMismatch {
            plan: folds.assignment.len(),
            manifest: manifest.n_samples(),
        });
    }
    let k = manifest.n_classes();
    let mut ids: Vec<&str> = Vec::with_capacity(setups.len());
    let mut scores = Vec::with_capacity(setups.len());
    for s in setups {
        if ids.contains(&s.setup_id.as_str()) {
            return Err(AdaptiveError::DuplicateSetup(s.setup_id.clone()));
        }
        if s.text.rows() != k {
            return Err(AdaptiveError::CoverageMismatch {
                setup: s.setup_id.clone(),
                expected: k,
                found: s.text.rows(),
            });
        }
        ids.push(&s.setup_id);
        scores.push(similarity(audio, &s.text)?.with_source(&s.setup_id));
    }
    let base_idx = ids
        .iter()
        .position(|id| *id == baseline)
        .ok_or_else(|| AdaptiveError::MissingBaseline(baseline.to_string()))?;
    let refs: Vec<&ScoreMatrix> = scores.iter().collect();

    let mut outcomes = Vec::with_capacity(folds.n_folds);
    let mut pooled_choice: Vec<Vec<usize>> = alloc::vec![Vec::new(); manifest.n_samples()];
    for fold in 0..folds.n_folds {
        let train = folds.train_samples(fold);
        let test = folds.test_samples(fold);
        let map = if train.is_empty() {
            SelectionMap::all_baseline(baseline, k)
        } else {
            let perf = scores
                .iter()
                .map(|s| per_class_perf_with(s, manifest, &train, kind))
                .collect::<Result<Vec<_>, _>>()?;
            let table: Vec<(&str, &[Option<f64>])> = ids
                .iter()
                .copied()
                .zip(perf.iter().map(Vec::as_slice))
                .collect();
            build_selection_map(&table, baseline)?
        };
        let undefined_classes = if train.is_empty() {
            (0..k).collect()
        } else {
            per_class_perf_with(&scores[base_idx], manifest, &train, kind)?
                .iter()
                .enumerate()
                .filter_map(|(c, v)| v.is_none().then_some(c))
                .collect()
        };
        let composed = compose(&map, &ids, &refs)?;
        let report = evaluate_subset(&composed, manifest, &test, kind)?;
        let baseline_report = evaluate_subset(&scores[base_idx], manifest, &test, kind)?;

        let choice: Vec<usize> = map
            .choices
            .iter()
            .map(|c| ids.iter().position(|id| id == c).unwrap_or(base_idx))
            .collect();
        for &i in &test {
            pooled_choice[i] = choice.clone();
        }
        outcomes.push(FoldOutcome {
            fold,
            n_train: train.len(),
            n_test: test.len(),
            map,
            undefined_classes,
            report,
            baseline_report,
        });
    }

    let n_folds = outcomes.len() as f64;
    let mean = outcomes.iter().fold(0.0, |acc, o| acc + o.report.overall) / n_folds;
    let baseline_mean = outcomes
        .iter()
        .fold(0.0, |acc, o| acc + o.baseline_report.overall)
        / n_folds;

    let pooled_scores = pooled_matrix(manifest, &refs, &pooled_choice)?;
    let all: Vec<usize> = (0..manifest.n_samples()).collect();
    let pooled = evaluate_subset(&pooled_scores, manifest, &all, kind)?;
    let baseline_pooled = evaluate_subset(&scores[base_idx], manifest, &all, kind)?;
    let deltas = per_class_table(&baseline_pooled, &pooled)?;

    Ok(EvalReport {
        baseline: baseline.to_string(),
        setups: ids.iter().map(|s| s.to_string()).collect(),
        kind,
        folds: outcomes,
        mean,
        baseline_mean,
        pooled,
        baseline_pooled,
        deltas,
    })
}

/// Score matrix whose row for each sample uses the column choice of the
/// fold that held the sample out.
fn pooled_matrix(
    manifest: &DatasetManifest,
    scores: &[&ScoreMatrix],
    choice_by_sample: &[Vec<usize>],
) -> Result<ScoreMatrix, AdaptiveError> {
    let n = manifest.n_samples();
    let k = manifest.n_classes();
    let mut values = alloc::vec![0.0; n * k];
    for (sample, choice) in manifest.samples().iter().zip(choice_by_sample) {
        for (c, &p) in choice.iter().enumerate() {
            values[sample.row * k + c] = scores[p].get(sample.row, c);
        }
    }
    let sources = alloc::vec![String::from("pooled"); k];
    Ok(ScoreMatrix::new(n, k, values, sources)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::{ClassEntry, SampleEntry};
    use crate::matrix::l2_normalize;
    use crate::prompt::PromptFormat;
    use alloc::collections::BTreeMap;
    use alloc::format;
    use alloc::vec;

    #[test]
    fn strict_inequality_picks_description() {
        let map =
            build_selection_map(&[("cls", [Some(0.6)]), ("base", [Some(0.7)])], "cls").unwrap();
        assert_eq!(map.choices, vec!["base"]);
    }

    #[test]
    fn tie_keeps_class_only() {
        let map =
            build_selection_map(&[("cls", [Some(0.6)]), ("base", [Some(0.6)])], "cls").unwrap();
        assert_eq!(map.choices, vec!["cls"]);
    }

    #[test]
    fn multi_setup_tie_goes_to_priority() {
        let table = [
            ("cls", [Some(0.5)]),
            ("base", [Some(0.8)]),
            ("context", [Some(0.8)]),
        ];
        assert_eq!(
            build_selection_map(&table, "cls").unwrap().choices,
            vec!["base"]
        );
        // Baseline keeps top priority even when listed last.
        let table = [("base", [Some(0.8)]), ("cls", [Some(0.8)])];
        assert_eq!(
            build_selection_map(&table, "cls").unwrap().choices,
            vec!["cls"]
        );
    }

    #[test]
    fn undefined_classes_stay_on_baseline() {
        let table = [("cls", [None, Some(0.1)]), ("base", [Some(1.0), Some(0.2)])];
        assert_eq!(
            build_selection_map(&table, "cls").unwrap().choices,
            vec!["cls", "base"]
        );
    }

    #[test]
    fn map_errors() {
        assert_eq!(
            build_selection_map(&[("base", [Some(1.0)])], "cls"),
            Err(AdaptiveError::MissingBaseline("cls".into()))
        );
        let table: [(&str, &[Option<f64>]); 2] =
            [("cls", &[Some(1.0)]), ("base", &[Some(1.0), None])];
        assert!(matches!(
            build_selection_map(&table, "cls"),
            Err(AdaptiveError::CoverageMismatch { .. })
        ));
    }

    fn unit(rows: &[[f32; 3]]) -> EmbeddingMatrix {
        l2_normalize(&EmbeddingMatrix::from_rows(rows).unwrap()).unwrap()
    }

    fn manifest(truth: &[usize]) -> DatasetManifest {
        DatasetManifest::new(
            "d".into(),
            TaskType::SingleLabel,
            (0..3)
                .map(|c| ClassEntry {
                    class_id: format!("c{c}"),
                    raw_label: format!("c{c}"),
                    descriptions: BTreeMap::new(),
                })
                .collect(),
            truth
                .iter()
                .enumerate()
                .map(|(i, &t)| SampleEntry {
                    sample_id: format!("s{i}"),
                    truth: vec![t],
                    row: i,
                })
                .collect(),
        )
        .unwrap()
    }

    fn setup(id: &str, text: EmbeddingMatrix) -> CandidateSetup {
        CandidateSetup {
            setup_id: id.into(),
            text,
            spec: PromptSpec::class_only(PromptFormat::UpperPeriod),
        }
    }

    #[test]
    fn per_class_perf_hand_count() {
        // 4 samples: truth (0, 0, 1, 2); audio equals class axis except
        // sample 1, which points at class 2.
        let audio = unit(&[
            [1.0, 0.0, 0.0],
            [0.0, 0.0, 1.0],
            [0.0, 1.0, 0.0],
            [0.0, 0.0, 1.0],
        ]);
        let text = unit(&[[1.0, 0.0, 0.0], [0.0, 1.0, 0.0], [0.0, 0.0, 1.0]]);
        let m = manifest(&[0, 0, 1, 2]);
        let s = similarity(&audio, &text).unwrap();
        assert_eq!(
            per_class_perf(&s, &m, &[0, 1, 2, 3]).unwrap(),
            vec![Some(0.5), Some(1.0), Some(1.0)]
        );
        assert_eq!(
            per_class_perf(&s, &m, &[0, 3]).unwrap(),
            vec![Some(1.0), None, Some(1.0)]
        );
        assert_eq!(per_class_perf(&s, &m, &[]), Err(AdaptiveError::EmptySubset));
    }

    #[test]
    fn all_baseline_map_is_score_identical() {
        let audio = unit(&[[1.0, 0.2, 0.0], [0.1, 1.0, 0.3], [0.0, 0.4, 1.0]]);
        let cls = setup(
            "cls",
            unit(&[[1.0, 0.1, 0.0], [0.0, 1.0, 0.1], [0.2, 0.0, 1.0]]),
        );
        let base = setup(
            "base",
            unit(&[[0.5, 0.5, 0.0], [0.0, 1.0, 1.0], [1.0, 0.0, 1.0]]),
        );
        let map = SelectionMap::all_baseline("cls", 3);
        let composed = apply_selection(&map, &[cls.clone(), base.clone()], &audio).unwrap();
        let plain = similarity(&audio, &cls.text).unwrap();
        assert_eq!(composed.values(), plain.values());

        let mut map = map;
        map.choices[2] = "base".into();
        let composed = apply_selection(&map, &[cls.clone(), base.clone()], &audio).unwrap();
        let b = similarity(&audio, &base.text).unwrap();
        for r in 0..3 {
            assert_eq!(composed.get(r, 0), plain.get(r, 0));
            assert_eq!(composed.get(r, 1), plain.get(r, 1));
            assert_eq!(composed.get(r, 2), b.get(r, 2));
        }
        assert_eq!(composed.sources(), &["cls", "cls", "base"]);

        map.choices[0] = "ghost".into();
        assert_eq!(
            apply_selection(&map, &[cls, base], &audio),
            Err(AdaptiveError::DanglingSetup("ghost".into()))
        );
    }
}
