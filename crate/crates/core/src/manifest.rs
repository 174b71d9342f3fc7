//! Dataset manifests: class list, per-class descriptions and ground truth.

use alloc::collections::{BTreeMap, BTreeSet};
use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;
use core::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TaskType {
    SingleLabel,
    MultiLabel,
}

/// Kinds of class description a manifest may carry.
///
/// The declaration order is the default tie-break priority used when several
/// description setups perform equally well for a class.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DescriptionVariant {
    Base,
    Context,
    Ontology,
    Dictionary,
}

impl DescriptionVariant {
    pub const ALL: [DescriptionVariant; 4] = [
        DescriptionVariant::Base,
        DescriptionVariant::Context,
        DescriptionVariant::Ontology,
        DescriptionVariant::Dictionary,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            DescriptionVariant::Base => "base",
            DescriptionVariant::Context => "context",
            DescriptionVariant::Ontology => "ontology",
            DescriptionVariant::Dictionary => "dictionary",
        }
    }
}

impl fmt::Display for DescriptionVariant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for DescriptionVariant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        DescriptionVariant::ALL
            .into_iter()
            .find(|v| v.as_str() == s)
            .ok_or_else(|| alloc::format!("unknown description variant `{s}`"))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassEntry {
    pub class_id: String,
    pub raw_label: String,
    #[serde(default)]
    pub descriptions: BTreeMap<DescriptionVariant, String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SampleEntry {
    pub sample_id: String,
    pub truth: Vec<usize>,
    pub row: usize,
}

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum ManifestError {
    #[error("manifest has no classes")]
    NoClasses,
    #[error("duplicate class_id `{0}`")]
    DuplicateClassId(String),
    #[error("class `{0}` has an empty raw_label")]
    EmptyLabel(String),
    #[error("class `{class_id}` has an empty {variant} description")]
    EmptyDescription {
        class_id: String,
        variant: DescriptionVariant,
    },
    #[error("duplicate sample_id `{0}`")]
    DuplicateSampleId(String),
    #[error("sample `{sample_id}` has no ground-truth class")]
    EmptyTruth { sample_id: String },
    #[error("sample `{sample_id}` has {count} ground-truth classes in a single-label dataset")]
    SingleLabelArity { sample_id: String, count: usize },
    #[error("sample `{sample_id}` lists class {class_index} more than once")]
    DuplicateTruth {
        sample_id: String,
        class_index: usize,
    },
    #[error(
        "sample `{sample_id}` references class {class_index}, but there are {n_classes} classes"
    )]
    TruthOutOfRange {
        sample_id: String,
        class_index: usize,
        n_classes: usize,
    },
    #[error("sample `{sample_id}` uses row {row}, which is already taken")]
    DuplicateRow { sample_id: String, row: usize },
    #[error("sample `{sample_id}` uses row {row}, but there are {n_samples} samples")]
    RowOutOfRange {
        sample_id: String,
        row: usize,
        n_samples: usize,
    },
}

/// Validated dataset description. Class order defines class indices.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DatasetManifest {
    dataset_id: String,
    task_type: TaskType,
    classes: Vec<ClassEntry>,
    samples: Vec<SampleEntry>,
}

/// Unvalidated manifest document, as read from JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ManifestDocument {
    pub dataset_id: String,
    pub task_type: TaskType,
    pub classes: Vec<ClassEntry>,
    pub samples: Vec<SampleEntry>,
}

impl TryFrom<ManifestDocument> for DatasetManifest {
    type Error = ManifestError;

    fn try_from(doc: ManifestDocument) -> Result<Self, Self::Error> {
        DatasetManifest::new(doc.dataset_id, doc.task_type, doc.classes, doc.samples)
    }
}

impl DatasetManifest {
    pub fn new(
        dataset_id: String,
        task_type: TaskType,
        classes: Vec<ClassEntry>,
        samples: Vec<SampleEntry>,
    ) -> Result<Self, ManifestError> {
        if classes.is_empty() {
            return Err(ManifestError::NoClasses);
        }
        let mut ids = BTreeSet::new();
        for class in &classes {
            if !ids.insert(class.class_id.as_str()) {
                return Err(ManifestError::DuplicateClassId(class.class_id.clone()));
            }
            if class.raw_label.trim().is_empty() {
                return Err(ManifestError::EmptyLabel(class.class_id.clone()));
            }
            for (&variant, text) in &class.descriptions {
                if text.trim().is_empty() {
                    return Err(ManifestError::EmptyDescription {
                        class_id: class.class_id.clone(),
                        variant,
                    });
                }
            }
        }

        let n_classes = classes.len();
        let n_samples = samples.len();
        let mut sample_ids = BTreeSet::new();
        let mut rows_seen = alloc::vec![false; n_samples];
        for sample in &samples {
            if !sample_ids.insert(sample.sample_id.as_str()) {
                return Err(ManifestError::DuplicateSampleId(sample.sample_id.clone()));
            }
            match (task_type, sample.truth.len()) {
                (_, 0) => {
                    return Err(ManifestError::EmptyTruth {
                        sample_id: sample.sample_id.clone(),
                    })
                }
                (TaskType::SingleLabel, n) if n > 1 => {
                    return Err(ManifestError::SingleLabelArity {
                        sample_id: sample.sample_id.clone(),
                        count: n,
                    })
                }
                _ => {}
            }
            let mut seen = BTreeSet::new();
            for &class_index in &sample.truth {
                if class_index >= n_classes {
                    return Err(ManifestError::TruthOutOfRange {
                        sample_id: sample.sample_id.clone(),
                        class_index,
                        n_classes,
                    });
                }
                if !seen.insert(class_index) {
                    return Err(ManifestError::DuplicateTruth {
                        sample_id: sample.sample_id.clone(),
                        class_index,
                    });
                }
            }
            match rows_seen.get_mut(sample.row) {
                None => {
                    return Err(ManifestError::RowOutOfRange {
                        sample_id: sample.sample_id.clone(),
                        row: sample.row,
                        n_samples,
                    })
                }
                Some(true) => {
                    return Err(ManifestError::DuplicateRow {
                        sample_id: sample.sample_id.clone(),
                        row: sample.row,
                    })
                }
                Some(slot) => *slot = true,
            }
        }

        Ok(Self {
            dataset_id,
            task_type,
            classes,
            samples,
        })
    }

    pub fn dataset_id(&self) -> &str {
        &self.dataset_id
    }

    pub fn task_type(&self) -> TaskType {
        self.task_type
    }

    pub fn classes(&self) -> &[ClassEntry] {
        &self.classes
    }

    pub fn samples(&self) -> &[SampleEntry] {
        &self.samples
    }

    pub fn n_classes(&self) -> usize {
        self.classes.len()
    }

    pub fn n_samples(&self) -> usize {
        self.samples.len()
    }

    pub fn class_index(&self, class_id: &str) -> Option<usize> {
        self.classes.iter().position(|c| c.class_id == class_id)
    }

    /// Ground-truth class sets indexed by audio row.
    pub fn truth_by_row(&self) -> Vec<&[usize]> {
        let mut out: Vec<&[usize]> = alloc::vec![&[][..]; self.samples.len()];
        for s in &self.samples {
            out[s.row] = &s.truth;
        }
        out
    }

    /// Single ground-truth class per audio row, or `None` for multi-label data.
    pub fn single_truth_by_row(&self) -> Option<Vec<usize>> {
        match self.task_type {
            TaskType::SingleLabel => Some(self.truth_by_row().iter().map(|t| t[0]).collect()),
            TaskType::MultiLabel => None,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::string::ToString;
    use alloc::vec;

    fn class(id: &str) -> ClassEntry {
        ClassEntry {
            class_id: id.to_string(),
            raw_label: id.to_string(),
            descriptions: BTreeMap::new(),
        }
    }

    fn sample(id: &str, truth: Vec<usize>, row: usize) -> SampleEntry {
        SampleEntry {
            sample_id: id.to_string(),
            truth,
            row,
        }
    }

    #[test]
    fn minimal_manifest() {
        let m = DatasetManifest::new(
            "tiny".into(),
            TaskType::SingleLabel,
            vec![class("a"), class("b")],
            vec![sample("s0", vec![1], 0)],
        )
        .unwrap();
        assert_eq!((m.n_classes(), m.n_samples()), (2, 1));
        assert_eq!(m.class_index("b"), Some(1));
    }

    #[test]
    fn duplicate_class_id_is_named() {
        let err = DatasetManifest::new(
            "d".into(),
            TaskType::SingleLabel,
            vec![class("dog"), class("dog")],
            vec![],
        )
        .unwrap_err();
        assert_eq!(err, ManifestError::DuplicateClassId("dog".into()));
        assert!(err.to_string().contains("`dog`"));
    }

    #[test]
    fn truth_out_of_range() {
        let err = DatasetManifest::new(
            "d".into(),
            TaskType::MultiLabel,
            vec![class("a")],
            vec![sample("s0", vec![0, 3], 0)],
        )
        .unwrap_err();
        assert!(matches!(
            err,
            ManifestError::TruthOutOfRange { class_index: 3, .. }
        ));
    }

    #[test]
    fn single_label_requires_exactly_one_class() {
        let err = DatasetManifest::new(
            "d".into(),
            TaskType::SingleLabel,
            vec![class("a"), class("b")],
            vec![sample("s0", vec![0, 1], 0)],
        )
        .unwrap_err();
        assert!(matches!(
            err,
            ManifestError::SingleLabelArity { count: 2, .. }
        ));
        let err = DatasetManifest::new(
            "d".into(),
            TaskType::MultiLabel,
            vec![class("a")],
            vec![sample("s0", vec![], 0)],
        )
        .unwrap_err();
        assert!(matches!(err, ManifestError::EmptyTruth { .. }));
    }

    #[test]
    fn rows_must_cover_range_once() {
        let err = DatasetManifest::new(
            "d".into(),
            TaskType::SingleLabel,
            vec![class("a")],
            vec![sample("s0", vec![0], 0), sample("s1", vec![0], 0)],
        )
        .unwrap_err();
        assert!(matches!(err, ManifestError::DuplicateRow { row: 0, .. }));
        let err = DatasetManifest::new(
            "d".into(),
            TaskType::SingleLabel,
            vec![class("a")],
            vec![sample("s0", vec![0], 1)],
        )
        .unwrap_err();
        assert!(matches!(err, ManifestError::RowOutOfRange { row: 1, .. }));
    }

    #[test]
    fn empty_description_rejected() {
        let mut c = class("a");
        c.descriptions
            .insert(DescriptionVariant::Ontology, "  ".into());
        let err =
            DatasetManifest::new("d".into(), TaskType::SingleLabel, vec![c], vec![]).unwrap_err();
        assert!(matches!(
            err,
            ManifestError::EmptyDescription {
                variant: DescriptionVariant::Ontology,
                ..
            }
        ));
    }

    #[test]
    fn truth_is_indexed_by_row() {
        let m = DatasetManifest::new(
            "d".into(),
            TaskType::SingleLabel,
            vec![class("a"), class("b")],
            vec![sample("x", vec![1], 1), sample("y", vec![0], 0)],
        )
        .unwrap();
        assert_eq!(m.single_truth_by_row(), Some(vec![0, 1]));
    }
}
