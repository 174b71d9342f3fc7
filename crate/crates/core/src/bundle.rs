//! Cross-checks between a manifest and the embedding files that go with it.

use alloc::string::String;
use alloc::vec::Vec;
use core::fmt;

use serde::Serialize;

use crate::adaptive::CandidateSetup;
use crate::manifest::DatasetManifest;
use crate::matrix::EmbeddingMatrix;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Violation {
    AudioRows {
        expected: usize,
        found: usize,
    },
    TextRows {
        setup: String,
        spec: String,
        expected: usize,
        found: usize,
    },
    DimMismatch {
        setup: String,
        spec: String,
        audio_dim: usize,
        text_dim: usize,
    },
    DuplicateSetup {
        setup: String,
    },
    /// Only reported when normalization is required (strict mode).
    NotNormalized {
        what: String,
    },
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Violation::AudioRows { expected, found } => {
                write!(f, "audio matrix has {found} rows, manifest has {expected} samples")
            }
            Violation::TextRows {
                setup,
                spec,
                expected,
                found,
            } => write!(
                f,
                "text matrix of setup `{setup}` ({spec}) has {found} rows, manifest has {expected} classes"
            ),
            Violation::DimMismatch {
                setup,
                spec,
                audio_dim,
                text_dim,
            } => write!(
                f,
                "text matrix of setup `{setup}` ({spec}) has dim {text_dim}, audio has dim {audio_dim}"
            ),
            Violation::DuplicateSetup { setup } => write!(f, "setup id `{setup}` is used twice"),
            Violation::NotNormalized { what } => write!(f, "{what} is not flagged as normalized"),
        }
    }
}

/// Lists every inconsistency between the manifest, the audio matrix and the
/// text matrices; an empty list means the bundle is usable.
pub fn validate_bundle(
    manifest: &DatasetManifest,
    audio: &EmbeddingMatrix,
    setups: &[CandidateSetup],
) -> Vec<Violation> {
    let mut out = Vec::new();
    if audio.rows() != manifest.n_samples() {
        out.push(Violation::AudioRows {
            expected: manifest.n_samples(),
            found: audio.rows(),
        });
    }
    for (i, s) in setups.iter().enumerate() {
        if setups[..i].iter().any(|o| o.setup_id == s.setup_id) {
            out.push(Violation::DuplicateSetup {
                setup: s.setup_id.clone(),
            });
        }
        if s.text.rows() != manifest.n_classes() {
            out.push(Violation::TextRows {
                setup: s.setup_id.clone(),
                spec: alloc::format!("{}", s.spec),
                expected: manifest.n_classes(),
                found: s.text.rows(),
            });
        }
        if s.text.dim() != audio.dim() {
            out.push(Violation::DimMismatch {
                setup: s.setup_id.clone(),
                spec: alloc::format!("{}", s.spec),
                audio_dim: audio.dim(),
                text_dim: s.text.dim(),
            });
        }
    }
    out
}

/// Normalization violations, for callers that require normalized inputs.
pub fn normalization_violations(
    audio: &EmbeddingMatrix,
    setups: &[CandidateSetup],
) -> Vec<Violation> {
    let mut out = Vec::new();
    if !audio.is_normalized() {
        out.push(Violation::NotNormalized {
            what: String::from("audio matrix"),
        });
    }
    for s in setups.iter().filter(|s| !s.text.is_normalized()) {
        out.push(Violation::NotNormalized {
            what: alloc::format!("text matrix of setup `{}`", s.setup_id),
        });
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::manifest::{ClassEntry, SampleEntry, TaskType};
    use crate::prompt::{PromptFormat, PromptSpec};
    use alloc::collections::BTreeMap;
    use alloc::string::ToString;
    use alloc::vec;

    fn manifest() -> DatasetManifest {
        DatasetManifest::new(
            "d".into(),
            TaskType::SingleLabel,
            ["a", "b", "c"]
                .iter()
                .map(|id| ClassEntry {
                    class_id: id.to_string(),
                    raw_label: id.to_string(),
                    descriptions: BTreeMap::new(),
                })
                .collect(),
            (0..2)
                .map(|i| SampleEntry {
                    sample_id: i.to_string(),
                    truth: vec![i],
                    row: i,
                })
                .collect(),
        )
        .unwrap()
    }

    fn zeros(rows: usize, dim: usize) -> EmbeddingMatrix {
        EmbeddingMatrix::new(rows, dim, vec![0.0; rows * dim]).unwrap()
    }

    fn setup(id: &str, text: EmbeddingMatrix) -> CandidateSetup {
        CandidateSetup {
            setup_id: id.into(),
            text,
            spec: PromptSpec::class_only(PromptFormat::UpperPeriod),
        }
    }

    #[test]
    fn consistent_bundle_has_no_violations() {
        assert!(
            validate_bundle(&manifest(), &zeros(2, 4), &[setup("cls", zeros(3, 4))]).is_empty()
        );
    }

    #[test]
    fn reports_all_violations() {
        let v = validate_bundle(
            &manifest(),
            &zeros(3, 512),
            &[setup("short", zeros(2, 512)), setup("wide", zeros(3, 1024))],
        );
        assert_eq!(v.len(), 3);
        assert_eq!(
            v[0],
            Violation::AudioRows {
                expected: 2,
                found: 3
            }
        );
        assert!(matches!(&v[1], Violation::TextRows { setup, found: 2, .. } if setup == "short"));
        assert!(matches!(
            &v[2],
            Violation::DimMismatch {
                audio_dim: 512,
                text_dim: 1024,
                ..
            }
        ));
        let msg = v[2].to_string();
        assert!(msg.contains("512") && msg.contains("1024") && msg.contains("upper_period"));
    }

    #[test]
    fn normalization_is_checked_separately() {
        let v = normalization_violations(&zeros(2, 4), &[setup("cls", zeros(3, 4))]);
        assert_eq!(v.len(), 2);
    }
}
