//! Zero-shot audio classification over precomputed embeddings.
//!
//! Audio clips and class prompts are compared in a shared embedding space:
//! every clip is assigned the class whose text embedding is most similar to
//! the clip's audio embedding. This crate holds the allocation-only core:
//!
//! - [`matrix`] and [`aemb`]: dense `f32` embedding matrices and their binary
//!   container encoding.
//! - [`manifest`]: dataset identity, classes with their descriptions, and
//!   sample ground truth.
//! - [`prompt`]: label sanitizing, prompt formats, templates and
//!   label + description prompts.
//! - [`engine`]: cosine scoring, argmax classification and text-embedding
//!   ensembling.
//! - [`metrics`]: accuracy, per-class recall, average precision and mAP.
//! - [`folds`] and [`adaptive`]: cross-validated per-class choice between
//!   label-only and description prompts.
//!
//! Everything touching the filesystem lives in the `zeroshot` crate.

#![no_std]
#![forbid(unsafe_code)]

extern crate alloc;

pub mod adaptive;
pub mod aemb;
pub mod bundle;
pub mod engine;
pub mod folds;
pub mod manifest;
pub mod matrix;
pub mod metrics;
pub mod prompt;

pub use adaptive::{
    apply_selection, build_selection_map, crossval_evaluate, default_metric, evaluate_subset,
    per_class_perf, per_class_perf_with, AdaptiveError, CandidateSetup, EvalReport, FoldOutcome,
    SelectionMap,
};
pub use aemb::{decode_aemb, encode_aemb, AembError, AEMB_HEADER_LEN, AEMB_MAGIC, AEMB_VERSION};
pub use bundle::{normalization_violations, validate_bundle, Violation};
pub use engine::{
    classify, ensemble_text, predict, similarity, EngineError, Predictions, ScoreMatrix,
};
pub use folds::{make_folds, FoldError, FoldPlan, DEFAULT_FOLDS};
pub use manifest::{
    ClassEntry, DatasetManifest, DescriptionVariant, ManifestDocument, ManifestError, SampleEntry,
    TaskType,
};
pub use matrix::{l2_normalize, EmbeddingMatrix, MatrixError, NORM_TOLERANCE};
pub use metrics::{
    accuracy, average_precision, format_delta_row, mean_average_precision, per_class_table,
    ClassDelta, MetricError, MetricKind, MetricReport, PerClassKind, PerClassPerformance,
};
pub use prompt::{
    format_label, render_description_prompt, render_prompt, render_template, sanitize_label,
    PromptError, PromptFormat, PromptSpec, RenderedPrompt, TemplateRegistry,
};
