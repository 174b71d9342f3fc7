//! Serialized shapes of the files written under the output directory.

use serde::ser::{SerializeMap, SerializeStruct};
use serde::{Serialize, Serializer};
use zeroshot_core::{
    DatasetManifest, EvalReport, FoldPlan, MetricReport, Predictions, RenderedPrompt, SelectionMap,
};

/// One line of `predictions/<setup_id>.jsonl`.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(untagged)]
pub enum PredictionRecord {
    Class {
        sample_id: String,
        class_index: usize,
        class_id: String,
    },
    Scores {
        sample_id: String,
        scores: Vec<f64>,
    },
}

/// Records in manifest sample order.
pub fn prediction_records(
    manifest: &DatasetManifest,
    preds: &Predictions,
) -> Vec<PredictionRecord> {
    manifest
        .samples()
        .iter()
        .map(|s| match preds {
            Predictions::Classes(c) => PredictionRecord::Class {
                sample_id: s.sample_id.clone(),
                class_index: c[s.row],
                class_id: manifest.classes()[c[s.row]].class_id.clone(),
            },
            Predictions::Scores(m) => PredictionRecord::Scores {
                sample_id: s.sample_id.clone(),
                scores: m.row(s.row).to_vec(),
            },
        })
        .collect()
}

/// A selection map keyed by class id, in class order.
pub struct MapDocument<'a> {
    pub manifest: &'a DatasetManifest,
    pub map: &'a SelectionMap,
}

impl Serialize for MapDocument<'_> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        struct Choices<'a>(&'a MapDocument<'a>);
        impl Serialize for Choices<'_> {
            fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
                let mut m = s.serialize_map(Some(self.0.map.choices.len()))?;
                for (c, choice) in self.0.manifest.classes().iter().zip(&self.0.map.choices) {
                    m.serialize_entry(&c.class_id, choice)?;
                }
                m.end()
            }
        }
        let mut st = s.serialize_struct("SelectionMap", 2)?;
        st.serialize_field("baseline", &self.map.baseline)?;
        st.serialize_field("choices", &Choices(self))?;
        st.end()
    }
}

#[derive(Serialize)]
pub struct FoldEntry<'a> {
    pub sample_id: &'a str,
    pub fold: usize,
}

#[derive(Serialize)]
pub struct FoldDocument<'a> {
    pub n_folds: usize,
    pub seed: u64,
    pub sizes: Vec<usize>,
    pub samples: Vec<FoldEntry<'a>>,
}

impl<'a> FoldDocument<'a> {
    pub fn new(manifest: &'a DatasetManifest, plan: &FoldPlan) -> Self {
        Self {
            n_folds: plan.n_folds,
            seed: plan.seed,
            sizes: plan.fold_sizes(),
            samples: manifest
                .samples()
                .iter()
                .zip(&plan.assignment)
                .map(|(s, &fold)| FoldEntry {
                    sample_id: &s.sample_id,
                    fold,
                })
                .collect(),
        }
    }
}

/// `reports/<setup_id>.json`.
#[derive(Debug, Clone, Serialize)]
pub struct SetupReport {
    pub setup_id: String,
    pub prompt: String,
    pub report: MetricReport,
}

#[derive(Serialize)]
pub struct AdaptiveRun<'a> {
    pub name: &'a str,
    pub report: &'a EvalReport,
}

/// `adaptive/report.json`.
#[derive(Serialize)]
pub struct AdaptiveDocument<'a> {
    pub dataset_id: &'a str,
    pub runs: Vec<AdaptiveRun<'a>>,
}

/// One line of the rendered-prompts file.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct PromptRecord {
    pub class_index: usize,
    pub setup_id: String,
    pub text: String,
}

impl PromptRecord {
    pub fn new(setup_id: &str, p: RenderedPrompt) -> Self {
        Self {
            class_index: p.class_index,
            setup_id: setup_id.to_string(),
            text: p.text,
        }
    }
}
