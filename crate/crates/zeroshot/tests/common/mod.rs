//! On-disk fixtures shared by the integration tests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde_json::json;
use zeroshot::io::save_embeddings;
use zeroshot::{ExperimentConfig, SetupRef};
use zeroshot_core::{l2_normalize, EmbeddingMatrix};

pub const PER_CLASS: usize = 30;
pub const DIM: usize = 6;

pub fn unit(rows: &[Vec<f32>]) -> EmbeddingMatrix {
    l2_normalize(&EmbeddingMatrix::from_rows(rows).unwrap()).unwrap()
}

fn axis(i: usize) -> Vec<f32> {
    let mut v = vec![0.0; DIM];
    v[i] = 1.0;
    v
}

fn add(mut v: Vec<f32>, i: usize, x: f32) -> Vec<f32> {
    v[i] += x;
    v
}

pub fn manifest_json(n_classes_rows: &[usize]) -> serde_json::Value {
    let labels = ["dog_barking", "rain", "church_bells"];
    let classes: Vec<_> = labels
        .iter()
        .map(|l| {
            json!({
                "class_id": l.replace('_', "-"),
                "raw_label": l,
                "descriptions": {
                    "base": format!("a description of {}", l.replace('_', " ")),
                    "context": format!("{} heard outdoors", l.replace('_', " ")),
                }
            })
        })
        .collect();
    let samples: Vec<_> = n_classes_rows
        .iter()
        .enumerate()
        .map(|(row, &c)| json!({"sample_id": format!("s{row:03}"), "truth": [c], "row": row}))
        .collect();
    json!({
        "dataset_id": "fixture",
        "task_type": "single_label",
        "classes": classes,
        "samples": samples,
    })
}

/// Three classes on the first three axes of R^6 with uniform noise.
pub fn audio_rows(seed: u64, noise: f32) -> (Vec<usize>, Vec<Vec<f32>>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut truth = Vec::new();
    let mut rows = Vec::new();
    for c in 0..3 {
        for _ in 0..PER_CLASS {
            let mut v: Vec<f32> = (0..DIM)
                .map(|_| {
                    if noise > 0.0 {
                        rng.gen_range(-noise..noise)
                    } else {
                        0.0
                    }
                })
                .collect();
            v[c] += 1.0;
            rows.push(v);
            truth.push(c);
        }
    }
    (truth, rows)
}

/// Label-only text: class 1 sits between classes 0 and 2. `shift` moves
/// every row along the spare axes so different formats score differently.
pub fn class_only_text(shift: f32) -> Vec<Vec<f32>> {
    vec![
        add(axis(0), 4, shift),
        vec![0.7, 0.0, 0.7, 0.3, shift, 0.0],
        add(axis(2), 5, shift),
    ]
}

/// Description text: separable for class 1, poor for classes 0 and 2.
pub fn description_text() -> Vec<Vec<f32>> {
    vec![
        vec![0.3, 0.0, 0.0, 1.0, 0.0, 0.0],
        axis(1),
        vec![0.0, 0.0, 0.3, 1.0, 0.0, 0.0],
    ]
}

pub struct Fixture {
    pub dir: tempfile::TempDir,
    pub setups: Vec<SetupRef>,
}

impl Fixture {
    pub fn path(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }

    pub fn manifest(&self) -> PathBuf {
        self.path("manifest.json")
    }

    pub fn audio(&self) -> PathBuf {
        self.path("audio.aemb")
    }

    pub fn config(&self, out: &str) -> ExperimentConfig {
        ExperimentConfig {
            manifest: Some(self.manifest()),
            audio: Some(self.audio()),
            setups: self.setups.clone(),
            out: self.path(out),
            ..ExperimentConfig::default()
        }
    }

    /// `--setup` flags for the binary.
    pub fn setup_args(&self) -> Vec<String> {
        self.setups
            .iter()
            .flat_map(|s| {
                [
                    "--setup".to_string(),
                    format!("{}={}:{}", s.id, s.spec, s.path.as_ref().unwrap().display()),
                ]
            })
            .collect()
    }

    pub fn bundle_args(&self, out: &str) -> Vec<String> {
        let mut a = vec![
            "--manifest".to_string(),
            self.manifest().display().to_string(),
            "--audio".to_string(),
            self.audio().display().to_string(),
            "--out".to_string(),
            self.path(out).display().to_string(),
        ];
        a.extend(self.setup_args());
        a
    }

    pub fn add_setup(&mut self, id: &str, spec: &str, text: &EmbeddingMatrix) {
        let path = self.path(&format!("text/{id}.aemb"));
        save_embeddings(text, &path).unwrap();
        self.setups
            .push(format!("{id}={spec}:{}", path.display()).parse().unwrap());
    }
}

pub fn write_json(path: &Path, value: &serde_json::Value) {
    std::fs::write(path, serde_json::to_vec_pretty(value).unwrap()).unwrap();
}

/// Manifest and audio only.
pub fn empty_fixture(seed: u64, noise: f32) -> Fixture {
    let dir = tempfile::tempdir().unwrap();
    let (truth, rows) = audio_rows(seed, noise);
    write_json(&dir.path().join("manifest.json"), &manifest_json(&truth));
    save_embeddings(&unit(&rows), &dir.path().join("audio.aemb")).unwrap();
    Fixture {
        dir,
        setups: Vec::new(),
    }
}

/// The full grid: four label formats, two templates and two description
/// variants. `cd_context` carries the label-only text unchanged.
pub fn grid_fixture(seed: u64) -> Fixture {
    let mut f = empty_fixture(seed, 0.15);
    let formats = ["lower", "lower_period", "upper", "upper_period"];
    for (j, fmt) in formats.iter().enumerate() {
        let id = if *fmt == "upper_period" {
            "cls".to_string()
        } else {
            format!("cls_{fmt}")
        };
        f.add_setup(&id, fmt, &unit(&class_only_text(0.1 * j as f32)));
    }
    f.add_setup("t7", "lower,template=7", &unit(&class_only_text(0.05)));
    f.add_setup("t14", "lower,template=14", &unit(&class_only_text(0.25)));
    f.add_setup(
        "cd_base",
        "upper_period,desc=base",
        &unit(&description_text()),
    );
    f.add_setup(
        "cd_context",
        "upper_period,desc=context",
        &unit(&class_only_text(0.3)),
    );
    f
}
