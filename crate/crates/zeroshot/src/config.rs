//! Experiment configuration from flags or a JSON file.

use std::fs;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use serde::{Deserialize, Deserializer};
use zeroshot_core::{
    default_metric, CandidateSetup, DatasetManifest, EmbeddingMatrix, MetricKind, PromptSpec,
    TaskType, TemplateRegistry, DEFAULT_FOLDS,
};

use crate::error::{CliError, Result};
use crate::io;

pub const DEFAULT_SEED: u64 = 42;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Deserialize, clap::ValueEnum)]
#[serde(rename_all = "snake_case")]
pub enum MetricChoice {
    #[default]
    Auto,
    Accuracy,
    Map,
}

impl MetricChoice {
    pub fn resolve(self, task: TaskType) -> Result<MetricKind> {
        match (self, task) {
            (MetricChoice::Auto, t) => Ok(default_metric(t)),
            (MetricChoice::Accuracy, TaskType::MultiLabel) => Err(CliError::Contract(
                "accuracy is undefined for a multi-label task".into(),
            )),
            (MetricChoice::Accuracy, _) => Ok(MetricKind::Accuracy),
            (MetricChoice::Map, _) => Ok(MetricKind::MeanAveragePrecision),
        }
    }
}

/// One `--setup <id>=<spec>[:<path>]` entry.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SetupRef {
    pub id: String,
    pub spec: PromptSpec,
    /// Text embedding file. Only `render` may leave this out.
    pub path: Option<PathBuf>,
}

impl FromStr for SetupRef {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (id, rest) = s
            .split_once('=')
            .ok_or_else(|| format!("expected <id>=<spec>[:<path>], got `{s}`"))?;
        let (spec, path) = match rest.split_once(':') {
            Some((spec, path)) if !path.is_empty() => (spec, Some(PathBuf::from(path))),
            Some(_) => return Err(format!("empty path in `{s}`")),
            None => (rest, None),
        };
        let id = id.trim();
        check_setup_id(id)?;
        Ok(SetupRef {
            id: id.to_string(),
            spec: spec.parse().map_err(|e| format!("{e}"))?,
            path,
        })
    }
}

/// Setup ids name output files, so they are restricted to a safe alphabet.
pub fn check_setup_id(id: &str) -> Result<(), String> {
    let ok = !id.is_empty()
        && !id.starts_with('.')
        && id
            .chars()
            .all(|c| c.is_ascii_alphanumeric() || matches!(c, '_' | '-' | '.' | '+'));
    if ok {
        Ok(())
    } else {
        Err(format!(
            "setup id `{id}` must be non-empty ASCII letters, digits, `_-.+` and not start with `.`"
        ))
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SetupEntry {
    id: String,
    spec: String,
    #[serde(default)]
    path: Option<PathBuf>,
}

fn setups_from_json<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<SetupRef>, D::Error> {
    let entries = Vec::<SetupEntry>::deserialize(d)?;
    entries
        .into_iter()
        .map(|e| {
            check_setup_id(&e.id).map_err(serde::de::Error::custom)?;
            Ok(SetupRef {
                spec: e.spec.parse().map_err(serde::de::Error::custom)?,
                id: e.id,
                path: e.path,
            })
        })
        .collect()
}

/// Everything a command needs to locate its inputs and outputs.
#[derive(Debug, Clone, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    #[serde(default)]
    pub manifest: Option<PathBuf>,
    #[serde(default)]
    pub audio: Option<PathBuf>,
    #[serde(default, deserialize_with = "setups_from_json")]
    pub setups: Vec<SetupRef>,
    #[serde(default)]
    pub metric: MetricChoice,
    #[serde(default = "default_folds")]
    pub folds: usize,
    #[serde(default = "default_seed")]
    pub seed: u64,
    #[serde(default = "default_out")]
    pub out: PathBuf,
    #[serde(default)]
    pub strict: bool,
    #[serde(default)]
    pub baseline: Option<String>,
    #[serde(default)]
    pub templates: Option<PathBuf>,
}

fn default_folds() -> usize {
    DEFAULT_FOLDS
}

fn default_seed() -> u64 {
    DEFAULT_SEED
}

fn default_out() -> PathBuf {
    PathBuf::from("out")
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        Self {
            manifest: None,
            audio: None,
            setups: Vec::new(),
            metric: MetricChoice::Auto,
            folds: DEFAULT_FOLDS,
            seed: DEFAULT_SEED,
            out: default_out(),
            strict: false,
            baseline: None,
            templates: None,
        }
    }
}

impl ExperimentConfig {
    /// Reads a JSON config; relative paths are taken relative to its directory.
    pub fn from_json_file(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::io(path, e))?;
        let mut cfg: ExperimentConfig =
            serde_json::from_str(&text).map_err(|e| CliError::json(path, e))?;
        let base = path.parent();
        let fix = |p: &mut Option<PathBuf>| {
            if let Some(v) = p {
                *v = io::resolve(base, v);
            }
        };
        fix(&mut cfg.manifest);
        fix(&mut cfg.audio);
        fix(&mut cfg.templates);
        for s in &mut cfg.setups {
            fix(&mut s.path);
        }
        cfg.out = io::resolve(base, &cfg.out);
        Ok(cfg)
    }

    pub fn manifest_path(&self) -> Result<&Path> {
        self.manifest
            .as_deref()
            .ok_or_else(|| CliError::Contract("no manifest given (--manifest)".into()))
    }

    pub fn audio_path(&self) -> Result<&Path> {
        self.audio
            .as_deref()
            .ok_or_else(|| CliError::Contract("no audio embeddings given (--audio)".into()))
    }

    pub fn load_manifest(&self) -> Result<DatasetManifest> {
        io::load_manifest(self.manifest_path()?, self.strict)
    }

    pub fn load_templates(&self) -> Result<TemplateRegistry> {
        match &self.templates {
            None => Ok(TemplateRegistry::builtin()),
            Some(p) => {
                let text = fs::read_to_string(p).map_err(|e| CliError::io(p, e))?;
                TemplateRegistry::parse(&text)
                    .map_err(|e| CliError::Contract(format!("{}: {e}", p.display())))
            }
        }
    }
}

/// Manifest, audio matrix and every configured text matrix, loaded.
#[derive(Debug, Clone)]
pub struct Bundle {
    pub manifest: DatasetManifest,
    pub audio: EmbeddingMatrix,
    pub setups: Vec<CandidateSetup>,
}

pub fn load_bundle(cfg: &ExperimentConfig) -> Result<Bundle> {
    let manifest = cfg.load_manifest()?;
    let audio = io::load_embeddings(cfg.audio_path()?)?;
    let mut setups = Vec::with_capacity(cfg.setups.len());
    for s in &cfg.setups {
        let path = s.path.as_deref().ok_or_else(|| {
            CliError::Contract(format!("setup `{}` has no text embedding path", s.id))
        })?;
        setups.push(CandidateSetup {
            setup_id: s.id.clone(),
            text: io::load_embeddings(path)?,
            spec: s.spec.clone(),
        });
    }
    Ok(Bundle {
        manifest,
        audio,
        setups,
    })
}
