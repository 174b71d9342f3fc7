//! The subcommands, callable in-process.

use std::io::Write;
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use zeroshot_core::{
    crossval_evaluate, ensemble_text, evaluate_subset, l2_normalize, make_folds,
    normalization_violations, predict, render_prompt, similarity, validate_bundle, CandidateSetup,
    EmbeddingMatrix, EvalReport, FoldPlan, MetricKind, Violation,
};

use crate::config::{load_bundle, Bundle, ExperimentConfig};
use crate::error::{CliError, Result};
use crate::io;
use crate::records::{
    prediction_records, AdaptiveDocument, AdaptiveRun, FoldDocument, MapDocument, PromptRecord,
    SetupReport,
};
use crate::summary::{adaptive_summary, eval_summary, SummaryRow};

/// Setup id of the mean of all template setups.
pub const ENSEMBLE_ID: &str = "pt_ensemble";
pub const DEFAULT_TOP_K: usize = 3;

fn violations(bundle: &Bundle, strict: bool) -> Vec<Violation> {
    let mut v = validate_bundle(&bundle.manifest, &bundle.audio, &bundle.setups);
    if strict {
        v.extend(normalization_violations(&bundle.audio, &bundle.setups));
    }
    v
}

fn load_valid_bundle(cfg: &ExperimentConfig) -> Result<Bundle> {
    let bundle = load_bundle(cfg)?;
    let v = violations(&bundle, cfg.strict);
    if v.is_empty() {
        Ok(bundle)
    } else {
        Err(CliError::Violations(v))
    }
}

/// Loads and checks the bundle, writing a report to `report`.
pub fn cmd_validate(cfg: &ExperimentConfig, report: &mut dyn Write) -> Result<()> {
    let bundle = load_bundle(cfg)?;
    let v = violations(&bundle, cfg.strict);
    let stdout = |e| CliError::io("<report>", e);
    for item in &v {
        writeln!(report, "violation: {item}").map_err(stdout)?;
    }
    if !v.is_empty() {
        return Err(CliError::Violations(v));
    }
    writeln!(
        report,
        "ok: {} classes, {} samples, {} setups",
        bundle.manifest.n_classes(),
        bundle.manifest.n_samples(),
        bundle.setups.len()
    )
    .map_err(stdout)
}

fn template_ensemble(setups: &[CandidateSetup]) -> Result<Option<EmbeddingMatrix>> {
    let members: Vec<&EmbeddingMatrix> = setups
        .iter()
        .filter(|s| s.spec.template_id().is_some())
        .map(|s| &s.text)
        .collect();
    if members.is_empty() {
        return Ok(None);
    }
    if setups.iter().any(|s| s.setup_id == ENSEMBLE_ID) {
        return Err(CliError::Contract(format!(
            "setup id `{ENSEMBLE_ID}` is reserved for the template ensemble"
        )));
    }
    Ok(Some(ensemble_text(&members)?))
}

fn write_predictions(
    out: &Path,
    bundle: &Bundle,
    id: &str,
    text: &EmbeddingMatrix,
) -> Result<PathBuf> {
    let scores = similarity(&bundle.audio, text)?;
    let preds = predict(scores, bundle.manifest.task_type())?;
    let path = out.join("predictions").join(format!("{id}.jsonl"));
    io::write_jsonl(&path, &prediction_records(&bundle.manifest, &preds))?;
    Ok(path)
}

/// Writes `predictions/<setup_id>.jsonl`; `pt_ensemble` is accepted when
/// template setups are configured.
pub fn cmd_classify(cfg: &ExperimentConfig, setup_id: &str) -> Result<PathBuf> {
    let bundle = load_valid_bundle(cfg)?;
    if let Some(s) = bundle.setups.iter().find(|s| s.setup_id == setup_id) {
        return write_predictions(&cfg.out, &bundle, setup_id, &s.text);
    }
    if setup_id == ENSEMBLE_ID {
        if let Some(e) = template_ensemble(&bundle.setups)? {
            return write_predictions(&cfg.out, &bundle, setup_id, &e);
        }
    }
    Err(CliError::Contract(format!("unknown setup id `{setup_id}`")))
}

#[derive(Debug, Clone)]
pub struct EvalOutcome {
    pub kind: MetricKind,
    pub reports: Vec<SetupReport>,
    pub summary: String,
}

/// Scores every setup and the template ensemble; writes reports,
/// predictions and `summary.md`.
pub fn cmd_eval(cfg: &ExperimentConfig) -> Result<EvalOutcome> {
    let bundle = load_valid_bundle(cfg)?;
    let templates = cfg.load_templates()?;
    let manifest = &bundle.manifest;
    let kind = cfg.metric.resolve(manifest.task_type())?;

    let mut entries: Vec<(String, Option<_>, EmbeddingMatrix)> = bundle
        .setups
        .iter()
        .map(|s| (s.setup_id.clone(), Some(s.spec.clone()), s.text.clone()))
        .collect();
    if let Some(e) = template_ensemble(&bundle.setups)? {
        entries.push((ENSEMBLE_ID.to_string(), None, e));
    }

    let all: Vec<usize> = (0..manifest.n_samples()).collect();
    let scored = entries
        .par_iter()
        .map(|(_, _, text)| {
            let scores = similarity(&bundle.audio, text)?;
            let report = evaluate_subset(&scores, manifest, &all, kind)?;
            let preds = predict(scores, manifest.task_type())?;
            Ok((report, prediction_records(manifest, &preds)))
        })
        .collect::<Result<Vec<_>>>()?;

    let mut reports = Vec::with_capacity(entries.len());
    let mut rows = Vec::with_capacity(entries.len());
    for ((id, spec, _), (report, preds)) in entries.into_iter().zip(scored) {
        io::write_jsonl(
            &cfg.out.join("predictions").join(format!("{id}.jsonl")),
            &preds,
        )?;
        let r = SetupReport {
            prompt: spec
                .as_ref()
                .map_or_else(|| "ensemble".to_string(), ToString::to_string),
            setup_id: id.clone(),
            report,
        };
        io::write_json(&cfg.out.join("reports").join(format!("{id}.json")), &r)?;
        rows.push(SummaryRow {
            setup_id: id,
            spec,
            overall: r.report.overall,
        });
        reports.push(r);
    }
    let summary = eval_summary(manifest, kind, &rows, &templates);
    io::write_bytes(&cfg.out.join("summary.md"), summary.as_bytes())?;
    Ok(EvalOutcome {
        kind,
        reports,
        summary,
    })
}

#[derive(Debug, Clone)]
pub struct AdaptiveOutcome {
    pub folds: FoldPlan,
    /// The primary run first, then one run per description setup.
    pub runs: Vec<(String, EvalReport)>,
    pub summary: String,
}

/// Baseline first, then the other setups in tie-break priority order:
/// description variants in their natural order, then anything else.
fn adaptive_order(
    cfg: &ExperimentConfig,
    setups: &[CandidateSetup],
) -> Result<Vec<CandidateSetup>> {
    let baseline = match &cfg.baseline {
        Some(b) => setups
            .iter()
            .find(|s| &s.setup_id == b)
            .ok_or_else(|| CliError::Contract(format!("baseline setup `{b}` is not configured")))?,
        None => setups
            .iter()
            .find(|s| s.spec.is_class_only())
            .ok_or_else(|| {
                CliError::Contract("adaptive selection needs a class-only baseline setup".into())
            })?,
    };
    let mut rest: Vec<CandidateSetup> = setups
        .iter()
        .filter(|s| s.setup_id != baseline.setup_id)
        .cloned()
        .collect();
    if rest.is_empty() {
        return Err(CliError::Contract(
            "adaptive selection needs at least two setups".into(),
        ));
    }
    rest.sort_by_key(|s| {
        s.spec
            .description_variant()
            .map_or(usize::MAX, |v| v as usize)
    });
    rest.insert(0, baseline.clone());
    Ok(rest)
}

/// Cross-validated per-class selection over all setups, plus one
/// baseline-vs-setup run per non-baseline setup when there are several.
pub fn cmd_adaptive(cfg: &ExperimentConfig, top_k: usize) -> Result<AdaptiveOutcome> {
    let bundle = load_valid_bundle(cfg)?;
    let manifest = &bundle.manifest;
    let kind = cfg.metric.resolve(manifest.task_type())?;
    let ordered = adaptive_order(cfg, &bundle.setups)?;
    let baseline = ordered[0].setup_id.clone();
    let folds =
        make_folds(manifest, cfg.folds, cfg.seed).map_err(|e| CliError::Contract(e.to_string()))?;

    let mut plans: Vec<(String, Vec<CandidateSetup>)> = Vec::new();
    if ordered.len() == 2 {
        plans.push((ordered[1].setup_id.clone(), ordered.clone()));
    } else {
        plans.push(("all".to_string(), ordered.clone()));
        for s in &ordered[1..] {
            plans.push((s.setup_id.clone(), vec![ordered[0].clone(), s.clone()]));
        }
    }
    let runs = plans
        .into_par_iter()
        .map(|(name, setups)| {
            crossval_evaluate(&setups, &bundle.audio, manifest, &folds, &baseline, kind)
                .map(|r| (name, r))
                .map_err(CliError::from)
        })
        .collect::<Result<Vec<_>>>()?;

    let dir = cfg.out.join("adaptive");
    io::write_json(
        &dir.join("folds.json"),
        &FoldDocument::new(manifest, &folds),
    )?;
    for (i, (name, report)) in runs.iter().enumerate() {
        let run_dir = if i == 0 { dir.clone() } else { dir.join(name) };
        for f in &report.folds {
            let doc = MapDocument {
                manifest,
                map: &f.map,
            };
            io::write_json(&run_dir.join(format!("fold{}.map.json", f.fold)), &doc)?;
        }
    }
    let doc = AdaptiveDocument {
        dataset_id: manifest.dataset_id(),
        runs: runs
            .iter()
            .map(|(name, report)| AdaptiveRun { name, report })
            .collect(),
    };
    io::write_json(&dir.join("report.json"), &doc)?;
    let summary = adaptive_summary(manifest, &folds, &runs, top_k);
    io::write_bytes(&dir.join("summary.md"), summary.as_bytes())?;
    Ok(AdaptiveOutcome {
        folds,
        runs,
        summary,
    })
}

/// Writes the prompt text of every configured setup as JSONL, one line per
/// class per setup. Text embedding paths are not needed.
pub fn cmd_render(cfg: &ExperimentConfig, output: Option<&Path>) -> Result<PathBuf> {
    let manifest = cfg.load_manifest()?;
    let templates = cfg.load_templates()?;
    let mut records = Vec::new();
    for (i, s) in cfg.setups.iter().enumerate() {
        if cfg.setups[..i].iter().any(|o| o.id == s.id) {
            return Err(CliError::Contract(format!("duplicate setup id `{}`", s.id)));
        }
        let prompts = render_prompt(&manifest, &s.spec, &templates)
            .map_err(|e| CliError::Contract(format!("setup `{}`: {e}", s.id)))?;
        records.extend(prompts.into_iter().map(|p| PromptRecord::new(&s.id, p)));
    }
    let path = output.map_or_else(|| cfg.out.join("prompts.jsonl"), Path::to_path_buf);
    io::write_jsonl(&path, &records)?;
    Ok(path)
}

/// L2-normalizes the rows of an AEMB file.
pub fn cmd_normalize(input: &Path, output: &Path) -> Result<()> {
    let m = io::load_embeddings(input)?;
    let n = l2_normalize(&m).map_err(|source| CliError::Matrix {
        path: input.to_path_buf(),
        source,
    })?;
    io::save_embeddings(&n, output)
}
