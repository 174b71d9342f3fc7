//! Markdown summaries.

use std::fmt::Write;

use zeroshot_core::{
    format_delta_row, format_label, sanitize_label, DatasetManifest, EvalReport, FoldPlan,
    MetricKind, PromptFormat, PromptSpec, TemplateRegistry,
};

/// One evaluated setup as it appears in the summary.
#[derive(Debug, Clone)]
pub struct SummaryRow {
    pub setup_id: String,
    /// `None` for the template ensemble.
    pub spec: Option<PromptSpec>,
    pub overall: f64,
}

fn metric_name(kind: MetricKind) -> &'static str {
    match kind {
        MetricKind::Accuracy => "accuracy",
        MetricKind::MeanAveragePrecision => "mAP",
    }
}

/// Indices sorted by score, highest first; equal scores keep input order.
pub fn ranking(scores: &[f64]) -> Vec<usize> {
    let mut idx: Vec<usize> = (0..scores.len()).collect();
    idx.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    idx
}

/// Index of the best template setup, if any.
pub fn best_template(rows: &[SummaryRow]) -> Option<usize> {
    let candidates: Vec<usize> = (0..rows.len())
        .filter(|&i| {
            rows[i]
                .spec
                .as_ref()
                .is_some_and(|s| s.template_id().is_some())
        })
        .collect();
    let scores: Vec<f64> = candidates.iter().map(|&i| rows[i].overall).collect();
    ranking(&scores).first().map(|&j| candidates[j])
}

fn describe(row: &SummaryRow, templates: &TemplateRegistry) -> String {
    match &row.spec {
        None => "ensemble of all template setups".to_string(),
        Some(spec) => match spec.template_id().and_then(|t| templates.get(t)) {
            Some(text) => format!("{spec} (\"{text}\")"),
            None => spec.to_string(),
        },
    }
}

pub fn eval_summary(
    manifest: &DatasetManifest,
    kind: MetricKind,
    rows: &[SummaryRow],
    templates: &TemplateRegistry,
) -> String {
    let mut s = String::new();
    let _ = writeln!(s, "# Zero-shot evaluation: {}\n", manifest.dataset_id());
    let _ = writeln!(
        s,
        "{} classes, {} samples, metric {}.\n",
        manifest.n_classes(),
        manifest.n_samples(),
        metric_name(kind)
    );
    let best_t = best_template(rows);
    let order = ranking(&rows.iter().map(|r| r.overall).collect::<Vec<_>>());
    s.push_str("| Rank | Setup | Prompt | Score | |\n|---:|---|---|---:|---|\n");
    for (rank, &i) in order.iter().enumerate() {
        let mut marks = Vec::new();
        if rank == 0 {
            marks.push("best");
        }
        if Some(i) == best_t {
            marks.push("best template");
        }
        let _ = writeln!(
            s,
            "| {} | {} | {} | {:.4} | {} |",
            rank + 1,
            rows[i].setup_id,
            describe(&rows[i], templates),
            rows[i].overall,
            marks.join(", ")
        );
    }
    if let Some(i) = best_t {
        let _ = writeln!(
            s,
            "\nBest template: `{}`, {} {:.4}.",
            rows[i].setup_id,
            describe(&rows[i], templates),
            rows[i].overall
        );
    }

    let formats: Vec<usize> = (0..rows.len())
        .filter(|&i| rows[i].spec.as_ref().is_some_and(PromptSpec::is_class_only))
        .collect();
    if !formats.is_empty() {
        s.push_str(
            "\n## Label formats\n\n| Rank | Format | Setup | Score |\n|---:|---|---|---:|\n",
        );
        let scores: Vec<f64> = formats.iter().map(|&i| rows[i].overall).collect();
        for (rank, j) in ranking(&scores).into_iter().enumerate() {
            let r = &rows[formats[j]];
            let spec = r
                .spec
                .as_ref()
                .map(|p| p.format().as_str())
                .unwrap_or_default();
            let _ = writeln!(
                s,
                "| {} | {} | {} | {:.4} |",
                rank + 1,
                spec,
                r.setup_id,
                r.overall
            );
        }
    }
    s
}

/// Display form of a class label, e.g. `dog_barking` -> `Dog barking`.
pub fn display_label(manifest: &DatasetManifest, class: usize) -> String {
    let c = &manifest.classes()[class];
    sanitize_label(&c.raw_label)
        .map(|l| format_label(&l, PromptFormat::Upper))
        .unwrap_or_else(|_| c.class_id.clone())
}

fn signed_pp(delta: f64) -> String {
    format!("{:+.2}", 100.0 * delta)
}

pub fn adaptive_summary(
    manifest: &DatasetManifest,
    plan: &FoldPlan,
    runs: &[(String, EvalReport)],
    top_k: usize,
) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "# Adaptive description selection: {}\n",
        manifest.dataset_id()
    );
    let Some((primary_name, primary)) = runs.first() else {
        return s;
    };
    let _ = writeln!(
        s,
        "Metric {}, {} folds, seed {}, baseline `{}`.\n",
        metric_name(primary.kind),
        plan.n_folds,
        plan.seed,
        primary.baseline
    );
    s.push_str("| Run | Setups | Fold mean | Baseline fold mean | Change (pp) |\n");
    s.push_str("|---|---|---:|---:|---:|\n");
    for (name, r) in runs {
        let _ = writeln!(
            s,
            "| {} | {} | {:.4} | {:.4} | {} |",
            name,
            r.setups.join(", "),
            r.mean,
            r.baseline_mean,
            signed_pp(r.mean - r.baseline_mean)
        );
    }

    let _ = writeln!(s, "\n## Folds of `{primary_name}`\n");
    s.push_str("| Fold | Train | Test | Score | Baseline | Switched classes |\n");
    s.push_str("|---:|---:|---:|---:|---:|---|\n");
    for f in &primary.folds {
        let switched: Vec<String> = f
            .map
            .switched_classes()
            .into_iter()
            .map(|c| format!("{} -> {}", manifest.classes()[c].class_id, f.map.choices[c]))
            .collect();
        let _ = writeln!(
            s,
            "| {} | {} | {} | {:.4} | {:.4} | {} |",
            f.fold,
            f.n_train,
            f.n_test,
            f.report.overall,
            f.baseline_report.overall,
            switched.join(", ")
        );
    }

    let _ = writeln!(
        s,
        "\n## Largest per-class changes of `{primary_name}`\n\n```text"
    );
    for d in primary.deltas.iter().take(top_k) {
        let _ = writeln!(
            s,
            "{}",
            format_delta_row(&display_label(manifest, d.class_index), d.delta)
        );
    }
    s.push_str("```\n");
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ranking_is_stable_on_ties() {
        assert_eq!(ranking(&[0.5, 0.9, 0.5, 0.9]), vec![1, 3, 0, 2]);
        assert!(ranking(&[]).is_empty());
    }

    #[test]
    fn best_template_ignores_other_setups() {
        let row = |id: &str, spec: Option<&str>, v: f64| SummaryRow {
            setup_id: id.into(),
            spec: spec.map(|s| s.parse().unwrap()),
            overall: v,
        };
        let rows = [
            row("cls", Some("upper_period"), 0.99),
            row("t1", Some("lower,template=1"), 0.5),
            row("t7", Some("lower,template=7"), 0.7),
            row("pt_ensemble", None, 0.8),
        ];
        assert_eq!(best_template(&rows), Some(2));
        assert_eq!(best_template(&rows[..1]), None);
    }
}
