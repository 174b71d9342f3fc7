//! Implementation results checked against independent brute-force oracles.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

use zeroshot_core::{
    apply_selection, classify, crossval_evaluate, evaluate_subset, l2_normalize, make_folds,
    mean_average_precision, similarity, CandidateSetup, ClassEntry, DatasetManifest,
    EmbeddingMatrix, MetricKind, PromptFormat, PromptSpec, SampleEntry, ScoreMatrix, SelectionMap,
    TaskType,
};

/// Precision at each positive's rank, with ranks counted directly from the
/// definition: everything scoring higher, plus equal scores at lower index.
fn brute_force_ap(scores: &[f64], rel: &[bool]) -> Option<f64> {
    let positives: Vec<usize> = (0..rel.len()).filter(|&i| rel[i]).collect();
    if positives.is_empty() {
        return None;
    }
    let rank = |i: usize| {
        1 + (0..scores.len())
            .filter(|&j| scores[j] > scores[i] || (scores[j] == scores[i] && j < i))
            .count()
    };
    let mut total = 0.0;
    for &p in &positives {
        let r = rank(p);
        let hits = positives.iter().filter(|&&q| rank(q) <= r).count();
        total += hits as f64 / r as f64;
    }
    Some(total / positives.len() as f64)
}

#[test]
fn map_matches_brute_force_on_random_instances() {
    let mut rng = ChaCha8Rng::seed_from_u64(2024);
    for _ in 0..500 {
        let n = rng.gen_range(1..=20);
        let k = rng.gen_range(1..=5);
        // Coarse grid so ties are common.
        let values: Vec<f64> = (0..n * k)
            .map(|_| f64::from(rng.gen_range(0..8u8)) / 7.0)
            .collect();
        let truth: Vec<Vec<usize>> = (0..n)
            .map(|_| (0..k).filter(|_| rng.gen_bool(0.3)).collect())
            .collect();
        let scores = ScoreMatrix::new(n, k, values.clone(), vec![String::new(); k]).unwrap();
        let oracle: Vec<Option<f64>> = (0..k)
            .map(|c| {
                let col: Vec<f64> = (0..n).map(|i| values[i * k + c]).collect();
                let rel: Vec<bool> = truth.iter().map(|t| t.contains(&c)).collect();
                brute_force_ap(&col, &rel)
            })
            .collect();
        let defined: Vec<f64> = oracle.iter().flatten().copied().collect();
        match mean_average_precision(&scores, &truth) {
            Ok(r) => {
                let expect = defined.iter().sum::<f64>() / defined.len() as f64;
                assert!((r.overall - expect).abs() < 1e-12);
                for p in &r.per_class {
                    assert!((p.value - oracle[p.class_index].unwrap()).abs() < 1e-12);
                }
                let skipped: Vec<usize> = (0..k).filter(|&c| oracle[c].is_none()).collect();
                assert_eq!(r.skipped_classes, skipped);
            }
            Err(_) => assert!(defined.is_empty()),
        }
    }
}

#[test]
fn two_class_map_is_mean_of_aps() {
    // class 0 ranked perfectly (AP 1); class 1 positive at rank 2 (AP 0.5).
    let s = ScoreMatrix::new(2, 2, vec![0.9, 0.8, 0.1, 0.2], vec![String::new(); 2]).unwrap();
    let r = mean_average_precision(&s, &[vec![0], vec![1]]).unwrap();
    assert_eq!(r.overall, 0.75);
}

fn unit_rows(rows: &[Vec<f32>]) -> EmbeddingMatrix {
    l2_normalize(&EmbeddingMatrix::from_rows(rows).unwrap()).unwrap()
}

fn class_manifest(truth: &[usize], k: usize) -> DatasetManifest {
    DatasetManifest::new(
        "synthetic".into(),
        TaskType::SingleLabel,
        (0..k)
            .map(|c| ClassEntry {
                class_id: format!("c{c}"),
                raw_label: format!("class_{c}"),
                descriptions: BTreeMap::new(),
            })
            .collect(),
        truth
            .iter()
            .enumerate()
            .map(|(i, &t)| SampleEntry {
                sample_id: format!("s{i:03}"),
                truth: vec![t],
                row: i,
            })
            .collect(),
    )
    .unwrap()
}

fn setup(id: &str, rows: &[Vec<f32>]) -> CandidateSetup {
    CandidateSetup {
        setup_id: id.into(),
        text: unit_rows(rows),
        spec: PromptSpec::class_only(PromptFormat::UpperPeriod),
    }
}

/// Three classes on the axes of R^4 with small noise. Label-only text for
/// class 1 sits between class 0 and class 2; its description text is on
/// axis 1. Description texts for classes 0 and 2 are poor.
fn confusable_fixture(seed: u64) -> (DatasetManifest, EmbeddingMatrix, Vec<CandidateSetup>) {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let per_class = 30;
    let mut truth = Vec::new();
    let mut audio = Vec::new();
    for c in 0..3 {
        for _ in 0..per_class {
            let mut v: Vec<f32> = (0..4).map(|_| rng.gen_range(-0.15..0.15)).collect();
            v[c] += 1.0;
            audio.push(v);
            truth.push(c);
        }
    }
    let cls = setup(
        "cls",
        &[
            vec![1.0, 0.0, 0.0, 0.0],
            vec![0.7, 0.0, 0.7, 0.3],
            vec![0.0, 0.0, 1.0, 0.0],
        ],
    );
    let base = setup(
        "base",
        &[
            vec![0.3, 0.0, 0.0, 1.0],
            vec![0.0, 1.0, 0.0, 0.0],
            vec![0.0, 0.0, 0.3, 1.0],
        ],
    );
    (
        class_manifest(&truth, 3),
        unit_rows(&audio),
        vec![cls, base],
    )
}

fn plain_accuracy(manifest: &DatasetManifest, audio: &EmbeddingMatrix, s: &CandidateSetup) -> f64 {
    let all: Vec<usize> = (0..manifest.n_samples()).collect();
    let scores = similarity(audio, &s.text).unwrap();
    evaluate_subset(&scores, manifest, &all, MetricKind::Accuracy)
        .unwrap()
        .overall
}

#[test]
fn composed_setup_beats_both_pure_setups_on_confusable_fixture() {
    let (m, audio, setups) = confusable_fixture(11);
    let mut map = SelectionMap::all_baseline("cls", 3);
    map.choices[1] = "base".into();
    let composed = apply_selection(&map, &setups, &audio).unwrap();
    let preds = classify(&composed).unwrap();
    let truth = m.single_truth_by_row().unwrap();
    let composed_acc =
        preds.iter().zip(&truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64;

    // Brute force: try every one of the 2^3 maps and confirm the chosen one is
    // the best and that it beats both pure setups.
    let mut best = 0.0f64;
    for bits in 0..8u32 {
        let mut m2 = SelectionMap::all_baseline("cls", 3);
        for c in 0..3 {
            if bits >> c & 1 == 1 {
                m2.choices[c] = "base".into();
            }
        }
        let p = classify(&apply_selection(&m2, &setups, &audio).unwrap()).unwrap();
        let acc = p.iter().zip(&truth).filter(|(p, t)| p == t).count() as f64 / truth.len() as f64;
        best = best.max(acc);
    }
    assert_eq!(composed_acc, best);
    assert!(composed_acc >= plain_accuracy(&m, &audio, &setups[0]));
    assert!(composed_acc >= plain_accuracy(&m, &audio, &setups[1]));
}

#[test]
fn crossval_single_setup_equals_plain_evaluation() {
    let (m, audio, setups) = confusable_fixture(3);
    let folds = make_folds(&m, 5, 42).unwrap();
    let r = crossval_evaluate(
        &setups[..1],
        &audio,
        &m,
        &folds,
        "cls",
        MetricKind::Accuracy,
    )
    .unwrap();
    assert_eq!(r.pooled.overall, plain_accuracy(&m, &audio, &setups[0]));
    assert_eq!(r.mean, r.baseline_mean);
    for f in &r.folds {
        assert!(f.map.switched_classes().is_empty());
    }
}

#[test]
fn crossval_identical_setups_equal_either() {
    let (m, audio, mut setups) = confusable_fixture(5);
    setups[1].text = setups[0].text.clone();
    let folds = make_folds(&m, 5, 42).unwrap();
    let r = crossval_evaluate(&setups, &audio, &m, &folds, "cls", MetricKind::Accuracy).unwrap();
    assert_eq!(r.pooled, r.baseline_pooled);
    assert!(r.deltas.iter().all(|d| d.delta == 0.0));
}

#[test]
fn crossval_matches_known_optimal_map() {
    let (m, audio, setups) = confusable_fixture(9);
    let folds = make_folds(&m, 5, 42).unwrap();
    let r = crossval_evaluate(&setups, &audio, &m, &folds, "cls", MetricKind::Accuracy).unwrap();

    // Oracle: the known-optimal map evaluated directly on each test fold.
    let mut optimal = SelectionMap::all_baseline("cls", 3);
    optimal.choices[1] = "base".into();
    let composed = apply_selection(&optimal, &setups, &audio).unwrap();
    let oracle_mean = (0..5)
        .map(|f| {
            evaluate_subset(&composed, &m, &folds.test_samples(f), MetricKind::Accuracy)
                .unwrap()
                .overall
        })
        .sum::<f64>()
        / 5.0;
    assert!(
        (r.mean - oracle_mean).abs() <= 0.05,
        "{} vs {}",
        r.mean,
        oracle_mean
    );

    let per_fold_mean = r.folds.iter().map(|f| f.report.overall).sum::<f64>() / 5.0;
    assert!((r.mean - per_fold_mean).abs() <= 1e-12);
    assert_eq!(r.deltas[0].class_index, 1);
}
