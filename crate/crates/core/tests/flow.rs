//! Library-level walk through both halves of the toolkit: classify, then
//! compare practices.

use repodomain_core::corpus::{load_dataset, save_dataset, stratified_split};
use repodomain_core::eval::evaluate_split;
use repodomain_core::features::PipelineConfig;
use repodomain_core::model::{load_bundle, save_bundle, ModelBundle, TrainConfig};
use repodomain_core::practices::{profiles_csv, read_profiles, write_profiles};
use repodomain_core::stats::{adoption_csv, domain_comparison_report, tests_csv};
use repodomain_core::synthetic::{synthetic_corpus, synthetic_profiles};

#[test]
fn split_train_bundle_and_score_unseen_records() {
    let dir = tempfile::tempdir().unwrap();
    let ds = synthetic_corpus(21);
    let path = dir.path().join("data.jsonl");
    save_dataset(&ds, &path).unwrap();
    let ds = load_dataset(&path).unwrap();

    let (train, test) = stratified_split(&ds, 0.2, 21).unwrap();
    assert_eq!(train.len() + test.len(), 250);
    let tc = TrainConfig {
        num_rounds: 40,
        max_leaves: 8,
        ..TrainConfig::default()
    };
    let out = evaluate_split(&train.records, &test.records, &PipelineConfig::default(), &tc, None).unwrap();
    assert!(out.report.accuracy >= 2.0 * out.report.zero_r_accuracy.unwrap());

    let bundle = ModelBundle {
        model: out.model,
        pipeline: Some(out.pipeline),
        class_counts: train.class_counts(),
        provenance: serde_json::json!({ "seed": 21 }),
    };
    let bpath = dir.path().join("m.bundle");
    save_bundle(&bundle, &bpath).unwrap();
    let loaded = load_bundle(&bpath).unwrap();
    let pipeline = loaded.pipeline.as_ref().unwrap();
    let m = pipeline.transform(&test.records, None).unwrap();
    assert_eq!(loaded.model.predict_proba(&m).unwrap(), out.probabilities);
}

#[test]
fn profiles_roundtrip_into_a_stable_report() {
    let dir = tempfile::tempdir().unwrap();
    let profiles = synthetic_profiles(40, 8);
    let path = dir.path().join("profiles.csv");
    write_profiles(&path, &profiles).unwrap();
    let back = read_profiles(&path).unwrap();
    assert_eq!(profiles_csv(&back), profiles_csv(&profiles));

    let a = domain_comparison_report(&back);
    let b = domain_comparison_report(&profiles);
    assert_eq!(adoption_csv(&a), adoption_csv(&b));
    assert_eq!(tests_csv(&a), tests_csv(&b));
    assert_eq!(a.adoption_total.0 + a.adoption_total.1, 200);
    // five one-vs-rest adoption tests plus the pairwise ones
    assert!(a.tests.iter().filter(|t| t.test == "adoption_chi2").count() >= 5);
}
