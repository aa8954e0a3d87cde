use std::path::PathBuf;

use absa_core::backend::BackendSpec;
use absa_core::corpus::Domain;
use absa_core::experiments::{load_results, reproduce_tables, run_experiment, DataPaths, ExperimentSpec, RunContext, FAILED_MARKER};
use absa_core::prompting::{SubtaskKind, Variant};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn fixtures() -> DataPaths {
    DataPaths {
        laptops_train: Some(fixture("laptops_train.xml")),
        laptops_test: Some(fixture("laptops_test.xml")),
        restaurants_train: Some(fixture("restaurants_train.xml")),
        restaurants_test: Some(fixture("restaurants_test.xml")),
    }
}

fn toy(subtask: SubtaskKind, train: &[Domain], test: Domain) -> ExperimentSpec {
    let mut spec = ExperimentSpec::new(subtask, Variant::V1, train, test, BackendSpec::Toy).with_seeds(&[0, 1]);
    spec.hyperparameters.epochs = 3;
    spec
}

#[test]
fn completed_seeds_are_not_rerun() {
    let root = tempfile::tempdir().unwrap();
    let ctx = RunContext::new(fixtures(), root.path());
    let spec = toy(SubtaskKind::Atsc, &[Domain::Laptops], Domain::Laptops);
    let first = run_experiment(&spec, &ctx).unwrap();
    let probe = first.predictions_path.join("seed-0/probe");
    std::fs::write(&probe, "kept").unwrap();
    let second = run_experiment(&spec, &ctx).unwrap();
    assert!(probe.exists(), "seed 0 was recomputed");
    assert_eq!(first.aggregate, second.aggregate);
    assert_eq!(first.manifests, second.manifests);
}

#[test]
fn cross_domain_cells_reuse_in_domain_checkpoints() {
    let root = tempfile::tempdir().unwrap();
    let ctx = RunContext::new(fixtures(), root.path());
    let in_domain = run_experiment(&toy(SubtaskKind::Ate, &[Domain::Laptops], Domain::Laptops), &ctx).unwrap();
    let cross = run_experiment(&toy(SubtaskKind::Ate, &[Domain::Laptops], Domain::Restaurants), &ctx).unwrap();
    for (a, b) in in_domain.manifests.iter().zip(&cross.manifests) {
        assert_eq!(a.train_report, b.train_report);
        assert_eq!(a.dataset_fingerprint, b.dataset_fingerprint);
    }
    assert!(root.path().join("checkpoints/ate/v1/laptops/seed-1/manifest.json").is_file());
}

#[test]
fn joint_domain_order_depends_on_seed() {
    let root = tempfile::tempdir().unwrap();
    let ctx = RunContext::new(fixtures(), root.path());
    let spec = toy(SubtaskKind::Joint, &[Domain::Laptops, Domain::Restaurants], Domain::Restaurants);
    let result = run_experiment(&spec, &ctx).unwrap();
    let [a, b] = &result.manifests[..] else { panic!("two seeds") };
    assert!(a.shuffled && b.shuffled);
    assert_eq!(a.dataset_size, b.dataset_size);
    assert_ne!(a.dataset_fingerprint, b.dataset_fingerprint);
    assert_eq!(a.hyperparameters.train_batch_size, 8);
}

#[test]
fn failed_cells_are_marked_and_skipped_by_the_report() {
    let root = tempfile::tempdir().unwrap();
    let mut data = fixtures();
    data.restaurants_test = None;
    let broken = RunContext::new(data, root.path());
    let ok_spec = ExperimentSpec::new(SubtaskKind::Ate, Variant::V2, &[Domain::Laptops], Domain::Laptops, BackendSpec::Oracle);
    let bad_spec = ExperimentSpec::new(SubtaskKind::Ate, Variant::V2, &[Domain::Restaurants], Domain::Restaurants, BackendSpec::Oracle);
    run_experiment(&ok_spec, &broken).unwrap();
    let err = run_experiment(&bad_spec, &broken).unwrap_err();
    assert!(err.to_string().contains(&bad_spec.cell_id()), "{err}");
    let bad_dir = broken.results_dir.join(bad_spec.cell_id());
    assert!(bad_dir.join(FAILED_MARKER).exists());

    let loaded = load_results(&broken.results_dir).unwrap();
    assert_eq!(loaded.len(), 1);
    let report = reproduce_tables(&loaded);
    assert!(report.text.contains("missing / 92.10"), "{}", report.text);

    let fixed = RunContext::new(fixtures(), root.path());
    run_experiment(&bad_spec, &fixed).unwrap();
    assert!(!bad_dir.join(FAILED_MARKER).exists());
    assert_eq!(load_results(&fixed.results_dir).unwrap().len(), 2);
}

#[test]
fn constant_backend_runs_without_training() {
    let root = tempfile::tempdir().unwrap();
    let ctx = RunContext::new(fixtures(), root.path());
    let spec = ExperimentSpec::new(
        SubtaskKind::Joint,
        Variant::V1,
        &[Domain::Restaurants],
        Domain::Laptops,
        BackendSpec::Constant {
            output: "noaspectterm:none".into(),
        },
    );
    let result = run_experiment(&spec, &ctx).unwrap();
    assert_eq!(result.manifests.len(), 5);
    assert!(result.manifests.iter().all(|m| m.train_report.steps == 0));
    assert_eq!(result.aggregate.mean.f1, 0.0);
    assert!(!root.path().join("checkpoints").exists());
}
