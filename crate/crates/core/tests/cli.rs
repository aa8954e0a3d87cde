use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

fn absa(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_absa"))
        .args(args)
        .env_remove("ABSA_STORAGE_ROOT")
        .output()
        .expect("spawn absa")
}

fn ok(args: &[&str]) -> String {
    let out = absa(args);
    assert!(
        out.status.success(),
        "absa {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn ingest_prints_sentence_count_and_writes_jsonl() {
    let dir = tempfile::tempdir().unwrap();
    let jsonl = dir.path().join("lt.jsonl");
    let xml = fixture("laptops_train.xml");
    let stdout = ok(&["ingest", "--input", s(&xml), "--domain", "laptops", "--split", "train", "--out", s(&jsonl)]);
    assert!(stdout.starts_with("8 sentences"), "{stdout}");
    let stats = ok(&["stats", "--corpus", s(&jsonl)]);
    assert_eq!(stats, stdout);
    let json = ok(&["--format", "json", "stats", "--corpus", s(&jsonl)]);
    let v: serde_json::Value = serde_json::from_str(&json).unwrap();
    assert_eq!(v["sentences"], 8);
}

#[test]
fn oracle_pipeline_scores_perfectly() {
    let dir = tempfile::tempdir().unwrap();
    let gold = fixture("restaurants_test.xml");
    for subtask in ["ate", "atsc", "joint"] {
        let data = dir.path().join(format!("{subtask}.jsonl"));
        let pred = dir.path().join(format!("{subtask}.pred.jsonl"));
        let built = ok(&[
            "build-prompts", "--corpus", s(&gold), "--domain", "restaurants", "--split", "test",
            "--subtask", subtask, "--variant", "v2", "--out", s(&data), "--eval",
        ]);
        assert!(built.trim_end().ends_with("examples"), "{built}");
        let predicted = ok(&["predict", "--data", s(&data), "--backend", "oracle", "--out", s(&pred)]);
        assert!(predicted.contains("predictions"), "{predicted}");
        let scored = ok(&[
            "score", "--gold", s(&gold), "--domain", "restaurants", "--pred", s(&pred), "--subtask", subtask,
        ]);
        assert!(scored.contains("f1 1.00"), "{subtask}: {scored}");
    }
}

#[test]
fn empty_corpus_builds_zero_examples() {
    let dir = tempfile::tempdir().unwrap();
    let xml = dir.path().join("empty.xml");
    std::fs::write(&xml, "<sentences></sentences>").unwrap();
    let out = dir.path().join("out.jsonl");
    let stdout = ok(&[
        "build-prompts", "--corpus", s(&xml), "--domain", "laptops", "--subtask", "ate", "--variant", "v1",
        "--out", s(&out),
    ]);
    assert_eq!(stdout.trim(), "0 examples");
}

#[test]
fn toy_train_then_predict() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.jsonl");
    let ckpt = dir.path().join("ckpt");
    let pred = dir.path().join("pred.jsonl");
    let xml = fixture("laptops_train.xml");
    ok(&[
        "build-prompts", "--corpus", s(&xml), "--domain", "laptops", "--subtask", "atsc", "--variant", "v1",
        "--out", s(&data),
    ]);
    let trained = ok(&["train", "--data", s(&data), "--backend", "toy", "--checkpoint", s(&ckpt), "--epochs", "20"]);
    assert!(trained.starts_with("trained toy-perceptron"), "{trained}");
    assert!(ckpt.join("manifest.json").is_file());
    let predicted = ok(&[
        "predict", "--data", s(&data), "--backend", "toy", "--checkpoint", s(&ckpt), "--out", s(&pred),
    ]);
    assert_eq!(predicted.trim(), "12 predictions");
}

#[test]
fn constant_backend_cannot_train() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("train.jsonl");
    let xml = fixture("laptops_train.xml");
    ok(&[
        "build-prompts", "--corpus", s(&xml), "--domain", "laptops", "--subtask", "ate", "--variant", "v1",
        "--out", s(&data),
    ]);
    let out = absa(&["train", "--data", s(&data), "--backend", "constant:x", "--checkpoint", s(dir.path())]);
    assert!(!out.status.success());
}

#[test]
fn bad_arguments_fail_with_a_message() {
    let out = absa(&["build-prompts", "--corpus", "x.xml", "--subtask", "sentiment", "--variant", "v1", "--out", "o"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("sentiment"));

    let out = absa(&["stats", "--corpus", "/nonexistent/gold.jsonl"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("/nonexistent/gold.jsonl"));

    let out = absa(&["stats", "--corpus", s(&fixture("laptops_test.xml"))]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--domain"));
}

#[test]
fn experiment_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let plan = format!(
        r#"
storage_root = "store"
seeds = [0, 1]

[data]
laptops_train = "{}"
laptops_test = "{}"
restaurants_train = "{}"
restaurants_test = "{}"

[backend]
kind = "oracle"

[grid]
subtasks = ["ate", "atsc"]
variants = ["v2"]
regimes = ["in-domain"]
"#,
        s(&fixture("laptops_train.xml")),
        s(&fixture("laptops_test.xml")),
        s(&fixture("restaurants_train.xml")),
        s(&fixture("restaurants_test.xml")),
    );
    let plan_path = dir.path().join("plan.toml");
    std::fs::write(&plan_path, plan).unwrap();
    let stdout = ok(&["experiment", "--spec", s(&plan_path)]);
    assert_eq!(stdout.lines().count(), 4, "{stdout}");
    assert!(stdout.lines().all(|l| l.contains("1.00")), "{stdout}");

    let results = dir.path().join("store/results");
    let csv = dir.path().join("report.csv");
    let report = ok(&["report", "--results", s(&results), "--csv", s(&csv)]);
    assert!(report.contains("100.00 / 92.30"), "{report}");
    let csv = std::fs::read_to_string(&csv).unwrap();
    assert!(csv.starts_with("table,subtask,variant,train,test,metric,ours,reference,delta,runs\n"));
    assert!(csv.contains("table1,ate,v2,laptops,laptops,f1,100.00,92.30,+7.70,2"), "{csv}");
}
