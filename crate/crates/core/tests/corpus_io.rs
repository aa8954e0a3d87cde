use std::path::PathBuf;

use absa_core::corpus::{
    corpus_stats, load_semeval_xml, merge_corpora, read_corpus_jsonl, write_corpus_jsonl, CorpusDomain, Domain, Split,
};
use absa_core::prompting::{build_dataset, build_eval_dataset, PromptConfig, SubtaskKind, Variant};
use absa_core::Error;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

#[test]
fn laptop_fixture_statistics() {
    let corpus = load_semeval_xml(fixture("laptops_train.xml"), Domain::Laptops, Split::Train).unwrap();
    let stats = corpus_stats(&corpus);
    assert_eq!(stats.sentences, 8);
    assert_eq!([0, 1, 2, 3, 4].map(|k| stats.bucket(k)), [3, 1, 1, 2, 1]);
    assert_eq!(
        (stats.polarity_counts.positive, stats.polarity_counts.negative, stats.polarity_counts.neutral),
        (7, 2, 3)
    );
    assert_eq!(stats.conflict_aspects, 1);
    assert!(stats.to_string().starts_with("8 sentences\n"));
}

#[test]
fn restaurant_fixture_statistics() {
    let corpus = load_semeval_xml(fixture("restaurants_train.xml"), Domain::Restaurants, Split::Train).unwrap();
    let stats = corpus_stats(&corpus);
    assert_eq!([0, 1, 2, 3].map(|k| stats.bucket(k)), [2, 2, 2, 2]);
    assert_eq!(
        (stats.polarity_counts.positive, stats.polarity_counts.negative, stats.polarity_counts.neutral),
        (8, 2, 1)
    );
    assert_eq!(stats.conflict_aspects, 1);
}

#[test]
fn comma_term_is_excluded_from_extraction_training_only() {
    let corpus = load_semeval_xml(fixture("restaurants_train.xml"), Domain::Restaurants, Split::Train).unwrap();
    let config = PromptConfig::builtin(Variant::V1);
    let ate = build_dataset(&config, SubtaskKind::Ate, &corpus).unwrap();
    assert_eq!(ate.examples.len(), 7);
    assert_eq!(ate.excluded.len(), 1);
    assert_eq!(ate.excluded[0].sentence_id, "1478");
    assert!(ate.check_exclusions(0).is_err());
    ate.check_exclusions(1).unwrap();

    let eval = build_eval_dataset(&config, SubtaskKind::Joint, &corpus).unwrap();
    assert_eq!(eval.examples.len(), 8);
    assert!(!eval.examples.iter().find(|e| e.meta.sentence_id == "1478").unwrap().meta.representable);

    let atsc = build_dataset(&config, SubtaskKind::Atsc, &corpus).unwrap();
    assert_eq!(atsc.examples.len(), 11);
    assert!(atsc.excluded.is_empty());
}

#[test]
fn jsonl_round_trip_preserves_corpus() {
    let corpus = load_semeval_xml(fixture("laptops_test.xml"), Domain::Laptops, Split::Test).unwrap();
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("lt.jsonl");
    write_corpus_jsonl(&corpus, &path).unwrap();
    assert_eq!(read_corpus_jsonl(&path).unwrap(), corpus);
}

#[test]
fn merged_training_corpus_keeps_both_domains() {
    let l = load_semeval_xml(fixture("laptops_train.xml"), Domain::Laptops, Split::Train).unwrap();
    let r = load_semeval_xml(fixture("restaurants_train.xml"), Domain::Restaurants, Split::Train).unwrap();
    let merged = merge_corpora(&l, &r).unwrap();
    assert_eq!(merged.len(), l.len() + r.len());
    assert_eq!(merged.domain, CorpusDomain::Mixed);
    assert_eq!(merged.sentences()[0].domain, Domain::Laptops);
    assert_eq!(merged.sentences()[l.len()].domain, Domain::Restaurants);
    let test = load_semeval_xml(fixture("laptops_test.xml"), Domain::Laptops, Split::Test).unwrap();
    assert!(matches!(merge_corpora(&l, &test), Err(Error::SplitMismatch { .. })));
}

#[test]
fn missing_file_error_names_the_path() {
    let err = load_semeval_xml("/nonexistent/Laptops.xml", Domain::Laptops, Split::Train).unwrap_err();
    assert!(err.to_string().contains("/nonexistent/Laptops.xml"), "{err}");
}

#[test]
fn malformed_xml_reports_position() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.xml");
    std::fs::write(&path, "<sentences>\n<sentence id=\"1\"><text>x</txt></sentence></sentences>").unwrap();
    let err = load_semeval_xml(&path, Domain::Laptops, Split::Train).unwrap_err();
    assert!(matches!(err, Error::MalformedXml { .. }));
    assert!(err.to_string().contains("bad.xml"), "{err}");
}

#[test]
fn unknown_polarity_is_a_schema_violation() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("p.xml");
    std::fs::write(
        &path,
        r#"<sentences><sentence id="9"><text>Nice screen.</text><aspectTerms><aspectTerm term="screen" polarity="great" from="5" to="11"/></aspectTerms></sentence></sentences>"#,
    )
    .unwrap();
    let err = load_semeval_xml(&path, Domain::Laptops, Split::Train).unwrap_err();
    assert!(matches!(err, Error::SchemaViolation { ref sentence_id, .. } if sentence_id == "9"), "{err}");
}
