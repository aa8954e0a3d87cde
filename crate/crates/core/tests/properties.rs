use std::collections::BTreeSet;
use std::path::PathBuf;

use absa_core::backend::{self, truncate_tokens, Hyperparameters, ModelBackend, PerceptronBackend};
use absa_core::canon::canonicalize;
use absa_core::corpus::{
    load_semeval_xml, merge_corpora, AspectAnnotation, Corpus, CorpusDomain, Domain, ReviewSentence, SentimentPolarity,
    Split,
};
use absa_core::decoding::{parse_ate, parse_atsc, parse_joint, AtePrediction, AtscLabel};
use absa_core::experiments::Plan;
use absa_core::metrics::{aggregate_runs, score_ate, score_atsc_labels, ScoreReport};
use absa_core::prompting::{
    build_dataset, render_ate_target, render_joint_target, PromptConfig, SubtaskKind, TargetFormat, Variant,
    NO_ASPECT_TERM,
};
use proptest::prelude::*;

fn polarity() -> impl Strategy<Value = SentimentPolarity> {
    prop_oneof![
        Just(SentimentPolarity::Positive),
        Just(SentimentPolarity::Negative),
        Just(SentimentPolarity::Neutral),
    ]
}

/// Terms that can be rendered: no separators, not the sentinel.
fn term() -> impl Strategy<Value = String> {
    "[A-Za-z0-9][A-Za-z0-9 '&.-]{0,14}[A-Za-z0-9]?"
        .prop_filter("sentinel", |t| canonicalize(t) != NO_ASPECT_TERM && canonicalize(t) != "noaspectterm:none")
}

fn sentence() -> impl Strategy<Value = ReviewSentence> {
    prop::collection::vec((term(), polarity()), 0..6).prop_map(|aspects| {
        let aspects = aspects.into_iter().map(|(t, p)| AspectAnnotation::new(t, p)).collect();
        ReviewSentence::new("s", "Some review text.", Domain::Laptops, aspects).unwrap().0
    })
}

fn term_sets() -> impl Strategy<Value = Vec<(Vec<String>, Vec<String>)>> {
    let set = || prop::collection::vec(prop::sample::select(vec!["a", "b", "c", "d", "e f"]), 0..=5);
    prop::collection::vec((set(), set()), 1..8).prop_map(|rows| {
        rows.into_iter()
            .map(|(g, p)| (g.into_iter().map(String::from).collect(), p.into_iter().map(String::from).collect()))
            .collect()
    })
}

fn ate_report(rows: &[(Vec<String>, Vec<String>)]) -> ScoreReport {
    let gold: Vec<(String, Vec<String>)> = rows.iter().enumerate().map(|(i, r)| (i.to_string(), r.0.clone())).collect();
    let pred: Vec<(String, AtePrediction)> = rows
        .iter()
        .enumerate()
        .map(|(i, r)| (i.to_string(), AtePrediction { terms: r.1.clone(), anomalies: vec![] }))
        .collect();
    score_ate(&gold, &pred).unwrap()
}

proptest! {
    #[test]
    fn ate_target_round_trips(s in sentence()) {
        let fmt = TargetFormat::default();
        let target = render_ate_target(&s, &fmt).unwrap();
        let parsed: BTreeSet<String> = parse_ate(&target).terms.into_iter().collect();
        let gold: BTreeSet<String> = s.gold_terms(fmt.conflict_policy).into_iter().collect();
        prop_assert_eq!(parsed, gold);
    }

    #[test]
    fn joint_target_round_trips(s in sentence()) {
        let fmt = TargetFormat::default();
        let target = render_joint_target(&s, &fmt).unwrap();
        let parsed = parse_joint(&target);
        prop_assert!(parsed.malformed_fragments.is_empty());
        let parsed: BTreeSet<(String, SentimentPolarity)> = parsed.pairs.into_iter().map(|p| (p.term, p.polarity)).collect();
        let gold: BTreeSet<(String, SentimentPolarity)> = s.gold_pairs(fmt.conflict_policy).into_iter().collect();
        prop_assert_eq!(parsed, gold);
    }

    #[test]
    fn parsers_are_total_and_keep_their_invariants(raw in "\\PC{0,60}") {
        let ate = parse_ate(&raw);
        prop_assert!(!ate.terms.iter().any(|t| t == NO_ASPECT_TERM));
        prop_assert_eq!(ate.terms.iter().collect::<BTreeSet<_>>().len(), ate.terms.len());

        let joint = parse_joint(&raw);
        let pairs: BTreeSet<_> = joint.pairs.iter().map(|p| (p.term.clone(), p.polarity)).collect();
        prop_assert_eq!(pairs.len(), joint.pairs.len());

        let atsc = parse_atsc(&raw);
        let valid = ["positive", "negative", "neutral"].contains(&canonicalize(&raw).trim_end_matches('.').trim_end());
        prop_assert_eq!(atsc.label != AtscLabel::Invalid, valid);
    }

    #[test]
    fn extraction_scores_are_bounded(rows in term_sets()) {
        let r = ate_report(&rows);
        for v in [r.precision, r.recall, r.f1] {
            prop_assert!((0.0..=1.0).contains(&v));
        }
        prop_assert!(r.f1 <= r.precision.max(r.recall) + 1e-12);
        prop_assert!(r.f1 + 1e-12 >= r.precision.min(r.recall) || r.f1 == 0.0);
    }

    #[test]
    fn f1_is_the_harmonic_mean(rows in term_sets()) {
        let r = ate_report(&rows);
        let expected = if r.precision + r.recall > 0.0 {
            2.0 * r.precision * r.recall / (r.precision + r.recall)
        } else {
            0.0
        };
        prop_assert_eq!(r.f1, expected);
        let s = r.support;
        if s.tp + s.fp + s.fn_ > 0 {
            let from_counts = 2.0 * s.tp as f64 / (2 * s.tp + s.fp + s.fn_) as f64;
            prop_assert!((r.f1 - from_counts).abs() < 1e-12);
        }
    }

    #[test]
    fn identical_prediction_scores_one(rows in term_sets()) {
        let same: Vec<_> = rows.iter().map(|(g, _)| (g.clone(), g.clone())).collect();
        let r = ate_report(&same);
        let any_gold = same.iter().any(|(g, _)| !g.is_empty());
        prop_assert_eq!(r.f1, if any_gold { 1.0 } else { 0.0 });
    }

    #[test]
    fn atsc_accuracy_and_macro_f1_are_bounded(
        labels in prop::collection::vec((polarity(), prop::option::of(polarity())), 0..30)
    ) {
        let gold: Vec<_> = labels.iter().map(|l| l.0).collect();
        let pred: Vec<AtscLabel> = labels
            .iter()
            .map(|l| match l.1 {
                Some(p) => parse_atsc(p.as_str()).label,
                None => AtscLabel::Invalid,
            })
            .collect();
        let r = score_atsc_labels(&gold, &pred).unwrap();
        let acc = r.accuracy.unwrap();
        prop_assert!((0.0..=1.0).contains(&acc) && (0.0..=1.0).contains(&r.f1));
        if labels.iter().all(|l| l.1 == Some(l.0)) && !labels.is_empty() {
            prop_assert_eq!((acc, r.f1), (1.0, 1.0));
        }
    }

    #[test]
    fn aggregate_ignores_run_order(rows in prop::collection::vec(term_sets(), 1..6), rot in 0usize..6) {
        let reports: Vec<ScoreReport> = rows.iter().map(|r| ate_report(r)).collect();
        let mut rotated = reports.clone();
        let k = rot % rotated.len();
        rotated.rotate_left(k);
        rotated.reverse();
        let a = aggregate_runs(&reports).unwrap();
        let b = aggregate_runs(&rotated).unwrap();
        prop_assert_eq!(a.mean, b.mean);
    }

    #[test]
    fn truncation_keeps_a_prefix_of_at_most_n_tokens(text in "[a-z ]{0,60}", n in 0usize..8) {
        let cut = truncate_tokens(&text, n);
        prop_assert!(text.starts_with(cut));
        prop_assert!(cut.split_whitespace().count() <= n);
        if text.split_whitespace().count() <= n {
            prop_assert_eq!(cut, text.as_str());
        }
    }

    #[test]
    fn merge_preserves_length_and_order(a in 0usize..6, b in 0usize..6) {
        let mk = |domain: Domain, n: usize| {
            let sentences = (0..n)
                .map(|i| ReviewSentence::new(i.to_string(), format!("text {i}"), domain, vec![]).unwrap().0)
                .collect();
            Corpus::new(CorpusDomain::from(domain), Split::Train, sentences).unwrap()
        };
        let left = mk(Domain::Laptops, a);
        let right = mk(Domain::Restaurants, b);
        let merged = merge_corpora(&left, &right).unwrap();
        prop_assert_eq!(merged.len(), a + b);
        let texts: Vec<&str> = merged.sentences().iter().map(|s| s.text.as_str()).collect();
        let expected: Vec<&str> = left.sentences().iter().chain(right.sentences()).map(|s| s.text.as_str()).collect();
        prop_assert_eq!(texts, expected);
        let ids: BTreeSet<&str> = merged.sentences().iter().map(|s| s.id.as_str()).collect();
        prop_assert_eq!(ids.len(), a + b);
    }

    #[test]
    fn plan_expansion_is_deterministic(
        subtasks in prop::sample::subsequence(vec!["ate", "atsc", "joint"], 1..=3),
        variants in prop::sample::subsequence(vec!["v1", "v2"], 1..=2),
        regimes in prop::sample::subsequence(vec!["in-domain", "cross-domain", "joint-domain"], 1..=3),
    ) {
        let quote = |v: &[&str]| v.iter().map(|s| format!("{s:?}")).collect::<Vec<_>>().join(", ");
        let source = format!(
            "[backend]\nkind = \"oracle\"\n[grid]\nsubtasks = [{}]\nvariants = [{}]\nregimes = [{}]\n",
            quote(&subtasks), quote(&variants), quote(&regimes)
        );
        let plan = Plan::parse(&source).unwrap();
        let a = plan.experiments().unwrap();
        prop_assert_eq!(a.len(), subtasks.len() * variants.len() * regimes.len() * 2);
        prop_assert_eq!(&a, &Plan::parse(&source).unwrap().experiments().unwrap());
        let ids: BTreeSet<String> = a.iter().map(|s| s.cell_id()).collect();
        prop_assert_eq!(ids.len(), a.len());
    }
}

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name)
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(8))]

    #[test]
    fn toy_training_is_reproducible_per_seed(seed in 0u64..1000) {
        let corpus = load_semeval_xml(fixture("restaurants_train.xml"), Domain::Restaurants, Split::Train).unwrap();
        let data = build_dataset(&PromptConfig::builtin(Variant::V1), SubtaskKind::Atsc, &corpus).unwrap().examples;
        let hp = Hyperparameters { seed, epochs: 2, ..Hyperparameters::for_subtask(SubtaskKind::Atsc) };
        let run = || {
            let dir = tempfile::tempdir().unwrap();
            let mut model = PerceptronBackend::default();
            let report = backend::train(&mut model, &data, &hp, dir.path()).unwrap();
            let out = backend::predict(&model, &data, &hp.decoding()).unwrap();
            (report.final_loss, out, model.identity().to_string())
        };
        prop_assert_eq!(run(), run());
    }
}
