//! Precision / recall / F1 for extraction subtasks, accuracy and macro-F1 for
//! ATSC, and aggregation across runs.
//!
//! Zero-denominator convention: a precision, recall or F1 whose denominator is
//! zero is 0. An empty prediction set on a sentence without gold aspects
//! therefore contributes nothing under micro averaging.

use std::collections::{HashMap, HashSet};
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::canon::canonicalize;
use crate::corpus::{expand_atsc, AtscSample, ConflictPolicy, Corpus, SentimentPolarity};
use crate::decoding::{AtePrediction, AtscLabel, AtscPrediction, JointPrediction, ParsedOutput, PredictionRecord};
use crate::error::{Error, Result};
use crate::prompting::SubtaskKind;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct Support {
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub n_samples: usize,
}

impl Support {
    fn add(&mut self, other: &Support) {
        self.tp += other.tp;
        self.fp += other.fp;
        self.fn_ += other.fn_;
        self.n_samples += other.n_samples;
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ScoreReport {
    pub subtask: SubtaskKind,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Present for ATSC only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub accuracy: Option<f64>,
    pub support: Support,
}

impl ScoreReport {
    /// The headline number: accuracy for ATSC, F1 otherwise.
    pub fn headline(&self) -> f64 {
        self.accuracy.unwrap_or(self.f1)
    }
}

impl fmt::Display for ScoreReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.accuracy {
            Some(acc) => write!(
                f,
                "{}: accuracy {} f1 {} (n={})",
                self.subtask.label(),
                fmt_score(acc),
                fmt_score(self.f1),
                self.support.n_samples
            ),
            None => write!(
                f,
                "{}: precision {} recall {} f1 {} (tp={} fp={} fn={})",
                self.subtask.label(),
                fmt_score(self.precision),
                fmt_score(self.recall),
                fmt_score(self.f1),
                self.support.tp,
                self.support.fp,
                self.support.fn_
            ),
        }
    }
}

pub fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

/// Rounds a fraction to a percentage with two decimals, halves rounding up.
pub fn round_percent(fraction: f64) -> f64 {
    let scaled = fraction * 10_000.0;
    // Absorb representation error such as 0.92305 * 1e4 = 9230.4999...
    (scaled + 0.5 + 1e-7).floor() / 100.0
}

/// Two-decimal score, as a fraction (`1.00` is perfect).
pub fn fmt_score(fraction: f64) -> String {
    format!("{:.2}", round_percent(fraction) / 100.0)
}

/// Two-decimal percentage (`92.30`).
pub fn fmt_percent(fraction: f64) -> String {
    format!("{:.2}", round_percent(fraction))
}

/// How tp/fp/fn are pooled for the extraction subtasks.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Averaging {
    /// Corpus-level pooling of counts.
    #[default]
    Micro,
    /// Mean of per-sentence scores, over sentences with any gold or predicted
    /// item.
    MacroSentence,
}

fn align<'a, G, P>(gold: &'a [(String, G)], pred: &'a [(String, P)]) -> Result<Vec<(&'a G, &'a P)>> {
    let mut by_id: HashMap<&str, &P> = HashMap::with_capacity(pred.len());
    for (id, p) in pred {
        if by_id.insert(id.as_str(), p).is_some() {
            return Err(Error::IdMismatch(format!("prediction id {id:?} appears twice")));
        }
    }
    let mut seen = HashSet::with_capacity(gold.len());
    let mut out = Vec::with_capacity(gold.len());
    for (id, g) in gold {
        if !seen.insert(id.as_str()) {
            return Err(Error::IdMismatch(format!("gold id {id:?} appears twice")));
        }
        let p = by_id
            .get(id.as_str())
            .ok_or_else(|| Error::IdMismatch(format!("no prediction for sentence {id:?}")))?;
        out.push((g, *p));
    }
    if pred.len() != gold.len() {
        let extra = pred.iter().find(|(id, _)| !seen.contains(id.as_str())).map(|(id, _)| id.clone());
        return Err(Error::IdMismatch(format!(
            "prediction for unknown sentence {:?}",
            extra.unwrap_or_default()
        )));
    }
    Ok(out)
}

fn set_counts<T: Eq + std::hash::Hash>(gold: &HashSet<T>, pred: &HashSet<T>) -> Support {
    let tp = pred.intersection(gold).count();
    Support {
        tp,
        fp: pred.len() - tp,
        fn_: gold.len() - tp,
        n_samples: 1,
    }
}

fn extraction_report(subtask: SubtaskKind, per_sentence: &[Support], averaging: Averaging) -> ScoreReport {
    let mut total = Support::default();
    for s in per_sentence {
        total.add(s);
    }
    let (precision, recall, f1) = match averaging {
        Averaging::Micro => {
            let p = ratio(total.tp, total.tp + total.fp);
            let r = ratio(total.tp, total.tp + total.fn_);
            (p, r, f1_score(p, r))
        }
        Averaging::MacroSentence => {
            let scored: Vec<(f64, f64, f64)> = per_sentence
                .iter()
                .filter(|s| s.tp + s.fp + s.fn_ > 0)
                .map(|s| {
                    let p = ratio(s.tp, s.tp + s.fp);
                    let r = ratio(s.tp, s.tp + s.fn_);
                    (p, r, f1_score(p, r))
                })
                .collect();
            if scored.is_empty() {
                (0.0, 0.0, 0.0)
            } else {
                let n = scored.len() as f64;
                (
                    stable_sum(scored.iter().map(|s| s.0)) / n,
                    stable_sum(scored.iter().map(|s| s.1)) / n,
                    stable_sum(scored.iter().map(|s| s.2)) / n,
                )
            }
        }
    };
    ScoreReport {
        subtask,
        precision,
        recall,
        f1,
        accuracy: None,
        support: total,
    }
}

fn canonical_terms(terms: &[String]) -> HashSet<String> {
    terms.iter().map(|t| canonicalize(t)).filter(|t| !t.is_empty()).collect()
}

pub fn score_ate(gold: &[(String, Vec<String>)], pred: &[(String, AtePrediction)]) -> Result<ScoreReport> {
    score_ate_with(gold, pred, Averaging::Micro)
}

pub fn score_ate_with(
    gold: &[(String, Vec<String>)],
    pred: &[(String, AtePrediction)],
    averaging: Averaging,
) -> Result<ScoreReport> {
    let per_sentence: Vec<Support> = align(gold, pred)?
        .into_iter()
        .map(|(g, p)| set_counts(&canonical_terms(g), &canonical_terms(&p.terms)))
        .collect();
    Ok(extraction_report(SubtaskKind::Ate, &per_sentence, averaging))
}

pub type GoldPairs = Vec<(String, SentimentPolarity)>;

pub fn score_joint(gold: &[(String, GoldPairs)], pred: &[(String, JointPrediction)]) -> Result<ScoreReport> {
    score_joint_with(gold, pred, Averaging::Micro)
}

pub fn score_joint_with(
    gold: &[(String, GoldPairs)],
    pred: &[(String, JointPrediction)],
    averaging: Averaging,
) -> Result<ScoreReport> {
    let per_sentence: Vec<Support> = align(gold, pred)?
        .into_iter()
        .map(|(g, p)| {
            let gold: HashSet<(String, SentimentPolarity)> =
                g.iter().map(|(t, pol)| (canonicalize(t), *pol)).collect();
            let pred: HashSet<(String, SentimentPolarity)> =
                p.pairs.iter().map(|pair| (canonicalize(&pair.term), pair.polarity)).collect();
            set_counts(&gold, &pred)
        })
        .collect();
    Ok(extraction_report(SubtaskKind::Joint, &per_sentence, averaging))
}

pub fn score_atsc(gold: &[AtscSample<'_>], pred: &[AtscPrediction]) -> Result<ScoreReport> {
    let gold: Vec<SentimentPolarity> = gold.iter().map(|s| s.gold_polarity).collect();
    let pred: Vec<AtscLabel> = pred.iter().map(|p| p.label).collect();
    score_atsc_labels(&gold, &pred)
}

/// Accuracy plus macro precision / recall / F1 over the labels that occur in
/// gold or predictions. The macro F1 is the mean of per-class F1, not the F1
/// of the macro P and R.
pub fn score_atsc_labels(gold: &[SentimentPolarity], pred: &[AtscLabel]) -> Result<ScoreReport> {
    if gold.len() != pred.len() {
        return Err(Error::LengthMismatch {
            gold: gold.len(),
            pred: pred.len(),
        });
    }
    let n = gold.len();
    let correct = gold
        .iter()
        .zip(pred)
        .filter(|(g, p)| p.polarity() == Some(**g))
        .count();
    let mut ps = Vec::with_capacity(3);
    let mut rs = Vec::with_capacity(3);
    let mut fs = Vec::with_capacity(3);
    for class in SentimentPolarity::LABELS.iter() {
        let mut tp = 0;
        let mut fp = 0;
        let mut fn_ = 0;
        for (g, p) in gold.iter().zip(pred) {
            let predicted = p.polarity() == Some(*class);
            let actual = g == class;
            match (predicted, actual) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                (false, false) => {}
            }
        }
        if tp + fp + fn_ == 0 {
            // Neither in gold nor predicted: not part of the macro average.
            continue;
        }
        let (p, r) = (ratio(tp, tp + fp), ratio(tp, tp + fn_));
        ps.push(p);
        rs.push(r);
        fs.push(f1_score(p, r));
    }
    let mean = |v: &[f64]| if v.is_empty() { 0.0 } else { v.iter().sum::<f64>() / v.len() as f64 };
    Ok(ScoreReport {
        subtask: SubtaskKind::Atsc,
        precision: mean(&ps),
        recall: mean(&rs),
        f1: mean(&fs),
        accuracy: Some(ratio(correct, n)),
        support: Support {
            tp: correct,
            fp: n - correct,
            fn_: n - correct,
            n_samples: n,
        },
    })
}

/// Scores serialized predictions against a gold corpus.
///
/// ATE and joint records are matched to sentences by id. ATSC records must
/// follow the order of the corpus's ATSC samples, each naming its sentence
/// and aspect term.
pub fn score_predictions(
    subtask: SubtaskKind,
    gold: &Corpus,
    records: &[PredictionRecord],
    policy: ConflictPolicy,
    averaging: Averaging,
) -> Result<ScoreReport> {
    if let Some(r) = records.iter().find(|r| r.subtask != subtask) {
        return Err(Error::Config(format!(
            "prediction for sentence {:?} is for {}, expected {}",
            r.sentence_id, r.subtask, subtask
        )));
    }
    match subtask {
        SubtaskKind::Ate => {
            let g: Vec<(String, Vec<String>)> =
                gold.sentences().iter().map(|s| (s.id.clone(), s.gold_terms(policy))).collect();
            let p: Vec<(String, AtePrediction)> = records
                .iter()
                .filter_map(|r| match &r.parsed {
                    ParsedOutput::Ate(a) => Some((r.sentence_id.clone(), a.clone())),
                    _ => None,
                })
                .collect();
            score_ate_with(&g, &p, averaging)
        }
        SubtaskKind::Joint => {
            let g: Vec<(String, GoldPairs)> =
                gold.sentences().iter().map(|s| (s.id.clone(), s.gold_pairs(policy))).collect();
            let p: Vec<(String, JointPrediction)> = records
                .iter()
                .filter_map(|r| match &r.parsed {
                    ParsedOutput::Joint(j) => Some((r.sentence_id.clone(), j.clone())),
                    _ => None,
                })
                .collect();
            score_joint_with(&g, &p, averaging)
        }
        SubtaskKind::Atsc => {
            let samples = expand_atsc(gold).samples;
            if samples.len() != records.len() {
                return Err(Error::LengthMismatch {
                    gold: samples.len(),
                    pred: records.len(),
                });
            }
            let mut pred = Vec::with_capacity(records.len());
            for (i, (s, r)) in samples.iter().zip(records).enumerate() {
                let same_term = r
                    .aspect_term
                    .as_deref()
                    .is_some_and(|t| canonicalize(t) == canonicalize(s.aspect_term));
                if r.sentence_id != s.sentence.id || !same_term {
                    return Err(Error::IdMismatch(format!(
                        "ATSC prediction {i} is for ({:?}, {:?}), expected ({:?}, {:?})",
                        r.sentence_id, r.aspect_term, s.sentence.id, s.aspect_term
                    )));
                }
                match &r.parsed {
                    ParsedOutput::Atsc(a) => pred.push(a.clone()),
                    _ => return Err(Error::Config(format!("record {i} does not hold an ATSC label"))),
                }
            }
            score_atsc(&samples, &pred)
        }
    }
}

/// Sums in ascending order so the result does not depend on input order.
fn stable_sum(values: impl Iterator<Item = f64>) -> f64 {
    let mut v: Vec<f64> = values.collect();
    v.sort_by(f64::total_cmp);
    v.into_iter().sum()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunAggregate {
    pub per_run: Vec<ScoreReport>,
    /// Arithmetic means of the per-run metrics; `support` holds pooled counts.
    pub mean: ScoreReport,
    pub n_runs: usize,
}

pub fn aggregate_runs(reports: &[ScoreReport]) -> Result<RunAggregate> {
    let first = reports.first().ok_or(Error::EmptyInput)?;
    if reports.iter().any(|r| r.subtask != first.subtask) {
        return Err(Error::MixedSubtasks);
    }
    let n = reports.len() as f64;
    let mean_of = |f: fn(&ScoreReport) -> f64| stable_sum(reports.iter().map(f)) / n;
    let accuracy = if reports.iter().all(|r| r.accuracy.is_some()) {
        Some(mean_of(|r| r.accuracy.unwrap_or_default()))
    } else {
        None
    };
    let mut support = Support::default();
    for r in reports {
        support.add(&r.support);
    }
    Ok(RunAggregate {
        per_run: reports.to_vec(),
        mean: ScoreReport {
            subtask: first.subtask,
            precision: mean_of(|r| r.precision),
            recall: mean_of(|r| r.recall),
            f1: mean_of(|r| r.f1),
            accuracy,
            support,
        },
        n_runs: reports.len(),
    })
}
