//! Parsers from raw generated text back to structured predictions.
//!
//! All parsers are total: every input string, including the empty string,
//! yields a prediction. Anything unexpected is recorded, never dropped.

use std::fmt;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::canon::canonicalize;
use crate::corpus::{ConflictPolicy, SentimentPolarity};
use crate::error::{Error, Result};
use crate::prompting::{PromptedExample, SubtaskKind, TargetFormat, JOINT_NO_ASPECT, NO_ASPECT_TERM};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Anomaly {
    EmptyOutput,
    /// An empty fragment between separators, e.g. a trailing comma.
    EmptyFragment,
    DuplicateCollapsed,
    /// The no-aspect sentinel appeared next to real terms.
    SentinelAmongTerms,
    MalformedFragment,
    InvalidLabel,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodeOptions {
    pub ate_empty: String,
    pub joint_empty: String,
    /// Accept `conflict` as a joint polarity (only when gold keeps it).
    pub accept_conflict: bool,
}

impl Default for DecodeOptions {
    fn default() -> Self {
        DecodeOptions {
            ate_empty: NO_ASPECT_TERM.to_string(),
            joint_empty: JOINT_NO_ASPECT.to_string(),
            accept_conflict: false,
        }
    }
}

impl From<&TargetFormat> for DecodeOptions {
    fn from(f: &TargetFormat) -> Self {
        DecodeOptions {
            ate_empty: f.ate_empty.clone(),
            joint_empty: f.joint_empty.clone(),
            accept_conflict: f.conflict_policy == ConflictPolicy::DropForAtscOnly,
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtePrediction {
    /// Canonical terms, first-occurrence order, no duplicates.
    pub terms: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anomalies: Vec<Anomaly>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AtscLabel {
    Positive,
    Negative,
    Neutral,
    Invalid,
}

impl AtscLabel {
    pub fn polarity(self) -> Option<SentimentPolarity> {
        match self {
            AtscLabel::Positive => Some(SentimentPolarity::Positive),
            AtscLabel::Negative => Some(SentimentPolarity::Negative),
            AtscLabel::Neutral => Some(SentimentPolarity::Neutral),
            AtscLabel::Invalid => None,
        }
    }
}

impl fmt::Display for AtscLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self.polarity() {
            Some(p) => p.fmt(f),
            None => f.write_str("invalid"),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AtscPrediction {
    pub label: AtscLabel,
    pub raw: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct AspectPair {
    pub term: String,
    pub polarity: SentimentPolarity,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct JointPrediction {
    pub pairs: Vec<AspectPair>,
    pub malformed_fragments: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub anomalies: Vec<Anomaly>,
}

fn note(anomalies: &mut Vec<Anomaly>, a: Anomaly) {
    if !anomalies.contains(&a) {
        anomalies.push(a);
    }
}

fn squeeze(s: &str) -> String {
    s.chars().filter(|c| !c.is_whitespace()).flat_map(char::to_lowercase).collect()
}

/// Canonical label text: trimmed, lowercased, trailing periods removed.
fn canonical_label(raw: &str) -> String {
    canonicalize(raw).trim_end_matches('.').trim_end().to_string()
}

pub fn parse_ate(raw: &str) -> AtePrediction {
    parse_ate_with(raw, &DecodeOptions::default())
}

pub fn parse_ate_with(raw: &str, opts: &DecodeOptions) -> AtePrediction {
    let mut pred = AtePrediction::default();
    let sentinel = canonicalize(&opts.ate_empty);
    let whole = canonicalize(raw);
    if whole.is_empty() {
        note(&mut pred.anomalies, Anomaly::EmptyOutput);
        return pred;
    }
    if whole == sentinel {
        return pred;
    }
    for fragment in raw.split(',') {
        let term = canonicalize(fragment);
        if term.is_empty() {
            note(&mut pred.anomalies, Anomaly::EmptyFragment);
        } else if term == sentinel {
            note(&mut pred.anomalies, Anomaly::SentinelAmongTerms);
        } else if pred.terms.contains(&term) {
            note(&mut pred.anomalies, Anomaly::DuplicateCollapsed);
        } else {
            pred.terms.push(term);
        }
    }
    pred
}

pub fn parse_atsc(raw: &str) -> AtscPrediction {
    let label = match canonical_label(raw).as_str() {
        "positive" => AtscLabel::Positive,
        "negative" => AtscLabel::Negative,
        "neutral" => AtscLabel::Neutral,
        _ => AtscLabel::Invalid,
    };
    AtscPrediction {
        label,
        raw: raw.to_string(),
    }
}

pub fn parse_joint(raw: &str) -> JointPrediction {
    parse_joint_with(raw, &DecodeOptions::default())
}

pub fn parse_joint_with(raw: &str, opts: &DecodeOptions) -> JointPrediction {
    let mut pred = JointPrediction::default();
    if raw.trim().is_empty() {
        note(&mut pred.anomalies, Anomaly::EmptyOutput);
        return pred;
    }
    if squeeze(raw) == squeeze(&opts.joint_empty) {
        return pred;
    }
    for fragment in raw.split(',') {
        let trimmed = fragment.trim();
        if trimmed.is_empty() {
            note(&mut pred.anomalies, Anomaly::EmptyFragment);
            continue;
        }
        let parsed = trimmed.rsplit_once(':').and_then(|(term, polarity)| {
            let term = canonicalize(term);
            let polarity = match canonical_label(polarity).as_str() {
                "positive" => SentimentPolarity::Positive,
                "negative" => SentimentPolarity::Negative,
                "neutral" => SentimentPolarity::Neutral,
                "conflict" if opts.accept_conflict => SentimentPolarity::Conflict,
                _ => return None,
            };
            (!term.is_empty()).then_some(AspectPair { term, polarity })
        });
        match parsed {
            Some(pair) if pred.pairs.contains(&pair) => note(&mut pred.anomalies, Anomaly::DuplicateCollapsed),
            Some(pair) => pred.pairs.push(pair),
            None => {
                pred.malformed_fragments.push(trimmed.to_string());
                note(&mut pred.anomalies, Anomaly::MalformedFragment);
            }
        }
    }
    pred
}

/// Parsed form of one model output.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ParsedOutput {
    Ate(AtePrediction),
    Atsc(AtscPrediction),
    Joint(JointPrediction),
}

impl ParsedOutput {
    pub fn parse(subtask: SubtaskKind, raw: &str, opts: &DecodeOptions) -> Self {
        match subtask {
            SubtaskKind::Ate => ParsedOutput::Ate(parse_ate_with(raw, opts)),
            SubtaskKind::Atsc => ParsedOutput::Atsc(parse_atsc(raw)),
            SubtaskKind::Joint => ParsedOutput::Joint(parse_joint_with(raw, opts)),
        }
    }

    pub fn anomalies(&self) -> Vec<Anomaly> {
        match self {
            ParsedOutput::Ate(p) => p.anomalies.clone(),
            ParsedOutput::Atsc(p) if p.label == AtscLabel::Invalid => vec![Anomaly::InvalidLabel],
            ParsedOutput::Atsc(_) => Vec::new(),
            ParsedOutput::Joint(p) => p.anomalies.clone(),
        }
    }
}

/// One serialized prediction:
///
/// ```json
/// {"sentence_id":"1","subtask":"ate","raw_output":"food, menu","parsed":{"ate":{"terms":["food","menu"]}},"anomalies":[]}
/// ```
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PredictionRecord {
    pub sentence_id: String,
    pub subtask: SubtaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect_term: Option<String>,
    pub raw_output: String,
    pub parsed: ParsedOutput,
    #[serde(default)]
    pub anomalies: Vec<Anomaly>,
}

impl PredictionRecord {
    pub fn from_output(example: &PromptedExample, raw: &str, opts: &DecodeOptions) -> Self {
        Self::new(
            &example.meta.sentence_id,
            example.meta.subtask,
            example.meta.aspect_term.as_deref(),
            raw,
            opts,
        )
    }

    pub fn new(
        sentence_id: &str,
        subtask: SubtaskKind,
        aspect_term: Option<&str>,
        raw: &str,
        opts: &DecodeOptions,
    ) -> Self {
        let parsed = ParsedOutput::parse(subtask, raw, opts);
        PredictionRecord {
            sentence_id: sentence_id.to_string(),
            subtask,
            aspect_term: aspect_term.map(str::to_string),
            raw_output: raw.to_string(),
            anomalies: parsed.anomalies(),
            parsed,
        }
    }
}

pub fn write_predictions_jsonl(records: &[PredictionRecord], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for r in records {
        let line = serde_json::to_string(r).map_err(|e| Error::json("serializing predictions", e))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

/// Reads predictions. Records carrying only `sentence_id`, `subtask` and
/// `raw_output` (e.g. from an external model) are accepted; `parsed` is then
/// recomputed with `opts`.
pub fn read_predictions_jsonl(path: impl AsRef<Path>, opts: &DecodeOptions) -> Result<Vec<PredictionRecord>> {
    #[derive(Deserialize)]
    struct Loose {
        sentence_id: String,
        subtask: SubtaskKind,
        #[serde(default)]
        aspect_term: Option<String>,
        raw_output: String,
    }
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        let loose: Loose =
            serde_json::from_str(&line).map_err(|e| Error::json(format!("{} line {}", path.display(), n + 1), e))?;
        out.push(PredictionRecord::new(
            &loose.sentence_id,
            loose.subtask,
            loose.aspect_term.as_deref(),
            &loose.raw_output,
            opts,
        ));
    }
    Ok(out)
}
