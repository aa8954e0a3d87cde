//! Annotated review corpora: loading, ATSC expansion, merging and statistics.
//!
//! A [`Corpus`] keeps every aspect exactly as annotated (including `conflict`
//! labels); filtering happens when gold sets are derived for a subtask, under
//! a [`ConflictPolicy`].

mod records;
mod semeval;
mod stats;

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::canon::canonicalize;
use crate::error::{Error, Result};

pub use records::{read_corpus_jsonl, write_corpus_jsonl, CorpusRecord};
pub use semeval::{load_semeval_xml, load_semeval_xml_str, LoadReport};
pub use stats::{corpus_stats, corpus_stats_with, PolarityCounts, StatsRecord};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SentimentPolarity {
    Positive,
    Negative,
    Neutral,
    Conflict,
}

impl SentimentPolarity {
    /// The three labels a model is asked to produce.
    pub const LABELS: [SentimentPolarity; 3] = [
        SentimentPolarity::Positive,
        SentimentPolarity::Negative,
        SentimentPolarity::Neutral,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            SentimentPolarity::Positive => "positive",
            SentimentPolarity::Negative => "negative",
            SentimentPolarity::Neutral => "neutral",
            SentimentPolarity::Conflict => "conflict",
        }
    }

    pub fn is_conflict(self) -> bool {
        self == SentimentPolarity::Conflict
    }
}

impl fmt::Display for SentimentPolarity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SentimentPolarity {
    type Err = String;

    /// Exact match only; gold files use lowercase labels.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "positive" => Ok(SentimentPolarity::Positive),
            "negative" => Ok(SentimentPolarity::Negative),
            "neutral" => Ok(SentimentPolarity::Neutral),
            "conflict" => Ok(SentimentPolarity::Conflict),
            other => Err(format!("unknown polarity {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Domain {
    Laptops,
    Restaurants,
}

impl Domain {
    pub const ALL: [Domain; 2] = [Domain::Laptops, Domain::Restaurants];

    pub fn as_str(self) -> &'static str {
        match self {
            Domain::Laptops => "laptops",
            Domain::Restaurants => "restaurants",
        }
    }

    /// Short benchmark name used in report tables.
    pub fn short_name(self) -> &'static str {
        match self {
            Domain::Laptops => "Lapt14",
            Domain::Restaurants => "Rest14",
        }
    }
}

impl fmt::Display for Domain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Domain {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "laptops" | "laptop" | "lapt14" => Ok(Domain::Laptops),
            "restaurants" | "restaurant" | "rest14" => Ok(Domain::Restaurants),
            other => Err(format!("unknown domain {other:?}")),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Train,
    Test,
}

impl Split {
    pub fn as_str(self) -> &'static str {
        match self {
            Split::Train => "train",
            Split::Test => "test",
        }
    }
}

impl fmt::Display for Split {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Split {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "train" => Ok(Split::Train),
            "test" => Ok(Split::Test),
            other => Err(format!("unknown split {other:?}")),
        }
    }
}

/// Domain of a whole corpus; `Mixed` after [`merge_corpora`] of two domains.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum CorpusDomain {
    Laptops,
    Restaurants,
    Mixed,
}

impl From<Domain> for CorpusDomain {
    fn from(d: Domain) -> Self {
        match d {
            Domain::Laptops => CorpusDomain::Laptops,
            Domain::Restaurants => CorpusDomain::Restaurants,
        }
    }
}

impl fmt::Display for CorpusDomain {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            CorpusDomain::Laptops => "laptops",
            CorpusDomain::Restaurants => "restaurants",
            CorpusDomain::Mixed => "mixed",
        })
    }
}

/// Which subtasks see `conflict`-labeled aspects in their gold sets.
///
/// ATSC never does. The default removes them everywhere so ATE and joint gold
/// agree with the ATSC sample set.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ConflictPolicy {
    #[default]
    DropEverywhere,
    /// Keep conflict aspects in ATE and joint gold, drop them for ATSC only.
    DropForAtscOnly,
}

impl FromStr for ConflictPolicy {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "drop-everywhere" => Ok(ConflictPolicy::DropEverywhere),
            "drop-for-atsc-only" => Ok(ConflictPolicy::DropForAtscOnly),
            other => Err(format!("unknown conflict policy {other:?}")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AspectAnnotation {
    pub term: String,
    pub polarity: SentimentPolarity,
    /// Character offsets `[from, to)` into the sentence text.
    #[serde(default)]
    pub span: Option<(usize, usize)>,
}

impl AspectAnnotation {
    pub fn new(term: impl Into<String>, polarity: SentimentPolarity) -> Self {
        AspectAnnotation {
            term: term.into(),
            polarity,
            span: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ReviewSentence {
    pub id: String,
    pub text: String,
    pub domain: Domain,
    pub aspects: Vec<AspectAnnotation>,
}

impl ReviewSentence {
    /// Builds a sentence, validating text and terms and merging aspects that
    /// share a canonical `(term, polarity)` pair. Returns the number merged.
    pub fn new(
        id: impl Into<String>,
        text: impl Into<String>,
        domain: Domain,
        aspects: Vec<AspectAnnotation>,
    ) -> Result<(Self, usize)> {
        let id = id.into();
        let text = text.into();
        if text.trim().is_empty() {
            return Err(Error::SchemaViolation {
                sentence_id: id,
                message: "empty sentence text".into(),
            });
        }
        let mut seen = HashSet::new();
        let mut kept = Vec::with_capacity(aspects.len());
        let mut merged = 0;
        for aspect in aspects {
            if aspect.term.trim().is_empty() {
                return Err(Error::SchemaViolation {
                    sentence_id: id,
                    message: "empty aspect term".into(),
                });
            }
            if seen.insert((canonicalize(&aspect.term), aspect.polarity)) {
                kept.push(aspect);
            } else {
                merged += 1;
            }
        }
        Ok((
            ReviewSentence {
                id,
                text,
                domain,
                aspects: kept,
            },
            merged,
        ))
    }

    /// Aspects that belong in ATE / joint gold under `policy`, in gold order.
    pub fn extraction_aspects(
        &self,
        policy: ConflictPolicy,
    ) -> impl Iterator<Item = &AspectAnnotation> + '_ {
        self.aspects
            .iter()
            .filter(move |a| policy == ConflictPolicy::DropForAtscOnly || !a.polarity.is_conflict())
    }

    /// Canonical gold term set for ATE, first-occurrence order.
    pub fn gold_terms(&self, policy: ConflictPolicy) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for aspect in self.extraction_aspects(policy) {
            let term = canonicalize(&aspect.term);
            if !out.contains(&term) {
                out.push(term);
            }
        }
        out
    }

    /// Canonical gold `(term, polarity)` set for the joint task.
    pub fn gold_pairs(&self, policy: ConflictPolicy) -> Vec<(String, SentimentPolarity)> {
        let mut out: Vec<(String, SentimentPolarity)> = Vec::new();
        for aspect in self.extraction_aspects(policy) {
            let pair = (canonicalize(&aspect.term), aspect.polarity);
            if !out.contains(&pair) {
                out.push(pair);
            }
        }
        out
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Corpus {
    pub domain: CorpusDomain,
    pub split: Split,
    sentences: Vec<ReviewSentence>,
}

impl Corpus {
    /// Fails with [`Error::DuplicateId`] if two sentences share an id.
    pub fn new(domain: CorpusDomain, split: Split, sentences: Vec<ReviewSentence>) -> Result<Self> {
        let mut ids = HashSet::with_capacity(sentences.len());
        for s in &sentences {
            if !ids.insert(s.id.as_str()) {
                return Err(Error::DuplicateId(s.id.clone()));
            }
        }
        Ok(Corpus {
            domain,
            split,
            sentences,
        })
    }

    pub fn empty(domain: CorpusDomain, split: Split) -> Self {
        Corpus {
            domain,
            split,
            sentences: Vec::new(),
        }
    }

    pub fn sentences(&self) -> &[ReviewSentence] {
        &self.sentences
    }

    pub fn len(&self) -> usize {
        self.sentences.len()
    }

    pub fn is_empty(&self) -> bool {
        self.sentences.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ReviewSentence> {
        self.sentences.iter().find(|s| s.id == id)
    }
}

/// One ATSC instance: a sentence paired with one of its gold aspects.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct AtscSample<'a> {
    pub sentence: &'a ReviewSentence,
    pub aspect_term: &'a str,
    pub gold_polarity: SentimentPolarity,
}

#[derive(Debug, Clone, Default)]
pub struct AtscExpansion<'a> {
    pub samples: Vec<AtscSample<'a>>,
    pub conflicts_dropped: usize,
}

/// One sample per non-conflict gold aspect, in corpus then annotation order.
pub fn expand_atsc(corpus: &Corpus) -> AtscExpansion<'_> {
    let mut expansion = AtscExpansion::default();
    for sentence in corpus.sentences() {
        for aspect in &sentence.aspects {
            if aspect.polarity.is_conflict() {
                expansion.conflicts_dropped += 1;
                continue;
            }
            expansion.samples.push(AtscSample {
                sentence,
                aspect_term: &aspect.term,
                gold_polarity: aspect.polarity,
            });
        }
    }
    expansion
}

/// Concatenates `a` then `b`, prefixing ids with their domain tag.
///
/// Ids that already carry a tag, or come from a mixed corpus, are kept as
/// they are. Any collision left after prefixing is resolved with a `#n`
/// suffix.
pub fn merge_corpora(a: &Corpus, b: &Corpus) -> Result<Corpus> {
    if a.split != b.split {
        return Err(Error::SplitMismatch {
            left: a.split.to_string(),
            right: b.split.to_string(),
        });
    }
    let domain = if a.domain == b.domain {
        a.domain
    } else if a.is_empty() {
        b.domain
    } else if b.is_empty() {
        a.domain
    } else {
        CorpusDomain::Mixed
    };
    let mut seen: HashSet<String> = HashSet::with_capacity(a.len() + b.len());
    let mut sentences = Vec::with_capacity(a.len() + b.len());
    for corpus in [a, b] {
        for s in corpus.sentences() {
            let tag = format!("{}:", s.domain);
            let base = if corpus.domain == CorpusDomain::Mixed || s.id.starts_with(&tag) {
                s.id.clone()
            } else {
                format!("{tag}{}", s.id)
            };
            let mut id = base.clone();
            let mut n = 2;
            while seen.contains(&id) {
                id = format!("{base}#{n}");
                n += 1;
            }
            seen.insert(id.clone());
            sentences.push(ReviewSentence {
                id,
                ..s.clone()
            });
        }
    }
    Ok(Corpus {
        domain,
        split: a.split,
        sentences,
    })
}
