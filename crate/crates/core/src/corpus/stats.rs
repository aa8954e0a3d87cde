use std::collections::BTreeMap;
use std::fmt;

use serde::{Deserialize, Serialize};

use super::{expand_atsc, Corpus, SentimentPolarity};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct PolarityCounts {
    pub positive: usize,
    pub negative: usize,
    pub neutral: usize,
}

impl PolarityCounts {
    pub fn total(&self) -> usize {
        self.positive + self.negative + self.neutral
    }
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct StatsRecord {
    pub sentences: usize,
    /// Sentences keyed by their number of aspects; key 0 is the no-aspect bucket.
    pub aspect_histogram: BTreeMap<usize, usize>,
    pub aspects: usize,
    /// ATSC samples per label (conflict excluded).
    pub polarity_counts: PolarityCounts,
    pub conflict_aspects: usize,
}

impl StatsRecord {
    pub fn bucket(&self, aspects: usize) -> usize {
        self.aspect_histogram.get(&aspects).copied().unwrap_or(0)
    }
}

impl fmt::Display for StatsRecord {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "{} sentences", self.sentences)?;
        let buckets: Vec<String> = self
            .aspect_histogram
            .iter()
            .map(|(&k, v)| match k {
                0 => format!("#NO={v}"),
                k => format!("#{k}={v}"),
            })
            .collect();
        writeln!(f, "aspects per sentence: {}", buckets.join(" "))?;
        write!(
            f,
            "atsc samples: positive={} negative={} neutral={} (conflict dropped: {})",
            self.polarity_counts.positive,
            self.polarity_counts.negative,
            self.polarity_counts.neutral,
            self.conflict_aspects
        )
    }
}

/// Histogram over every annotated aspect, conflict labels included.
pub fn corpus_stats(corpus: &Corpus) -> StatsRecord {
    corpus_stats_with(corpus, true)
}

/// Like [`corpus_stats`], optionally leaving conflict aspects out of the
/// per-sentence histogram.
pub fn corpus_stats_with(corpus: &Corpus, histogram_counts_conflict: bool) -> StatsRecord {
    let mut record = StatsRecord {
        sentences: corpus.len(),
        ..Default::default()
    };
    for s in corpus.sentences() {
        let n = s
            .aspects
            .iter()
            .filter(|a| histogram_counts_conflict || !a.polarity.is_conflict())
            .count();
        *record.aspect_histogram.entry(n).or_default() += 1;
        record.aspects += n;
    }
    let expansion = expand_atsc(corpus);
    record.conflict_aspects = expansion.conflicts_dropped;
    for sample in &expansion.samples {
        let slot = match sample.gold_polarity {
            SentimentPolarity::Positive => &mut record.polarity_counts.positive,
            SentimentPolarity::Negative => &mut record.polarity_counts.negative,
            SentimentPolarity::Neutral => &mut record.polarity_counts.neutral,
            SentimentPolarity::Conflict => unreachable!("expand_atsc filters conflict"),
        };
        *slot += 1;
    }
    record
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AspectAnnotation, CorpusDomain, Domain, ReviewSentence, Split};
    use SentimentPolarity::*;

    #[test]
    fn empty_corpus_is_all_zero() {
        let stats = corpus_stats(&Corpus::empty(CorpusDomain::Laptops, Split::Train));
        assert_eq!(stats, StatsRecord::default());
    }

    #[test]
    fn histogram_conserves_sentences() {
        let mk = |id: &str, pols: &[SentimentPolarity]| {
            ReviewSentence::new(
                id,
                "text",
                Domain::Laptops,
                pols.iter()
                    .enumerate()
                    .map(|(i, &p)| AspectAnnotation::new(format!("t{i}"), p))
                    .collect(),
            )
            .unwrap()
            .0
        };
        let corpus = Corpus::new(
            CorpusDomain::Laptops,
            Split::Train,
            vec![mk("a", &[]), mk("b", &[Positive, Conflict]), mk("c", &[Conflict])],
        )
        .unwrap();
        let stats = corpus_stats(&corpus);
        assert_eq!(stats.aspect_histogram.values().sum::<usize>(), 3);
        assert_eq!((stats.bucket(0), stats.bucket(1), stats.bucket(2)), (1, 1, 1));
        assert_eq!(stats.polarity_counts.total(), 1);
        assert_eq!(stats.conflict_aspects, 2);

        let filtered = corpus_stats_with(&corpus, false);
        assert_eq!((filtered.bucket(0), filtered.bucket(1)), (2, 1));
        assert_eq!(filtered.aspect_histogram.values().sum::<usize>(), 3);
    }
}
