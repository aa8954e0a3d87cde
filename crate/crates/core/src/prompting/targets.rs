//! Gold target strings for each subtask.

use serde::{Deserialize, Serialize};

use crate::canon::canonicalize;
use crate::corpus::{AtscSample, ConflictPolicy, ReviewSentence};
use crate::error::{Error, Result};

pub const TERM_SEPARATOR: &str = ", ";
pub const NO_ASPECT_TERM: &str = "noaspectterm";
pub const JOINT_NO_ASPECT: &str = "noaspectterm:none";

/// How gold annotations become target text.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct TargetFormat {
    pub conflict_policy: ConflictPolicy,
    pub ate_empty: String,
    pub joint_empty: String,
}

impl Default for TargetFormat {
    fn default() -> Self {
        TargetFormat {
            conflict_policy: ConflictPolicy::default(),
            ate_empty: NO_ASPECT_TERM.to_string(),
            joint_empty: JOINT_NO_ASPECT.to_string(),
        }
    }
}

fn check_term(sentence: &ReviewSentence, term: &str, joint: bool, format: &TargetFormat) -> Result<()> {
    let reason = if term.contains(',') {
        Some("contains the term separator")
    } else if joint && term.contains(':') {
        Some("contains the pair separator ':'")
    } else if canonicalize(term) == canonicalize(&format.ate_empty) {
        Some("equals the no-aspect sentinel")
    } else {
        None
    };
    match reason {
        Some(reason) => Err(Error::UnrepresentableTerm {
            sentence_id: sentence.id.clone(),
            term: term.to_string(),
            reason,
        }),
        None => Ok(()),
    }
}

/// Gold terms joined by `", "`, or the no-aspect sentinel.
///
/// Terms repeating an earlier term (after canonicalization) are emitted once.
pub fn render_ate_target(sentence: &ReviewSentence, format: &TargetFormat) -> Result<String> {
    let mut seen = Vec::new();
    let mut terms = Vec::new();
    for aspect in sentence.extraction_aspects(format.conflict_policy) {
        check_term(sentence, &aspect.term, false, format)?;
        let canonical = canonicalize(&aspect.term);
        if !seen.contains(&canonical) {
            seen.push(canonical);
            terms.push(aspect.term.trim());
        }
    }
    Ok(if terms.is_empty() {
        format.ate_empty.clone()
    } else {
        terms.join(TERM_SEPARATOR)
    })
}

pub fn render_atsc_target(sample: &AtscSample<'_>) -> String {
    sample.gold_polarity.as_str().to_string()
}

/// `term:polarity` pairs joined by `", "`, or the joint no-aspect sentinel.
pub fn render_joint_target(sentence: &ReviewSentence, format: &TargetFormat) -> Result<String> {
    let mut pairs = Vec::new();
    for aspect in sentence.extraction_aspects(format.conflict_policy) {
        check_term(sentence, &aspect.term, true, format)?;
        pairs.push(format!("{}:{}", aspect.term.trim(), aspect.polarity));
    }
    Ok(if pairs.is_empty() {
        format.joint_empty.clone()
    } else {
        pairs.join(TERM_SEPARATOR)
    })
}

/// Renders the target without representability checks. Used for evaluation
/// inputs where a sentence must still be queried.
pub(crate) fn render_lossy(sentence: &ReviewSentence, joint: bool, format: &TargetFormat) -> String {
    let parts: Vec<String> = sentence
        .extraction_aspects(format.conflict_policy)
        .map(|a| {
            if joint {
                format!("{}:{}", a.term.trim(), a.polarity)
            } else {
                a.term.trim().to_string()
            }
        })
        .collect();
    match (parts.is_empty(), joint) {
        (true, false) => format.ate_empty.clone(),
        (true, true) => format.joint_empty.clone(),
        (false, _) => parts.join(TERM_SEPARATOR),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{expand_atsc, AspectAnnotation, Corpus, CorpusDomain, Domain, SentimentPolarity, Split};
    use SentimentPolarity::*;

    fn sentence(aspects: &[(&str, SentimentPolarity)]) -> ReviewSentence {
        ReviewSentence::new(
            "s1",
            "Great food, good size menu, great service, and an unpretentious setting.",
            Domain::Restaurants,
            aspects.iter().map(|&(t, p)| AspectAnnotation::new(t, p)).collect(),
        )
        .unwrap()
        .0
    }

    #[test]
    fn ate_targets() {
        let f = TargetFormat::default();
        let s = sentence(&[("food", Positive), ("menu", Positive), ("service", Positive), ("setting", Positive)]);
        assert_eq!(render_ate_target(&s, &f).unwrap(), "food, menu, service, setting");
        assert_eq!(render_ate_target(&sentence(&[]), &f).unwrap(), "noaspectterm");
        assert_eq!(render_ate_target(&sentence(&[("cheeseburgers", Positive)]), &f).unwrap(), "cheeseburgers");
    }

    #[test]
    fn ate_drops_conflict_by_default() {
        let s = sentence(&[("food", Conflict)]);
        assert_eq!(render_ate_target(&s, &TargetFormat::default()).unwrap(), "noaspectterm");
        let keep = TargetFormat {
            conflict_policy: ConflictPolicy::DropForAtscOnly,
            ..Default::default()
        };
        assert_eq!(render_ate_target(&s, &keep).unwrap(), "food");
    }

    #[test]
    fn atsc_targets() {
        let c = Corpus::new(
            CorpusDomain::Restaurants,
            Split::Test,
            vec![sentence(&[("cheeseburgers", Positive), ("seats", Negative), ("seltzer with lime", Neutral)])],
        )
        .unwrap();
        let got: Vec<String> = expand_atsc(&c).samples.iter().map(render_atsc_target).collect();
        assert_eq!(got, ["positive", "negative", "neutral"]);
    }

    #[test]
    fn joint_targets() {
        let f = TargetFormat::default();
        assert_eq!(
            render_joint_target(&sentence(&[("cheeseburgers", Positive)]), &f).unwrap(),
            "cheeseburgers:positive"
        );
        assert_eq!(render_joint_target(&sentence(&[]), &f).unwrap(), "noaspectterm:none");
        assert_eq!(
            render_joint_target(&sentence(&[("toast", Negative), ("bacon", Negative)]), &f).unwrap(),
            "toast:negative, bacon:negative"
        );
    }

    #[test]
    fn unrepresentable_terms() {
        let f = TargetFormat::default();
        let comma = sentence(&[("salt, pepper", Neutral)]);
        assert!(matches!(render_ate_target(&comma, &f), Err(Error::UnrepresentableTerm { .. })));
        let colon = sentence(&[("ratio 16:9", Positive)]);
        assert!(render_ate_target(&colon, &f).is_ok());
        assert!(matches!(render_joint_target(&colon, &f), Err(Error::UnrepresentableTerm { .. })));
    }
}
