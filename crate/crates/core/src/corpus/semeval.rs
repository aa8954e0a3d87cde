//! SemEval-2014 Task 4 XML reader.
//!
//! ```xml
//! <sentences>
//!   <sentence id="2339">
//!     <text>I charge it at night and skip taking the cord with me.</text>
//!     <aspectTerms>
//!       <aspectTerm term="cord" polarity="neutral" from="41" to="45"/>
//!     </aspectTerms>
//!   </sentence>
//! </sentences>
//! ```
//!
//! `from`/`to` are optional character offsets. Aspect categories, if present,
//! are ignored.

use std::path::Path;

use log::warn;
use roxmltree::{Document, Node};

use super::{AspectAnnotation, Corpus, Domain, ReviewSentence, SentimentPolarity, Split};
use crate::error::{Error, Result};

#[derive(Debug, Clone)]
pub struct LoadReport {
    pub corpus: Corpus,
    /// Aspects merged because they repeated a `(term, polarity)` pair.
    pub duplicates_merged: usize,
    /// Offsets discarded because they did not select the term text.
    pub spans_dropped: usize,
}

/// Loads a gold file. Warnings (merged duplicates, bad offsets) are logged.
pub fn load_semeval_xml(path: impl AsRef<Path>, domain: Domain, split: Split) -> Result<Corpus> {
    let path = path.as_ref();
    let xml = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    let report = load_semeval_xml_str(&xml, domain, split).map_err(|e| match e {
        Error::MalformedXml {
            position, message, ..
        } => Error::MalformedXml {
            path: path.to_path_buf(),
            position,
            message,
        },
        other => other,
    })?;
    if report.duplicates_merged > 0 {
        warn!(
            "{}: merged {} duplicate aspect annotations",
            path.display(),
            report.duplicates_merged
        );
    }
    if report.spans_dropped > 0 {
        warn!(
            "{}: dropped {} offsets that did not match their term",
            path.display(),
            report.spans_dropped
        );
    }
    Ok(report.corpus)
}

/// Byte offset of a 1-based line / character column.
fn byte_offset(text: &str, row: u32, col: u32) -> usize {
    let mut offset = 0;
    for (i, line) in text.split_inclusive('\n').enumerate() {
        if i + 1 == row as usize {
            return offset
                + line
                    .char_indices()
                    .nth(col.saturating_sub(1) as usize)
                    .map_or(line.len(), |(b, _)| b);
        }
        offset += line.len();
    }
    text.len()
}

pub fn load_semeval_xml_str(xml: &str, domain: Domain, split: Split) -> Result<LoadReport> {
    let doc = Document::parse(xml).map_err(|e| {
        let pos = e.pos();
        Error::MalformedXml {
            path: "<memory>".into(),
            position: format!("{pos} (byte {})", byte_offset(xml, pos.row, pos.col)),
            message: e.to_string(),
        }
    })?;

    let mut sentences = Vec::new();
    let mut duplicates_merged = 0;
    let mut spans_dropped = 0;
    for node in doc.descendants().filter(|n| n.has_tag_name("sentence")) {
        let id = match node.attribute("id") {
            Some(id) => id.to_string(),
            None => {
                return Err(Error::SchemaViolation {
                    sentence_id: format!("<no id, line {}>", doc.text_pos_at(node.range().start).row),
                    message: "missing id attribute".into(),
                })
            }
        };
        let text = child(node, "text")
            .and_then(|t| t.text())
            .ok_or_else(|| Error::SchemaViolation {
                sentence_id: id.clone(),
                message: "missing <text>".into(),
            })?
            .to_string();

        let mut aspects = Vec::new();
        if let Some(terms) = child(node, "aspectTerms") {
            for at in terms.children().filter(|n| n.has_tag_name("aspectTerm")) {
                let (aspect, span_ok) = read_aspect(&id, &text, at)?;
                if !span_ok {
                    spans_dropped += 1;
                }
                aspects.push(aspect);
            }
        }
        let (sentence, merged) = ReviewSentence::new(id, text, domain, aspects)?;
        duplicates_merged += merged;
        sentences.push(sentence);
    }

    Ok(LoadReport {
        corpus: Corpus::new(domain.into(), split, sentences)?,
        duplicates_merged,
        spans_dropped,
    })
}

fn child<'a, 'i>(node: Node<'a, 'i>, name: &str) -> Option<Node<'a, 'i>> {
    node.children().find(|n| n.has_tag_name(name))
}

/// Returns the aspect and whether its offsets (if any) were kept.
fn read_aspect(id: &str, text: &str, node: Node) -> Result<(AspectAnnotation, bool)> {
    let violation = |message: String| Error::SchemaViolation {
        sentence_id: id.to_string(),
        message,
    };
    let term = node
        .attribute("term")
        .ok_or_else(|| violation("aspectTerm without term attribute".into()))?;
    if term.trim().is_empty() {
        return Err(violation("empty aspect term".into()));
    }
    let polarity: SentimentPolarity = node
        .attribute("polarity")
        .ok_or_else(|| violation(format!("aspect {term:?} has no polarity")))?
        .parse()
        .map_err(|e| violation(format!("aspect {term:?}: {e}")))?;

    let offset = |name: &str| -> Result<Option<usize>> {
        node.attribute(name)
            .map(|v| {
                v.trim()
                    .parse::<usize>()
                    .map_err(|_| violation(format!("aspect {term:?}: bad {name} offset {v:?}")))
            })
            .transpose()
    };
    let mut span = match (offset("from")?, offset("to")?) {
        (Some(from), Some(to)) => Some((from, to)),
        _ => None,
    };
    let mut kept = true;
    if let Some((from, to)) = span {
        let selected: Option<String> = (from <= to).then(|| text.chars().skip(from).take(to - from).collect());
        if selected.as_deref() != Some(term) {
            span = None;
            kept = false;
        }
    }
    Ok((
        AspectAnnotation {
            term: term.to_string(),
            polarity,
            span,
        },
        kept,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"<?xml version="1.0" encoding="UTF-8"?>
<sentences>
  <sentence id="3121">
    <text>But the staff was so horrible to us.</text>
    <aspectTerms>
      <aspectTerm term="staff" polarity="negative" from="8" to="13"/>
    </aspectTerms>
    <aspectCategories>
      <aspectCategory category="service" polarity="negative"/>
    </aspectCategories>
  </sentence>
  <sentence id="2777">
    <text>To be completely fair, the only redeeming factor was the food, which was above average.</text>
    <aspectTerms>
      <aspectTerm term="food" polarity="conflict"/>
    </aspectTerms>
  </sentence>
  <sentence id="1634">
    <text>Everything is always cooked to perfection &amp; the service is excellent.</text>
  </sentence>
</sentences>"#;

    #[test]
    fn reads_terms_offsets_and_entities() {
        let report = load_semeval_xml_str(SAMPLE, Domain::Restaurants, Split::Train).unwrap();
        let c = report.corpus;
        assert_eq!(c.len(), 3);
        assert_eq!(c.sentences()[0].aspects[0].span, Some((8, 13)));
        assert_eq!(c.sentences()[1].aspects[0].span, None);
        assert_eq!(c.sentences()[1].aspects[0].polarity, SentimentPolarity::Conflict);
        assert!(c.sentences()[2].aspects.is_empty());
        assert!(c.sentences()[2].text.contains("perfection & the"));
        assert_eq!(report.spans_dropped, 0);
    }

    #[test]
    fn single_sentence_without_aspects() {
        let xml = r#"<sentences><sentence id="1"><text>Fine.</text></sentence></sentences>"#;
        let c = load_semeval_xml_str(xml, Domain::Laptops, Split::Test).unwrap().corpus;
        assert_eq!(c.len(), 1);
        assert!(c.sentences()[0].aspects.is_empty());
    }

    #[test]
    fn mismatched_offsets_are_dropped_not_fatal() {
        let xml = r#"<sentences><sentence id="1"><text>Great screen.</text><aspectTerms>
            <aspectTerm term="screen" polarity="positive" from="0" to="5"/></aspectTerms></sentence></sentences>"#;
        let report = load_semeval_xml_str(xml, Domain::Laptops, Split::Train).unwrap();
        assert_eq!(report.spans_dropped, 1);
        assert_eq!(report.corpus.sentences()[0].aspects[0].span, None);
    }

    #[test]
    fn unknown_polarity_names_sentence() {
        let xml = r#"<sentences><sentence id="42"><text>ok</text><aspectTerms>
            <aspectTerm term="ok" polarity="meh"/></aspectTerms></sentence></sentences>"#;
        let err = load_semeval_xml_str(xml, Domain::Laptops, Split::Train).unwrap_err();
        assert!(matches!(&err, Error::SchemaViolation { sentence_id, .. } if sentence_id == "42"), "{err}");
    }

    #[test]
    fn empty_term_and_missing_text_are_violations() {
        let xml = r#"<sentences><sentence id="5"><text>ok</text><aspectTerms>
            <aspectTerm term=" " polarity="positive"/></aspectTerms></sentence></sentences>"#;
        assert!(matches!(
            load_semeval_xml_str(xml, Domain::Laptops, Split::Train),
            Err(Error::SchemaViolation { .. })
        ));
        let xml = r#"<sentences><sentence id="6"></sentence></sentences>"#;
        let err = load_semeval_xml_str(xml, Domain::Laptops, Split::Train).unwrap_err();
        assert!(err.to_string().contains("sentence 6"));
    }

    #[test]
    fn syntax_errors_report_position() {
        let xml = "<sentences>\n<sentence id=\"1\"><text>é</txt></sentence></sentences>";
        let err = load_semeval_xml_str(xml, Domain::Laptops, Split::Train).unwrap_err();
        match err {
            Error::MalformedXml { position, .. } => assert_eq!(position, "2:25 (byte 37)"),
            other => panic!("unexpected {other}"),
        }
    }

    #[test]
    fn duplicate_ids_fail() {
        let xml = r#"<sentences><sentence id="1"><text>a</text></sentence><sentence id="1"><text>b</text></sentence></sentences>"#;
        assert!(matches!(
            load_semeval_xml_str(xml, Domain::Laptops, Split::Train),
            Err(Error::DuplicateId(_))
        ));
    }
}
