//! Line-delimited JSON form of a corpus.
//!
//! The first line is a header `{"corpus":{"domain":"laptops","split":"train"}}`,
//! followed by one sentence per line:
//!
//! ```json
//! {"id":"2339","domain":"laptops","split":"train","text":"...","aspects":[{"term":"cord","polarity":"neutral","span":[41,45]}]}
//! ```
//!
//! `span` is `null` when the source had no offsets. The header may be omitted
//! when the file contains at least one sentence.

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{AspectAnnotation, Corpus, CorpusDomain, Domain, ReviewSentence, Split};
use crate::error::{Error, Result};

#[derive(Debug, Serialize, Deserialize)]
struct Header {
    corpus: HeaderBody,
}

#[derive(Debug, Serialize, Deserialize)]
struct HeaderBody {
    domain: CorpusDomain,
    split: Split,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CorpusRecord {
    pub id: String,
    pub domain: Domain,
    pub split: Split,
    pub text: String,
    pub aspects: Vec<AspectAnnotation>,
}

pub fn write_corpus_jsonl(corpus: &Corpus, path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    write_line(&mut out, path, &Header {
        corpus: HeaderBody {
            domain: corpus.domain,
            split: corpus.split,
        },
    })?;
    for s in corpus.sentences() {
        write_line(&mut out, path, &CorpusRecord {
            id: s.id.clone(),
            domain: s.domain,
            split: corpus.split,
            text: s.text.clone(),
            aspects: s.aspects.clone(),
        })?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_corpus_jsonl(path: impl AsRef<Path>) -> Result<Corpus> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut header: Option<HeaderBody> = None;
    let mut sentences = Vec::new();
    let mut split = None;
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        if n == 0 {
            if let Ok(h) = serde_json::from_str::<Header>(&line) {
                header = Some(h.corpus);
                continue;
            }
        }
        let record: CorpusRecord = serde_json::from_str(&line)
            .map_err(|e| Error::json(format!("{} line {}", path.display(), n + 1), e))?;
        split.get_or_insert(record.split);
        let (sentence, _) = ReviewSentence::new(record.id, record.text, record.domain, record.aspects)?;
        sentences.push(sentence);
    }
    let (domain, split) = match header {
        Some(h) => (h.domain, h.split),
        None => {
            let split = split.ok_or_else(|| {
                Error::Config(format!("{}: empty corpus file without header", path.display()))
            })?;
            let first = sentences[0].domain;
            let domain = if sentences.iter().all(|s| s.domain == first) {
                first.into()
            } else {
                CorpusDomain::Mixed
            };
            (domain, split)
        }
    };
    Corpus::new(domain, split, sentences)
}

fn write_line<T: Serialize>(out: &mut impl Write, path: &Path, value: &T) -> Result<()> {
    let s = serde_json::to_string(value).map_err(|e| Error::json("serializing corpus", e))?;
    writeln!(out, "{s}").map_err(|e| Error::io(path, e))
}
