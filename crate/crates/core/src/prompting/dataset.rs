//! Whole-corpus prompt datasets and their line-delimited JSON form:
//!
//! ```json
//! {"input_text":"Definition: ...\ninput: ...","target_text":"menu","meta":{"sentence_id":"1","subtask":"ate"}}
//! ```

use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use log::warn;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use super::targets::render_lossy;
use super::{render_parts, PromptConfig, PromptSample, PromptedExample, SubtaskKind};
use crate::corpus::{expand_atsc, Corpus};
use crate::error::{Error, Result};

/// A sentence left out of a training dataset.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Exclusion {
    pub sentence_id: String,
    pub term: String,
    pub reason: String,
}

#[derive(Debug, Clone, Default)]
pub struct BuiltDataset {
    pub examples: Vec<PromptedExample>,
    pub excluded: Vec<Exclusion>,
}

/// Training dataset: one example per sentence (ATE, joint) or per ATSC sample,
/// in corpus order. Sentences whose gold cannot be rendered are excluded and
/// listed.
pub fn build_dataset(config: &PromptConfig, subtask: SubtaskKind, corpus: &Corpus) -> Result<BuiltDataset> {
    let built = build(config, subtask, corpus, false)?;
    if !built.excluded.is_empty() {
        warn!(
            "{subtask}: excluded {} sentences with unrepresentable terms",
            built.excluded.len()
        );
    }
    Ok(built)
}

/// Evaluation dataset: like [`build_dataset`] but keeps every sentence, giving
/// unrepresentable ones a best-effort target and `representable: false`.
pub fn build_eval_dataset(config: &PromptConfig, subtask: SubtaskKind, corpus: &Corpus) -> Result<BuiltDataset> {
    build(config, subtask, corpus, true)
}

fn build(config: &PromptConfig, subtask: SubtaskKind, corpus: &Corpus, keep_all: bool) -> Result<BuiltDataset> {
    let mut out = BuiltDataset::default();
    if subtask == SubtaskKind::Atsc {
        let expansion = expand_atsc(corpus);
        for sample in &expansion.samples {
            let (input_text, target, meta) = render_parts(config, subtask, PromptSample::Aspect(sample))?;
            out.examples.push(PromptedExample {
                input_text,
                target_text: target?,
                meta,
            });
        }
        return Ok(out);
    }
    for sentence in corpus.sentences() {
        let (input_text, target, mut meta) = render_parts(config, subtask, PromptSample::Sentence(sentence))?;
        match target {
            Ok(target_text) => out.examples.push(PromptedExample {
                input_text,
                target_text,
                meta,
            }),
            Err(Error::UnrepresentableTerm {
                sentence_id,
                term,
                reason,
            }) => {
                out.excluded.push(Exclusion {
                    sentence_id,
                    term,
                    reason: reason.to_string(),
                });
                if keep_all {
                    meta.representable = false;
                    out.examples.push(PromptedExample {
                        input_text,
                        target_text: render_lossy(sentence, subtask == SubtaskKind::Joint, &config.targets),
                        meta,
                    });
                }
            }
            Err(other) => return Err(other),
        }
    }
    Ok(out)
}

impl BuiltDataset {
    /// Fails if more than `limit` sentences were excluded.
    pub fn check_exclusions(&self, limit: usize) -> Result<()> {
        if self.excluded.len() > limit {
            return Err(Error::TooManyUnrepresentable {
                excluded: self.excluded.len(),
                limit,
            });
        }
        Ok(())
    }
}

pub fn write_dataset_jsonl(examples: &[PromptedExample], path: impl AsRef<Path>) -> Result<()> {
    let path = path.as_ref();
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = BufWriter::new(file);
    for ex in examples {
        let line = serde_json::to_string(ex).map_err(|e| Error::json("serializing dataset", e))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

pub fn read_dataset_jsonl(path: impl AsRef<Path>) -> Result<Vec<PromptedExample>> {
    let path = path.as_ref();
    let file = std::fs::File::open(path).map_err(|e| Error::io(path, e))?;
    let mut out = Vec::new();
    for (n, line) in BufReader::new(file).lines().enumerate() {
        let line = line.map_err(|e| Error::io(path, e))?;
        if line.trim().is_empty() {
            continue;
        }
        out.push(
            serde_json::from_str(&line).map_err(|e| Error::json(format!("{} line {}", path.display(), n + 1), e))?,
        );
    }
    Ok(out)
}

/// SHA-256 over the serialized examples, hex encoded.
pub fn dataset_fingerprint(examples: &[PromptedExample]) -> String {
    let mut hasher = Sha256::new();
    for ex in examples {
        hasher.update(serde_json::to_vec(ex).expect("examples serialize"));
        hasher.update(b"\n");
    }
    hex::encode(hasher.finalize())
}
