//! Plain-text prompt templates.
//!
//! A template file is a sequence of sections, each opened by a line holding
//! only `@name`. Lines before the first section that start with `#` are
//! comments. Recognized sections:
//!
//! | section         | content                                            |
//! |-----------------|----------------------------------------------------|
//! | `@definition`   | task definition, one or more lines                 |
//! | `@positive`     | example input/output line pairs                    |
//! | `@negative`     | example input/output line pairs                    |
//! | `@neutral`      | example input/output line pairs                    |
//! | `@cue`          | completion cue line                                |
//! | `@sample`       | the sample line with `{sentence}` / `{aspect}`     |
//! | `@empty-output` | optional target for sentences without aspects      |
//!
//! Rendered prompts join lines with a single `\n` and have no trailing newline.

use std::path::Path;

use super::SubtaskKind;
use crate::error::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExamplePair {
    pub input: String,
    pub output: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Literal(String),
    Sentence,
    Aspect,
}

/// The sample line with its slots pre-split, so sentence text is never
/// re-scanned for slot names.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SampleTemplate {
    segments: Vec<Segment>,
}

impl SampleTemplate {
    fn parse(name: &str, line: &str) -> Result<Self> {
        let mut segments = Vec::new();
        let mut rest = line;
        while let Some(open) = rest.find('{') {
            let close = rest[open..].find('}').map(|c| open + c).ok_or_else(|| Error::Template {
                name: name.into(),
                message: format!("unclosed slot in sample line {line:?}"),
            })?;
            if open > 0 {
                segments.push(Segment::Literal(rest[..open].to_string()));
            }
            segments.push(match &rest[open + 1..close] {
                "sentence" => Segment::Sentence,
                "aspect" => Segment::Aspect,
                other => {
                    return Err(Error::Template {
                        name: name.into(),
                        message: format!("unknown slot {{{other}}}"),
                    })
                }
            });
            rest = &rest[close + 1..];
        }
        if !rest.is_empty() {
            segments.push(Segment::Literal(rest.to_string()));
        }
        Ok(SampleTemplate { segments })
    }

    pub fn has_aspect_slot(&self) -> bool {
        self.segments.contains(&Segment::Aspect)
    }

    pub fn render(&self, sentence: &str, aspect: Option<&str>) -> String {
        let mut out = String::new();
        for seg in &self.segments {
            match seg {
                Segment::Literal(s) => out.push_str(s),
                Segment::Sentence => out.push_str(sentence),
                Segment::Aspect => out.push_str(aspect.unwrap_or_default()),
            }
        }
        out
    }
}

/// Instruction block for one subtask: definition plus example blocks.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct InstructionPrompt {
    pub definition: String,
    pub positive_examples: Vec<ExamplePair>,
    pub negative_examples: Vec<ExamplePair>,
    pub neutral_examples: Vec<ExamplePair>,
    pub cue: String,
    pub sample: SampleTemplate,
    pub empty_output: Option<String>,
}

impl InstructionPrompt {
    pub fn parse(name: &str, source: &str) -> Result<Self> {
        let err = |message: String| Error::Template {
            name: name.to_string(),
            message,
        };
        let mut sections: Vec<(String, Vec<&str>)> = Vec::new();
        for line in source.lines() {
            if let Some(section) = line.strip_prefix('@') {
                if sections.iter().any(|(n, _)| n == section) {
                    return Err(err(format!("section @{section} appears twice")));
                }
                sections.push((section.to_string(), Vec::new()));
            } else if let Some((_, lines)) = sections.last_mut() {
                lines.push(line);
            } else if !(line.starts_with('#') || line.trim().is_empty()) {
                return Err(err(format!("text before first section: {line:?}")));
            }
        }
        let mut take = |section: &str| -> Option<Vec<&str>> {
            let idx = sections.iter().position(|(n, _)| n == section)?;
            let (_, mut lines) = sections.remove(idx);
            while lines.last().is_some_and(|l| l.trim().is_empty()) {
                lines.pop();
            }
            Some(lines)
        };
        let required = |lines: Option<Vec<&str>>, section: &str| -> Result<String> {
            match lines {
                Some(lines) if !lines.is_empty() && !lines.join("").trim().is_empty() => Ok(lines.join("\n")),
                _ => Err(err(format!("missing or empty @{section}"))),
            }
        };
        let pairs = |lines: Option<Vec<&str>>, section: &str| -> Result<Vec<ExamplePair>> {
            let lines = lines.unwrap_or_default();
            if !lines.len().is_multiple_of(2) {
                return Err(err(format!("@{section} must hold input/output line pairs")));
            }
            Ok(lines
                .chunks(2)
                .map(|c| ExamplePair {
                    input: c[0].to_string(),
                    output: c[1].to_string(),
                })
                .collect())
        };

        let definition = required(take("definition"), "definition")?;
        let positive_examples = pairs(take("positive"), "positive")?;
        let negative_examples = pairs(take("negative"), "negative")?;
        let neutral_examples = pairs(take("neutral"), "neutral")?;
        let cue = required(take("cue"), "cue")?;
        let sample_line = required(take("sample"), "sample")?;
        if sample_line.contains('\n') {
            return Err(err("@sample must be a single line".into()));
        }
        let sample = SampleTemplate::parse(name, &sample_line)?;
        let empty_output = take("empty-output").map(|l| l.join("\n")).filter(|s| !s.is_empty());
        if let Some((extra, _)) = sections.first() {
            return Err(err(format!("unknown section @{extra}")));
        }
        Ok(InstructionPrompt {
            definition,
            positive_examples,
            negative_examples,
            neutral_examples,
            cue,
            sample,
            empty_output,
        })
    }
}

/// One [`InstructionPrompt`] per subtask.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct TemplateSet {
    pub ate: InstructionPrompt,
    pub atsc: InstructionPrompt,
    pub joint: InstructionPrompt,
}

const DEFAULT_ATE: &str = include_str!("../../templates/v1/ate.tmpl");
const DEFAULT_ATSC: &str = include_str!("../../templates/v1/atsc.tmpl");
const DEFAULT_JOINT: &str = include_str!("../../templates/v1/joint.tmpl");

impl TemplateSet {
    /// The shipped `templates/v1` set.
    pub fn builtin() -> Self {
        Self::from_sources(DEFAULT_ATE, DEFAULT_ATSC, DEFAULT_JOINT).expect("built-in templates parse")
    }

    pub fn from_sources(ate: &str, atsc: &str, joint: &str) -> Result<Self> {
        let set = TemplateSet {
            ate: InstructionPrompt::parse("ate", ate)?,
            atsc: InstructionPrompt::parse("atsc", atsc)?,
            joint: InstructionPrompt::parse("joint", joint)?,
        };
        if !set.atsc.sample.has_aspect_slot() {
            return Err(Error::Template {
                name: "atsc".into(),
                message: "sample line needs an {aspect} slot".into(),
            });
        }
        Ok(set)
    }

    /// Reads `ate.tmpl`, `atsc.tmpl` and `joint.tmpl` from `dir`.
    pub fn load_dir(dir: impl AsRef<Path>) -> Result<Self> {
        let dir = dir.as_ref();
        let read = |file: &str| {
            let path = dir.join(file);
            std::fs::read_to_string(&path).map_err(|e| Error::io(path, e))
        };
        Self::from_sources(&read("ate.tmpl")?, &read("atsc.tmpl")?, &read("joint.tmpl")?)
    }

    pub fn get(&self, subtask: SubtaskKind) -> &InstructionPrompt {
        match subtask {
            SubtaskKind::Ate => &self.ate,
            SubtaskKind::Atsc => &self.atsc,
            SubtaskKind::Joint => &self.joint,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn builtin_templates_have_two_examples_per_block() {
        let set = TemplateSet::builtin();
        for p in [&set.ate, &set.atsc, &set.joint] {
            assert_eq!(p.positive_examples.len(), 2);
            assert_eq!(p.negative_examples.len(), 2);
            assert_eq!(p.neutral_examples.len(), 2);
            assert_eq!(p.cue, "Now complete the following example-");
        }
        assert_eq!(set.ate.empty_output.as_deref(), Some("noaspectterm"));
        assert_eq!(set.joint.empty_output.as_deref(), Some("noaspectterm:none"));
        assert_eq!(set.atsc.empty_output, None);
    }

    #[test]
    fn sample_slots_are_not_expanded_twice() {
        let t = SampleTemplate::parse("t", "input: {sentence} Aspect: {aspect}.").unwrap();
        assert_eq!(
            t.render("a {aspect} b", Some("x")),
            "input: a {aspect} b Aspect: x."
        );
    }

    #[test]
    fn rejects_malformed_templates() {
        let base = "@definition\nd\n@cue\nc\n@sample\ninput: {sentence}\n";
        assert!(InstructionPrompt::parse("t", base).is_ok());
        assert!(InstructionPrompt::parse("t", "@cue\nc\n@sample\ns\n").is_err());
        assert!(InstructionPrompt::parse("t", &format!("{base}@positive\nonly input\n")).is_err());
        assert!(InstructionPrompt::parse("t", &format!("{base}@bogus\nx\n")).is_err());
        assert!(InstructionPrompt::parse("t", "@definition\nd\n@cue\nc\n@sample\n{nope}\n").is_err());
        assert!(InstructionPrompt::parse("t", "stray\n@definition\nd\n").is_err());
    }
}
