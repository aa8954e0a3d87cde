//! Instruction-prompted input/target pairs for the three subtasks.

mod dataset;
mod targets;
mod template;

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::corpus::{AtscSample, ReviewSentence};
use crate::error::{Error, Result};

pub use dataset::{
    build_dataset, build_eval_dataset, dataset_fingerprint, read_dataset_jsonl, write_dataset_jsonl,
    BuiltDataset, Exclusion,
};
pub use targets::{
    render_ate_target, render_atsc_target, render_joint_target, TargetFormat, JOINT_NO_ASPECT, NO_ASPECT_TERM,
    TERM_SEPARATOR,
};
pub use template::{ExamplePair, InstructionPrompt, SampleTemplate, TemplateSet};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SubtaskKind {
    Ate,
    Atsc,
    Joint,
}

impl SubtaskKind {
    pub const ALL: [SubtaskKind; 3] = [SubtaskKind::Ate, SubtaskKind::Atsc, SubtaskKind::Joint];

    pub fn as_str(self) -> &'static str {
        match self {
            SubtaskKind::Ate => "ate",
            SubtaskKind::Atsc => "atsc",
            SubtaskKind::Joint => "joint",
        }
    }

    pub fn label(self) -> &'static str {
        match self {
            SubtaskKind::Ate => "ATE",
            SubtaskKind::Atsc => "ATSC",
            SubtaskKind::Joint => "Joint",
        }
    }
}

impl fmt::Display for SubtaskKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for SubtaskKind {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "ate" => Ok(SubtaskKind::Ate),
            "atsc" => Ok(SubtaskKind::Atsc),
            "joint" => Ok(SubtaskKind::Joint),
            other => Err(format!("unknown subtask {other:?} (expected ate, atsc or joint)")),
        }
    }
}

/// `V1`: definition and the positive examples. `V2`: definition and the
/// positive, negative and neutral examples.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Variant {
    V1,
    V2,
}

impl Variant {
    pub const ALL: [Variant; 2] = [Variant::V1, Variant::V2];

    pub fn as_str(self) -> &'static str {
        match self {
            Variant::V1 => "v1",
            Variant::V2 => "v2",
        }
    }
}

impl fmt::Display for Variant {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

impl FromStr for Variant {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s.to_ascii_lowercase().as_str() {
            "v1" | "1" => Ok(Variant::V1),
            "v2" | "2" => Ok(Variant::V2),
            other => Err(format!("unknown variant {other:?} (expected v1 or v2)")),
        }
    }
}

/// Number of examples each rendered block carries.
pub const EXAMPLES_PER_BLOCK: usize = 2;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct PromptConfig {
    pub variant: Variant,
    pub templates: TemplateSet,
    pub targets: TargetFormat,
}

impl PromptConfig {
    /// Validates that every block the variant renders has exactly
    /// [`EXAMPLES_PER_BLOCK`] examples.
    pub fn new(variant: Variant, templates: TemplateSet, targets: TargetFormat) -> Result<Self> {
        for subtask in SubtaskKind::ALL {
            let prompt = templates.get(subtask);
            let mut blocks = vec![("positive", &prompt.positive_examples)];
            if variant == Variant::V2 {
                blocks.push(("negative", &prompt.negative_examples));
                blocks.push(("neutral", &prompt.neutral_examples));
            }
            for (block, examples) in blocks {
                if examples.len() != EXAMPLES_PER_BLOCK {
                    return Err(Error::Template {
                        name: subtask.to_string(),
                        message: format!(
                            "{variant} needs {EXAMPLES_PER_BLOCK} {block} examples, found {}",
                            examples.len()
                        ),
                    });
                }
            }
        }
        let mut targets = targets;
        if let Some(empty) = &templates.ate.empty_output {
            targets.ate_empty = empty.clone();
        }
        if let Some(empty) = &templates.joint.empty_output {
            targets.joint_empty = empty.clone();
        }
        Ok(PromptConfig {
            variant,
            templates,
            targets,
        })
    }

    /// Built-in templates with default target format.
    pub fn builtin(variant: Variant) -> Self {
        Self::new(variant, TemplateSet::builtin(), TargetFormat::default()).expect("built-in templates are valid")
    }

    /// Everything before the sample line: definition, example blocks, cue.
    pub fn instruction_block(&self, subtask: SubtaskKind) -> String {
        let prompt = self.templates.get(subtask);
        let mut lines: Vec<&str> = vec![&prompt.definition];
        let mut blocks = vec![&prompt.positive_examples];
        if self.variant == Variant::V2 {
            blocks.push(&prompt.negative_examples);
            blocks.push(&prompt.neutral_examples);
        }
        for example in blocks.into_iter().flatten() {
            lines.push(&example.input);
            lines.push(&example.output);
        }
        lines.push(&prompt.cue);
        lines.join("\n")
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct ExampleMeta {
    pub sentence_id: String,
    pub subtask: SubtaskKind,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub aspect_term: Option<String>,
    /// False when the gold annotation could not be rendered losslessly; such
    /// examples only appear in evaluation datasets.
    #[serde(default = "yes", skip_serializing_if = "is_true")]
    pub representable: bool,
}

fn yes() -> bool {
    true
}

fn is_true(b: &bool) -> bool {
    *b
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct PromptedExample {
    pub input_text: String,
    pub target_text: String,
    pub meta: ExampleMeta,
}

/// What a prompt is rendered for.
#[derive(Debug, Clone, Copy)]
pub enum PromptSample<'a> {
    Sentence(&'a ReviewSentence),
    Aspect(&'a AtscSample<'a>),
}

pub fn render_prompt(config: &PromptConfig, subtask: SubtaskKind, sample: PromptSample<'_>) -> Result<PromptedExample> {
    let (input, target, meta) = render_parts(config, subtask, sample)?;
    let target = target?;
    Ok(PromptedExample {
        input_text: input,
        target_text: target,
        meta,
    })
}

type Parts = (String, Result<String>, ExampleMeta);

pub(crate) fn render_parts(config: &PromptConfig, subtask: SubtaskKind, sample: PromptSample<'_>) -> Result<Parts> {
    let prompt = config.templates.get(subtask);
    let instruction = config.instruction_block(subtask);
    match (subtask, sample) {
        (SubtaskKind::Atsc, PromptSample::Aspect(s)) => {
            let line = prompt.sample.render(&s.sentence.text, Some(s.aspect_term));
            Ok((
                format!("{instruction}\n{line}"),
                Ok(render_atsc_target(s)),
                ExampleMeta {
                    sentence_id: s.sentence.id.clone(),
                    subtask,
                    aspect_term: Some(s.aspect_term.to_string()),
                    representable: true,
                },
            ))
        }
        (SubtaskKind::Ate | SubtaskKind::Joint, PromptSample::Sentence(s)) => {
            let line = prompt.sample.render(&s.text, None);
            let target = if subtask == SubtaskKind::Ate {
                render_ate_target(s, &config.targets)
            } else {
                render_joint_target(s, &config.targets)
            };
            Ok((
                format!("{instruction}\n{line}"),
                target,
                ExampleMeta {
                    sentence_id: s.id.clone(),
                    subtask,
                    aspect_term: None,
                    representable: true,
                },
            ))
        }
        (subtask, _) => Err(Error::Config(format!(
            "{subtask} prompts take {}",
            if subtask == SubtaskKind::Atsc {
                "an (sentence, aspect) sample"
            } else {
                "a sentence"
            }
        ))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AspectAnnotation, Domain, SentimentPolarity};

    fn cheeseburger() -> ReviewSentence {
        ReviewSentence::new(
            "cb",
            "My son and his girlfriend both wanted cheeseburgers and they were huge!",
            Domain::Restaurants,
            vec![AspectAnnotation::new("cheeseburgers", SentimentPolarity::Positive)],
        )
        .unwrap()
        .0
    }

    #[test]
    fn v2_ate_prompt_ends_with_sample() {
        let s = cheeseburger();
        let ex = render_prompt(&PromptConfig::builtin(Variant::V2), SubtaskKind::Ate, PromptSample::Sentence(&s)).unwrap();
        assert!(ex
            .input_text
            .ends_with("input: My son and his girlfriend both wanted cheeseburgers and they were huge!"));
        assert_eq!(ex.target_text, "cheeseburgers");
    }

    #[test]
    fn v2_atsc_prompt_names_aspect() {
        let s = cheeseburger();
        let sample = AtscSample {
            sentence: &s,
            aspect_term: "cheeseburgers",
            gold_polarity: SentimentPolarity::Positive,
        };
        let ex = render_prompt(&PromptConfig::builtin(Variant::V2), SubtaskKind::Atsc, PromptSample::Aspect(&sample)).unwrap();
        assert!(ex.input_text.contains("Aspect: cheeseburgers."));
        assert_eq!(ex.target_text, "positive");
        assert_eq!(ex.meta.aspect_term.as_deref(), Some("cheeseburgers"));
    }

    #[test]
    fn v1_omits_negative_and_neutral_blocks() {
        let s = cheeseburger();
        let v1 = PromptConfig::builtin(Variant::V1);
        let ex = render_prompt(&v1, SubtaskKind::Ate, PromptSample::Sentence(&s)).unwrap();
        assert!(ex.input_text.contains("Example Output 1: menu"));
        assert!(!ex.input_text.contains("Negative input"));
        assert!(!ex.input_text.contains("Neutral Input"));
    }

    #[test]
    fn v1_is_v2_without_negative_and_neutral_blocks() {
        let s = cheeseburger();
        for subtask in [SubtaskKind::Ate, SubtaskKind::Joint] {
            let v1 = render_prompt(&PromptConfig::builtin(Variant::V1), subtask, PromptSample::Sentence(&s)).unwrap();
            let v2 = render_prompt(&PromptConfig::builtin(Variant::V2), subtask, PromptSample::Sentence(&s)).unwrap();
            let p = TemplateSet::builtin().get(subtask).clone();
            let removed: Vec<String> = p
                .negative_examples
                .iter()
                .chain(&p.neutral_examples)
                .flat_map(|e| [e.input.clone(), e.output.clone()])
                .collect();
            let filtered: Vec<&str> = v2.input_text.lines().filter(|l| !removed.iter().any(|r| r == l)).collect();
            assert_eq!(filtered.join("\n"), v1.input_text);
        }
    }

    #[test]
    fn wrong_sample_kind_is_an_error() {
        let s = cheeseburger();
        assert!(render_prompt(&PromptConfig::builtin(Variant::V1), SubtaskKind::Atsc, PromptSample::Sentence(&s)).is_err());
    }

    #[test]
    fn config_rejects_short_example_blocks() {
        let mut set = TemplateSet::builtin();
        set.ate.neutral_examples.pop();
        assert!(PromptConfig::new(Variant::V1, set.clone(), TargetFormat::default()).is_ok());
        assert!(PromptConfig::new(Variant::V2, set, TargetFormat::default()).is_err());
    }
}
