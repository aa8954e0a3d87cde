//! Text-to-text model backends.
//!
//! A backend trains on `(input_text, target_text)` pairs and generates one
//! output per input. The pipeline never looks past this boundary, so hermetic
//! mocks, the toy perceptron and an external seq2seq process are
//! interchangeable.

mod command;
mod manifest;
mod mock;
mod toy;

use std::fmt;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::corpus::Domain;
use crate::error::{Error, Result};
use crate::prompting::{PromptedExample, SubtaskKind, Variant};

pub use command::{CommandBackend, CommandConfig, DEFAULT_CHECKPOINT};
pub use manifest::{read_manifest, write_manifest, DecodingRecord, RunManifest, MANIFEST_FILE};
pub use mock::{ConstantBackend, EchoTailBackend, OracleBackend};
pub use toy::PerceptronBackend;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct Hyperparameters {
    pub learning_rate: f64,
    pub train_batch_size: usize,
    pub gradient_accumulation_steps: usize,
    pub epochs: usize,
    pub seed: u64,
    /// Generation budget in tokens.
    pub max_output_length: usize,
    /// 1 means greedy decoding.
    pub num_beams: usize,
}

impl Default for Hyperparameters {
    fn default() -> Self {
        Hyperparameters {
            learning_rate: 3e-4,
            train_batch_size: 16,
            gradient_accumulation_steps: 2,
            epochs: 4,
            seed: 0,
            max_output_length: 128,
            num_beams: 1,
        }
    }
}

impl Hyperparameters {
    /// Fine-tuning defaults; the joint task uses a batch of 8.
    pub fn for_subtask(subtask: SubtaskKind) -> Self {
        let train_batch_size = match subtask {
            SubtaskKind::Ate | SubtaskKind::Atsc => 16,
            SubtaskKind::Joint => 8,
        };
        Hyperparameters {
            train_batch_size,
            ..Default::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("train_batch_size", self.train_batch_size),
            ("gradient_accumulation_steps", self.gradient_accumulation_steps),
            ("epochs", self.epochs),
            ("max_output_length", self.max_output_length),
            ("num_beams", self.num_beams),
        ];
        if let Some((name, _)) = positive.iter().find(|(_, v)| *v == 0) {
            return Err(Error::Config(format!("{name} must be positive")));
        }
        if !(self.learning_rate.is_finite() && self.learning_rate > 0.0) {
            return Err(Error::Config("learning_rate must be positive".into()));
        }
        Ok(())
    }

    /// Optimizer steps for `n` examples.
    pub fn optimizer_steps(&self, n: usize) -> u64 {
        let per_step = self.train_batch_size * self.gradient_accumulation_steps;
        (n.div_ceil(per_step) * self.epochs) as u64
    }

    pub fn decoding(&self) -> DecodingConfig {
        DecodingConfig {
            max_output_length: self.max_output_length,
            num_beams: self.num_beams,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct DecodingConfig {
    pub max_output_length: usize,
    pub num_beams: usize,
}

impl Default for DecodingConfig {
    fn default() -> Self {
        Hyperparameters::default().decoding()
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TrainReport {
    pub steps: u64,
    pub final_loss: f64,
    pub wall_time_secs: f64,
    pub seed: u64,
    /// Optimizer settings reported by the engine, if it reports them.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub optimizer: Option<serde_json::Value>,
}

pub trait ModelBackend: Send {
    /// Model name or checkpoint id.
    fn identity(&self) -> &str;

    fn trainable(&self) -> bool;

    /// Fine-tunes on the examples. State the backend needs to restore later is
    /// written under `checkpoint_dir`.
    fn train(&mut self, dataset: &[PromptedExample], hp: &Hyperparameters, checkpoint_dir: &Path)
        -> Result<TrainReport>;

    /// Restores state written by [`ModelBackend::train`].
    fn restore(&mut self, checkpoint_dir: &Path) -> Result<()>;

    /// One output per example, positionally aligned. Only `input_text` may
    /// influence the output, except for the oracle.
    fn predict(&self, examples: &[PromptedExample], decoding: &DecodingConfig) -> Result<Vec<String>>;
}

/// Checked training entry point.
pub fn train(
    backend: &mut dyn ModelBackend,
    dataset: &[PromptedExample],
    hp: &Hyperparameters,
    checkpoint_dir: &Path,
) -> Result<TrainReport> {
    if !backend.trainable() {
        return Err(Error::NotTrainable(backend.identity().to_string()));
    }
    if dataset.is_empty() {
        return Err(Error::EmptyDataset);
    }
    hp.validate()?;
    std::fs::create_dir_all(checkpoint_dir).map_err(|e| Error::io(checkpoint_dir, e))?;
    let started = Instant::now();
    let mut report = backend.train(dataset, hp, checkpoint_dir)?;
    report.wall_time_secs = started.elapsed().as_secs_f64();
    report.seed = hp.seed;
    Ok(report)
}

/// Checked prediction entry point; enforces positional alignment.
pub fn predict(
    backend: &dyn ModelBackend,
    examples: &[PromptedExample],
    decoding: &DecodingConfig,
) -> Result<Vec<String>> {
    let outputs = backend.predict(examples, decoding)?;
    if outputs.len() != examples.len() {
        return Err(Error::BackendUnavailable(format!(
            "{} returned {} outputs for {} inputs",
            backend.identity(),
            outputs.len(),
            examples.len()
        )));
    }
    Ok(outputs)
}

/// Keeps the first `max_tokens` whitespace-separated tokens. Text with no
/// more tokens than that is returned unchanged.
pub fn truncate_tokens(text: &str, max_tokens: usize) -> &str {
    let mut count = 0;
    let mut in_token = false;
    for (i, c) in text.char_indices() {
        if c.is_whitespace() {
            in_token = false;
        } else if !in_token {
            in_token = true;
            count += 1;
            if count > max_tokens {
                return text[..i].trim_end();
            }
        }
    }
    text
}

/// Declarative backend choice, as written in experiment files.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum BackendSpec {
    Oracle,
    Constant { output: String },
    EchoTail,
    Toy,
    Command(CommandConfig),
}

impl BackendSpec {
    pub fn kind(&self) -> &'static str {
        match self {
            BackendSpec::Oracle => "oracle",
            BackendSpec::Constant { .. } => "constant",
            BackendSpec::EchoTail => "echo-tail",
            BackendSpec::Toy => "toy",
            BackendSpec::Command(_) => "command",
        }
    }

    pub fn build(&self) -> Box<dyn ModelBackend> {
        match self {
            BackendSpec::Oracle => Box::new(OracleBackend),
            BackendSpec::Constant { output } => Box::new(ConstantBackend::new(output.clone())),
            BackendSpec::EchoTail => Box::new(EchoTailBackend),
            BackendSpec::Toy => Box::new(PerceptronBackend::default()),
            BackendSpec::Command(cfg) => Box::new(CommandBackend::new(cfg.clone())),
        }
    }
}

impl fmt::Display for BackendSpec {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.kind())
    }
}

impl FromStr for BackendSpec {
    type Err = String;

    /// `oracle`, `echo-tail`, `toy`, or `constant:<output>`.
    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "oracle" => Ok(BackendSpec::Oracle),
            "echo-tail" => Ok(BackendSpec::EchoTail),
            "toy" => Ok(BackendSpec::Toy),
            other => match other.strip_prefix("constant:") {
                Some(output) => Ok(BackendSpec::Constant {
                    output: output.to_string(),
                }),
                None => Err(format!(
                    "unknown backend {other:?} (expected oracle, echo-tail, toy or constant:<text>)"
                )),
            },
        }
    }
}

/// `<root>/<subtask>/<variant>/<train-domains>/seed-<n>`.
pub fn checkpoint_dir(root: &Path, subtask: SubtaskKind, variant: Variant, train_domains: &[Domain], seed: u64) -> PathBuf {
    let domains: Vec<&str> = train_domains.iter().map(|d| d.as_str()).collect();
    root.join(subtask.as_str())
        .join(variant.as_str())
        .join(domains.join("+"))
        .join(format!("seed-{seed}"))
}
