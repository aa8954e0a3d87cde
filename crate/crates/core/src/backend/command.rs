//! Adapter for an external seq2seq engine driven as a subprocess.
//!
//! The program is invoked as
//!
//! ```text
//! <program> <args..> train   --data <jsonl> --hparams <json> --checkpoint <dir> --base <id>
//! <program> <args..> predict --checkpoint <dir|id> --inputs <jsonl> --out <jsonl>
//!                            --max-output-length <n> --num-beams <n>
//! ```
//!
//! Training data lines are `{"input": .., "target": ..}`; prediction inputs
//! are `{"input": ..}` and the program writes one `{"output": ..}` line per
//! input. After training it may leave `train_report.json` in the checkpoint
//! directory with `steps`, `final_loss` and an `optimizer` object.
//! `scripts/seq2seq_backend.py` implements this protocol with `transformers`.

use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::atomic::{AtomicU64, Ordering};

use serde::{Deserialize, Serialize};

use super::{DecodingConfig, Hyperparameters, ModelBackend, TrainReport};
use crate::error::{Error, Result};
use crate::prompting::PromptedExample;

/// 200M-parameter instruction-tuned base checkpoint.
pub const DEFAULT_CHECKPOINT: &str = "allenai/tk-instruct-base-def-pos";

pub const TRAIN_REPORT_FILE: &str = "train_report.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CommandConfig {
    pub program: String,
    #[serde(default)]
    pub args: Vec<String>,
    /// Base checkpoint handed to the engine.
    #[serde(default = "default_checkpoint")]
    pub checkpoint: String,
}

fn default_checkpoint() -> String {
    DEFAULT_CHECKPOINT.to_string()
}

#[derive(Debug, Clone)]
pub struct CommandBackend {
    config: CommandConfig,
    /// Fine-tuned checkpoint directory, once trained or restored.
    trained: Option<PathBuf>,
}

#[derive(Deserialize)]
struct EngineReport {
    #[serde(default)]
    steps: u64,
    #[serde(default)]
    final_loss: f64,
    #[serde(default)]
    optimizer: Option<serde_json::Value>,
}

static SCRATCH_COUNTER: AtomicU64 = AtomicU64::new(0);

struct Scratch(PathBuf);

impl Scratch {
    fn new() -> Result<Self> {
        let n = SCRATCH_COUNTER.fetch_add(1, Ordering::Relaxed);
        let dir = std::env::temp_dir().join(format!("absa-cmd-{}-{n}", std::process::id()));
        std::fs::create_dir_all(&dir).map_err(|e| Error::io(&dir, e))?;
        Ok(Scratch(dir))
    }
}

impl Drop for Scratch {
    fn drop(&mut self) {
        let _ = std::fs::remove_dir_all(&self.0);
    }
}

impl CommandBackend {
    pub fn new(config: CommandConfig) -> Self {
        CommandBackend { config, trained: None }
    }

    fn run(&self, verb: &str, extra: &[String]) -> Result<()> {
        let output = Command::new(&self.config.program)
            .args(&self.config.args)
            .arg(verb)
            .args(extra)
            .output()
            .map_err(|e| Error::BackendUnavailable(format!("{}: {e}", self.config.program)))?;
        if output.status.success() {
            return Ok(());
        }
        let stderr = String::from_utf8_lossy(&output.stderr);
        let lines: Vec<&str> = stderr.lines().collect();
        let tail = lines[lines.len().saturating_sub(5)..].join("\n");
        let message = format!("{} {verb} exited with {}: {tail}", self.config.program, output.status);
        let oom = output.status.code() == Some(137) || stderr.to_lowercase().contains("out of memory");
        Err(if oom {
            Error::ResourceExhausted(message)
        } else {
            Error::BackendUnavailable(message)
        })
    }
}

fn write_jsonl<T: Serialize>(path: &Path, rows: impl Iterator<Item = T>) -> Result<()> {
    let file = std::fs::File::create(path).map_err(|e| Error::io(path, e))?;
    let mut out = std::io::BufWriter::new(file);
    for row in rows {
        let line = serde_json::to_string(&row).map_err(|e| Error::json("engine input", e))?;
        writeln!(out, "{line}").map_err(|e| Error::io(path, e))?;
    }
    out.flush().map_err(|e| Error::io(path, e))
}

fn path_arg(p: &Path) -> String {
    p.display().to_string()
}

impl ModelBackend for CommandBackend {
    fn identity(&self) -> &str {
        &self.config.checkpoint
    }

    fn trainable(&self) -> bool {
        true
    }

    fn train(&mut self, dataset: &[PromptedExample], hp: &Hyperparameters, checkpoint_dir: &Path) -> Result<TrainReport> {
        let data = checkpoint_dir.join("train.jsonl");
        write_jsonl(
            &data,
            dataset
                .iter()
                .map(|e| serde_json::json!({"input": e.input_text, "target": e.target_text})),
        )?;
        let hparams = checkpoint_dir.join("hparams.json");
        let json = serde_json::to_string_pretty(hp).map_err(|e| Error::json("hyperparameters", e))?;
        std::fs::write(&hparams, json).map_err(|e| Error::io(&hparams, e))?;
        self.run(
            "train",
            &[
                "--data".into(),
                path_arg(&data),
                "--hparams".into(),
                path_arg(&hparams),
                "--checkpoint".into(),
                path_arg(checkpoint_dir),
                "--base".into(),
                self.config.checkpoint.clone(),
            ],
        )?;
        self.trained = Some(checkpoint_dir.to_path_buf());
        let report_path = checkpoint_dir.join(TRAIN_REPORT_FILE);
        let engine = match std::fs::read_to_string(&report_path) {
            Ok(text) => serde_json::from_str(&text).map_err(|e| Error::json(path_arg(&report_path), e))?,
            Err(_) => EngineReport {
                steps: hp.optimizer_steps(dataset.len()),
                final_loss: f64::NAN,
                optimizer: None,
            },
        };
        Ok(TrainReport {
            steps: engine.steps,
            final_loss: engine.final_loss,
            wall_time_secs: 0.0,
            seed: hp.seed,
            optimizer: engine.optimizer,
        })
    }

    fn restore(&mut self, checkpoint_dir: &Path) -> Result<()> {
        if !checkpoint_dir.is_dir() {
            return Err(Error::BackendUnavailable(format!("no checkpoint at {}", checkpoint_dir.display())));
        }
        self.trained = Some(checkpoint_dir.to_path_buf());
        Ok(())
    }

    fn predict(&self, examples: &[PromptedExample], decoding: &DecodingConfig) -> Result<Vec<String>> {
        let scratch = Scratch::new()?;
        let inputs = scratch.0.join("inputs.jsonl");
        let out = scratch.0.join("outputs.jsonl");
        write_jsonl(&inputs, examples.iter().map(|e| serde_json::json!({"input": e.input_text})))?;
        let checkpoint = match &self.trained {
            Some(dir) => path_arg(dir),
            None => self.config.checkpoint.clone(),
        };
        self.run(
            "predict",
            &[
                "--checkpoint".into(),
                checkpoint,
                "--inputs".into(),
                path_arg(&inputs),
                "--out".into(),
                path_arg(&out),
                "--max-output-length".into(),
                decoding.max_output_length.to_string(),
                "--num-beams".into(),
                decoding.num_beams.to_string(),
            ],
        )?;
        let file = std::fs::File::open(&out).map_err(|e| Error::io(&out, e))?;
        let mut outputs = Vec::with_capacity(examples.len());
        for line in BufReader::new(file).lines() {
            let line = line.map_err(|e| Error::io(&out, e))?;
            if line.trim().is_empty() {
                continue;
            }
            #[derive(Deserialize)]
            struct Row {
                output: String,
            }
            let row: Row = serde_json::from_str(&line).map_err(|e| Error::json(path_arg(&out), e))?;
            outputs.push(row.output);
        }
        Ok(outputs)
    }
}
