use std::path::Path;

use serde::{Deserialize, Serialize};

use super::{Hyperparameters, TrainReport};
use crate::corpus::{ConflictPolicy, Domain};
use crate::error::{Error, Result};
use crate::prompting::{SubtaskKind, Variant};

pub const MANIFEST_FILE: &str = "manifest.json";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecodingRecord {
    pub strategy: String,
    pub max_output_length: usize,
    pub num_beams: usize,
}

impl DecodingRecord {
    pub fn from_hyperparameters(hp: &Hyperparameters) -> Self {
        DecodingRecord {
            strategy: if hp.num_beams == 1 { "greedy" } else { "beam" }.to_string(),
            max_output_length: hp.max_output_length,
            num_beams: hp.num_beams,
        }
    }
}

/// Written next to every checkpoint produced by a training call.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub checkpoint_id: String,
    pub backend: String,
    pub subtask: Option<SubtaskKind>,
    pub variant: Option<Variant>,
    #[serde(default)]
    pub train_domains: Vec<Domain>,
    pub seed: u64,
    pub hyperparameters: Hyperparameters,
    pub decoding: DecodingRecord,
    /// Optimizer family, schedule and weight decay are left to the engine;
    /// whatever it reports is kept here verbatim.
    pub optimizer: serde_json::Value,
    pub dataset_fingerprint: String,
    pub dataset_size: usize,
    /// Whether the training examples were shuffled (by `seed`) before batching.
    pub shuffled: bool,
    pub conflict_policy: ConflictPolicy,
    pub train_report: TrainReport,
    pub wall_time_secs: f64,
    pub tool_version: String,
}

impl RunManifest {
    pub fn new(
        checkpoint_id: impl Into<String>,
        backend: impl Into<String>,
        hp: &Hyperparameters,
        dataset_fingerprint: impl Into<String>,
        dataset_size: usize,
        report: TrainReport,
    ) -> Self {
        RunManifest {
            checkpoint_id: checkpoint_id.into(),
            backend: backend.into(),
            subtask: None,
            variant: None,
            train_domains: Vec::new(),
            seed: hp.seed,
            hyperparameters: hp.clone(),
            decoding: DecodingRecord::from_hyperparameters(hp),
            optimizer: report
                .optimizer
                .clone()
                .unwrap_or_else(|| serde_json::Value::String("engine default".into())),
            dataset_fingerprint: dataset_fingerprint.into(),
            dataset_size,
            shuffled: false,
            conflict_policy: ConflictPolicy::default(),
            wall_time_secs: report.wall_time_secs,
            train_report: report,
            tool_version: env!("CARGO_PKG_VERSION").to_string(),
        }
    }
}

pub fn write_manifest(path: &Path, manifest: &RunManifest) -> Result<()> {
    let json = serde_json::to_string_pretty(manifest).map_err(|e| Error::json("serializing manifest", e))?;
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

pub fn read_manifest(path: &Path) -> Result<RunManifest> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
}
