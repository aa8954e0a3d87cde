//! Cell execution and the on-disk result store.
//!
//! ```text
//! <results>/<cell-id>/cell.json          the ExperimentSpec
//! <results>/<cell-id>/seed-<n>/manifest.json
//! <results>/<cell-id>/seed-<n>/predictions.jsonl
//! <results>/<cell-id>/seed-<n>/scores.json
//! <results>/<cell-id>/aggregate.json
//! <results>/<cell-id>/FAILED             error text, if the last attempt failed
//! ```
//!
//! Each seed directory is written under a temporary name and renamed into
//! place, so a seed directory that exists is complete.

use std::path::{Path, PathBuf};

use log::info;
use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::de::DeserializeOwned;
use serde::Serialize;

use super::{ExperimentResult, ExperimentSpec, Plan, Regime};
use crate::backend::{
    self, checkpoint_dir, read_manifest, write_manifest, ModelBackend, RunManifest, TrainReport, MANIFEST_FILE,
};
use crate::corpus::{merge_corpora, ConflictPolicy, Corpus, Split};
use crate::decoding::{write_predictions_jsonl, DecodeOptions, PredictionRecord};
use crate::error::{Error, Result};
use crate::metrics::{aggregate_runs, score_predictions, Averaging, RunAggregate, ScoreReport};
use crate::prompting::{
    build_dataset, build_eval_dataset, dataset_fingerprint, PromptConfig, PromptedExample, TargetFormat, TemplateSet,
};

pub const FAILED_MARKER: &str = "FAILED";
const CELL_FILE: &str = "cell.json";
const AGGREGATE_FILE: &str = "aggregate.json";
const SCORES_FILE: &str = "scores.json";
const PREDICTIONS_FILE: &str = "predictions.jsonl";

/// Where an experiment reads data from and writes to.
#[derive(Debug, Clone)]
pub struct RunContext {
    pub data: super::DataPaths,
    pub results_dir: PathBuf,
    pub checkpoint_root: PathBuf,
    pub templates: TemplateSet,
    pub conflict_policy: ConflictPolicy,
    /// Allowed unrepresentable training sentences per training corpus.
    pub max_unrepresentable: usize,
}

impl RunContext {
    pub fn new(data: super::DataPaths, storage_root: &Path) -> Self {
        RunContext {
            data,
            results_dir: storage_root.join("results"),
            checkpoint_root: storage_root.join("checkpoints"),
            templates: TemplateSet::builtin(),
            conflict_policy: ConflictPolicy::default(),
            max_unrepresentable: 10,
        }
    }

    pub fn from_plan(plan: &Plan) -> Result<Self> {
        let templates = match &plan.templates {
            Some(dir) => TemplateSet::load_dir(dir)?,
            None => TemplateSet::builtin(),
        };
        Ok(RunContext {
            data: plan.data.clone(),
            results_dir: plan.results_dir(),
            checkpoint_root: plan.checkpoint_root(),
            templates,
            conflict_policy: plan.conflict_policy,
            max_unrepresentable: plan.max_unrepresentable,
        })
    }

    fn prompt_config(&self, spec: &ExperimentSpec) -> Result<PromptConfig> {
        let targets = TargetFormat {
            conflict_policy: self.conflict_policy,
            ..TargetFormat::default()
        };
        PromptConfig::new(spec.variant, self.templates.clone(), targets)
    }
}

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<()> {
    let json = serde_json::to_string_pretty(value).map_err(|e| Error::json(path.display().to_string(), e))?;
    std::fs::write(path, json + "\n").map_err(|e| Error::io(path, e))
}

fn read_json<T: DeserializeOwned>(path: &Path) -> Result<T> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))
}

fn remove_dir_if_exists(dir: &Path) -> Result<()> {
    match std::fs::remove_dir_all(dir) {
        Err(e) if e.kind() != std::io::ErrorKind::NotFound => Err(Error::io(dir, e)),
        _ => Ok(()),
    }
}

/// Writes into `<dir>.partial`, then renames it over `dir`.
fn commit_dir(dir: &Path, fill: impl FnOnce(&Path) -> Result<()>) -> Result<()> {
    let mut tmp = dir.as_os_str().to_owned();
    tmp.push(".partial");
    let tmp = PathBuf::from(tmp);
    remove_dir_if_exists(&tmp)?;
    std::fs::create_dir_all(&tmp).map_err(|e| Error::io(&tmp, e))?;
    fill(&tmp)?;
    remove_dir_if_exists(dir)?;
    std::fs::rename(&tmp, dir).map_err(|e| Error::io(dir, e))
}

fn seed_dir(cell_dir: &Path, seed: u64) -> PathBuf {
    cell_dir.join(format!("seed-{seed}"))
}

/// Runs every seed of a cell, skipping seeds already completed with the same
/// training data. On failure a `FAILED` marker with the error is left in the
/// cell directory next to whatever seeds did complete.
pub fn run_experiment(spec: &ExperimentSpec, ctx: &RunContext) -> Result<ExperimentResult> {
    let cell = spec.cell_id();
    let cell_dir = ctx.results_dir.join(&cell);
    let wrap = |e: Error| Error::Experiment {
        cell: cell.clone(),
        source: Box::new(e),
    };
    spec.validate().map_err(wrap)?;
    std::fs::create_dir_all(&cell_dir).map_err(|e| wrap(Error::io(&cell_dir, e)))?;
    let marker = cell_dir.join(FAILED_MARKER);
    let outcome = write_json(&cell_dir.join(CELL_FILE), spec).and_then(|()| run_cell(spec, ctx, &cell_dir));
    match outcome {
        Ok(result) => {
            if marker.exists() {
                std::fs::remove_file(&marker).map_err(|e| wrap(Error::io(&marker, e)))?;
            }
            Ok(result)
        }
        Err(e) => {
            let _ = std::fs::write(&marker, format!("{e}\n"));
            Err(wrap(e))
        }
    }
}

/// Runs every cell of a plan in order, continuing past failures.
pub fn run_plan(plan: &Plan) -> Result<Vec<Result<ExperimentResult>>> {
    let ctx = RunContext::from_plan(plan)?;
    Ok(plan.experiments()?.iter().map(|spec| run_experiment(spec, &ctx)).collect())
}

fn training_corpus(spec: &ExperimentSpec, ctx: &RunContext) -> Result<Corpus> {
    let mut merged: Option<Corpus> = None;
    for &domain in &spec.train_domains {
        let corpus = ctx.data.load(domain, Split::Train)?;
        merged = Some(match merged {
            None => corpus,
            Some(prev) => merge_corpora(&prev, &corpus)?,
        });
    }
    merged.ok_or_else(|| Error::Config("no training domain".into()))
}

fn manifest_matches(m: &RunManifest, spec: &ExperimentSpec, seed: u64, fingerprint: &str) -> bool {
    m.seed == seed && m.dataset_fingerprint == fingerprint && m.backend == spec.backend.kind()
}

fn run_cell(spec: &ExperimentSpec, ctx: &RunContext, cell_dir: &Path) -> Result<ExperimentResult> {
    let prompt = ctx.prompt_config(spec)?;
    let train_corpus = training_corpus(spec, ctx)?;
    let train = build_dataset(&prompt, spec.subtask, &train_corpus)?;
    train.check_exclusions(ctx.max_unrepresentable * spec.train_domains.len())?;
    let test_corpus = ctx.data.load(spec.test_domain, Split::Test)?;
    let test = build_eval_dataset(&prompt, spec.subtask, &test_corpus)?;
    let decode = DecodeOptions::from(&prompt.targets);
    let shuffle = spec.regime() == Regime::JointDomain;

    let mut manifests = Vec::with_capacity(spec.seeds.len());
    let mut scores = Vec::with_capacity(spec.seeds.len());
    for &seed in &spec.seeds {
        let mut examples = train.examples.clone();
        if shuffle {
            examples.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
        }
        let fingerprint = dataset_fingerprint(&examples);
        let run_dir = seed_dir(cell_dir, seed);

        let manifest_path = run_dir.join(MANIFEST_FILE);
        if manifest_path.exists() {
            let m = read_manifest(&manifest_path)?;
            if manifest_matches(&m, spec, seed, &fingerprint) {
                info!("{}: seed {seed} already complete", spec.cell_id());
                scores.push(read_json::<ScoreReport>(&run_dir.join(SCORES_FILE))?);
                manifests.push(m);
                continue;
            }
        }

        let hp = spec.hyperparameters_for(seed);
        let mut model = spec.backend.build();
        let mut manifest = if model.trainable() {
            obtain_checkpoint(spec, ctx, model.as_mut(), &examples, seed, &fingerprint)?
        } else {
            let report = TrainReport {
                steps: 0,
                final_loss: 0.0,
                wall_time_secs: 0.0,
                seed,
                optimizer: None,
            };
            let mut m = RunManifest::new(model.identity(), spec.backend.kind(), &hp, &fingerprint, examples.len(), report);
            m.optimizer = serde_json::Value::String("none (backend is not trainable)".into());
            m
        };
        manifest.subtask = Some(spec.subtask);
        manifest.variant = Some(spec.variant);
        manifest.train_domains = spec.train_domains.clone();
        manifest.shuffled = shuffle;
        manifest.conflict_policy = ctx.conflict_policy;

        let outputs = backend::predict(model.as_ref(), &test.examples, &hp.decoding())?;
        let records: Vec<PredictionRecord> = test
            .examples
            .iter()
            .zip(&outputs)
            .map(|(e, out)| PredictionRecord::from_output(e, out, &decode))
            .collect();
        let report = score_predictions(spec.subtask, &test_corpus, &records, ctx.conflict_policy, Averaging::Micro)?;
        info!("{} seed {seed}: {report}", spec.cell_id());

        commit_dir(&run_dir, |dir| {
            write_manifest(&dir.join(MANIFEST_FILE), &manifest)?;
            write_predictions_jsonl(&records, dir.join(PREDICTIONS_FILE))?;
            write_json(&dir.join(SCORES_FILE), &report)
        })?;
        manifests.push(manifest);
        scores.push(report);
    }

    let aggregate: RunAggregate = aggregate_runs(&scores)?;
    write_json(&cell_dir.join(AGGREGATE_FILE), &aggregate)?;
    Ok(ExperimentResult {
        spec: spec.clone(),
        aggregate,
        manifests,
        predictions_path: cell_dir.to_path_buf(),
    })
}

/// Restores a checkpoint trained on the same data with the same seed (as
/// cross-domain cells share checkpoints with in-domain ones), or trains one.
fn obtain_checkpoint(
    spec: &ExperimentSpec,
    ctx: &RunContext,
    model: &mut dyn ModelBackend,
    examples: &[PromptedExample],
    seed: u64,
    fingerprint: &str,
) -> Result<RunManifest> {
    let dir = checkpoint_dir(&ctx.checkpoint_root, spec.subtask, spec.variant, &spec.train_domains, seed);
    let manifest_path = dir.join(MANIFEST_FILE);
    let hp = spec.hyperparameters_for(seed);
    if manifest_path.exists() {
        let m = read_manifest(&manifest_path)?;
        if manifest_matches(&m, spec, seed, fingerprint) && m.hyperparameters == hp {
            info!("reusing checkpoint {}", dir.display());
            model.restore(&dir)?;
            return Ok(m);
        }
    }
    let mut manifest = None;
    commit_dir(&dir, |tmp| {
        let report = backend::train(model, examples, &hp, tmp)?;
        let mut m = RunManifest::new(model.identity(), spec.backend.kind(), &hp, fingerprint, examples.len(), report);
        m.subtask = Some(spec.subtask);
        m.variant = Some(spec.variant);
        m.train_domains = spec.train_domains.clone();
        m.shuffled = spec.regime() == Regime::JointDomain;
        m.conflict_policy = ctx.conflict_policy;
        write_manifest(&tmp.join(MANIFEST_FILE), &m)?;
        manifest = Some(m);
        Ok(())
    })?;
    // The backend may remember the temporary path it trained into.
    model.restore(&dir)?;
    Ok(manifest.expect("set by a successful commit"))
}

/// Reads every completed cell under `results_dir`, in directory-name order.
/// Cells marked `FAILED` or lacking an aggregate are skipped.
pub fn load_results(results_dir: &Path) -> Result<Vec<ExperimentResult>> {
    let entries = std::fs::read_dir(results_dir).map_err(|e| Error::io(results_dir, e))?;
    let mut dirs: Vec<PathBuf> = entries
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.is_dir() && p.join(CELL_FILE).exists() && p.join(AGGREGATE_FILE).exists())
        .filter(|p| !p.join(FAILED_MARKER).exists())
        .collect();
    dirs.sort();
    let mut out = Vec::with_capacity(dirs.len());
    for dir in dirs {
        let spec: ExperimentSpec = read_json(&dir.join(CELL_FILE))?;
        let aggregate: RunAggregate = read_json(&dir.join(AGGREGATE_FILE))?;
        let manifests = spec
            .seeds
            .iter()
            .map(|&s| read_manifest(&seed_dir(&dir, s).join(MANIFEST_FILE)))
            .collect::<Result<Vec<_>>>()?;
        out.push(ExperimentResult {
            spec,
            aggregate,
            manifests,
            predictions_path: dir,
        });
    }
    Ok(out)
}
