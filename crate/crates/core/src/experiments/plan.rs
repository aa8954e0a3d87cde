//! Declarative experiment files (TOML).
//!
//! ```toml
//! storage_root = "runs"            # results/ and checkpoints/ go here
//! seeds = [0, 1, 2, 3, 4]
//!
//! [data]
//! laptops_train = "data/Laptop_Train_v2.xml"
//! laptops_test = "data/Laptops_Test_Gold.xml"
//!
//! [backend]
//! kind = "toy"
//!
//! [hyperparameters]                # overrides of the per-subtask defaults
//! epochs = 10
//!
//! [[experiment]]
//! subtask = "ate"
//! variant = "v2"
//! train = ["laptops"]
//! test = "laptops"
//!
//! [grid]                           # optional cartesian expansion
//! subtasks = ["ate", "atsc", "joint"]
//! variants = ["v1", "v2"]
//! regimes = ["in-domain", "cross-domain", "joint-domain"]
//! ```
//!
//! Relative paths resolve against the file's directory. The storage root can
//! be overridden with the `ABSA_STORAGE_ROOT` environment variable.

use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use super::{ExperimentSpec, Regime, DEFAULT_SEEDS};
use crate::backend::{BackendSpec, Hyperparameters};
use crate::corpus::{
    load_semeval_xml, read_corpus_jsonl, ConflictPolicy, Corpus, CorpusDomain, Domain, Split,
};
use crate::error::{Error, Result};
use crate::prompting::{SubtaskKind, Variant};

pub const STORAGE_ROOT_ENV: &str = "ABSA_STORAGE_ROOT";

/// Corpus files; `.xml` is read as SemEval XML, anything else as corpus JSONL.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataPaths {
    pub laptops_train: Option<PathBuf>,
    pub laptops_test: Option<PathBuf>,
    pub restaurants_train: Option<PathBuf>,
    pub restaurants_test: Option<PathBuf>,
}

impl DataPaths {
    pub fn path(&self, domain: Domain, split: Split) -> Option<&Path> {
        match (domain, split) {
            (Domain::Laptops, Split::Train) => self.laptops_train.as_deref(),
            (Domain::Laptops, Split::Test) => self.laptops_test.as_deref(),
            (Domain::Restaurants, Split::Train) => self.restaurants_train.as_deref(),
            (Domain::Restaurants, Split::Test) => self.restaurants_test.as_deref(),
        }
    }

    pub fn load(&self, domain: Domain, split: Split) -> Result<Corpus> {
        let path = self
            .path(domain, split)
            .ok_or_else(|| Error::Config(format!("no {domain} {split} corpus configured")))?;
        let is_xml = path.extension().is_some_and(|e| e.eq_ignore_ascii_case("xml"));
        let corpus = if is_xml {
            load_semeval_xml(path, domain, split)?
        } else {
            read_corpus_jsonl(path)?
        };
        if corpus.split != split || corpus.domain != CorpusDomain::from(domain) {
            return Err(Error::Config(format!(
                "{} holds a {} {} corpus, expected {domain} {split}",
                path.display(),
                corpus.domain,
                corpus.split
            )));
        }
        Ok(corpus)
    }

    fn resolve(&mut self, base: &Path) {
        for p in [
            &mut self.laptops_train,
            &mut self.laptops_test,
            &mut self.restaurants_train,
            &mut self.restaurants_test,
        ]
        .into_iter()
        .flatten()
        {
            *p = base.join(&*p);
        }
    }
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HyperparameterOverrides {
    pub learning_rate: Option<f64>,
    pub train_batch_size: Option<usize>,
    pub gradient_accumulation_steps: Option<usize>,
    pub epochs: Option<usize>,
    pub max_output_length: Option<usize>,
    pub num_beams: Option<usize>,
}

impl HyperparameterOverrides {
    pub fn apply(&self, mut hp: Hyperparameters) -> Hyperparameters {
        if let Some(v) = self.learning_rate {
            hp.learning_rate = v;
        }
        if let Some(v) = self.train_batch_size {
            hp.train_batch_size = v;
        }
        if let Some(v) = self.gradient_accumulation_steps {
            hp.gradient_accumulation_steps = v;
        }
        if let Some(v) = self.epochs {
            hp.epochs = v;
        }
        if let Some(v) = self.max_output_length {
            hp.max_output_length = v;
        }
        if let Some(v) = self.num_beams {
            hp.num_beams = v;
        }
        hp
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PlannedCell {
    pub subtask: SubtaskKind,
    pub variant: Variant,
    pub train: Vec<Domain>,
    pub test: Domain,
    #[serde(default)]
    pub seeds: Option<Vec<u64>>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default = "all_subtasks")]
    pub subtasks: Vec<SubtaskKind>,
    #[serde(default = "all_variants")]
    pub variants: Vec<Variant>,
    #[serde(default = "all_regimes")]
    pub regimes: Vec<Regime>,
}

fn all_subtasks() -> Vec<SubtaskKind> {
    SubtaskKind::ALL.to_vec()
}

fn all_variants() -> Vec<Variant> {
    Variant::ALL.to_vec()
}

fn all_regimes() -> Vec<Regime> {
    Regime::ALL.to_vec()
}

fn default_seeds() -> Vec<u64> {
    DEFAULT_SEEDS.to_vec()
}

fn default_storage_root() -> PathBuf {
    PathBuf::from("runs")
}

fn default_max_unrepresentable() -> usize {
    10
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plan {
    #[serde(default = "default_storage_root")]
    pub storage_root: PathBuf,
    #[serde(default = "default_seeds")]
    pub seeds: Vec<u64>,
    /// Directory with `ate.tmpl`, `atsc.tmpl`, `joint.tmpl`; built-ins if unset.
    #[serde(default)]
    pub templates: Option<PathBuf>,
    #[serde(default)]
    pub conflict_policy: ConflictPolicy,
    /// Per training dataset.
    #[serde(default = "default_max_unrepresentable")]
    pub max_unrepresentable: usize,
    #[serde(default)]
    pub data: DataPaths,
    pub backend: BackendSpec,
    #[serde(default)]
    pub hyperparameters: HyperparameterOverrides,
    #[serde(default, rename = "experiment")]
    pub experiments: Vec<PlannedCell>,
    #[serde(default)]
    pub grid: Option<GridSpec>,
}

impl Plan {
    pub fn parse(source: &str) -> Result<Self> {
        toml::from_str(source).map_err(|e| Error::Config(e.to_string()))
    }

    /// Reads a plan, resolving relative paths against its directory and
    /// applying the storage-root override from the environment.
    pub fn load(path: impl AsRef<Path>) -> Result<Self> {
        let path = path.as_ref();
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        let mut plan = Self::parse(&text).map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        let base = path.parent().unwrap_or(Path::new("."));
        plan.data.resolve(base);
        plan.templates = plan.templates.map(|t| base.join(t));
        plan.storage_root = match std::env::var_os(STORAGE_ROOT_ENV) {
            Some(root) if !root.is_empty() => PathBuf::from(root),
            _ => base.join(&plan.storage_root),
        };
        Ok(plan)
    }

    pub fn results_dir(&self) -> PathBuf {
        self.storage_root.join("results")
    }

    pub fn checkpoint_root(&self) -> PathBuf {
        self.storage_root.join("checkpoints")
    }

    /// Explicit cells first, then the grid in subtask, variant, regime order.
    /// Cells listed twice are kept once.
    pub fn experiments(&self) -> Result<Vec<ExperimentSpec>> {
        let mut cells: Vec<PlannedCell> = self.experiments.clone();
        if let Some(grid) = &self.grid {
            for &subtask in &grid.subtasks {
                for &variant in &grid.variants {
                    for &regime in &grid.regimes {
                        for (train, test) in regime.cells() {
                            cells.push(PlannedCell {
                                subtask,
                                variant,
                                train,
                                test,
                                seeds: None,
                            });
                        }
                    }
                }
            }
        }
        let mut specs: Vec<ExperimentSpec> = Vec::with_capacity(cells.len());
        for c in cells {
            let seeds = c.seeds.as_deref().unwrap_or(&self.seeds);
            let mut spec = ExperimentSpec::new(c.subtask, c.variant, &c.train, c.test, self.backend.clone()).with_seeds(seeds);
            spec.hyperparameters = self.hyperparameters.apply(spec.hyperparameters);
            spec.validate()?;
            if !specs.iter().any(|s| s.cell_id() == spec.cell_id()) {
                specs.push(spec);
            }
        }
        Ok(specs)
    }
}
