//! Experiment cells (subtask × variant × train domains × test domain), their
//! execution over several seeds, and the reproduction report.

mod plan;
mod report;
mod run;

use std::fmt;
use std::path::PathBuf;

use serde::{Deserialize, Serialize};

use crate::backend::{BackendSpec, Hyperparameters, RunManifest};
use crate::corpus::Domain;
use crate::error::{Error, Result};
use crate::metrics::RunAggregate;
use crate::prompting::{SubtaskKind, Variant};

pub use plan::{DataPaths, GridSpec, HyperparameterOverrides, Plan, PlannedCell, STORAGE_ROOT_ENV};
pub use report::{published_reference, reproduce_tables, Metric, ReportDocument};
pub use run::{load_results, run_experiment, run_plan, RunContext, FAILED_MARKER};

pub const DEFAULT_SEEDS: [u64; 5] = [0, 1, 2, 3, 4];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Regime {
    InDomain,
    CrossDomain,
    JointDomain,
}

impl Regime {
    pub const ALL: [Regime; 3] = [Regime::InDomain, Regime::CrossDomain, Regime::JointDomain];

    pub fn as_str(self) -> &'static str {
        match self {
            Regime::InDomain => "in-domain",
            Regime::CrossDomain => "cross-domain",
            Regime::JointDomain => "joint-domain",
        }
    }

    /// (train domains, test domain) pairs, in report order.
    pub fn cells(self) -> Vec<(Vec<Domain>, Domain)> {
        use Domain::{Laptops as L, Restaurants as R};
        match self {
            Regime::InDomain => vec![(vec![L], L), (vec![R], R)],
            Regime::CrossDomain => vec![(vec![R], L), (vec![L], R)],
            Regime::JointDomain => vec![(vec![L, R], L), (vec![L, R], R)],
        }
    }
}

impl fmt::Display for Regime {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentSpec {
    pub subtask: SubtaskKind,
    pub variant: Variant,
    /// Laptops before restaurants; training data is concatenated in this order.
    pub train_domains: Vec<Domain>,
    pub test_domain: Domain,
    pub seeds: Vec<u64>,
    /// `seed` is replaced per run.
    pub hyperparameters: Hyperparameters,
    pub backend: BackendSpec,
}

impl ExperimentSpec {
    /// Default hyperparameters, seeds 0-4.
    pub fn new(
        subtask: SubtaskKind,
        variant: Variant,
        train_domains: &[Domain],
        test_domain: Domain,
        backend: BackendSpec,
    ) -> Self {
        let mut train_domains = train_domains.to_vec();
        train_domains.sort();
        train_domains.dedup();
        ExperimentSpec {
            subtask,
            variant,
            train_domains,
            test_domain,
            seeds: DEFAULT_SEEDS.to_vec(),
            hyperparameters: Hyperparameters::for_subtask(subtask),
            backend,
        }
    }

    pub fn with_seeds(mut self, seeds: &[u64]) -> Self {
        self.seeds = seeds.to_vec();
        self
    }

    pub fn validate(&self) -> Result<()> {
        if self.train_domains.is_empty() {
            return Err(Error::Config("an experiment needs at least one training domain".into()));
        }
        if self.train_domains.windows(2).any(|w| w[0] >= w[1]) {
            return Err(Error::Config("training domains must be distinct and in laptops, restaurants order".into()));
        }
        if self.seeds.is_empty() {
            return Err(Error::Config("an experiment needs at least one seed".into()));
        }
        let mut seeds = self.seeds.clone();
        seeds.sort_unstable();
        if seeds.windows(2).any(|w| w[0] == w[1]) {
            return Err(Error::Config(format!("duplicate seeds in {:?}", self.seeds)));
        }
        self.hyperparameters.validate()
    }

    pub fn regime(&self) -> Regime {
        if self.train_domains.len() > 1 {
            Regime::JointDomain
        } else if self.train_domains[0] == self.test_domain {
            Regime::InDomain
        } else {
            Regime::CrossDomain
        }
    }

    /// Directory name of the cell, e.g. `ate-v2-laptops+restaurants-to-laptops`.
    pub fn cell_id(&self) -> String {
        let train: Vec<&str> = self.train_domains.iter().map(|d| d.as_str()).collect();
        format!(
            "{}-{}-{}-to-{}",
            self.subtask,
            self.variant,
            train.join("+"),
            self.test_domain
        )
    }

    pub fn hyperparameters_for(&self, seed: u64) -> Hyperparameters {
        Hyperparameters {
            seed,
            ..self.hyperparameters.clone()
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentResult {
    pub spec: ExperimentSpec,
    pub aggregate: RunAggregate,
    /// One per seed, in seed order.
    pub manifests: Vec<RunManifest>,
    /// Cell directory holding predictions, scores and manifests.
    pub predictions_path: PathBuf,
}
