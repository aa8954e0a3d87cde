//! The `absa` command line.

use std::io::Write;
use std::path::{Path, PathBuf};

use anyhow::{bail, Context};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::json;

use crate::backend::{self, BackendSpec, Hyperparameters, RunManifest, MANIFEST_FILE};
use crate::corpus::{
    corpus_stats, load_semeval_xml, read_corpus_jsonl, write_corpus_jsonl, ConflictPolicy, Corpus, Domain, Split,
};
use crate::decoding::{read_predictions_jsonl, write_predictions_jsonl, DecodeOptions, PredictionRecord};
use crate::experiments::{load_results, reproduce_tables, run_experiment, Plan, RunContext};
use crate::metrics::{score_predictions, Averaging};
use crate::prompting::{
    build_dataset, build_eval_dataset, dataset_fingerprint, read_dataset_jsonl, write_dataset_jsonl, PromptConfig,
    SubtaskKind, TargetFormat, TemplateSet, Variant,
};

#[derive(Debug, Parser)]
#[command(name = "absa", version, about = "Instruction-prompted aspect-based sentiment analysis")]
pub struct Cli {
    /// Output style; `json` prints one JSON object per result line.
    #[arg(long, global = true, value_enum, default_value_t = Format::Text)]
    pub format: Format,

    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Text,
    Json,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Load a SemEval XML file, print its statistics, optionally save it as JSONL.
    Ingest {
        #[arg(long)]
        input: PathBuf,
        #[arg(long)]
        domain: Domain,
        #[arg(long)]
        split: Split,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Print corpus statistics.
    Stats(CorpusArgs),
    /// Render a corpus into a prompted dataset (JSONL).
    BuildPrompts {
        #[command(flatten)]
        corpus: CorpusArgs,
        #[arg(long)]
        subtask: SubtaskKind,
        #[arg(long)]
        variant: Variant,
        #[arg(long)]
        out: PathBuf,
        /// Keep sentences with unrepresentable terms, with best-effort targets.
        #[arg(long)]
        eval: bool,
        /// Fail when more sentences than this must be excluded.
        #[arg(long, default_value_t = 10)]
        max_unrepresentable: usize,
        #[command(flatten)]
        prompt: PromptArgs,
    },
    /// Fine-tune a backend on a prompted dataset.
    Train {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        backend: BackendSpec,
        #[arg(long)]
        checkpoint: PathBuf,
        /// Picks the per-subtask default batch size.
        #[arg(long)]
        subtask: Option<SubtaskKind>,
        #[command(flatten)]
        hp: HpArgs,
    },
    /// Generate outputs for a prompted dataset and save parsed predictions.
    Predict {
        #[arg(long)]
        data: PathBuf,
        #[arg(long)]
        backend: BackendSpec,
        /// Restore this checkpoint before predicting.
        #[arg(long)]
        checkpoint: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 128)]
        max_output_length: usize,
        #[arg(long, default_value_t = 1)]
        num_beams: usize,
        #[command(flatten)]
        prompt: PromptArgs,
    },
    /// Score predictions (from any source) against a gold corpus.
    Score {
        #[arg(long)]
        gold: PathBuf,
        /// Needed when the gold corpus is XML.
        #[arg(long)]
        domain: Option<Domain>,
        #[arg(long, default_value = "test")]
        split: Split,
        #[arg(long)]
        pred: PathBuf,
        #[arg(long)]
        subtask: SubtaskKind,
        #[arg(long, value_enum, default_value_t = AveragingArg::Micro)]
        averaging: AveragingArg,
        #[command(flatten)]
        prompt: PromptArgs,
    },
    /// Run every cell of an experiment file.
    Experiment {
        #[arg(long)]
        spec: PathBuf,
    },
    /// Lay out stored results like the published tables.
    Report {
        #[arg(long)]
        results: PathBuf,
        /// Also write the delimited form here.
        #[arg(long)]
        csv: Option<PathBuf>,
    },
}

#[derive(Debug, Args)]
pub struct CorpusArgs {
    /// SemEval XML or corpus JSONL.
    #[arg(long)]
    pub corpus: PathBuf,
    /// Needed when the corpus is XML.
    #[arg(long)]
    pub domain: Option<Domain>,
    #[arg(long)]
    pub split: Option<Split>,
}

#[derive(Debug, Args)]
pub struct PromptArgs {
    /// Directory with ate.tmpl, atsc.tmpl and joint.tmpl.
    #[arg(long)]
    pub templates: Option<PathBuf>,
    #[arg(long, default_value = "drop-everywhere")]
    pub conflict_policy: ConflictPolicy,
}

#[derive(Debug, Args)]
pub struct HpArgs {
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub gradient_accumulation_steps: Option<usize>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long)]
    pub max_output_length: Option<usize>,
    #[arg(long)]
    pub num_beams: Option<usize>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum AveragingArg {
    Micro,
    MacroSentence,
}

impl HpArgs {
    fn resolve(&self, subtask: Option<SubtaskKind>) -> Hyperparameters {
        let mut hp = subtask.map_or_else(Hyperparameters::default, Hyperparameters::for_subtask);
        hp.seed = self.seed;
        if let Some(v) = self.learning_rate {
            hp.learning_rate = v;
        }
        if let Some(v) = self.batch_size {
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

impl PromptArgs {
    fn target_format(&self) -> anyhow::Result<TargetFormat> {
        let templates = self.template_set()?;
        let mut fmt = TargetFormat {
            conflict_policy: self.conflict_policy,
            ..TargetFormat::default()
        };
        if let Some(e) = &templates.ate.empty_output {
            fmt.ate_empty = e.clone();
        }
        if let Some(e) = &templates.joint.empty_output {
            fmt.joint_empty = e.clone();
        }
        Ok(fmt)
    }

    fn template_set(&self) -> anyhow::Result<TemplateSet> {
        Ok(match &self.templates {
            Some(dir) => TemplateSet::load_dir(dir)?,
            None => TemplateSet::builtin(),
        })
    }

    fn config(&self, variant: Variant) -> anyhow::Result<PromptConfig> {
        Ok(PromptConfig::new(variant, self.template_set()?, self.target_format()?)?)
    }
}

fn is_xml(path: &Path) -> bool {
    path.extension().is_some_and(|e| e.eq_ignore_ascii_case("xml"))
}

/// XML needs a domain and split; JSONL carries its own.
fn load_corpus(path: &Path, domain: Option<Domain>, split: Option<Split>) -> anyhow::Result<Corpus> {
    if is_xml(path) {
        let Some(domain) = domain else {
            bail!("--domain is required for XML input {}", path.display());
        };
        Ok(load_semeval_xml(path, domain, split.unwrap_or(Split::Train))?)
    } else {
        Ok(read_corpus_jsonl(path)?)
    }
}

struct Printer<'a> {
    format: Format,
    out: &'a mut dyn Write,
}

impl Printer<'_> {
    /// Prints `text` or the JSON form of `value`.
    fn emit(&mut self, text: impl std::fmt::Display, value: &impl Serialize) -> anyhow::Result<()> {
        match self.format {
            Format::Text => writeln!(self.out, "{text}")?,
            Format::Json => writeln!(self.out, "{}", serde_json::to_string(value)?)?,
        }
        Ok(())
    }
}

/// Parses `args` and runs the command, writing results to `out`.
pub fn run<I, T>(args: I, out: &mut dyn Write) -> anyhow::Result<()>
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = Cli::try_parse_from(args)?;
    execute(cli, out)
}

pub fn execute(cli: Cli, out: &mut dyn Write) -> anyhow::Result<()> {
    let mut p = Printer {
        format: cli.format,
        out,
    };
    match cli.command {
        Command::Ingest {
            input,
            domain,
            split,
            out,
        } => {
            let corpus = load_semeval_xml(&input, domain, split)?;
            if let Some(out) = &out {
                write_corpus_jsonl(&corpus, out)?;
            }
            let stats = corpus_stats(&corpus);
            p.emit(&stats, &stats)?;
        }
        Command::Stats(args) => {
            let corpus = load_corpus(&args.corpus, args.domain, args.split)?;
            let stats = corpus_stats(&corpus);
            p.emit(&stats, &stats)?;
        }
        Command::BuildPrompts {
            corpus,
            subtask,
            variant,
            out,
            eval,
            max_unrepresentable,
            prompt,
        } => {
            let config = prompt.config(variant)?;
            let corpus = load_corpus(&corpus.corpus, corpus.domain, corpus.split)?;
            let built = if eval {
                build_eval_dataset(&config, subtask, &corpus)?
            } else {
                build_dataset(&config, subtask, &corpus)?
            };
            for x in &built.excluded {
                log::warn!("excluded sentence {}: term {:?} {}", x.sentence_id, x.term, x.reason);
            }
            built.check_exclusions(max_unrepresentable)?;
            write_dataset_jsonl(&built.examples, &out)?;
            p.emit(
                format_args!("{} examples", built.examples.len()),
                &json!({"examples": built.examples.len(), "excluded": built.excluded}),
            )?;
        }
        Command::Train {
            data,
            backend: spec,
            checkpoint,
            subtask,
            hp,
        } => {
            let examples = read_dataset_jsonl(&data)?;
            let subtask = subtask.or_else(|| examples.first().map(|e| e.meta.subtask));
            let hp = hp.resolve(subtask);
            let mut model = spec.build();
            let report = backend::train(model.as_mut(), &examples, &hp, &checkpoint)?;
            let mut manifest = RunManifest::new(
                model.identity(),
                spec.kind(),
                &hp,
                dataset_fingerprint(&examples),
                examples.len(),
                report,
            );
            manifest.subtask = subtask;
            backend::write_manifest(&checkpoint.join(MANIFEST_FILE), &manifest)?;
            p.emit(
                format_args!(
                    "trained {} for {} steps, final loss {:.4}, {:.1}s",
                    manifest.checkpoint_id,
                    manifest.train_report.steps,
                    manifest.train_report.final_loss,
                    manifest.wall_time_secs
                ),
                &manifest,
            )?;
        }
        Command::Predict {
            data,
            backend: spec,
            checkpoint,
            out,
            max_output_length,
            num_beams,
            prompt,
        } => {
            let examples = read_dataset_jsonl(&data)?;
            let mut model = spec.build();
            if let Some(dir) = &checkpoint {
                model.restore(dir)?;
            }
            let decoding = backend::DecodingConfig {
                max_output_length,
                num_beams,
            };
            let outputs = backend::predict(model.as_ref(), &examples, &decoding)?;
            let opts = DecodeOptions::from(&prompt.target_format()?);
            let records: Vec<PredictionRecord> = examples
                .iter()
                .zip(&outputs)
                .map(|(e, o)| PredictionRecord::from_output(e, o, &opts))
                .collect();
            write_predictions_jsonl(&records, &out)?;
            p.emit(
                format_args!("{} predictions", records.len()),
                &json!({"predictions": records.len()}),
            )?;
        }
        Command::Score {
            gold,
            domain,
            split,
            pred,
            subtask,
            averaging,
            prompt,
        } => {
            let corpus = load_corpus(&gold, domain, Some(split))?;
            let opts = DecodeOptions::from(&prompt.target_format()?);
            let records = read_predictions_jsonl(&pred, &opts)?;
            let averaging = match averaging {
                AveragingArg::Micro => Averaging::Micro,
                AveragingArg::MacroSentence => Averaging::MacroSentence,
            };
            let report = score_predictions(subtask, &corpus, &records, prompt.conflict_policy, averaging)?;
            p.emit(&report, &report)?;
        }
        Command::Experiment { spec } => {
            let plan = Plan::load(&spec)?;
            let ctx = RunContext::from_plan(&plan)?;
            let mut failed = 0;
            for cell in plan.experiments()? {
                match run_experiment(&cell, &ctx) {
                    Ok(result) => {
                        let mean = &result.aggregate.mean;
                        p.emit(
                            format_args!("{}: {mean}", cell.cell_id()),
                            &json!({"cell": cell.cell_id(), "mean": mean, "runs": result.aggregate.n_runs}),
                        )?;
                    }
                    Err(e) => {
                        failed += 1;
                        log::error!("{e}");
                        p.emit(
                            format_args!("{}: FAILED", cell.cell_id()),
                            &json!({"cell": cell.cell_id(), "error": e.to_string()}),
                        )?;
                    }
                }
            }
            if failed > 0 {
                bail!("{failed} experiment cell(s) failed; results are under {}", ctx.results_dir.display());
            }
        }
        Command::Report { results, csv } => {
            let loaded = load_results(&results).with_context(|| format!("reading results from {}", results.display()))?;
            let doc = reproduce_tables(&loaded);
            if let Some(path) = &csv {
                std::fs::write(path, &doc.csv).with_context(|| format!("writing {}", path.display()))?;
            }
            p.emit(doc.text.trim_end(), &json!({"text": doc.text, "csv": doc.csv}))?;
        }
    }
    Ok(())
}

/// Entry point for the binary: exit status 0 iff the command succeeded.
pub fn main() -> std::process::ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => e.exit(),
    };
    let stdout = std::io::stdout();
    let mut lock = stdout.lock();
    match execute(cli, &mut lock) {
        Ok(()) => std::process::ExitCode::SUCCESS,
        Err(e) => {
            let _ = lock.flush();
            eprintln!("error: {e:#}");
            std::process::ExitCode::FAILURE
        }
    }
}
