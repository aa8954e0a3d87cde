//! A small trainable backend: a multiclass perceptron over the distinct target
//! strings seen in training, with lexical features of the input's last line.
//!
//! It cannot produce an output it never saw as a target, so it generalizes
//! poorly, but it exercises the full train / restore / predict path with
//! seeded, reproducible updates.

use std::collections::{BTreeMap, HashMap};
use std::path::Path;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::{truncate_tokens, DecodingConfig, Hyperparameters, ModelBackend, TrainReport};
use crate::error::{Error, Result};
use crate::prompting::PromptedExample;

const MODEL_FILE: &str = "perceptron.json";

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct PerceptronBackend {
    classes: Vec<String>,
    #[serde(skip)]
    class_index: HashMap<String, usize>,
    /// feature -> weight per class
    weights: BTreeMap<String, Vec<f64>>,
}

fn features(input: &str) -> Vec<String> {
    let line = input.lines().last().unwrap_or_default().to_lowercase();
    let tokens: Vec<&str> = line
        .split(|c: char| !c.is_alphanumeric())
        .filter(|t| !t.is_empty())
        .collect();
    let mut out = Vec::with_capacity(2 * tokens.len() + 2);
    out.push("bias".to_string());
    out.push(format!("line={}", tokens.join(" ")));
    out.extend(tokens.iter().map(|t| format!("w={t}")));
    out.extend(tokens.windows(2).map(|w| format!("b={}_{}", w[0], w[1])));
    out.sort();
    out.dedup();
    out
}

impl PerceptronBackend {
    fn class_of(&mut self, target: &str) -> usize {
        if let Some(&i) = self.class_index.get(target) {
            return i;
        }
        let i = self.classes.len();
        self.classes.push(target.to_string());
        self.class_index.insert(target.to_string(), i);
        for w in self.weights.values_mut() {
            w.push(0.0);
        }
        i
    }

    /// Highest-scoring class; ties go to the class seen first.
    fn best(&self, feats: &[String]) -> Option<usize> {
        if self.classes.is_empty() {
            return None;
        }
        let mut scores = vec![0.0; self.classes.len()];
        for f in feats {
            if let Some(w) = self.weights.get(f) {
                for (s, x) in scores.iter_mut().zip(w) {
                    *s += x;
                }
            }
        }
        let mut best = 0;
        for (i, &s) in scores.iter().enumerate() {
            if s > scores[best] {
                best = i;
            }
        }
        Some(best)
    }

    fn update(&mut self, feats: &[String], gold: usize, guess: usize, step: f64) {
        let n = self.classes.len();
        for f in feats {
            let w = self.weights.entry(f.clone()).or_insert_with(|| vec![0.0; n]);
            w[gold] += step;
            w[guess] -= step;
        }
    }
}

impl ModelBackend for PerceptronBackend {
    fn identity(&self) -> &str {
        "toy-perceptron"
    }

    fn trainable(&self) -> bool {
        true
    }

    fn train(&mut self, dataset: &[PromptedExample], hp: &Hyperparameters, checkpoint_dir: &Path) -> Result<TrainReport> {
        let encoded: Vec<(Vec<String>, usize)> = dataset
            .iter()
            .map(|e| (features(&e.input_text), self.class_of(&e.target_text)))
            .collect();
        let mut rng = ChaCha8Rng::seed_from_u64(hp.seed);
        let mut order: Vec<usize> = (0..encoded.len()).collect();
        let mut mistakes = 0;
        for _ in 0..hp.epochs {
            order.shuffle(&mut rng);
            mistakes = 0;
            for &i in &order {
                let (feats, gold) = &encoded[i];
                let guess = self.best(feats).unwrap_or(*gold);
                if guess != *gold {
                    mistakes += 1;
                    self.update(feats, *gold, guess, hp.learning_rate);
                }
            }
        }
        let json = serde_json::to_string(self).map_err(|e| Error::json("serializing perceptron", e))?;
        let path = checkpoint_dir.join(MODEL_FILE);
        std::fs::write(&path, json).map_err(|e| Error::io(path, e))?;
        Ok(TrainReport {
            steps: hp.optimizer_steps(dataset.len()),
            final_loss: mistakes as f64 / dataset.len() as f64,
            wall_time_secs: 0.0,
            seed: hp.seed,
            optimizer: None,
        })
    }

    fn restore(&mut self, checkpoint_dir: &Path) -> Result<()> {
        let path = checkpoint_dir.join(MODEL_FILE);
        let text = std::fs::read_to_string(&path).map_err(|e| Error::io(&path, e))?;
        let mut model: PerceptronBackend =
            serde_json::from_str(&text).map_err(|e| Error::json(path.display().to_string(), e))?;
        model.class_index = model.classes.iter().enumerate().map(|(i, c)| (c.clone(), i)).collect();
        *self = model;
        Ok(())
    }

    fn predict(&self, examples: &[PromptedExample], decoding: &DecodingConfig) -> Result<Vec<String>> {
        Ok(examples
            .iter()
            .map(|e| match self.best(&features(&e.input_text)) {
                Some(i) => truncate_tokens(&self.classes[i], decoding.max_output_length).to_string(),
                None => String::new(),
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{predict, train};
    use crate::prompting::{ExampleMeta, SubtaskKind};

    fn data() -> Vec<PromptedExample> {
        let rows = [
            ("The screen is bright.", "screen"),
            ("Battery life is poor.", "Battery life"),
            ("I love it.", "noaspectterm"),
            ("The keyboard and the screen feel cheap.", "keyboard, screen"),
        ];
        rows.iter()
            .enumerate()
            .map(|(i, (s, t))| PromptedExample {
                input_text: format!("Definition: ...\ninput: {s}"),
                target_text: t.to_string(),
                meta: ExampleMeta {
                    sentence_id: i.to_string(),
                    subtask: SubtaskKind::Ate,
                    aspect_term: None,
                    representable: true,
                },
            })
            .collect()
    }

    #[test]
    fn memorizes_and_restores() {
        let dir = tempfile::tempdir().unwrap();
        let hp = Hyperparameters {
            epochs: 10,
            ..Default::default()
        };
        let mut model = PerceptronBackend::default();
        let report = train(&mut model, &data(), &hp, dir.path()).unwrap();
        assert_eq!(report.final_loss, 0.0);
        let targets: Vec<String> = data().into_iter().map(|e| e.target_text).collect();
        assert_eq!(predict(&model, &data(), &DecodingConfig::default()).unwrap(), targets);

        let mut restored = PerceptronBackend::default();
        restored.restore(dir.path()).unwrap();
        assert_eq!(predict(&restored, &data(), &DecodingConfig::default()).unwrap(), targets);
    }

    #[test]
    fn untrained_model_predicts_empty() {
        let out = PerceptronBackend::default().predict(&data(), &DecodingConfig::default()).unwrap();
        assert!(out.iter().all(String::is_empty));
    }
}
