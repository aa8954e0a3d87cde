use std::path::Path;

use super::{truncate_tokens, DecodingConfig, Hyperparameters, ModelBackend, TrainReport};
use crate::error::Result;
use crate::prompting::PromptedExample;

/// Answers with the gold target carried by each example. Training is a no-op.
#[derive(Debug, Clone, Copy, Default)]
pub struct OracleBackend;

impl ModelBackend for OracleBackend {
    fn identity(&self) -> &str {
        "oracle"
    }

    fn trainable(&self) -> bool {
        true
    }

    fn train(&mut self, _: &[PromptedExample], hp: &Hyperparameters, _: &Path) -> Result<TrainReport> {
        Ok(TrainReport {
            steps: 0,
            final_loss: 0.0,
            wall_time_secs: 0.0,
            seed: hp.seed,
            optimizer: None,
        })
    }

    fn restore(&mut self, _: &Path) -> Result<()> {
        Ok(())
    }

    fn predict(&self, examples: &[PromptedExample], _: &DecodingConfig) -> Result<Vec<String>> {
        Ok(examples.iter().map(|e| e.target_text.clone()).collect())
    }
}

/// Emits the same string for every input.
#[derive(Debug, Clone)]
pub struct ConstantBackend {
    output: String,
    identity: String,
}

impl ConstantBackend {
    pub fn new(output: impl Into<String>) -> Self {
        let output = output.into();
        ConstantBackend {
            identity: format!("constant:{output}"),
            output,
        }
    }
}

impl ModelBackend for ConstantBackend {
    fn identity(&self) -> &str {
        &self.identity
    }

    fn trainable(&self) -> bool {
        false
    }

    fn train(&mut self, _: &[PromptedExample], _: &Hyperparameters, _: &Path) -> Result<TrainReport> {
        Err(crate::Error::NotTrainable(self.identity.clone()))
    }

    fn restore(&mut self, _: &Path) -> Result<()> {
        Ok(())
    }

    fn predict(&self, examples: &[PromptedExample], decoding: &DecodingConfig) -> Result<Vec<String>> {
        let out = truncate_tokens(&self.output, decoding.max_output_length);
        Ok(vec![out.to_string(); examples.len()])
    }
}

/// Returns the last line of each input, i.e. the rendered sample.
#[derive(Debug, Clone, Copy, Default)]
pub struct EchoTailBackend;

impl ModelBackend for EchoTailBackend {
    fn identity(&self) -> &str {
        "echo-tail"
    }

    fn trainable(&self) -> bool {
        false
    }

    fn train(&mut self, _: &[PromptedExample], _: &Hyperparameters, _: &Path) -> Result<TrainReport> {
        Err(crate::Error::NotTrainable("echo-tail".into()))
    }

    fn restore(&mut self, _: &Path) -> Result<()> {
        Ok(())
    }

    fn predict(&self, examples: &[PromptedExample], decoding: &DecodingConfig) -> Result<Vec<String>> {
        Ok(examples
            .iter()
            .map(|e| {
                let tail = e.input_text.lines().last().unwrap_or_default();
                truncate_tokens(tail, decoding.max_output_length).to_string()
            })
            .collect())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backend::{predict, train};
    use crate::prompting::{ExampleMeta, SubtaskKind};

    fn example(input: &str, target: &str) -> PromptedExample {
        PromptedExample {
            input_text: input.into(),
            target_text: target.into(),
            meta: ExampleMeta {
                sentence_id: "1".into(),
                subtask: SubtaskKind::Ate,
                aspect_term: None,
                representable: true,
            },
        }
    }

    #[test]
    fn oracle_returns_gold_and_trains_as_noop() {
        let data = vec![example("Definition\ninput: a", "x"), example("Definition\ninput: b", "y")];
        let dir = tempfile::tempdir().unwrap();
        let mut oracle = OracleBackend;
        let report = train(&mut oracle, &data, &Hyperparameters::default(), dir.path()).unwrap();
        assert_eq!(report.steps, 0);
        assert_eq!(predict(&oracle, &data, &DecodingConfig::default()).unwrap(), ["x", "y"]);
    }

    #[test]
    fn constant_and_echo() {
        let data = vec![example("Definition\ninput: a b c", "x"); 3];
        let c = ConstantBackend::new("noaspectterm");
        assert_eq!(predict(&c, &data, &DecodingConfig::default()).unwrap(), vec!["noaspectterm"; 3]);
        let e = EchoTailBackend;
        assert_eq!(predict(&e, &data[..1], &DecodingConfig::default()).unwrap(), ["input: a b c"]);
        let short = DecodingConfig {
            max_output_length: 2,
            num_beams: 1,
        };
        assert_eq!(predict(&e, &data[..1], &short).unwrap(), ["input: a"]);
    }

    #[test]
    fn untrainable_mocks_refuse_training() {
        let dir = tempfile::tempdir().unwrap();
        let data = vec![example("i", "t")];
        let mut c = ConstantBackend::new("x");
        assert!(matches!(
            train(&mut c, &data, &Hyperparameters::default(), dir.path()),
            Err(crate::Error::NotTrainable(_))
        ));
        let mut oracle = OracleBackend;
        assert!(matches!(
            train(&mut oracle, &[], &Hyperparameters::default(), dir.path()),
            Err(crate::Error::EmptyDataset)
        ));
    }
}
