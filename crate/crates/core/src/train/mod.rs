//! Dataset splitting, mini-batch training with early stopping, and the
//! end-to-end experiment pipeline.

mod fit;
mod history;
mod learner;
mod split;
pub mod synth;

pub use fit::{
    train, train_with_progress, BatchContext, BatchStats, Dataset, EarlyStopConfig, EarlyStopping, EvalStats,
    Learner, Monitor, TrainConfig, Verdict,
};
pub use history::{EpochRecord, TrainingHistory, HISTORY_HEADER};
pub use learner::{predict_all, GruLearner, CHUNK};
pub use split::{
    split_dataset, split_indices, Partition, Partitions, SplitIndices, SplitSpec, MIN_SPLIT_SAMPLES,
};

use serde::{Deserialize, Serialize};

use crate::classifier::Classifier;
use crate::metrics::{Evaluation, MetricsError};
use crate::nn::{argmax_rows, GruStackModel, ModelConfig, NnError};
use crate::text::{clean_text, CleanRules, LabeledText, TextError, Vocabulary};

#[derive(Debug, thiserror::Error)]
pub enum TrainError {
    #[error("split fractions {0:?} must be positive and sum to 1")]
    BadFractions([f64; 3]),
    #[error("need at least {MIN_SPLIT_SAMPLES} samples to split, got {0}")]
    TooFewSamples(usize),
    #[error("{samples} samples but {labels} labels")]
    LengthMismatch { samples: usize, labels: usize },
    #[error("training and validation sets must be non-empty")]
    EmptyDataset,
    #[error("invalid training config: {0}")]
    InvalidConfig(String),
    #[error("non-finite loss or accuracy in epoch {epoch}")]
    NonFinite { epoch: usize },
    #[error("history is empty")]
    EmptyHistory,
    #[error("malformed history: {0}")]
    MalformedHistory(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Metrics(#[from] MetricsError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Everything a training run is parameterised by; the JSON config file of
/// the `train` command deserialises into this.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: ModelConfig,
    pub train: TrainConfig,
    pub split: SplitSpec,
}

/// Result of [`run_experiment`].
#[derive(Debug, Clone)]
pub struct ExperimentOutcome {
    pub classifier: Classifier,
    pub history: TrainingHistory,
    /// Inference-mode accuracy of the kept weights on the training split.
    pub train_accuracy: f64,
    pub test_evaluation: Evaluation,
    pub test_docs: Vec<LabeledText>,
}

/// Clean → split → fit vocabulary on the training split → encode → train →
/// evaluate on the held-out test split.
pub fn run_experiment(docs: &[LabeledText], cfg: &ExperimentConfig) -> Result<ExperimentOutcome, TrainError> {
    run_experiment_with_progress(docs, cfg, &mut |_| {})
}

/// [`run_experiment`], reporting each finished epoch to `progress`.
pub fn run_experiment_with_progress(
    docs: &[LabeledText],
    cfg: &ExperimentConfig,
    progress: &mut dyn FnMut(&EpochRecord),
) -> Result<ExperimentOutcome, TrainError> {
    cfg.model.validate()?;
    cfg.train.validate()?;
    let rules = CleanRules::default();
    let cleaned: Vec<String> = docs.iter().map(|d| clean_text(&d.text, &rules)).collect();
    let idx = split_indices(docs.len(), &cfg.split)?;
    let train_texts: Vec<&str> = idx.train.iter().map(|&i| cleaned[i].as_str()).collect();
    let vocab = Vocabulary::fit(&train_texts, cfg.model.vocab_size)?;

    let encode = |ids: &[usize]| {
        Dataset::new(
            ids.iter()
                .map(|&i| vocab.encode(&cleaned[i], cfg.model.seq_len))
                .collect(),
            ids.iter().map(|&i| docs[i].label).collect(),
        )
    };
    let train_set = encode(&idx.train)?;
    let val_set = encode(&idx.val)?;
    let test_set = encode(&idx.test)?;

    let model = GruStackModel::<f32>::new(cfg.model.clone(), cfg.train.seed)?;
    let mut learner = GruLearner::new(model, cfg.train.optimizer, cfg.train.seed);
    let history = train_with_progress(&mut learner, &train_set, &val_set, &cfg.train, progress)?;
    let train_accuracy = learner.evaluate(&train_set)?.accuracy;
    let model = learner.into_model();

    let predicted = argmax_rows(&predict_all(&model, &test_set.sequences)?);
    let test_evaluation = Evaluation::from_labels(&test_set.labels, &predicted)?;
    Ok(ExperimentOutcome {
        classifier: Classifier::new(model, vocab, rules)?,
        history,
        train_accuracy,
        test_evaluation,
        test_docs: idx.test.iter().map(|&i| docs[i].clone()).collect(),
    })
}
