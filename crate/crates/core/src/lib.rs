//! Suicidal-ideation screening: a GRU text classifier trained from scratch,
//! its evaluation statistics and persistence, and the chat-session engine
//! that scores conversations with it.

pub mod chat;
mod classifier;
pub mod metrics;
pub mod nn;
pub mod store;
pub mod text;
pub mod train;

pub use classifier::Classifier;
pub use metrics::{ConfusionMatrix, Evaluation};
pub use nn::{GruStackModel, ModelConfig, ParamCounts};
pub use text::{clean_text, CleanRules, EncodedSequence, LabeledText, Vocabulary};
pub use train::{
    run_experiment, run_experiment_with_progress, ExperimentConfig, ExperimentOutcome, TrainConfig,
    TrainError,
};
