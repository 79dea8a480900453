//! Framework-free GRU classifier: tensors, initializers, layers,
//! backpropagation through time, loss and Adam.

mod adam;
mod embedding;
mod gru;
pub mod init;
mod loss;
mod model;
mod tensor;

pub use adam::{AdamConfig, AdamState};
pub use embedding::load_pretrained_embedding;
pub use gru::{GruCache, GruGrads, GruLayer};
pub use loss::{argmax_rows, categorical_cross_entropy, clip_probability, softmax_rows, PROB_EPSILON};
pub use model::{
    param_count, DropoutMasks, ForwardCache, Gradients, GruStackModel, ModelConfig, ParamCounts, TensorRef,
    EMBEDDING_INIT_LIMIT,
};
pub use tensor::{sigmoid, Matrix, Real};

#[derive(Debug, thiserror::Error)]
pub enum NnError {
    #[error("shape mismatch in {what}: expected {expected}, found {found}")]
    ShapeMismatch {
        what: &'static str,
        expected: usize,
        found: usize,
    },
    #[error("token index {index} outside vocabulary of size {vocab_size}")]
    IndexOutOfVocab { index: u32, vocab_size: usize },
    #[error("label {label} outside {classes} classes")]
    LabelOutOfRange { label: usize, classes: usize },
    #[error("forward cache is stale: parameters changed since the forward pass")]
    StaleCache,
    #[error("invalid model config: {0}")]
    InvalidConfig(String),
    #[error("parse error: {0}")]
    Parse(String),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
