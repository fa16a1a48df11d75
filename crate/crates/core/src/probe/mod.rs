//! Linear softmax probe over fixed text representations.
//!
//! Representations come either from the built-in character n-gram hashing
//! featurizer or from externally computed embedding vectors. One probe is
//! trained per dimension on soft vote proportions; its continuous prediction
//! is `q_pos - q_neg`.

mod embeddings;
mod features;
mod model;
mod train;

use thiserror::Error;

pub use embeddings::{load_embeddings, EmbeddingTable};
pub use features::{
    featurize_corpus, hash_featurize, FeatureVector, FeaturizerConfig, FeaturizerInfo, FEATURIZER_VERSION,
    HASH_FUNCTION,
};
pub use model::{predict_dist, predict_value, softmax, ProbeModel, ProbeParams, TrainingMeta, CLASS_ORDER};
pub use train::{objective, objective_gradient, train_probe, Example, TrainConfig};

#[derive(Debug, Error)]
pub enum ProbeError {
    #[error("invalid configuration: {0}")]
    InvalidConfig(String),
    #[error("line {line}: malformed embedding record: {message}")]
    Malformed { line: usize, message: String },
    #[error("duplicate id '{0}'")]
    DuplicateId(String),
    #[error("dimension mismatch for '{id}': expected {expected}, found {found}")]
    DimensionMismatch { id: String, expected: usize, found: usize },
    #[error("non-finite value in '{id}'")]
    NonFinite { id: String },
    #[error("feature index {index} out of range for dimensionality {dim}")]
    IndexOutOfRange { index: usize, dim: usize },
    #[error("no verbatim has both features and a label")]
    EmptyTraining,
    #[error("loss became non-finite at epoch {epoch}; lower the learning rate")]
    NonFiniteLoss { epoch: usize },
    #[error(transparent)]
    Io(#[from] std::io::Error),
    #[error("model file: {0}")]
    Json(#[from] serde_json::Error),
}
