//! Project-grouped cross-validation and the reports computed on its output.

mod cv;
mod folds;
mod grid;
mod metrics;
mod threshold;

use thiserror::Error;

use crate::probe::ProbeError;

pub use cv::{cross_validate, CvOutcome, CvPrediction, FoldRecord, SkipReport};
pub use folds::{make_folds, FoldPlan};
pub use grid::{confusion_grid, predicted_bin, ConfusionGrid};
pub use metrics::{mean_squared_error, spearman};
pub use threshold::{
    threshold_classify, threshold_classify_label, threshold_report, write_threshold_csv, ClassMetrics, ThresholdReport,
    ACCURACY_DEFINITION,
};

#[derive(Debug, Error)]
pub enum EvalError {
    #[error("fold count {requested} must be between 2 and the number of projects ({projects})")]
    FoldCount { requested: usize, projects: usize },
    #[error("project '{0}' is not assigned to any fold")]
    ProjectNotInPlan(String),
    #[error("project '{0}' appears in more than one fold")]
    ProjectInSeveralFolds(String),
    #[error("annotator count must be positive")]
    ZeroAnnotatorCount,
    #[error("label for '{id}' has {found} votes, grid expects {expected}")]
    MixedAnnotatorCount { id: String, expected: u32, found: u32 },
    #[error("non-finite prediction for '{0}'")]
    NonFinitePrediction(String),
    #[error("no results to evaluate")]
    EmptyResults,
    #[error(transparent)]
    Probe(#[from] ProbeError),
}
