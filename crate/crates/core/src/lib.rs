//! Toolkit for multi-annotator appraisal corpora.
//!
//! The crate ingests corpora where several annotators rate every text
//! segment ("verbatim") on four appraisal dimensions with values in
//! {-1, 0, +1}. It measures inter-annotator agreement with Krippendorff's
//! alpha under three projections of the labels, collapses votes into soft
//! labels, trains a linear softmax probe on those soft labels, and scores the
//! probe with project-grouped cross-validation. A generative annotator model
//! ([`simulator`]) produces corpora with known ground truth for testing.
//!
//! Numeric code is generic over [`Scalar`] (exact field arithmetic, including
//! [`Rational`]) or [`Real`] (f32/f64). The aliases below name the concrete
//! instantiations used by the command-line tool.

pub mod aggregate;
pub mod agreement;
pub mod corpus;
pub mod evaluation;
pub mod probe;
pub mod scalar;
pub mod seed;
pub mod simulator;

pub use scalar::{Real, Scalar};

/// Arbitrary-precision rational scalar.
pub type Rational = num_rational::BigRational;

pub type AlphaResult = agreement::AlphaResult<f64>;
pub type ExactAlphaResult = agreement::AlphaResult<Rational>;
pub type CoincidenceMatrix = agreement::CoincidenceMatrix<f64>;
pub type AgreementReport = agreement::AgreementReport<f64>;
pub type SoftDistribution = aggregate::SoftDistribution<f64>;
pub type FeatureVector = probe::FeatureVector<f64>;
pub type EmbeddingTable = probe::EmbeddingTable<f64>;
pub type ProbeModel = probe::ProbeModel<f64>;
pub type ProbeModel32 = probe::ProbeModel<f32>;
pub type CvOutcome = evaluation::CvOutcome<f64>;
pub type ThresholdReport = evaluation::ThresholdReport<f64>;
