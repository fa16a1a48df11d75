use std::path::PathBuf;

use appraise::agreement::DistanceMetric;
use appraise::corpus::Dimension;
use clap::{Args, Parser, Subcommand, ValueEnum};

use crate::{FeatureSource, Flags};

#[derive(Debug, Parser)]
#[command(name = "appraise", version, about = "Annotation agreement, soft labels and probe experiments")]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Check a corpus and write validation_report.json.
    Validate(IoArgs),
    /// Descriptive statistics to stats.csv.
    Stats(IoArgs),
    /// Krippendorff's alpha per dimension and modality to agreement.csv.
    Agreement(AgreementArgs),
    /// Soft labels and gradient histograms to aggregate.csv and histograms.csv.
    Aggregate(IoArgs),
    /// Generate a synthetic corpus with ground truth.
    Simulate(SimulateArgs),
    /// Project-grouped cross-validated probe experiment.
    Experiment(ExperimentArgs),
}

#[derive(Debug, Clone, Default, Args)]
pub struct IoArgs {
    /// Corpus JSONL file.
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    /// Output directory.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// JSON config file; flags override its values.
    #[arg(long)]
    pub config: Option<PathBuf>,
}

impl IoArgs {
    pub(crate) fn flags(&self) -> Flags {
        Flags::new().set("corpus", self.corpus.as_ref()).set("out", self.out.as_ref())
    }
}

#[derive(Debug, Clone, Default, Args)]
pub struct AgreementArgs {
    #[command(flatten)]
    pub io: IoArgs,
    /// nominal or interval.
    #[arg(long)]
    pub metric: Option<DistanceMetric>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum, serde::Serialize, serde::Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Preset {
    /// Recovery-friendly corpus: 21 projects x 200 verbatims, low noise.
    Default,
    /// Sparse, mostly positive corpus resembling a real campaign.
    SparseCampaign,
}

#[derive(Debug, Clone, Default, Args)]
pub struct SimulateArgs {
    /// Simulator config JSON, layered over the preset.
    #[arg(long)]
    pub config: Option<PathBuf>,
    #[arg(long, value_enum)]
    pub preset: Option<Preset>,
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Clone, Default, Args)]
pub struct ExperimentArgs {
    #[arg(long)]
    pub corpus: Option<PathBuf>,
    #[arg(long)]
    pub out: Option<PathBuf>,
    #[arg(long)]
    pub config: Option<PathBuf>,
    /// Master seed; fold and training seeds derive from it.
    #[arg(long)]
    pub seed: Option<u64>,
    #[arg(long, value_enum)]
    pub features: Option<FeatureSource>,
    /// JSONL of {"id", "vec"} lines, required with --features embeddings.
    #[arg(long)]
    pub embeddings: Option<PathBuf>,
    /// Comma-separated subset of F,P,U,L.
    #[arg(long, value_delimiter = ',')]
    pub dimensions: Option<Vec<Dimension>>,
    #[arg(long)]
    pub folds: Option<usize>,
    #[arg(long)]
    pub learning_rate: Option<f64>,
    #[arg(long)]
    pub epochs: Option<usize>,
    #[arg(long)]
    pub l2_lambda: Option<f64>,
    #[arg(long)]
    pub batch_size: Option<usize>,
    #[arg(long)]
    pub buckets: Option<usize>,
}

impl ExperimentArgs {
    pub(crate) fn flags(&self) -> Flags {
        Flags::new()
            .set("corpus", self.corpus.as_ref())
            .set("out", self.out.as_ref())
            .set("seed", self.seed)
            .set("features", self.features)
            .set("embeddings", self.embeddings.as_ref())
            .set("dimensions", self.dimensions.as_ref())
            .set("folds", self.folds)
            .set("train.learning_rate", self.learning_rate)
            .set("train.epochs", self.epochs)
            .set("train.l2_lambda", self.l2_lambda)
            .set("train.batch_size", self.batch_size)
            .set("featurizer.buckets", self.buckets)
    }
}
