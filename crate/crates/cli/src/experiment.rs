use std::collections::BTreeMap;
use std::path::PathBuf;

use appraise::corpus::{Corpus, Dimension};
use appraise::evaluation::{
    confusion_grid, cross_validate, make_folds, mean_squared_error, spearman, threshold_report, write_threshold_csv,
    ConfusionGrid, CvOutcome, EvalError, FoldPlan, FoldRecord, SkipReport, ThresholdReport, ACCURACY_DEFINITION,
};
use appraise::probe::{
    featurize_corpus, load_embeddings, FeatureVector, FeaturizerConfig, FeaturizerInfo, TrainConfig,
};
use appraise::seed::derive_seed;
use clap::ValueEnum;
use serde::{Deserialize, Serialize};

use crate::args::ExperimentArgs;
use crate::commands::read_corpus;
use crate::{open_input, required, resolve, write_run_config, CliError, CliResult, OutputDir};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, ValueEnum, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum FeatureSource {
    /// Character n-gram hashing of verbatim text.
    #[default]
    Hash,
    /// Precomputed vectors from `--embeddings`.
    Embeddings,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ExperimentConfig {
    pub corpus: Option<PathBuf>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub out: Option<PathBuf>,
    /// Master seed. Folds use `derive_seed(seed, "folds")`; dimension `D`
    /// trains with `derive_seed(seed, "train/D")`, so `train.seed` is unused.
    pub seed: u64,
    pub features: FeatureSource,
    pub embeddings: Option<PathBuf>,
    pub dimensions: Vec<Dimension>,
    pub folds: usize,
    pub train: TrainConfig,
    pub featurizer: FeaturizerConfig,
}

impl Default for ExperimentConfig {
    fn default() -> Self {
        ExperimentConfig {
            corpus: None,
            out: None,
            seed: 0,
            features: FeatureSource::Hash,
            embeddings: None,
            dimensions: Dimension::ALL.to_vec(),
            folds: 5,
            train: TrainConfig::default(),
            featurizer: FeaturizerConfig::default(),
        }
    }
}

impl ExperimentConfig {
    fn check(&self) -> CliResult<()> {
        let usage = |m: String| Err(CliError::Usage(m));
        self.train.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        if self.features == FeatureSource::Hash {
            self.featurizer.validate().map_err(|e| CliError::Usage(e.to_string()))?;
        }
        if self.features == FeatureSource::Embeddings && self.embeddings.is_none() {
            return usage("--features embeddings needs --embeddings".into());
        }
        if self.folds < 2 {
            return usage(format!("need at least 2 folds, got {}", self.folds));
        }
        if self.dimensions.is_empty() {
            return usage("no dimensions selected".into());
        }
        let mut seen = self.dimensions.clone();
        seen.sort();
        seen.dedup();
        if seen.len() != self.dimensions.len() {
            return usage("dimensions listed twice".into());
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum FeatureProvenance {
    Hash(FeaturizerInfo),
    Embeddings { path: PathBuf, dim: usize, n_vectors: usize },
}

/// Per-dimension record in the manifest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionRun {
    pub dimension: Dimension,
    pub train_seed: u64,
    pub folds: Vec<FoldRecord>,
    pub skips: SkipReport,
    pub n_evaluated: usize,
    pub mse: f64,
    pub spearman: Option<f64>,
    /// Annotator count whose verbatims populate the confusion grid.
    pub grid_m: u32,
    /// Evaluated verbatims left out of the grid for having another count.
    pub grid_excluded: usize,
    pub grid_diagonal_mass_within_one_bin: f64,
    pub leakage_free: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
struct Manifest<'a> {
    version: &'a str,
    config: &'a ExperimentConfig,
    fold_seed: u64,
    fold_plan: &'a FoldPlan,
    features: FeatureProvenance,
    dimensions: &'a [DimensionRun],
    accuracy_definition: &'a str,
}

#[derive(Debug, Clone)]
pub struct ExperimentSummary {
    pub config: ExperimentConfig,
    pub plan: FoldPlan,
    pub runs: Vec<DimensionRun>,
    pub outcomes: Vec<CvOutcome<f64>>,
    pub grids: Vec<ConfusionGrid>,
    pub reports: Vec<ThresholdReport<f64>>,
    pub out: PathBuf,
}

/// Most frequent annotator count among evaluated labels; ties go to the larger.
fn modal_m(outcome: &CvOutcome<f64>) -> Option<u32> {
    let mut counts: BTreeMap<u32, usize> = BTreeMap::new();
    for p in outcome.predictions.values() {
        *counts.entry(p.label.m()).or_default() += 1;
    }
    counts.into_iter().max_by_key(|&(m, c)| (c, m)).map(|(m, _)| m)
}

fn load_features(
    config: &ExperimentConfig,
    corpus: &Corpus,
) -> CliResult<(BTreeMap<String, FeatureVector<f64>>, FeatureProvenance)> {
    match config.features {
        FeatureSource::Hash => {
            Ok((featurize_corpus::<f64>(corpus, &config.featurizer), FeatureProvenance::Hash(config.featurizer.into())))
        }
        FeatureSource::Embeddings => {
            let path = required(&config.embeddings, "embeddings")?;
            let table = load_embeddings::<f64, _>(open_input(path)?)
                .map_err(|e| CliError::Validation(format!("{}: {e}", path.display())))?;
            let provenance =
                FeatureProvenance::Embeddings { path: path.to_path_buf(), dim: table.dim(), n_vectors: table.len() };
            Ok((table.to_features(), provenance))
        }
    }
}

fn eval_error(e: EvalError) -> CliError {
    CliError::Runtime(anyhow::Error::new(e))
}

/// Cross-validates one probe per dimension and writes, only once everything
/// has succeeded: `grid_{D}.csv`, `grid_{D}.json`, `predictions_{D}.csv`,
/// `threshold_report.csv`, `manifest.json` and `run_config.json`.
pub fn cmd_experiment(args: &ExperimentArgs) -> CliResult<ExperimentSummary> {
    let config: ExperimentConfig =
        resolve(&ExperimentConfig::default(), args.config.as_deref(), args.flags().into_map())?;
    config.check()?;
    let corpus_path = required(&config.corpus, "corpus")?;
    let out_dir = required(&config.out, "out")?.to_path_buf();

    let corpus = read_corpus(corpus_path)?;
    let (features, provenance) = load_features(&config, &corpus)?;
    let fold_seed = derive_seed(config.seed, "folds");
    let plan =
        make_folds(&corpus.project_ids(), config.folds, fold_seed).map_err(|e| CliError::Usage(e.to_string()))?;

    let mut runs = Vec::new();
    let mut outcomes = Vec::new();
    let mut grids = Vec::new();
    let mut reports = Vec::new();
    for &dimension in &config.dimensions {
        let train_seed = derive_seed(config.seed, &format!("train/{dimension}"));
        let train = TrainConfig { seed: train_seed, ..config.train.clone() };
        let outcome = cross_validate(&corpus, &features, dimension, &train, &plan).map_err(eval_error)?;
        if outcome.predictions.is_empty() {
            return Err(CliError::Validation(format!("no verbatim has both features and a label for {dimension}")));
        }
        let m = modal_m(&outcome).expect("non-empty predictions");
        let grid = confusion_grid(outcome.results().filter(|(_, l, _)| l.m() == m), m).map_err(eval_error)?;
        let report = threshold_report(outcome.results().map(|(_, l, v)| (l, v))).map_err(eval_error)?;
        let truth: Vec<f64> = outcome.predictions.values().map(|p| p.label.mean::<f64>()).collect();
        let predicted: Vec<f64> = outcome.predictions.values().map(|p| p.value).collect();
        let mse = mean_squared_error(predicted.iter().copied().zip(truth.iter().copied())).expect("non-empty");
        runs.push(DimensionRun {
            dimension,
            train_seed,
            folds: outcome.folds.clone(),
            skips: outcome.skips.clone(),
            n_evaluated: outcome.predictions.len(),
            mse,
            spearman: spearman(&predicted, &truth),
            grid_m: m,
            grid_excluded: outcome.predictions.len() - grid.total() as usize,
            grid_diagonal_mass_within_one_bin: grid.diagonal_mass(1),
            leakage_free: outcome.leakage_free(),
        });
        outcomes.push(outcome);
        grids.push(grid);
        reports.push(report);
    }

    let out = OutputDir::create(&out_dir)?;
    write_run_config(&out, "experiment", &config)?;
    let mut manifest_config = config.clone();
    manifest_config.out = None;
    for ((grid, outcome), &dimension) in grids.iter().zip(&outcomes).zip(&config.dimensions) {
        out.write(&format!("grid_{dimension}.csv"), |w| Ok(grid.write_csv(w)?))?;
        out.write(&format!("grid_{dimension}.json"), |w| Ok(grid.write_json(w)?))?;
        out.write(&format!("predictions_{dimension}.csv"), |w| write_predictions(&corpus, outcome, w))?;
    }
    let labelled: Vec<_> = config.dimensions.iter().copied().zip(reports.iter().cloned()).collect();
    out.write("threshold_report.csv", |w| Ok(write_threshold_csv(&labelled, w)?))?;
    out.write_json(
        "manifest.json",
        &Manifest {
            version: env!("CARGO_PKG_VERSION"),
            config: &manifest_config,
            fold_seed,
            fold_plan: &plan,
            features: provenance,
            dimensions: &runs,
            accuracy_definition: ACCURACY_DEFINITION,
        },
    )?;
    Ok(ExperimentSummary { config, plan, runs, outcomes, grids, reports, out: out_dir })
}

fn write_predictions(corpus: &Corpus, outcome: &CvOutcome<f64>, out: &mut dyn std::io::Write) -> anyhow::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["verbatim_id", "project_id", "fold", "m", "true_mean", "predicted", "p_neg", "p_zero", "p_pos"])?;
    for (id, p) in &outcome.predictions {
        let project = corpus.verbatim(id).map_or("", |v| v.project_id.as_str());
        let f = |x: f64| format!("{x:.6}");
        w.write_record([
            id.clone(),
            project.to_string(),
            p.fold.to_string(),
            p.label.m().to_string(),
            f(p.label.mean::<f64>()),
            f(p.value),
            f(p.dist.p_neg),
            f(p.dist.p_zero),
            f(p.dist.p_pos),
        ])?;
    }
    w.flush()?;
    Ok(())
}
