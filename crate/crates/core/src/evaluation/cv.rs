use std::collections::{BTreeMap, BTreeSet};

use rayon::prelude::*;
use serde::Serialize;

use super::{EvalError, FoldPlan};
use crate::aggregate::{aggregate, SoftDistribution, SoftLabel};
use crate::corpus::{Corpus, Dimension};
use crate::probe::{predict_dist, train_probe, FeatureVector, TrainConfig};
use crate::seed::derive_seed;
use crate::Real;

#[derive(Debug, Clone, PartialEq)]
pub struct CvPrediction<F> {
    pub label: SoftLabel,
    pub value: F,
    pub dist: SoftDistribution<F>,
    pub fold: usize,
}

/// Provenance of one fold's model.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FoldRecord {
    pub fold: usize,
    pub train_projects: Vec<String>,
    pub test_projects: Vec<String>,
    pub seed: u64,
    pub n_train: usize,
    pub n_test: usize,
    pub epochs_run: usize,
    pub initial_loss: f64,
    pub final_loss: f64,
}

/// Verbatims left out of evaluation.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct SkipReport {
    /// Features present, no label for this dimension.
    pub features_without_label: usize,
    /// Label present, no features.
    pub labels_without_features: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CvOutcome<F> {
    pub dimension: Dimension,
    pub predictions: BTreeMap<String, CvPrediction<F>>,
    pub folds: Vec<FoldRecord>,
    pub skips: SkipReport,
}

impl<F: Real> CvOutcome<F> {
    /// `(id, true label, predicted value)` in id order.
    pub fn results(&self) -> impl Iterator<Item = (&str, &SoftLabel, F)> {
        self.predictions.iter().map(|(id, p)| (id.as_str(), &p.label, p.value))
    }

    /// True iff every fold's train and test projects are disjoint.
    pub fn leakage_free(&self) -> bool {
        self.folds.iter().all(|f| {
            let train: BTreeSet<&String> = f.train_projects.iter().collect();
            f.test_projects.iter().all(|p| !train.contains(p))
        })
    }
}

/// Trains one probe per fold on the other folds' projects and predicts the
/// held-out projects' verbatims. Fold `i` trains with seed
/// `derive_seed(config.seed, "fold/i")`.
pub fn cross_validate<F: Real>(
    corpus: &Corpus,
    features: &BTreeMap<String, FeatureVector<F>>,
    dimension: Dimension,
    config: &TrainConfig,
    plan: &FoldPlan,
) -> Result<CvOutcome<F>, EvalError> {
    let labels = aggregate(corpus, dimension);
    let mut fold_of_verbatim: BTreeMap<&str, usize> = BTreeMap::new();
    for v in corpus.verbatims() {
        let fold = plan.fold_of(&v.project_id).ok_or_else(|| EvalError::ProjectNotInPlan(v.project_id.clone()))?;
        fold_of_verbatim.insert(v.id.as_str(), fold);
    }

    let mut skips = SkipReport::default();
    let mut usable: Vec<(&str, usize)> = Vec::new();
    for (id, fold) in &fold_of_verbatim {
        match (features.contains_key(*id), labels.contains_key(*id)) {
            (true, true) => usable.push((id, *fold)),
            (true, false) => skips.features_without_label += 1,
            (false, true) => skips.labels_without_features += 1,
            (false, false) => {}
        }
    }

    type FoldOutput<F> = (FoldRecord, Vec<(String, CvPrediction<F>)>);
    let per_fold: Vec<FoldOutput<F>> = (0..plan.len())
        .into_par_iter()
        .map(|fold| -> Result<_, EvalError> {
            let mut train_x = BTreeMap::new();
            let mut train_y = BTreeMap::new();
            let mut test = Vec::new();
            for &(id, f) in &usable {
                if f == fold {
                    test.push(id);
                } else {
                    train_x.insert(id.to_string(), features[id].clone());
                    train_y.insert(id.to_string(), labels[id]);
                }
            }
            let seed = derive_seed(config.seed, &format!("fold/{fold}"));
            let cfg = TrainConfig { seed, ..config.clone() };
            let model = train_probe(&train_x, &train_y, dimension, &cfg)?;
            let mut preds = Vec::with_capacity(test.len());
            for id in &test {
                let dist = predict_dist(&model, &features[*id])?;
                preds.push((id.to_string(), CvPrediction { label: labels[*id], value: dist.mean(), dist, fold }));
            }
            let record = FoldRecord {
                fold,
                train_projects: plan.train_projects(fold),
                test_projects: plan.test_projects(fold).to_vec(),
                seed,
                n_train: model.meta.n_train,
                n_test: preds.len(),
                epochs_run: model.meta.epochs_run,
                initial_loss: model.meta.initial_loss,
                final_loss: model.meta.final_loss,
            };
            Ok((record, preds))
        })
        .collect::<Result<_, _>>()?;

    let mut folds = Vec::with_capacity(per_fold.len());
    let mut predictions = BTreeMap::new();
    for (record, preds) in per_fold {
        folds.push(record);
        predictions.extend(preds);
    }
    Ok(CvOutcome { dimension, predictions, folds, skips })
}
