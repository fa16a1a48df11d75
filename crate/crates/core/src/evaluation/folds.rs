use std::collections::BTreeSet;

use rand::seq::SliceRandom;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::EvalError;

/// Disjoint groups of project ids covering every project.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FoldPlan {
    folds: Vec<Vec<String>>,
}

impl FoldPlan {
    /// Checks disjointness and non-emptiness.
    pub fn from_folds(folds: Vec<Vec<String>>) -> Result<Self, EvalError> {
        let mut seen = BTreeSet::new();
        for f in &folds {
            if f.is_empty() {
                return Err(EvalError::FoldCount { requested: folds.len(), projects: seen.len() });
            }
            for p in f {
                if !seen.insert(p.clone()) {
                    return Err(EvalError::ProjectInSeveralFolds(p.clone()));
                }
            }
        }
        if folds.len() < 2 {
            return Err(EvalError::FoldCount { requested: folds.len(), projects: seen.len() });
        }
        Ok(FoldPlan { folds })
    }

    pub fn len(&self) -> usize {
        self.folds.len()
    }

    pub fn is_empty(&self) -> bool {
        self.folds.is_empty()
    }

    pub fn folds(&self) -> &[Vec<String>] {
        &self.folds
    }

    pub fn test_projects(&self, fold: usize) -> &[String] {
        &self.folds[fold]
    }

    pub fn train_projects(&self, fold: usize) -> Vec<String> {
        let mut out: Vec<String> =
            self.folds.iter().enumerate().filter(|(i, _)| *i != fold).flat_map(|(_, f)| f.iter().cloned()).collect();
        out.sort();
        out
    }

    pub fn fold_of(&self, project: &str) -> Option<usize> {
        self.folds.iter().position(|f| f.iter().any(|p| p == project))
    }

    pub fn projects(&self) -> BTreeSet<&str> {
        self.folds.iter().flatten().map(String::as_str).collect()
    }
}

/// Seeded shuffle of the (sorted, deduplicated) projects, then a near-equal
/// split: the first `n % k` folds get one extra project.
pub fn make_folds<S: AsRef<str>>(projects: &[S], fold_count: usize, seed: u64) -> Result<FoldPlan, EvalError> {
    let mut ids: Vec<String> = projects.iter().map(|p| p.as_ref().to_string()).collect();
    ids.sort();
    ids.dedup();
    let n = ids.len();
    if fold_count < 2 || fold_count > n {
        return Err(EvalError::FoldCount { requested: fold_count, projects: n });
    }
    ids.shuffle(&mut ChaCha8Rng::seed_from_u64(seed));
    let (base, extra) = (n / fold_count, n % fold_count);
    let mut folds = Vec::with_capacity(fold_count);
    let mut rest = ids.as_slice();
    for i in 0..fold_count {
        let size = base + usize::from(i < extra);
        let (head, tail) = rest.split_at(size);
        let mut fold = head.to_vec();
        fold.sort();
        folds.push(fold);
        rest = tail;
    }
    Ok(FoldPlan { folds })
}
