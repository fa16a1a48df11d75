use std::collections::BTreeMap;
use std::io::BufRead;

use serde::Deserialize;

use super::{FeatureVector, ProbeError};
use crate::Real;

/// Dense vectors keyed by verbatim id, all of the same length.
#[derive(Debug, Clone, PartialEq)]
pub struct EmbeddingTable<F> {
    dim: usize,
    vectors: BTreeMap<String, Vec<F>>,
}

impl<F: Real> EmbeddingTable<F> {
    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.vectors.len()
    }

    pub fn is_empty(&self) -> bool {
        self.vectors.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&[F]> {
        self.vectors.get(id).map(Vec::as_slice)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.vectors.keys().map(String::as_str)
    }

    pub fn to_features(&self) -> BTreeMap<String, FeatureVector<F>> {
        self.vectors.iter().map(|(id, v)| (id.clone(), FeatureVector::from_dense(v))).collect()
    }
}

#[derive(Deserialize)]
struct Line {
    id: String,
    vec: Vec<f64>,
}

/// Reads `{"id": ..., "vec": [...]}` lines. Blank lines are skipped.
pub fn load_embeddings<F: Real, R: BufRead>(reader: R) -> Result<EmbeddingTable<F>, ProbeError> {
    let mut dim = None;
    let mut vectors = BTreeMap::new();
    for (idx, line) in reader.lines().enumerate() {
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: Line =
            serde_json::from_str(&line).map_err(|e| ProbeError::Malformed { line: idx + 1, message: e.to_string() })?;
        let expected = *dim.get_or_insert(parsed.vec.len());
        if parsed.vec.len() != expected {
            return Err(ProbeError::DimensionMismatch { id: parsed.id, expected, found: parsed.vec.len() });
        }
        let values: Vec<F> = parsed.vec.iter().map(|&x| F::from_f64_lossy(x)).collect();
        if values.iter().any(|v| !v.is_finite()) {
            return Err(ProbeError::NonFinite { id: parsed.id });
        }
        if vectors.contains_key(&parsed.id) {
            return Err(ProbeError::DuplicateId(parsed.id));
        }
        vectors.insert(parsed.id, values);
    }
    Ok(EmbeddingTable { dim: dim.unwrap_or(0), vectors })
}
