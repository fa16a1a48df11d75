use std::collections::{BTreeMap, HashMap};

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::ProbeError;
use crate::corpus::Corpus;
use crate::seed::fnv1a64;
use crate::Real;

/// Hash applied to the UTF-8 bytes of each n-gram.
pub const HASH_FUNCTION: &str = "fnv1a-64";
pub const FEATURIZER_VERSION: &str = "char-ngram-hash/1";

/// Sparse vector with sorted, unique indices in `[0, dim)`.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureVector<F> {
    dim: usize,
    entries: Vec<(u32, F)>,
}

impl<F: Real> FeatureVector<F> {
    /// Duplicate indices are summed; zero weights are dropped.
    pub fn new(dim: usize, mut entries: Vec<(u32, F)>) -> Result<Self, ProbeError> {
        entries.sort_by_key(|e| e.0);
        let mut merged: Vec<(u32, F)> = Vec::with_capacity(entries.len());
        for (i, w) in entries {
            if i as usize >= dim {
                return Err(ProbeError::IndexOutOfRange { index: i as usize, dim });
            }
            if !w.is_finite() {
                return Err(ProbeError::NonFinite { id: format!("index {i}") });
            }
            match merged.last_mut() {
                Some(last) if last.0 == i => last.1 = last.1 + w,
                _ => merged.push((i, w)),
            }
        }
        merged.retain(|e| e.1 != F::zero());
        Ok(FeatureVector { dim, entries: merged })
    }

    pub fn zeros(dim: usize) -> Self {
        FeatureVector { dim, entries: Vec::new() }
    }

    pub fn from_dense(values: &[F]) -> Self {
        let entries =
            values.iter().enumerate().filter(|(_, v)| **v != F::zero()).map(|(i, &v)| (i as u32, v)).collect();
        FeatureVector { dim: values.len(), entries }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn entries(&self) -> &[(u32, F)] {
        &self.entries
    }

    pub fn is_zero(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn norm(&self) -> F {
        self.entries.iter().map(|e| e.1 * e.1).fold(F::zero(), |a, b| a + b).sqrt()
    }

    pub fn to_dense(&self) -> Vec<F> {
        let mut out = vec![F::zero(); self.dim];
        for &(i, w) in &self.entries {
            out[i as usize] = w;
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(default)]
pub struct FeaturizerConfig {
    pub ngram_min: usize,
    pub ngram_max: usize,
    /// Power of two.
    pub buckets: usize,
    pub signed: bool,
    pub lowercase: bool,
}

impl Default for FeaturizerConfig {
    fn default() -> Self {
        FeaturizerConfig { ngram_min: 3, ngram_max: 5, buckets: 1 << 15, signed: true, lowercase: true }
    }
}

impl FeaturizerConfig {
    pub fn validate(&self) -> Result<(), ProbeError> {
        if self.ngram_min < 1 || self.ngram_min > self.ngram_max {
            return Err(ProbeError::InvalidConfig(format!(
                "need 1 <= ngram_min <= ngram_max, got {}..{}",
                self.ngram_min, self.ngram_max
            )));
        }
        if self.buckets < 2 || !self.buckets.is_power_of_two() || self.buckets > 1 << 31 {
            return Err(ProbeError::InvalidConfig(format!(
                "buckets must be a power of two in [2, 2^31], got {}",
                self.buckets
            )));
        }
        Ok(())
    }
}

/// Identity of the featurizer, recorded in saved models.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct FeaturizerInfo {
    pub hash: String,
    pub version: String,
    pub config: FeaturizerConfig,
}

impl From<FeaturizerConfig> for FeaturizerInfo {
    fn from(config: FeaturizerConfig) -> Self {
        FeaturizerInfo { hash: HASH_FUNCTION.into(), version: FEATURIZER_VERSION.into(), config }
    }
}

/// Character n-gram hashing: every n-gram with `n` in
/// `[ngram_min, ngram_max]` hashes to `h mod buckets` and adds `+1` (or `-1`
/// when signed and the top hash bit is set). The result is L2-normalized.
///
/// Panics if `config` is invalid; call [`FeaturizerConfig::validate`] first.
pub fn hash_featurize<F: Real>(text: &str, config: &FeaturizerConfig) -> FeatureVector<F> {
    config.validate().expect("valid featurizer config");
    let owned;
    let text = if config.lowercase {
        owned = text.to_lowercase();
        owned.as_str()
    } else {
        text
    };
    let chars: Vec<char> = text.chars().collect();
    let mask = (config.buckets - 1) as u64;
    let mut counts: HashMap<u32, i64> = HashMap::new();
    let mut buf = String::new();
    for n in config.ngram_min..=config.ngram_max {
        for window in chars.windows(n) {
            buf.clear();
            buf.extend(window);
            let h = fnv1a64(buf.as_bytes());
            let sign = if config.signed && (h >> 63) == 1 { -1 } else { 1 };
            *counts.entry((h & mask) as u32).or_default() += sign;
        }
    }
    let mut entries: Vec<(u32, i64)> = counts.into_iter().filter(|e| e.1 != 0).collect();
    entries.sort_unstable_by_key(|e| e.0);
    let sq: i64 = entries.iter().map(|e| e.1 * e.1).sum();
    if sq == 0 {
        return FeatureVector::zeros(config.buckets);
    }
    let norm = F::from_i64(sq).expect("finite").sqrt();
    FeatureVector {
        dim: config.buckets,
        entries: entries.into_iter().map(|(i, c)| (i, F::from_i64(c).expect("finite") / norm)).collect(),
    }
}

/// Hash features for every verbatim in the corpus.
pub fn featurize_corpus<F: Real>(corpus: &Corpus, config: &FeaturizerConfig) -> BTreeMap<String, FeatureVector<F>> {
    corpus
        .verbatims()
        .par_iter()
        .map(|v| (v.id.clone(), hash_featurize(&v.text, config)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_text_is_zero() {
        let v: FeatureVector<f64> = hash_featurize("", &FeaturizerConfig::default());
        assert!(v.is_zero());
        assert_eq!(v.dim(), 1 << 15);
        let short: FeatureVector<f64> = hash_featurize("ab", &FeaturizerConfig::default());
        assert!(short.is_zero());
    }

    #[test]
    fn abcd_has_three_ngrams_and_unit_norm() {
        let cfg = FeaturizerConfig { ngram_min: 3, ngram_max: 4, signed: false, ..Default::default() };
        let v: FeatureVector<f64> = hash_featurize("abcd", &cfg);
        let mask = (cfg.buckets - 1) as u64;
        let mut expected: Vec<u32> =
            ["abc", "bcd", "abcd"].iter().map(|g| (fnv1a64(g.as_bytes()) & mask) as u32).collect();
        expected.sort();
        expected.dedup();
        assert_eq!(v.entries().iter().map(|e| e.0).collect::<Vec<_>>(), expected);
        let total: f64 = v.entries().iter().map(|e| e.1).sum();
        // Three unit counts before normalization.
        assert!((total - 3.0 / 3f64.sqrt()).abs() < 1e-12);
        assert!((v.norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn deterministic_and_case_folded() {
        let cfg = FeaturizerConfig::default();
        let a: FeatureVector<f64> = hash_featurize("Très utile, vraiment.", &cfg);
        let b: FeatureVector<f64> = hash_featurize("Très utile, vraiment.", &cfg);
        let c: FeatureVector<f64> = hash_featurize("TRÈS UTILE, VRAIMENT.", &cfg);
        assert_eq!(a, b);
        assert_eq!(a, c);
        let cased = FeaturizerConfig { lowercase: false, ..cfg };
        assert_ne!(hash_featurize::<f64>("ABCDE", &cased), hash_featurize::<f64>("abcde", &cased));
    }

    #[test]
    fn pinned_bucket_layout() {
        // Guards the hash identity across platforms and releases.
        let cfg = FeaturizerConfig { ngram_min: 3, ngram_max: 3, buckets: 1 << 15, signed: true, lowercase: true };
        let h = fnv1a64(b"abc");
        assert_eq!(h, 0xe71fa2190541574b);
        let v: FeatureVector<f64> = hash_featurize("abc", &cfg);
        assert_eq!(v.entries(), &[((h & 0x7fff) as u32, -1.0)]);
    }

    #[test]
    fn config_validation() {
        assert!(FeaturizerConfig::default().validate().is_ok());
        assert!(FeaturizerConfig { ngram_min: 0, ..Default::default() }.validate().is_err());
        assert!(FeaturizerConfig { ngram_min: 6, ..Default::default() }.validate().is_err());
        assert!(FeaturizerConfig { buckets: 1000, ..Default::default() }.validate().is_err());
        assert!(FeaturizerConfig { buckets: 1, ..Default::default() }.validate().is_err());
    }

    #[test]
    fn sparse_vector_construction() {
        let v = FeatureVector::<f64>::new(4, vec![(2, 1.0), (0, 2.0), (2, -1.0)]).unwrap();
        assert_eq!(v.entries(), &[(0, 2.0)]);
        assert!(FeatureVector::<f64>::new(4, vec![(4, 1.0)]).is_err());
        assert!(FeatureVector::<f64>::new(4, vec![(1, f64::NAN)]).is_err());
        assert_eq!(FeatureVector::from_dense(&[0.0, 3.0]).to_dense(), vec![0.0, 3.0]);
    }
}
