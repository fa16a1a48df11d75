//! Soft labels: per-verbatim vote counts collapsed from individual judgments.

use std::collections::BTreeMap;
use std::io::Write;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AnnotationValue, Corpus, Dimension};
use crate::Scalar;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum AggregateError {
    #[error("soft label needs at least one vote")]
    NoVotes,
    #[error("no labelled verbatims for dimension {0}")]
    Empty(Dimension),
    #[error(
        "verbatims carry different annotator counts {counts:?}; use gradient_histograms_by_m for per-m sub-histograms"
    )]
    MixedAnnotatorCounts { counts: Vec<u32> },
}

/// Exact vote counts for one (verbatim, dimension). Never empty.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct SoftLabel {
    n_neg: u32,
    n_zero: u32,
    n_pos: u32,
}

impl SoftLabel {
    pub fn from_counts(n_neg: u32, n_zero: u32, n_pos: u32) -> Result<Self, AggregateError> {
        if n_neg + n_zero + n_pos == 0 {
            return Err(AggregateError::NoVotes);
        }
        Ok(SoftLabel { n_neg, n_zero, n_pos })
    }

    pub fn from_votes<I: IntoIterator<Item = AnnotationValue>>(votes: I) -> Result<Self, AggregateError> {
        let (mut n, mut z, mut p) = (0, 0, 0);
        for v in votes {
            match v {
                AnnotationValue::Negative => n += 1,
                AnnotationValue::Zero => z += 1,
                AnnotationValue::Positive => p += 1,
            }
        }
        Self::from_counts(n, z, p)
    }

    pub fn counts(&self) -> (u32, u32, u32) {
        (self.n_neg, self.n_zero, self.n_pos)
    }

    /// Number of contributing votes.
    pub fn m(&self) -> u32 {
        self.n_neg + self.n_zero + self.n_pos
    }

    pub fn proportions<T: Scalar>(&self) -> SoftDistribution<T> {
        let m = self.m() as i64;
        SoftDistribution {
            p_neg: T::ratio(self.n_neg as i64, m),
            p_zero: T::ratio(self.n_zero as i64, m),
            p_pos: T::ratio(self.n_pos as i64, m),
        }
    }

    /// Mean vote `(n_pos - n_neg) / m`, in [-1, 1].
    pub fn mean<T: Scalar>(&self) -> T {
        T::ratio(self.level_numerator(), self.m() as i64)
    }

    /// Numerator `k` of the mean level `k / m`.
    pub fn level_numerator(&self) -> i64 {
        self.n_pos as i64 - self.n_neg as i64
    }

    /// Position of the mean on the `2m + 1` level grid, 0 = all negative.
    pub fn level_index(&self) -> usize {
        (self.level_numerator() + self.m() as i64) as usize
    }
}

/// A distribution over (negative, zero, positive).
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SoftDistribution<T> {
    pub p_neg: T,
    pub p_zero: T,
    pub p_pos: T,
}

impl<T: Scalar> SoftDistribution<T> {
    pub fn new(p_neg: T, p_zero: T, p_pos: T) -> Self {
        SoftDistribution { p_neg, p_zero, p_pos }
    }

    pub fn as_array(&self) -> [T; 3] {
        [self.p_neg.clone(), self.p_zero.clone(), self.p_pos.clone()]
    }

    pub fn mean(&self) -> T {
        mean_value(self)
    }
}

/// Expected vote of a distribution: `p_pos - p_neg`.
pub fn mean_value<T: Scalar>(label: &SoftDistribution<T>) -> T {
    label.p_pos.clone() - label.p_neg.clone()
}

/// Soft labels for every verbatim with at least one record on `dimension`.
pub fn aggregate(corpus: &Corpus, dimension: Dimension) -> BTreeMap<String, SoftLabel> {
    let mut counts: BTreeMap<&str, [u32; 3]> = BTreeMap::new();
    for r in corpus.records().iter().filter(|r| r.dimension == dimension) {
        counts.entry(r.verbatim_id.as_str()).or_default()[(r.value.as_i8() + 1) as usize] += 1;
    }
    counts.into_iter().map(|(id, [n, z, p])| (id.to_string(), SoftLabel { n_neg: n, n_zero: z, n_pos: p })).collect()
}

/// Verbatim counts over the `2m + 1` exact mean levels `k/m`, `k` in `[-m, m]`.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct GradientHistogram {
    pub dimension: Dimension,
    pub m: u32,
    /// `counts[i]` is the number of verbatims at level `(i - m) / m`.
    pub counts: Vec<usize>,
}

impl GradientHistogram {
    fn from_labels<'a>(dimension: Dimension, m: u32, labels: impl Iterator<Item = &'a SoftLabel>) -> Self {
        let mut counts = vec![0; 2 * m as usize + 1];
        for l in labels {
            counts[l.level_index()] += 1;
        }
        GradientHistogram { dimension, m, counts }
    }

    pub fn level<T: Scalar>(&self, index: usize) -> T {
        T::ratio(index as i64 - self.m as i64, self.m as i64)
    }

    pub fn count_at(&self, numerator: i64) -> usize {
        let idx = numerator + self.m as i64;
        if idx < 0 {
            return 0;
        }
        self.counts.get(idx as usize).copied().unwrap_or(0)
    }

    pub fn total(&self) -> usize {
        self.counts.iter().sum()
    }
}

pub fn gradient_histogram(corpus: &Corpus, dimension: Dimension) -> Result<GradientHistogram, AggregateError> {
    let mut by_m = gradient_histograms_by_m(corpus, dimension);
    match by_m.len() {
        0 => Err(AggregateError::Empty(dimension)),
        1 => Ok(by_m.pop_first().unwrap().1),
        _ => Err(AggregateError::MixedAnnotatorCounts { counts: by_m.keys().copied().collect() }),
    }
}

/// One histogram per distinct vote count `m`.
pub fn gradient_histograms_by_m(corpus: &Corpus, dimension: Dimension) -> BTreeMap<u32, GradientHistogram> {
    let labels = aggregate(corpus, dimension);
    let mut by_m: BTreeMap<u32, Vec<&SoftLabel>> = BTreeMap::new();
    for l in labels.values() {
        by_m.entry(l.m()).or_default().push(l);
    }
    by_m.into_iter().map(|(m, ls)| (m, GradientHistogram::from_labels(dimension, m, ls.into_iter()))).collect()
}

/// CSV export: `verbatim_id, dimension, m, n_neg, n_zero, n_pos, mean`.
pub fn write_aggregate_csv<'a, W: Write>(
    rows: impl IntoIterator<Item = (Dimension, &'a BTreeMap<String, SoftLabel>)>,
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["verbatim_id", "dimension", "m", "n_neg", "n_zero", "n_pos", "mean"])?;
    for (dim, labels) in rows {
        for (id, l) in labels {
            let (n, z, p) = l.counts();
            w.write_record([
                id.clone(),
                dim.to_string(),
                l.m().to_string(),
                n.to_string(),
                z.to_string(),
                p.to_string(),
                format!("{:.6}", l.mean::<f64>()),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}

/// CSV export: `dimension, m, k, level, count`, one row per grid level.
pub fn write_histogram_csv<'a, W: Write>(
    histograms: impl IntoIterator<Item = &'a GradientHistogram>,
    out: W,
) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["dimension", "m", "k", "level", "count"])?;
    for h in histograms {
        for (i, c) in h.counts.iter().enumerate() {
            w.write_record([
                h.dimension.to_string(),
                h.m.to_string(),
                (i as i64 - h.m as i64).to_string(),
                format!("{:.6}", h.level::<f64>(i)),
                c.to_string(),
            ])?;
        }
    }
    w.flush()?;
    Ok(())
}
