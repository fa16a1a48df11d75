//! Krippendorff's alpha over three projections of the annotation values.
//!
//! * Global: raw values in {-1, 0, 1}.
//! * Polarity: zeros become missing, so only the sign of marked votes counts.
//! * Pertinence: any nonzero becomes 1, so only presence vs. absence counts.

mod alpha;

use std::fmt;
use std::io::Write;
use std::str::FromStr;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::corpus::{AnnotationValue, Corpus, Dimension};
use crate::Scalar;

pub use alpha::{coincidence_matrix, krippendorff_alpha, AlphaResult, CoincidenceMatrix};

#[derive(Debug, Clone, Error, PartialEq, Eq)]
pub enum AgreementError {
    #[error("insufficient paired data: no unit has two or more values")]
    InsufficientPairedData,
    #[error("reliability data has no units")]
    NoUnits,
    #[error("expected {expected} cells ({units} units x {coders} coders), got {got}")]
    Shape { units: usize, coders: usize, expected: usize, got: usize },
    #[error("value {value} outside declared domain {domain:?}")]
    OutOfDomain { value: i8, domain: Vec<i8> },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Modality {
    Global,
    Polarity,
    Pertinence,
}

impl Modality {
    pub const ALL: [Modality; 3] = [Modality::Global, Modality::Polarity, Modality::Pertinence];

    pub fn domain(self) -> &'static [i8] {
        match self {
            Modality::Global => &[-1, 0, 1],
            Modality::Polarity => &[-1, 1],
            Modality::Pertinence => &[0, 1],
        }
    }

    pub fn project(self, v: AnnotationValue) -> Option<i8> {
        let x = v.as_i8();
        match self {
            Modality::Global => Some(x),
            Modality::Polarity => (x != 0).then_some(x),
            Modality::Pertinence => Some((x != 0) as i8),
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Modality::Global => "global",
            Modality::Polarity => "polarity",
            Modality::Pertinence => "pertinence",
        }
    }
}

impl fmt::Display for Modality {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum DistanceMetric {
    #[default]
    Nominal,
    Interval,
}

impl DistanceMetric {
    /// Squared difference between two values.
    pub fn delta2<T: Scalar>(self, c: i8, k: i8) -> T {
        match self {
            DistanceMetric::Nominal => {
                if c == k {
                    T::zero()
                } else {
                    T::one()
                }
            }
            DistanceMetric::Interval => {
                let d = c as i64 - k as i64;
                T::from_int(d * d)
            }
        }
    }
}

impl FromStr for DistanceMetric {
    type Err = String;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "nominal" => Ok(DistanceMetric::Nominal),
            "interval" => Ok(DistanceMetric::Interval),
            other => Err(format!("unknown metric '{other}' (expected nominal or interval)")),
        }
    }
}

/// Units x coders table of optional values from a small declared domain.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ReliabilityData {
    unit_ids: Vec<String>,
    coder_ids: Vec<String>,
    domain: Vec<i8>,
    cells: Vec<Option<i8>>,
}

impl ReliabilityData {
    /// `cells` is row-major: `cells[u * coders + c]`.
    pub fn new(
        unit_ids: Vec<String>,
        coder_ids: Vec<String>,
        mut domain: Vec<i8>,
        cells: Vec<Option<i8>>,
    ) -> Result<Self, AgreementError> {
        if unit_ids.is_empty() {
            return Err(AgreementError::NoUnits);
        }
        let expected = unit_ids.len() * coder_ids.len();
        if cells.len() != expected {
            return Err(AgreementError::Shape {
                units: unit_ids.len(),
                coders: coder_ids.len(),
                expected,
                got: cells.len(),
            });
        }
        domain.sort_unstable();
        domain.dedup();
        if let Some(&value) = cells.iter().flatten().find(|v| domain.binary_search(v).is_err()) {
            return Err(AgreementError::OutOfDomain { value, domain });
        }
        Ok(ReliabilityData { unit_ids, coder_ids, domain, cells })
    }

    /// Builds a table with generated ids `u0..`, `c0..` from rows of cells.
    pub fn from_rows(domain: Vec<i8>, rows: &[Vec<Option<i8>>]) -> Result<Self, AgreementError> {
        let coders = rows.first().map_or(0, Vec::len);
        Self::new(
            (0..rows.len()).map(|i| format!("u{i}")).collect(),
            (0..coders).map(|i| format!("c{i}")).collect(),
            domain,
            rows.iter().flatten().copied().collect(),
        )
    }

    pub fn unit_ids(&self) -> &[String] {
        &self.unit_ids
    }

    pub fn coder_ids(&self) -> &[String] {
        &self.coder_ids
    }

    pub fn domain(&self) -> &[i8] {
        &self.domain
    }

    pub fn cell(&self, unit: usize, coder: usize) -> Option<i8> {
        self.cells[unit * self.coder_ids.len() + coder]
    }

    pub fn unit(&self, unit: usize) -> &[Option<i8>] {
        let k = self.coder_ids.len();
        &self.cells[unit * k..(unit + 1) * k]
    }

    pub fn present_cells(&self) -> usize {
        self.cells.iter().flatten().count()
    }
}

/// Units are verbatims and coders are annotators, both in canonical order.
pub fn project_modality(
    corpus: &Corpus,
    dimension: Dimension,
    modality: Modality,
) -> Result<ReliabilityData, AgreementError> {
    let units: Vec<String> = corpus.verbatims().iter().map(|v| v.id.clone()).collect();
    let coders: Vec<String> = corpus.annotators().iter().cloned().collect();
    let mut cells = vec![None; units.len() * coders.len()];
    for (u, v) in corpus.verbatims().iter().enumerate() {
        for r in corpus.records_for(&v.id).iter().filter(|r| r.dimension == dimension) {
            let c = coders.binary_search(&r.annotator_id).expect("annotator set built from records");
            cells[u * coders.len() + c] = modality.project(r.value);
        }
    }
    ReliabilityData::new(units, coders, modality.domain().to_vec(), cells)
}

#[derive(Debug, Clone, PartialEq)]
pub struct ReportCell<T> {
    pub dimension: Dimension,
    pub modality: Modality,
    pub result: Result<AlphaResult<T>, AgreementError>,
}

/// Dimension x modality alpha table in canonical order (F, P, U, L) x
/// (global, polarity, pertinence).
#[derive(Debug, Clone, PartialEq)]
pub struct AgreementReport<T> {
    pub metric: DistanceMetric,
    pub cells: Vec<ReportCell<T>>,
}

impl<T: Scalar> AgreementReport<T> {
    pub fn get(&self, dimension: Dimension, modality: Modality) -> &ReportCell<T> {
        &self.cells[dimension.index() * Modality::ALL.len() + modality as usize]
    }

    /// CSV export: `dimension, modality, alpha, n_units_used, degenerate, error`.
    /// Cells without a defined alpha print `NA`.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["dimension", "modality", "alpha", "n_units_used", "degenerate", "error"])?;
        for cell in &self.cells {
            let (alpha, used, degenerate, error) = match &cell.result {
                Ok(r) => (
                    r.alpha.as_ref().map_or("NA".to_string(), |a| format!("{:.6}", a.to_f64_lossy())),
                    r.n_units_used.to_string(),
                    r.is_degenerate().to_string(),
                    String::new(),
                ),
                Err(e) => ("NA".into(), "0".into(), "false".into(), e.to_string()),
            };
            w.write_record([cell.dimension.to_string(), cell.modality.to_string(), alpha, used, degenerate, error])?;
        }
        w.flush()?;
        Ok(())
    }
}

pub fn agreement_report<T: Scalar>(corpus: &Corpus, metric: DistanceMetric) -> AgreementReport<T> {
    let keys: Vec<(Dimension, Modality)> =
        Dimension::ALL.iter().flat_map(|&d| Modality::ALL.iter().map(move |&m| (d, m))).collect();
    let cells = keys
        .into_par_iter()
        .map(|(dimension, modality)| ReportCell {
            dimension,
            modality,
            result: project_modality(corpus, dimension, modality).and_then(|data| krippendorff_alpha(&data, metric)),
        })
        .collect();
    AgreementReport { metric, cells }
}
