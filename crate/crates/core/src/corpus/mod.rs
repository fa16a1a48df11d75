//! Corpus data model: projects, posts, verbatims and per-annotator judgments.

mod io;
mod stats;
mod validate;

use std::collections::BTreeSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};
use thiserror::Error;

pub use io::{load_corpus, parse_corpus, write_corpus, ParsedCorpus};
pub use stats::{descriptive_stats, write_stats_csv, CorpusStats, DimensionStats, GroupStats};
pub use validate::{validate, EntityRef, Finding, Severity, ValidationReport};

/// The four appraisal dimensions, in canonical report order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum Dimension {
    #[serde(rename = "F")]
    Familiarity,
    #[serde(rename = "P")]
    Pleasantness,
    #[serde(rename = "U")]
    Utility,
    #[serde(rename = "L")]
    Legitimacy,
}

impl Dimension {
    pub const ALL: [Dimension; 4] =
        [Dimension::Familiarity, Dimension::Pleasantness, Dimension::Utility, Dimension::Legitimacy];

    pub fn code(self) -> &'static str {
        match self {
            Dimension::Familiarity => "F",
            Dimension::Pleasantness => "P",
            Dimension::Utility => "U",
            Dimension::Legitimacy => "L",
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Dimension::Familiarity => "Familiarity",
            Dimension::Pleasantness => "Pleasantness",
            Dimension::Utility => "Utility",
            Dimension::Legitimacy => "Legitimacy",
        }
    }

    pub fn index(self) -> usize {
        self as usize
    }
}

impl fmt::Display for Dimension {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.code())
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("unknown dimension '{0}' (expected F, P, U or L)")]
pub struct ParseDimensionError(String);

impl FromStr for Dimension {
    type Err = ParseDimensionError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        match s {
            "F" => Ok(Dimension::Familiarity),
            "P" => Ok(Dimension::Pleasantness),
            "U" => Ok(Dimension::Utility),
            "L" => Ok(Dimension::Legitimacy),
            other => Err(ParseDimensionError(other.to_string())),
        }
    }
}

/// One judgment: dimension expressed negatively, absent, or positively.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(try_from = "i64", into = "i8")]
pub enum AnnotationValue {
    Negative,
    Zero,
    Positive,
}

impl AnnotationValue {
    pub fn as_i8(self) -> i8 {
        match self {
            AnnotationValue::Negative => -1,
            AnnotationValue::Zero => 0,
            AnnotationValue::Positive => 1,
        }
    }

    pub fn is_nonzero(self) -> bool {
        self != AnnotationValue::Zero
    }

    pub fn flipped(self) -> Self {
        match self {
            AnnotationValue::Negative => AnnotationValue::Positive,
            AnnotationValue::Zero => AnnotationValue::Zero,
            AnnotationValue::Positive => AnnotationValue::Negative,
        }
    }
}

#[derive(Debug, Error, PartialEq, Eq)]
#[error("annotation value {0} is not one of -1, 0, 1")]
pub struct ValueOutOfDomain(pub i64);

impl TryFrom<i64> for AnnotationValue {
    type Error = ValueOutOfDomain;

    fn try_from(v: i64) -> Result<Self, Self::Error> {
        match v {
            -1 => Ok(AnnotationValue::Negative),
            0 => Ok(AnnotationValue::Zero),
            1 => Ok(AnnotationValue::Positive),
            other => Err(ValueOutOfDomain(other)),
        }
    }
}

impl From<AnnotationValue> for i8 {
    fn from(v: AnnotationValue) -> i8 {
        v.as_i8()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Project {
    pub id: String,
    pub name: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Post {
    pub id: String,
    pub project_id: String,
    pub participant_id: String,
}

/// A pre-segmented text span, the unit of annotation. Text is kept as given.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Verbatim {
    pub id: String,
    pub project_id: String,
    pub post_id: String,
    pub position: u64,
    pub text: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub verbatim_id: String,
    pub annotator_id: String,
    pub dimension: Dimension,
    pub value: AnnotationValue,
}

impl AnnotationRecord {
    fn sort_key(&self) -> (&str, &str, Dimension) {
        (&self.verbatim_id, &self.annotator_id, self.dimension)
    }
}

#[derive(Debug, Error)]
pub enum CorpusError {
    #[error("read failure: {0}")]
    Io(#[from] std::io::Error),
    #[error("line {line}: malformed record: {message}")]
    Malformed { line: usize, message: String },
    #[error("line {line}: {source}")]
    ValueOutOfDomain {
        line: usize,
        #[source]
        source: ValueOutOfDomain,
    },
    #[error("line {line}: duplicate {kind} id '{id}'")]
    DuplicateId { line: usize, kind: &'static str, id: String },
    #[error("line {line}: duplicate annotation for verbatim '{verbatim_id}', annotator '{annotator_id}', dimension {dimension}")]
    DuplicateRecord { line: usize, verbatim_id: String, annotator_id: String, dimension: Dimension },
    #[error("{}{code} ({entity}): {message}", line.map(|l| format!("line {l}: ")).unwrap_or_default())]
    Invalid { line: Option<usize>, code: &'static str, entity: String, message: String },
    #[error("no verbatims")]
    NoVerbatims,
}

/// An annotated corpus held in canonical order.
///
/// Projects, posts and verbatims are sorted by id; records by
/// (verbatim, annotator, dimension). Two corpora with the same content compare
/// equal regardless of input order. Construction does not check referential
/// integrity; use [`Corpus::try_from_parts`] or [`validate`] for that.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Corpus {
    projects: Vec<Project>,
    posts: Vec<Post>,
    verbatims: Vec<Verbatim>,
    annotators: BTreeSet<String>,
    records: Vec<AnnotationRecord>,
}

impl Corpus {
    pub fn from_parts(
        mut projects: Vec<Project>,
        mut posts: Vec<Post>,
        mut verbatims: Vec<Verbatim>,
        mut records: Vec<AnnotationRecord>,
    ) -> Self {
        projects.sort_by(|a, b| a.id.cmp(&b.id));
        posts.sort_by(|a, b| a.id.cmp(&b.id));
        verbatims.sort_by(|a, b| a.id.cmp(&b.id));
        records.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        let annotators = records.iter().map(|r| r.annotator_id.clone()).collect();
        Corpus { projects, posts, verbatims, annotators, records }
    }

    /// Builds a corpus and rejects it if validation finds any error.
    pub fn try_from_parts(
        projects: Vec<Project>,
        posts: Vec<Post>,
        verbatims: Vec<Verbatim>,
        records: Vec<AnnotationRecord>,
    ) -> Result<Self, CorpusError> {
        let corpus = Self::from_parts(projects, posts, verbatims, records);
        if let Some(f) = validate(&corpus).errors().next() {
            return Err(CorpusError::Invalid {
                line: None,
                code: f.code,
                entity: f.entity.to_string(),
                message: f.message.clone(),
            });
        }
        Ok(corpus)
    }

    pub fn projects(&self) -> &[Project] {
        &self.projects
    }

    pub fn posts(&self) -> &[Post] {
        &self.posts
    }

    pub fn verbatims(&self) -> &[Verbatim] {
        &self.verbatims
    }

    pub fn annotators(&self) -> &BTreeSet<String> {
        &self.annotators
    }

    pub fn records(&self) -> &[AnnotationRecord] {
        &self.records
    }

    pub fn is_empty(&self) -> bool {
        self.projects.is_empty() && self.posts.is_empty() && self.verbatims.is_empty() && self.records.is_empty()
    }

    pub fn project(&self, id: &str) -> Option<&Project> {
        self.projects.binary_search_by(|p| p.id.as_str().cmp(id)).ok().map(|i| &self.projects[i])
    }

    pub fn post(&self, id: &str) -> Option<&Post> {
        self.posts.binary_search_by(|p| p.id.as_str().cmp(id)).ok().map(|i| &self.posts[i])
    }

    pub fn verbatim(&self, id: &str) -> Option<&Verbatim> {
        self.verbatims.binary_search_by(|v| v.id.as_str().cmp(id)).ok().map(|i| &self.verbatims[i])
    }

    /// All records attached to one verbatim.
    pub fn records_for(&self, verbatim_id: &str) -> &[AnnotationRecord] {
        let start = self.records.partition_point(|r| r.verbatim_id.as_str() < verbatim_id);
        let end = start + self.records[start..].partition_point(|r| r.verbatim_id.as_str() == verbatim_id);
        &self.records[start..end]
    }

    pub fn value(&self, verbatim_id: &str, annotator_id: &str, dimension: Dimension) -> Option<AnnotationValue> {
        self.records_for(verbatim_id)
            .iter()
            .find(|r| r.annotator_id == annotator_id && r.dimension == dimension)
            .map(|r| r.value)
    }

    pub fn project_ids(&self) -> Vec<String> {
        self.projects.iter().map(|p| p.id.clone()).collect()
    }
}
