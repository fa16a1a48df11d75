use std::collections::{BTreeMap, HashMap, HashSet};
use std::fmt;

use serde::Serialize;

use super::{Corpus, Dimension};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Serialize)]
#[serde(rename_all = "lowercase")]
pub enum Severity {
    Error,
    Warning,
}

/// The entity a finding is about.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum EntityRef {
    Project { id: String },
    Post { id: String },
    Verbatim { id: String },
    Record { verbatim_id: String, annotator_id: String, dimension: Dimension },
}

impl fmt::Display for EntityRef {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EntityRef::Project { id } => write!(f, "project {id}"),
            EntityRef::Post { id } => write!(f, "post {id}"),
            EntityRef::Verbatim { id } => write!(f, "verbatim {id}"),
            EntityRef::Record { verbatim_id, annotator_id, dimension } => {
                write!(f, "annotation {verbatim_id}/{annotator_id}/{dimension}")
            }
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Finding {
    pub severity: Severity,
    pub code: &'static str,
    pub message: String,
    pub entity: EntityRef,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct ValidationReport {
    pub findings: Vec<Finding>,
}

impl ValidationReport {
    pub fn is_empty(&self) -> bool {
        self.findings.is_empty()
    }

    pub fn errors(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Error)
    }

    pub fn warnings(&self) -> impl Iterator<Item = &Finding> {
        self.findings.iter().filter(|f| f.severity == Severity::Warning)
    }

    pub fn has_errors(&self) -> bool {
        self.errors().next().is_some()
    }

    fn push(&mut self, severity: Severity, code: &'static str, entity: EntityRef, message: String) {
        self.findings.push(Finding { severity, code, message, entity });
    }
}

/// Checks every corpus invariant. Problems are reported, never thrown.
///
/// Errors: duplicate ids or records, dangling references, verbatims whose
/// project disagrees with their post's. Warnings: empty text, and verbatims
/// carrying fewer records than the modal per-verbatim record count.
pub fn validate(corpus: &Corpus) -> ValidationReport {
    use Severity::*;
    let mut report = ValidationReport::default();

    let project_ids = unique_ids(
        corpus.projects.iter().map(|p| p.id.as_str()),
        |id| EntityRef::Project { id: id.into() },
        "duplicate-project-id",
        &mut report,
    );
    unique_ids(
        corpus.posts.iter().map(|p| p.id.as_str()),
        |id| EntityRef::Post { id: id.into() },
        "duplicate-post-id",
        &mut report,
    );
    let verbatim_ids = unique_ids(
        corpus.verbatims.iter().map(|v| v.id.as_str()),
        |id| EntityRef::Verbatim { id: id.into() },
        "duplicate-verbatim-id",
        &mut report,
    );

    for post in &corpus.posts {
        if !project_ids.contains(post.project_id.as_str()) {
            report.push(
                Error,
                "dangling-project",
                EntityRef::Post { id: post.id.clone() },
                format!("post references missing project '{}'", post.project_id),
            );
        }
    }

    let post_project: HashMap<&str, &str> =
        corpus.posts.iter().map(|p| (p.id.as_str(), p.project_id.as_str())).collect();
    for v in &corpus.verbatims {
        let entity = || EntityRef::Verbatim { id: v.id.clone() };
        if !project_ids.contains(v.project_id.as_str()) {
            report.push(
                Error,
                "dangling-project",
                entity(),
                format!("verbatim references missing project '{}'", v.project_id),
            );
        }
        match post_project.get(v.post_id.as_str()) {
            None => report.push(
                Error,
                "dangling-post",
                entity(),
                format!("verbatim references missing post '{}'", v.post_id),
            ),
            Some(&pp) if pp != v.project_id => report.push(
                Error,
                "project-mismatch",
                entity(),
                format!("verbatim project '{}' differs from post '{}' project '{}'", v.project_id, v.post_id, pp),
            ),
            Some(_) => {}
        }
        if v.text.is_empty() {
            report.push(Warning, "empty-text", entity(), "verbatim text is empty".into());
        }
    }

    let mut seen = HashSet::new();
    let mut per_verbatim: HashMap<&str, usize> = HashMap::new();
    for r in &corpus.records {
        let entity = || EntityRef::Record {
            verbatim_id: r.verbatim_id.clone(),
            annotator_id: r.annotator_id.clone(),
            dimension: r.dimension,
        };
        if !verbatim_ids.contains(r.verbatim_id.as_str()) {
            report.push(
                Error,
                "dangling-verbatim",
                entity(),
                format!("annotation references missing verbatim '{}'", r.verbatim_id),
            );
        }
        if !seen.insert(r.sort_key()) {
            report.push(
                Error,
                "duplicate-record",
                entity(),
                "more than one annotation for this (verbatim, annotator, dimension)".into(),
            );
        }
        *per_verbatim.entry(r.verbatim_id.as_str()).or_default() += 1;
    }

    let counts: Vec<usize> =
        corpus.verbatims.iter().map(|v| per_verbatim.get(v.id.as_str()).copied().unwrap_or(0)).collect();
    if let Some(modal) = modal_count(&counts) {
        for (v, &n) in corpus.verbatims.iter().zip(&counts) {
            if n < modal {
                report.push(
                    Warning,
                    "incomplete-coverage",
                    EntityRef::Verbatim { id: v.id.clone() },
                    format!("incomplete coverage: {n} of {modal} records"),
                );
            }
        }
    }

    report
}

fn unique_ids<'a>(
    ids: impl Iterator<Item = &'a str>,
    entity: impl Fn(&str) -> EntityRef,
    code: &'static str,
    report: &mut ValidationReport,
) -> HashSet<&'a str> {
    let mut set = HashSet::new();
    for id in ids {
        if !set.insert(id) {
            report.push(Severity::Error, code, entity(id), format!("id '{id}' declared twice"));
        }
    }
    set
}

/// Most frequent value; ties resolve to the larger count.
fn modal_count(counts: &[usize]) -> Option<usize> {
    let mut freq: BTreeMap<usize, usize> = BTreeMap::new();
    for &c in counts {
        *freq.entry(c).or_default() += 1;
    }
    freq.into_iter().max_by(|a, b| a.1.cmp(&b.1).then(a.0.cmp(&b.0))).map(|(c, _)| c)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AnnotationRecord, AnnotationValue, Post, Project, Verbatim};

    fn fixture(annotators_per_verbatim: &[usize]) -> (Vec<Project>, Vec<Post>, Vec<Verbatim>, Vec<AnnotationRecord>) {
        let projects = vec![Project { id: "p1".into(), name: "P1".into() }];
        let posts = vec![Post { id: "s1".into(), project_id: "p1".into(), participant_id: "u1".into() }];
        let mut verbatims = vec![];
        let mut records = vec![];
        for (i, &n) in annotators_per_verbatim.iter().enumerate() {
            let vid = format!("v{i}");
            verbatims.push(Verbatim {
                id: vid.clone(),
                project_id: "p1".into(),
                post_id: "s1".into(),
                position: i as u64,
                text: "texte".into(),
            });
            for a in 0..n {
                for d in Dimension::ALL {
                    records.push(AnnotationRecord {
                        verbatim_id: vid.clone(),
                        annotator_id: format!("a{a}"),
                        dimension: d,
                        value: AnnotationValue::Zero,
                    });
                }
            }
        }
        (projects, posts, verbatims, records)
    }

    #[test]
    fn consistent_corpus_has_empty_report() {
        let (p, s, v, r) = fixture(&[6, 6, 6]);
        assert!(validate(&Corpus::from_parts(p, s, v, r)).is_empty());
    }

    #[test]
    fn five_of_six_annotators_warns() {
        let (p, s, v, r) = fixture(&[6, 6, 5, 6]);
        let report = validate(&Corpus::from_parts(p, s, v, r));
        assert!(!report.has_errors());
        let w: Vec<_> = report.warnings().collect();
        assert_eq!(w.len(), 1);
        assert_eq!(w[0].code, "incomplete-coverage");
        assert_eq!(w[0].entity, EntityRef::Verbatim { id: "v2".into() });
        assert!(w[0].message.contains("incomplete coverage"));
    }

    #[test]
    fn dangling_record_is_an_error_with_its_id() {
        let (p, s, v, mut r) = fixture(&[2]);
        r.push(AnnotationRecord {
            verbatim_id: "ghost".into(),
            annotator_id: "a0".into(),
            dimension: Dimension::Utility,
            value: AnnotationValue::Positive,
        });
        let report = validate(&Corpus::from_parts(p, s, v, r));
        let errs: Vec<_> = report.errors().collect();
        assert_eq!(errs.len(), 1);
        assert_eq!(errs[0].code, "dangling-verbatim");
        assert!(errs[0].entity.to_string().contains("ghost"));
    }

    #[test]
    fn duplicates_and_mismatches_are_errors() {
        let (mut p, mut s, mut v, mut r) = fixture(&[1]);
        p.push(Project { id: "p2".into(), name: "P2".into() });
        s.push(Post { id: "s2".into(), project_id: "p2".into(), participant_id: "u".into() });
        v[0].post_id = "s2".into();
        r.push(r[0].clone());
        v.push(Verbatim { text: String::new(), ..v[0].clone() });
        let report = validate(&Corpus::from_parts(p, s, v, r));
        let codes: BTreeMap<&str, usize> = report.findings.iter().fold(BTreeMap::new(), |mut m, f| {
            *m.entry(f.code).or_default() += 1;
            m
        });
        assert_eq!(codes.get("duplicate-verbatim-id"), Some(&1));
        assert_eq!(codes.get("duplicate-record"), Some(&1));
        assert_eq!(codes.get("project-mismatch"), Some(&2));
        assert_eq!(codes.get("empty-text"), Some(&1));
    }

    #[test]
    fn modal_ties_prefer_larger_count() {
        assert_eq!(modal_count(&[4, 4, 8, 8]), Some(8));
        assert_eq!(modal_count(&[4, 4, 4, 8]), Some(4));
        assert_eq!(modal_count(&[]), None);
    }
}
