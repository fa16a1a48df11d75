//! Line-delimited JSON corpus format.
//!
//! ```text
//! {"kind":"project","id":...,"name":...}
//! {"kind":"post","id":...,"project_id":...,"participant_id":...}
//! {"kind":"verbatim","id":...,"post_id":...,"project_id":...,"position":N,"text":"..."}
//! {"kind":"annotation","verbatim_id":...,"annotator_id":...,"dimension":"F|P|U|L","value":-1|0|1}
//! ```
//!
//! Lines may appear in any order; references are resolved at end of stream.

use std::collections::{HashMap, HashSet};
use std::io::{BufRead, Write};

use serde::{Deserialize, Serialize};

use super::{
    validate, AnnotationRecord, AnnotationValue, Corpus, CorpusError, Dimension, EntityRef, Post, Project, Verbatim,
};

#[derive(Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum InLine {
    Project(Project),
    Post(Post),
    Verbatim(Verbatim),
    Annotation { verbatim_id: String, annotator_id: String, dimension: Dimension, value: i64 },
}

#[derive(Serialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
enum OutLine<'a> {
    Project(&'a Project),
    Post(&'a Post),
    Verbatim(&'a Verbatim),
    Annotation(&'a AnnotationRecord),
}

/// A corpus parsed without referential checks, remembering the line each
/// entity came from.
#[derive(Debug, Clone)]
pub struct ParsedCorpus {
    pub corpus: Corpus,
    lines: HashMap<EntityRef, usize>,
}

impl ParsedCorpus {
    pub fn line_of(&self, entity: &EntityRef) -> Option<usize> {
        self.lines.get(entity).copied()
    }
}

/// Parses a corpus, rejecting malformed lines, out-of-domain values and
/// duplicate ids or records, but not dangling references.
pub fn parse_corpus<R: BufRead>(reader: R) -> Result<ParsedCorpus, CorpusError> {
    let mut projects = Vec::new();
    let mut posts = Vec::new();
    let mut verbatims = Vec::new();
    let mut records = Vec::new();
    let mut lines: HashMap<EntityRef, usize> = HashMap::new();
    let mut ids: [HashSet<String>; 3] = Default::default();
    let mut record_keys = HashSet::new();

    for (idx, line) in reader.lines().enumerate() {
        let line_no = idx + 1;
        let line = line?;
        if line.trim().is_empty() {
            continue;
        }
        let parsed: InLine = serde_json::from_str(&line)
            .map_err(|e| CorpusError::Malformed { line: line_no, message: e.to_string() })?;
        let mut declare = |slot: usize, kind: &'static str, id: &str, entity: EntityRef| {
            if !ids[slot].insert(id.to_string()) {
                return Err(CorpusError::DuplicateId { line: line_no, kind, id: id.to_string() });
            }
            lines.insert(entity, line_no);
            Ok(())
        };
        match parsed {
            InLine::Project(p) => {
                declare(0, "project", &p.id, EntityRef::Project { id: p.id.clone() })?;
                projects.push(p);
            }
            InLine::Post(p) => {
                declare(1, "post", &p.id, EntityRef::Post { id: p.id.clone() })?;
                posts.push(p);
            }
            InLine::Verbatim(v) => {
                declare(2, "verbatim", &v.id, EntityRef::Verbatim { id: v.id.clone() })?;
                verbatims.push(v);
            }
            InLine::Annotation { verbatim_id, annotator_id, dimension, value } => {
                let value = AnnotationValue::try_from(value)
                    .map_err(|source| CorpusError::ValueOutOfDomain { line: line_no, source })?;
                if !record_keys.insert((verbatim_id.clone(), annotator_id.clone(), dimension)) {
                    return Err(CorpusError::DuplicateRecord { line: line_no, verbatim_id, annotator_id, dimension });
                }
                lines.insert(
                    EntityRef::Record {
                        verbatim_id: verbatim_id.clone(),
                        annotator_id: annotator_id.clone(),
                        dimension,
                    },
                    line_no,
                );
                records.push(AnnotationRecord { verbatim_id, annotator_id, dimension, value });
            }
        }
    }

    Ok(ParsedCorpus { corpus: Corpus::from_parts(projects, posts, verbatims, records), lines })
}

/// Parses and validates a corpus; the first error-severity finding is
/// returned with its line number.
pub fn load_corpus<R: BufRead>(reader: R) -> Result<Corpus, CorpusError> {
    let parsed = parse_corpus(reader)?;
    if let Some(f) = validate(&parsed.corpus).errors().next() {
        return Err(CorpusError::Invalid {
            line: parsed.line_of(&f.entity),
            code: f.code,
            entity: f.entity.to_string(),
            message: f.message.clone(),
        });
    }
    Ok(parsed.corpus)
}

/// Writes the corpus in canonical order: projects, posts, verbatims, annotations.
pub fn write_corpus<W: Write>(corpus: &Corpus, mut out: W) -> std::io::Result<()> {
    let mut emit = |line: OutLine<'_>| -> std::io::Result<()> {
        serde_json::to_writer(&mut out, &line)?;
        out.write_all(b"\n")
    };
    corpus.projects().iter().try_for_each(|p| emit(OutLine::Project(p)))?;
    corpus.posts().iter().try_for_each(|p| emit(OutLine::Post(p)))?;
    corpus.verbatims().iter().try_for_each(|v| emit(OutLine::Verbatim(v)))?;
    corpus.records().iter().try_for_each(|r| emit(OutLine::Annotation(r)))?;
    Ok(())
}
