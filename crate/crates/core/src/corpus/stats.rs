use std::collections::{BTreeMap, HashMap};
use std::io::Write;

use serde::Serialize;

use super::{AnnotationValue, Corpus, CorpusError, Dimension};

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct DimensionStats {
    pub dimension: Dimension,
    pub n_verbatims: usize,
    /// Share of verbatims where no annotator gave a nonzero value.
    pub fraction_unannotated: f64,
    pub fraction_any_negative: f64,
    pub fraction_any_positive: f64,
}

/// Proportions for one (annotator, project, dimension) group, over the
/// verbatims that annotator rated in that project.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct GroupStats {
    pub annotator_id: String,
    pub project_id: String,
    pub dimension: Dimension,
    pub n_verbatims: usize,
    pub proportion_positive: f64,
    pub proportion_negative: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CorpusStats {
    pub per_dimension: Vec<DimensionStats>,
    pub per_group: Vec<GroupStats>,
    /// Share of (verbatim, dimension) pairs with at least one negative vote.
    pub fraction_negative: f64,
}

#[derive(Default, Clone, Copy)]
struct VoteFlags {
    any_neg: bool,
    any_pos: bool,
}

#[derive(Default)]
struct GroupCount {
    n: usize,
    pos: usize,
    neg: usize,
}

pub fn descriptive_stats(corpus: &Corpus) -> Result<CorpusStats, CorpusError> {
    let n = corpus.verbatims().len();
    if n == 0 {
        return Err(CorpusError::NoVerbatims);
    }
    let project_of: HashMap<&str, &str> =
        corpus.verbatims().iter().map(|v| (v.id.as_str(), v.project_id.as_str())).collect();

    let mut flags: HashMap<(&str, Dimension), VoteFlags> = HashMap::new();
    let mut groups: BTreeMap<(&str, &str, Dimension), GroupCount> = BTreeMap::new();
    for r in corpus.records() {
        let Some(&project) = project_of.get(r.verbatim_id.as_str()) else {
            continue;
        };
        let f = flags.entry((r.verbatim_id.as_str(), r.dimension)).or_default();
        let g = groups.entry((r.annotator_id.as_str(), project, r.dimension)).or_default();
        g.n += 1;
        match r.value {
            AnnotationValue::Negative => {
                f.any_neg = true;
                g.neg += 1;
            }
            AnnotationValue::Positive => {
                f.any_pos = true;
                g.pos += 1;
            }
            AnnotationValue::Zero => {}
        }
    }

    let frac = |k: usize, total: usize| k as f64 / total as f64;
    let mut total_neg = 0;
    let per_dimension = Dimension::ALL
        .iter()
        .map(|&d| {
            let (mut neg, mut pos, mut marked) = (0, 0, 0);
            for v in corpus.verbatims() {
                let f = flags.get(&(v.id.as_str(), d)).copied().unwrap_or_default();
                neg += f.any_neg as usize;
                pos += f.any_pos as usize;
                marked += (f.any_neg || f.any_pos) as usize;
            }
            total_neg += neg;
            DimensionStats {
                dimension: d,
                n_verbatims: n,
                fraction_unannotated: frac(n - marked, n),
                fraction_any_negative: frac(neg, n),
                fraction_any_positive: frac(pos, n),
            }
        })
        .collect();

    let per_group = groups
        .into_iter()
        .map(|((annotator, project, dimension), g)| GroupStats {
            annotator_id: annotator.to_string(),
            project_id: project.to_string(),
            dimension,
            n_verbatims: g.n,
            proportion_positive: frac(g.pos, g.n),
            proportion_negative: frac(g.neg, g.n),
        })
        .collect();

    Ok(CorpusStats { per_dimension, per_group, fraction_negative: frac(total_neg, n * Dimension::ALL.len()) })
}

/// CSV export: one `dimension` row per dimension, one `global` row, then one
/// `group` row per (annotator, project, dimension).
pub fn write_stats_csv<W: Write>(stats: &CorpusStats, out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record([
        "scope",
        "dimension",
        "annotator_id",
        "project_id",
        "n_verbatims",
        "fraction_unannotated",
        "fraction_any_negative",
        "fraction_any_positive",
        "proportion_positive",
        "proportion_negative",
    ])?;
    let f = |x: f64| format!("{x:.6}");
    for d in &stats.per_dimension {
        w.write_record([
            "dimension".to_string(),
            d.dimension.to_string(),
            String::new(),
            String::new(),
            d.n_verbatims.to_string(),
            f(d.fraction_unannotated),
            f(d.fraction_any_negative),
            f(d.fraction_any_positive),
            String::new(),
            String::new(),
        ])?;
    }
    w.write_record(["global", "", "", "", "", "", &f(stats.fraction_negative), "", "", ""])?;
    for g in &stats.per_group {
        w.write_record([
            "group".to_string(),
            g.dimension.to_string(),
            g.annotator_id.clone(),
            g.project_id.clone(),
            g.n_verbatims.to_string(),
            String::new(),
            String::new(),
            String::new(),
            f(g.proportion_positive),
            f(g.proportion_negative),
        ])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::corpus::{AnnotationRecord, Post, Project, Verbatim};

    /// Four verbatims, two annotators, two projects. Values per
    /// (verbatim, annotator) on Utility; other dimensions all zero.
    fn fixture(utility: &[[i64; 2]; 4]) -> Corpus {
        let projects =
            vec![Project { id: "p1".into(), name: "A".into() }, Project { id: "p2".into(), name: "B".into() }];
        let posts = vec![
            Post { id: "s1".into(), project_id: "p1".into(), participant_id: "u".into() },
            Post { id: "s2".into(), project_id: "p2".into(), participant_id: "u".into() },
        ];
        let mut verbatims = vec![];
        let mut records = vec![];
        for (i, votes) in utility.iter().enumerate() {
            let (proj, post) = if i < 2 { ("p1", "s1") } else { ("p2", "s2") };
            let id = format!("v{i}");
            verbatims.push(Verbatim {
                id: id.clone(),
                project_id: proj.into(),
                post_id: post.into(),
                position: i as u64,
                text: "x".into(),
            });
            for (a, &val) in votes.iter().enumerate() {
                for d in Dimension::ALL {
                    let value = if d == Dimension::Utility { val } else { 0 };
                    records.push(AnnotationRecord {
                        verbatim_id: id.clone(),
                        annotator_id: format!("a{a}"),
                        dimension: d,
                        value: AnnotationValue::try_from(value).unwrap(),
                    });
                }
            }
        }
        Corpus::try_from_parts(projects, posts, verbatims, records).unwrap()
    }

    #[test]
    fn all_zero_is_fully_unannotated() {
        let s = descriptive_stats(&fixture(&[[0, 0]; 4])).unwrap();
        for d in &s.per_dimension {
            assert_eq!(d.fraction_unannotated, 1.0);
        }
        assert_eq!(s.fraction_negative, 0.0);
    }

    #[test]
    fn hand_counted_fixture() {
        // v0: (+1, 0)  v1: (0, 0)  v2: (-1, +1)  v3: (-1, -1)
        let s = descriptive_stats(&fixture(&[[1, 0], [0, 0], [-1, 1], [-1, -1]])).unwrap();
        let u = &s.per_dimension[Dimension::Utility.index()];
        assert_eq!(u.fraction_unannotated, 0.25);
        assert_eq!(u.fraction_any_negative, 0.5);
        assert_eq!(u.fraction_any_positive, 0.5);
        assert_eq!(s.fraction_negative, 2.0 / 16.0);

        let g = |a: &str, p: &str| {
            s.per_group
                .iter()
                .find(|g| g.annotator_id == a && g.project_id == p && g.dimension == Dimension::Utility)
                .unwrap()
        };
        assert_eq!(g("a0", "p1").proportion_positive, 0.5);
        assert_eq!(g("a0", "p2").proportion_negative, 1.0);
        assert_eq!(g("a1", "p2").proportion_positive, 0.5);
        assert_eq!(g("a1", "p2").n_verbatims, 2);
        assert_eq!(s.per_group.len(), 2 * 2 * 4);
    }

    #[test]
    fn empty_corpus_errors() {
        assert!(matches!(descriptive_stats(&Corpus::default()), Err(CorpusError::NoVerbatims)));
    }

    #[test]
    fn csv_has_expected_rows() {
        let s = descriptive_stats(&fixture(&[[1, 0], [0, 0], [-1, 1], [-1, -1]])).unwrap();
        let mut buf = Vec::new();
        write_stats_csv(&s, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert_eq!(text.lines().count(), 1 + 4 + 1 + 16);
        assert!(text.contains("dimension,U,,,4,0.250000,0.500000,0.500000,,"));
    }
}
