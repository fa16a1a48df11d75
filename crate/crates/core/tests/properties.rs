use std::collections::BTreeMap;

use appraise::aggregate::aggregate;
use appraise::agreement::{agreement_report, krippendorff_alpha, DistanceMetric, Modality, ReliabilityData};
use appraise::corpus::{
    descriptive_stats, load_corpus, validate, write_corpus, AnnotationRecord, AnnotationValue, Corpus, Dimension, Post,
    Project, Verbatim,
};
use appraise::Rational;
use proptest::prelude::*;

const VALUES: [AnnotationValue; 3] = [AnnotationValue::Negative, AnnotationValue::Zero, AnnotationValue::Positive];

/// Cells are `None` (absent) or an index into VALUES, laid out
/// verbatim x annotator x dimension.
fn corpus_from_cells(n_verbatims: usize, n_annotators: usize, cells: &[Option<usize>]) -> Corpus {
    let projects =
        vec![Project { id: "p0".into(), name: "Zéro".into() }, Project { id: "p1".into(), name: "One".into() }];
    let posts = vec![
        Post { id: "s0".into(), project_id: "p0".into(), participant_id: "u0".into() },
        Post { id: "s1".into(), project_id: "p1".into(), participant_id: "u1".into() },
    ];
    let mut verbatims = vec![];
    let mut records = vec![];
    for v in 0..n_verbatims {
        let p = v % 2;
        verbatims.push(Verbatim {
            id: format!("v{v:02}"),
            project_id: format!("p{p}"),
            post_id: format!("s{p}"),
            position: v as u64,
            text: format!("texte \"{v}\" é"),
        });
        for a in 0..n_annotators {
            for (di, d) in Dimension::ALL.into_iter().enumerate() {
                if let Some(i) = cells[(v * n_annotators + a) * 4 + di] {
                    records.push(AnnotationRecord {
                        verbatim_id: format!("v{v:02}"),
                        annotator_id: format!("a{a}"),
                        dimension: d,
                        value: VALUES[i],
                    });
                }
            }
        }
    }
    Corpus::from_parts(projects, posts, verbatims, records)
}

fn corpus_strategy() -> impl Strategy<Value = Corpus> {
    (1usize..12, 2usize..6).prop_flat_map(|(nv, na)| {
        proptest::collection::vec(proptest::option::weighted(0.8, 0usize..3), nv * na * 4)
            .prop_map(move |cells| corpus_from_cells(nv, na, &cells))
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn corpus_round_trips_through_jsonl(corpus in corpus_strategy()) {
        prop_assert!(!validate(&corpus).has_errors());
        let mut buf = Vec::new();
        write_corpus(&corpus, &mut buf).unwrap();
        let back = load_corpus(buf.as_slice()).unwrap();
        prop_assert_eq!(&back, &corpus);
    }

    #[test]
    fn reversed_input_order_gives_same_corpus_and_stats(corpus in corpus_strategy()) {
        let mut buf = Vec::new();
        write_corpus(&corpus, &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let reversed: Vec<&str> = text.lines().rev().collect();
        let back = load_corpus(reversed.join("\n").as_bytes()).unwrap();
        prop_assert_eq!(&back, &corpus);
        prop_assert_eq!(descriptive_stats(&back).unwrap(), descriptive_stats(&corpus).unwrap());
    }

    #[test]
    fn aggregation_matches_recount(corpus in corpus_strategy()) {
        for d in Dimension::ALL {
            let labels = aggregate(&corpus, d);
            let mut counts: BTreeMap<&str, [u32; 3]> = BTreeMap::new();
            for r in corpus.records().iter().filter(|r| r.dimension == d) {
                counts.entry(&r.verbatim_id).or_default()[(r.value.as_i8() + 1) as usize] += 1;
            }
            prop_assert_eq!(labels.len(), counts.len());
            for (id, c) in counts {
                let l = labels[id];
                prop_assert_eq!(l.counts(), (c[0], c[1], c[2]));
                let m = c.iter().sum::<u32>();
                prop_assert_eq!(l.mean::<Rational>(), Rational::new((i64::from(c[2]) - i64::from(c[0])).into(), i64::from(m).into()));
            }
        }
    }

    #[test]
    fn alpha_ignores_coder_and_unit_order(
        rows in proptest::collection::vec(proptest::collection::vec(proptest::option::weighted(0.8, -1i8..=1), 4), 2..15),
        seed in any::<u64>(),
    ) {
        let base = ReliabilityData::from_rows(vec![-1, 0, 1], &rows).unwrap();
        let mut permuted: Vec<Vec<Option<i8>>> = rows.iter().map(|r| {
            let mut r = r.clone();
            r.rotate_left((seed % 4) as usize);
            r
        }).collect();
        permuted.rotate_right((seed as usize) % rows.len());
        let other = ReliabilityData::from_rows(vec![-1, 0, 1], &permuted).unwrap();
        for metric in [DistanceMetric::Nominal, DistanceMetric::Interval] {
            prop_assert_eq!(krippendorff_alpha::<Rational>(&base, metric), krippendorff_alpha::<Rational>(&other, metric));
        }
    }

    #[test]
    fn alpha_is_at_most_one(corpus in corpus_strategy()) {
        let report = agreement_report::<Rational>(&corpus, DistanceMetric::Nominal);
        for d in Dimension::ALL {
            for m in Modality::ALL {
                if let Ok(r) = &report.get(d, m).result {
                    if let Some(a) = &r.alpha {
                        prop_assert!(*a <= Rational::from_integer(1.into()));
                    }
                }
            }
        }
    }

    #[test]
    fn float_alpha_tracks_exact_alpha(corpus in corpus_strategy()) {
        let exact = agreement_report::<Rational>(&corpus, DistanceMetric::Interval);
        let float = agreement_report::<f64>(&corpus, DistanceMetric::Interval);
        for d in Dimension::ALL {
            for m in Modality::ALL {
                match (&exact.get(d, m).result, &float.get(d, m).result) {
                    (Ok(e), Ok(f)) => {
                        prop_assert_eq!(e.n_units_used, f.n_units_used);
                        match (&e.alpha, f.alpha) {
                            (Some(e), Some(f)) => {
                                let e: f64 = num_traits::ToPrimitive::to_f64(e).unwrap();
                                prop_assert!((e - f).abs() < 1e-9);
                            }
                            (None, None) => {}
                            other => prop_assert!(false, "{:?}", other),
                        }
                    }
                    (Err(a), Err(b)) => prop_assert_eq!(a, b),
                    other => prop_assert!(false, "{:?}", other),
                }
            }
        }
    }
}
