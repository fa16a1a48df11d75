use std::io::Write;

use serde::Serialize;

use super::EvalError;
use crate::aggregate::SoftLabel;
use crate::corpus::{AnnotationValue, Dimension};
use crate::Real;

/// How `global_accuracy` is defined; written next to every threshold report.
pub const ACCURACY_DEFINITION: &str =
    "global_accuracy = fraction of items whose thresholded prediction equals the thresholded true mean";

/// `+1` above 1/3, `-1` below -1/3, otherwise 0 (boundaries are neutral).
pub fn threshold_classify<F: Real>(v: F) -> AnnotationValue {
    let third = F::one() / F::from_count(3);
    if v > third {
        AnnotationValue::Positive
    } else if v < -third {
        AnnotationValue::Negative
    } else {
        AnnotationValue::Zero
    }
}

/// Exact thresholding of a label's mean `k/m`.
pub fn threshold_classify_label(label: &SoftLabel) -> AnnotationValue {
    let (k, m) = (label.level_numerator(), label.m() as i64);
    if 3 * k > m {
        AnnotationValue::Positive
    } else if 3 * k < -m {
        AnnotationValue::Negative
    } else {
        AnnotationValue::Zero
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassMetrics<F> {
    pub class: i8,
    /// `None` when nothing was predicted in this class.
    pub precision: Option<F>,
    /// `None` when no true item is in this class.
    pub recall: Option<F>,
    pub true_positives: usize,
    pub support_true: usize,
    pub support_predicted: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ThresholdReport<F> {
    /// Classes -1, 0, +1 in that order.
    pub per_class: [ClassMetrics<F>; 3],
    pub global_accuracy: F,
    pub n: usize,
}

impl<F: Real> ThresholdReport<F> {
    pub fn class(&self, class: AnnotationValue) -> &ClassMetrics<F> {
        &self.per_class[(class.as_i8() + 1) as usize]
    }
}

pub fn threshold_report<'a, F: Real, I>(results: I) -> Result<ThresholdReport<F>, EvalError>
where
    I: IntoIterator<Item = (&'a SoftLabel, F)>,
{
    // confusion[true][pred]
    let mut confusion = [[0usize; 3]; 3];
    let mut n = 0;
    for (label, value) in results {
        let t = (threshold_classify_label(label).as_i8() + 1) as usize;
        let p = (threshold_classify(value).as_i8() + 1) as usize;
        confusion[t][p] += 1;
        n += 1;
    }
    if n == 0 {
        return Err(EvalError::EmptyResults);
    }
    let ratio = |a: usize, b: usize| (b > 0).then(|| F::from_count(a) / F::from_count(b));
    let per_class = std::array::from_fn(|c| {
        let tp = confusion[c][c];
        let support_true: usize = confusion[c].iter().sum();
        let support_predicted: usize = confusion.iter().map(|row| row[c]).sum();
        ClassMetrics {
            class: c as i8 - 1,
            precision: ratio(tp, support_predicted),
            recall: ratio(tp, support_true),
            true_positives: tp,
            support_true,
            support_predicted,
        }
    });
    let correct: usize = (0..3).map(|c| confusion[c][c]).sum();
    Ok(ThresholdReport { per_class, global_accuracy: F::from_count(correct) / F::from_count(n), n })
}

/// One column per dimension, one row per metric; undefined metrics print `NA`.
pub fn write_threshold_csv<F: Real, W: Write>(reports: &[(Dimension, ThresholdReport<F>)], out: W) -> csv::Result<()> {
    let mut w = csv::Writer::from_writer(out);
    let mut header = vec!["metric".to_string()];
    header.extend(reports.iter().map(|(d, _)| d.to_string()));
    w.write_record(&header)?;
    let fmt = |v: Option<F>| v.map_or("NA".to_string(), |x| format!("{:.6}", x.to_f64_lossy()));
    let mut row = |name: &str, f: &dyn Fn(&ThresholdReport<F>) -> String| {
        let mut rec = vec![name.to_string()];
        rec.extend(reports.iter().map(|(_, r)| f(r)));
        w.write_record(&rec)
    };
    row("global_accuracy", &|r| fmt(Some(r.global_accuracy)))?;
    for (class, label) in
        [(AnnotationValue::Positive, "+1"), (AnnotationValue::Negative, "-1"), (AnnotationValue::Zero, "0")]
    {
        row(&format!("precision_{label}"), &|r| fmt(r.class(class).precision))?;
        row(&format!("recall_{label}"), &|r| fmt(r.class(class).recall))?;
    }
    for (class, label) in
        [(AnnotationValue::Positive, "+1"), (AnnotationValue::Negative, "-1"), (AnnotationValue::Zero, "0")]
    {
        row(&format!("support_{label}"), &|r| r.class(class).support_true.to_string())?;
    }
    row("n", &|r| r.n.to_string())?;
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn l(n: u32, z: u32, p: u32) -> SoftLabel {
        SoftLabel::from_counts(n, z, p).unwrap()
    }

    #[test]
    fn classify_boundaries() {
        assert_eq!(threshold_classify(0.0), AnnotationValue::Zero);
        assert_eq!(threshold_classify(0.5), AnnotationValue::Positive);
        assert_eq!(threshold_classify(-0.5), AnnotationValue::Negative);
        assert_eq!(threshold_classify(1.0 / 3.0), AnnotationValue::Zero);
        assert_eq!(threshold_classify(-1.0 / 3.0), AnnotationValue::Zero);
        assert_eq!(threshold_classify(2.0 / 6.0), AnnotationValue::Zero);
        assert_eq!(threshold_classify_label(&l(0, 4, 2)), AnnotationValue::Zero);
        assert_eq!(threshold_classify_label(&l(0, 3, 3)), AnnotationValue::Positive);
        assert_eq!(threshold_classify_label(&l(2, 4, 0)), AnnotationValue::Zero);
        assert_eq!(threshold_classify_label(&l(3, 3, 0)), AnnotationValue::Negative);
    }

    #[test]
    fn identity_is_perfect() {
        let labels = [l(6, 0, 0), l(0, 6, 0), l(0, 0, 6), l(0, 1, 5)];
        let r = threshold_report(labels.iter().map(|x| (x, x.mean::<f64>()))).unwrap();
        assert_eq!(r.global_accuracy, 1.0);
        for c in &r.per_class {
            assert_eq!(c.precision, Some(1.0));
            assert_eq!(c.recall, Some(1.0));
        }
    }

    #[test]
    fn six_item_fixture() {
        // Two per true class; one true +1 predicted as 0.
        let neg = l(6, 0, 0);
        let zero = l(0, 6, 0);
        let pos = l(0, 0, 6);
        let items = [(&neg, -0.9), (&neg, -0.5), (&zero, 0.0), (&zero, 0.2), (&pos, 0.9), (&pos, 0.1)];
        let r = threshold_report(items).unwrap();
        // TP: -1 -> 2, 0 -> 2, +1 -> 1. Predicted 0 count 3.
        assert_eq!(r.class(AnnotationValue::Negative).precision, Some(1.0));
        assert_eq!(r.class(AnnotationValue::Negative).recall, Some(1.0));
        assert_eq!(r.class(AnnotationValue::Zero).precision, Some(2.0 / 3.0));
        assert_eq!(r.class(AnnotationValue::Zero).recall, Some(1.0));
        assert_eq!(r.class(AnnotationValue::Positive).precision, Some(1.0));
        assert_eq!(r.class(AnnotationValue::Positive).recall, Some(0.5));
        assert_eq!(r.global_accuracy, 5.0 / 6.0);
        assert_eq!(r.per_class.iter().map(|c| c.support_true).sum::<usize>(), 6);
    }

    #[test]
    fn undefined_markers_and_empty() {
        let zero = l(0, 6, 0);
        let r = threshold_report([(&zero, 0.0)]).unwrap();
        assert_eq!(r.class(AnnotationValue::Positive).precision, None);
        assert_eq!(r.class(AnnotationValue::Positive).recall, None);
        assert!(matches!(threshold_report::<f64, _>([]), Err(EvalError::EmptyResults)));

        let mut buf = Vec::new();
        write_threshold_csv(&[(Dimension::Utility, r)], &mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("metric,U\nglobal_accuracy,1.000000\nprecision_+1,NA\n"));
    }
}
