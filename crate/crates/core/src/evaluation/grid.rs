use std::io::Write;

use serde::Serialize;

use super::EvalError;
use crate::aggregate::SoftLabel;
use crate::Real;

/// True-level x predicted-level counts over the `2m + 1` centers `k/m`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ConfusionGrid {
    pub m: u32,
    /// `counts[true][predicted]`.
    pub counts: Vec<Vec<u64>>,
    /// Rows divided by their total; all-zero rows stay zero.
    pub row_normalized: Vec<Vec<f64>>,
}

impl ConfusionGrid {
    pub fn size(&self) -> usize {
        2 * self.m as usize + 1
    }

    pub fn center(&self, index: usize) -> f64 {
        (index as f64 - self.m as f64) / self.m as f64
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Share of mass with `|true - predicted| <= band` bins.
    pub fn diagonal_mass(&self, band: usize) -> f64 {
        let total = self.total();
        if total == 0 {
            return 0.0;
        }
        let near: u64 = self
            .counts
            .iter()
            .enumerate()
            .flat_map(|(i, row)| row.iter().enumerate().map(move |(j, &c)| (i.abs_diff(j), c)))
            .filter(|(d, _)| *d <= band)
            .map(|(_, c)| c)
            .sum();
        near as f64 / total as f64
    }

    /// Matrix CSV: header row and first column hold bin centers.
    pub fn write_csv<W: Write>(&self, out: W) -> csv::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        let centers: Vec<String> = (0..self.size()).map(|i| format!("{:.6}", self.center(i))).collect();
        let mut header = vec!["true\\predicted".to_string()];
        header.extend(centers.iter().cloned());
        w.write_record(&header)?;
        for (i, row) in self.counts.iter().enumerate() {
            let mut rec = vec![centers[i].clone()];
            rec.extend(row.iter().map(u64::to_string));
            w.write_record(&rec)?;
        }
        w.flush()?;
        Ok(())
    }

    pub fn write_json<W: Write>(&self, out: W) -> serde_json::Result<()> {
        serde_json::to_writer_pretty(out, self)
    }
}

/// Index of the nearest center `k/m`; exact midpoints go to the lower index.
pub fn predicted_bin<F: Real>(value: F, m: u32) -> usize {
    let mf = F::from_count(m as usize);
    let pos = value * mf + mf;
    let half = F::from_f64_lossy(0.5);
    let idx = (pos - half).ceil();
    let max = 2 * m as usize;
    if idx <= F::zero() {
        0
    } else {
        idx.to_usize().unwrap_or(max).min(max)
    }
}

/// Bins `(true label, predicted value)` pairs. Every label must carry `m` votes.
pub fn confusion_grid<'a, F: Real, I>(results: I, m: u32) -> Result<ConfusionGrid, EvalError>
where
    I: IntoIterator<Item = (&'a str, &'a SoftLabel, F)>,
{
    if m == 0 {
        return Err(EvalError::ZeroAnnotatorCount);
    }
    let size = 2 * m as usize + 1;
    let mut counts = vec![vec![0u64; size]; size];
    for (id, label, value) in results {
        if label.m() != m {
            return Err(EvalError::MixedAnnotatorCount { id: id.to_string(), expected: m, found: label.m() });
        }
        if !value.is_finite() {
            return Err(EvalError::NonFinitePrediction(id.to_string()));
        }
        counts[label.level_index()][predicted_bin(value, m)] += 1;
    }
    let row_normalized = counts
        .iter()
        .map(|row| {
            let t: u64 = row.iter().sum();
            row.iter().map(|&c| if t == 0 { 0.0 } else { c as f64 / t as f64 }).collect()
        })
        .collect();
    Ok(ConfusionGrid { m, counts, row_normalized })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn nearest_center() {
        // m = 6: 0.40 is 0.0667 from 1/3 and 0.1 from 1/2.
        assert_eq!(predicted_bin(0.40, 6), 8);
        assert_eq!(predicted_bin(1.0, 6), 12);
        assert_eq!(predicted_bin(-1.0, 6), 0);
        assert_eq!(predicted_bin(0.0, 6), 6);
        assert_eq!(predicted_bin(5.0, 6), 12);
        assert_eq!(predicted_bin(-5.0, 6), 0);
    }

    #[test]
    fn midpoint_goes_low() {
        // m = 2: centers -1, -0.5, 0, 0.5, 1; 0.25 sits between 0 and 0.5.
        assert_eq!(predicted_bin(0.25, 2), 2);
        assert_eq!(predicted_bin(-0.75, 2), 0);
        assert_eq!(predicted_bin(0.75f32, 2), 3);
    }

    #[test]
    fn identity_predictions_fill_diagonal() {
        let labels: Vec<SoftLabel> = (0..=6u32)
            .map(|p| SoftLabel::from_counts(0, 6 - p, p).unwrap())
            .chain((1..=6u32).map(|n| SoftLabel::from_counts(n, 6 - n, 0).unwrap()))
            .collect();
        let grid = confusion_grid(labels.iter().map(|l| ("v", l, l.mean::<f64>())), 6).unwrap();
        assert_eq!(grid.total(), 13);
        for i in 0..13 {
            assert_eq!(grid.counts[i][i], 1);
            assert_eq!(grid.row_normalized[i][i], 1.0);
        }
        assert_eq!(grid.diagonal_mass(0), 1.0);
    }

    #[test]
    fn mixed_m_is_rejected() {
        let a = SoftLabel::from_counts(0, 5, 1).unwrap();
        let b = SoftLabel::from_counts(0, 4, 1).unwrap();
        let err = confusion_grid([("a", &a, 0.0), ("b", &b, 0.0)], 6).unwrap_err();
        assert!(matches!(err, EvalError::MixedAnnotatorCount { found: 5, .. }));
    }

    #[test]
    fn csv_layout() {
        let a = SoftLabel::from_counts(0, 1, 1).unwrap();
        let g = confusion_grid([("a", &a, 0.4)], 2).unwrap();
        let mut buf = Vec::new();
        g.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        let lines: Vec<&str> = text.lines().collect();
        assert_eq!(lines[0], "true\\predicted,-1.000000,-0.500000,0.000000,0.500000,1.000000");
        assert_eq!(lines[4], "0.500000,0,0,0,1,0");
    }
}
