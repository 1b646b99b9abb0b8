//! Evaluation metrics for generated peptides.

use std::io::Write;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::geometry::wrapped_distance;

/// Threshold for a torsion prediction to count as correct, degrees.
pub const CORRECT_THRESHOLD_DEG: f64 = 20.0;

fn check_len(a: usize, b: usize) -> Result<()> {
    if a != b {
        return Err(Error::LengthMismatch { left: a, right: b });
    }
    Ok(())
}

/// Mean minimal circular deviation, in degrees.
pub fn wrapped_mae(pred: &[f64], truth: &[f64]) -> Result<f64> {
    check_len(pred.len(), truth.len())?;
    if pred.is_empty() {
        return Err(Error::Empty("wrapped_mae inputs"));
    }
    let total: f64 = pred.iter().zip(truth).map(|(p, t)| wrapped_distance(*p, *t)).sum();
    Ok((total / pred.len() as f64).to_degrees())
}

/// Fraction of angles whose circular deviation is within `threshold_deg`.
pub fn correct_fraction(pred: &[f64], truth: &[f64], threshold_deg: f64) -> Result<f64> {
    check_len(pred.len(), truth.len())?;
    if pred.is_empty() {
        return Err(Error::Empty("correct_fraction inputs"));
    }
    let ok = pred
        .iter()
        .zip(truth)
        .filter(|(p, t)| wrapped_distance(**p, **t).to_degrees() <= threshold_deg)
        .count();
    Ok(ok as f64 / pred.len() as f64)
}

/// Amino-acid recovery rate, percent.
pub fn aar<T: PartialEq>(seq_pred: &[T], seq_true: &[T]) -> Result<f64> {
    check_len(seq_pred.len(), seq_true.len())?;
    if seq_pred.is_empty() {
        return Err(Error::Empty("aar sequences"));
    }
    let same = seq_pred.iter().zip(seq_true).filter(|(a, b)| a == b).count();
    Ok(100.0 * same as f64 / seq_pred.len() as f64)
}

/// Mean pairwise Hamming distance over unordered pairs.
pub fn hamming_diversity<T: PartialEq>(seqs: &[Vec<T>]) -> Result<f64> {
    if seqs.len() < 2 {
        return Err(Error::InvalidParameter("diversity needs at least two sequences".into()));
    }
    let len = seqs[0].len();
    for s in seqs {
        check_len(s.len(), len)?;
    }
    let mut total = 0usize;
    let mut pairs = 0usize;
    for i in 0..seqs.len() {
        for j in i + 1..seqs.len() {
            total += seqs[i].iter().zip(&seqs[j]).filter(|(a, b)| a != b).count();
            pairs += 1;
        }
    }
    Ok(total as f64 / pairs as f64)
}

/// Per-slot torsion accuracy.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AngleReport {
    pub slot: String,
    pub count: usize,
    pub mae_deg: f64,
    pub correct_fraction: f64,
}

impl AngleReport {
    pub fn compute(slot: &str, pred: &[f64], truth: &[f64]) -> Result<Self> {
        Ok(AngleReport {
            slot: slot.to_string(),
            count: pred.len(),
            mae_deg: wrapped_mae(pred, truth)?,
            correct_fraction: correct_fraction(pred, truth, CORRECT_THRESHOLD_DEG)?,
        })
    }
}

/// Correct fraction pooled over all angles (micro) and averaged over groups
/// such as peptides (macro).
pub fn correct_fraction_micro_macro(groups: &[(Vec<f64>, Vec<f64>)], threshold_deg: f64) -> Result<(f64, f64)> {
    let non_empty: Vec<_> = groups.iter().filter(|(p, _)| !p.is_empty()).collect();
    if non_empty.is_empty() {
        return Err(Error::Empty("correct_fraction groups"));
    }
    let (mut hits, mut total, mut macro_sum) = (0.0, 0usize, 0.0);
    for (p, t) in &non_empty {
        let f = correct_fraction(p, t, threshold_deg)?;
        hits += f * p.len() as f64;
        total += p.len();
        macro_sum += f;
    }
    Ok((hits / total as f64, macro_sum / non_empty.len() as f64))
}

/// One row of a metric report: `id,metric,slot,value`.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MetricRow {
    pub id: String,
    pub metric: String,
    pub slot: String,
    pub value: f64,
}

pub fn write_metric_csv<W: Write>(w: W, rows: &[MetricRow]) -> Result<()> {
    let mut wtr = csv::Writer::from_writer(w);
    for r in rows {
        wtr.serialize(r)?;
    }
    wtr.flush()?;
    Ok(())
}
