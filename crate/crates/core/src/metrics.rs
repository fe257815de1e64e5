//! Evaluation metrics over outlier verdicts.
//!
//! `Yes` is the only positive prediction; `No` and `Unsure` both count as
//! negatives, and both agree with a `not_outlier` label.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::decision::OutlierVerdict;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Label {
    Outlier,
    NotOutlier,
    Unlabeled,
}

#[derive(Debug, Clone, PartialEq, Error)]
pub enum MetricsError {
    #[error("length mismatch: {predictions} predictions vs {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("label at position {0} is not binary")]
    NonBinaryLabel(usize),
    #[error("label at position {0} is not `not_outlier`")]
    NotOneSided(usize),
    #[error("input is empty")]
    Empty,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PrecisionRecall {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub true_positives: usize,
    pub false_positives: usize,
    pub false_negatives: usize,
    pub true_negatives: usize,
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn precision_recall_f1(predictions: &[OutlierVerdict], labels: &[Label]) -> Result<PrecisionRecall, MetricsError> {
    if predictions.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    let (mut tp, mut fp, mut fneg, mut tn) = (0, 0, 0, 0);
    for (i, (p, l)) in predictions.iter().zip(labels).enumerate() {
        let actual = match l {
            Label::Outlier => true,
            Label::NotOutlier => false,
            Label::Unlabeled => return Err(MetricsError::NonBinaryLabel(i)),
        };
        match (p.is_flagged(), actual) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fneg += 1,
            (false, false) => tn += 1,
        }
    }
    let precision = ratio(tp, tp + fp);
    let recall = ratio(tp, tp + fneg);
    Ok(PrecisionRecall {
        precision,
        recall,
        f1: f1_score(precision, recall),
        true_positives: tp,
        false_positives: fp,
        false_negatives: fneg,
        true_negatives: tn,
    })
}

/// Fraction of one-sided items the system did not flag.
pub fn agreement_rate(predictions: &[OutlierVerdict], labels: &[Label]) -> Result<f64, MetricsError> {
    if predictions.len() != labels.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: predictions.len(),
            labels: labels.len(),
        });
    }
    if let Some(i) = labels.iter().position(|l| *l != Label::NotOutlier) {
        return Err(MetricsError::NotOneSided(i));
    }
    if predictions.is_empty() {
        return Err(MetricsError::Empty);
    }
    let agreed = predictions.iter().filter(|p| !p.is_flagged()).count();
    Ok(agreed as f64 / predictions.len() as f64)
}

pub fn outlier_rate(predictions: &[OutlierVerdict]) -> Result<f64, MetricsError> {
    if predictions.is_empty() {
        return Err(MetricsError::Empty);
    }
    let flagged = predictions.iter().filter(|p| p.is_flagged()).count();
    Ok(flagged as f64 / predictions.len() as f64)
}

/// Cohen's kappa for two binary annotations of the same items.
pub fn cohen_kappa(a: &[bool], b: &[bool]) -> Result<f64, MetricsError> {
    if a.len() != b.len() {
        return Err(MetricsError::LengthMismatch {
            predictions: a.len(),
            labels: b.len(),
        });
    }
    if a.is_empty() {
        return Err(MetricsError::Empty);
    }
    let n = a.len() as f64;
    let agree = a.iter().zip(b).filter(|(x, y)| x == y).count() as f64;
    let pa = a.iter().filter(|x| **x).count() as f64 / n;
    let pb = b.iter().filter(|x| **x).count() as f64 / n;
    let p_o = agree / n;
    let p_e = pa * pb + (1.0 - pa) * (1.0 - pb);
    if p_e == 1.0 {
        // Both raters used a single identical class throughout.
        return Ok(1.0);
    }
    Ok((p_o - p_e) / (1.0 - p_e))
}

#[cfg(test)]
mod tests {
    use super::*;
    use alloc::vec;
    use alloc::vec::Vec;
    use OutlierVerdict::*;

    #[test]
    fn f1_matches_reported_rows() {
        assert!((f1_score(1.00, 0.38) - 0.55).abs() <= 0.01);
        assert!((f1_score(0.67, 0.75) - 0.71).abs() <= 0.01);
        assert!((f1_score(0.54, 0.88) - 0.67).abs() <= 0.01);
        assert_eq!(f1_score(0.0, 0.0), 0.0);
    }

    #[test]
    fn no_positive_predictions() {
        let labels = [Label::Outlier, Label::NotOutlier, Label::Outlier];
        let m = precision_recall_f1(&[No, Unsure, No], &labels).unwrap();
        assert_eq!((m.precision, m.recall, m.f1), (0.0, 0.0, 0.0));
    }

    #[test]
    fn confusion_counts() {
        let labels = [Label::Outlier, Label::Outlier, Label::NotOutlier, Label::NotOutlier];
        let m = precision_recall_f1(&[Yes, Unsure, Yes, No], &labels).unwrap();
        assert_eq!((m.true_positives, m.false_negatives, m.false_positives, m.true_negatives), (1, 1, 1, 1));
        assert_eq!(m.precision, 0.5);
        assert_eq!(m.recall, 0.5);
        assert_eq!(m.f1, 0.5);
    }

    #[test]
    fn metric_errors() {
        assert!(matches!(
            precision_recall_f1(&[Yes], &[]),
            Err(MetricsError::LengthMismatch { .. })
        ));
        assert_eq!(precision_recall_f1(&[Yes], &[Label::Unlabeled]), Err(MetricsError::NonBinaryLabel(0)));
        assert_eq!(agreement_rate(&[Yes], &[Label::Outlier]), Err(MetricsError::NotOneSided(0)));
        assert_eq!(outlier_rate(&[]), Err(MetricsError::Empty));
        assert_eq!(cohen_kappa(&[], &[]), Err(MetricsError::Empty));
    }

    #[test]
    fn agreement_examples() {
        let ns = [Label::NotOutlier; 4];
        assert_eq!(agreement_rate(&[No, No, Yes, Unsure], &ns).unwrap(), 0.75);
        assert_eq!(agreement_rate(&[No; 4], &ns).unwrap(), 1.0);
        assert_eq!(agreement_rate(&[Yes; 4], &ns).unwrap(), 0.0);
    }

    #[test]
    fn outlier_rate_examples() {
        let mut v = vec![No; 40];
        v[3] = Yes;
        v[17] = Yes;
        assert_eq!(outlier_rate(&v).unwrap(), 0.05);
        let mut big = vec![No; 5400];
        big.iter_mut().take(421).for_each(|p| *p = Yes);
        assert!((outlier_rate(&big).unwrap() - 0.077_962_962_962_963).abs() < 1e-12);
        assert_eq!(outlier_rate(&[No; 10]).unwrap(), 0.0);
    }

    #[test]
    fn kappa_examples() {
        let a = [true, false, true, true, false];
        assert_eq!(cohen_kappa(&a, &a).unwrap(), 1.0);

        // 10 items, both raters 50/50, agreeing on 8: p_o = 0.8, p_e = 0.5.
        let x: Vec<bool> = [1, 1, 1, 1, 1, 0, 0, 0, 0, 0].iter().map(|v| *v == 1).collect();
        let y: Vec<bool> = [1, 1, 1, 1, 0, 1, 0, 0, 0, 0].iter().map(|v| *v == 1).collect();
        assert!((cohen_kappa(&x, &y).unwrap() - 0.6).abs() < 1e-12);

        let comp: Vec<bool> = x.iter().map(|v| !v).collect();
        assert!((cohen_kappa(&x, &comp).unwrap() + 1.0).abs() < 1e-12);

        assert_eq!(cohen_kappa(&[true; 3], &[true; 3]).unwrap(), 1.0);
    }
}
