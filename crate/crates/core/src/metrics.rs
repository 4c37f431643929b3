//! Binary confusion counts and accuracy / precision / recall / F1, with
//! label 1 (rumour/fake) as the positive class.

use serde::{Deserialize, Serialize};
use thiserror::Error;

#[derive(Debug, Error, PartialEq, Eq)]
pub enum MetricsError {
    #[error("{predictions} predictions but {labels} labels")]
    LengthMismatch { predictions: usize, labels: usize },
    #[error("non-binary class value {0}")]
    NonBinary(usize),
    #[error("accuracy undefined for an empty confusion matrix")]
    Empty,
}

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub tp: usize,
    pub tn: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
}

impl ConfusionMatrix {
    pub fn total(&self) -> usize {
        self.tp + self.tn + self.fp + self.fn_
    }

    pub fn accuracy(&self) -> Result<f64, MetricsError> {
        match self.total() {
            0 => Err(MetricsError::Empty),
            n => Ok((self.tp + self.tn) as f64 / n as f64),
        }
    }
}

/// Counts (prediction, label) pairs.
pub fn confusion(predictions: &[usize], labels: &[usize]) -> Result<ConfusionMatrix, MetricsError> {
    if predictions.len() != labels.len() {
        return Err(MetricsError::LengthMismatch { predictions: predictions.len(), labels: labels.len() });
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &l) in predictions.iter().zip(labels) {
        match (p, l) {
            (1, 1) => cm.tp += 1,
            (0, 0) => cm.tn += 1,
            (1, 0) => cm.fp += 1,
            (0, 1) => cm.fn_ += 1,
            _ => return Err(MetricsError::NonBinary(p.max(l))),
        }
    }
    Ok(cm)
}

/// Which metrics had a zero denominator and were reported as 0.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct DegenerateFlags {
    pub accuracy: bool,
    pub precision: bool,
    pub recall: bool,
    pub f1: bool,
}

impl DegenerateFlags {
    pub fn any(&self) -> bool {
        self.accuracy || self.precision || self.recall || self.f1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub accuracy: f64,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub confusion: ConfusionMatrix,
    pub degenerate: DegenerateFlags,
}

fn ratio(num: usize, den: usize) -> (f64, bool) {
    if den == 0 {
        (0.0, true)
    } else {
        (num as f64 / den as f64, false)
    }
}

/// Accuracy (TP+TN)/N, precision TP/(TP+FP), recall TP/(TP+FN) and
/// F1 = 2TP/(2TP+FP+FN). A zero denominator gives 0 and sets its flag.
pub fn compute_metrics(cm: &ConfusionMatrix) -> MetricsReport {
    let (accuracy, acc_flag) = ratio(cm.tp + cm.tn, cm.total());
    let (precision, p_flag) = ratio(cm.tp, cm.tp + cm.fp);
    let (recall, r_flag) = ratio(cm.tp, cm.tp + cm.fn_);
    let (f1, f_flag) = ratio(2 * cm.tp, 2 * cm.tp + cm.fp + cm.fn_);
    MetricsReport {
        accuracy,
        precision,
        recall,
        f1,
        confusion: *cm,
        degenerate: DegenerateFlags { accuracy: acc_flag, precision: p_flag, recall: r_flag, f1: f_flag },
    }
}

pub fn evaluate(predictions: &[usize], labels: &[usize]) -> Result<MetricsReport, MetricsError> {
    confusion(predictions, labels).map(|cm| compute_metrics(&cm))
}

/// Plain multi-class accuracy, used for the auxiliary head.
pub fn multiclass_accuracy(predictions: &[usize], labels: &[usize]) -> Result<f64, MetricsError> {
    if predictions.len() != labels.len() {
        return Err(MetricsError::LengthMismatch { predictions: predictions.len(), labels: labels.len() });
    }
    if labels.is_empty() {
        return Err(MetricsError::Empty);
    }
    let hits = predictions.iter().zip(labels).filter(|(p, l)| p == l).count();
    Ok(hits as f64 / labels.len() as f64)
}

impl MetricsReport {
    pub const CSV_HEADER: &'static str = "accuracy,precision,recall,f1,tp,tn,fp,fn";

    pub fn csv_row(&self) -> String {
        format!(
            "{:.6},{:.6},{:.6},{:.6},{},{},{},{}",
            self.accuracy,
            self.precision,
            self.recall,
            self.f1,
            self.confusion.tp,
            self.confusion.tn,
            self.confusion.fp,
            self.confusion.fn_
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn four_pair_enumeration() {
        let cm = confusion(&[1, 1, 0, 0], &[1, 0, 0, 1]).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 1, tn: 1, fp: 1, fn_: 1 });
    }

    #[test]
    fn all_positive_correct() {
        let cm = confusion(&[1; 7], &[1; 7]).unwrap();
        assert_eq!(cm, ConfusionMatrix { tp: 7, ..Default::default() });
        let r = compute_metrics(&cm);
        assert_eq!((r.accuracy, r.precision, r.recall, r.f1), (1.0, 1.0, 1.0, 1.0));
        assert!(!r.degenerate.any());
    }

    #[test]
    fn empty_is_degenerate() {
        let cm = confusion(&[], &[]).unwrap();
        assert_eq!(cm.total(), 0);
        assert_eq!(cm.accuracy(), Err(MetricsError::Empty));
        let r = compute_metrics(&cm);
        assert!(r.degenerate.accuracy && r.degenerate.precision && r.degenerate.recall && r.degenerate.f1);
        assert_eq!(r.f1, 0.0);
    }

    #[test]
    fn worked_example() {
        let r = compute_metrics(&ConfusionMatrix { tp: 3, tn: 2, fp: 1, fn_: 2 });
        assert_eq!(r.accuracy, 0.625);
        assert_eq!(r.precision, 0.75);
        assert_eq!(r.recall, 0.6);
        assert!((r.f1 - 6.0 / 9.0).abs() < 1e-15);
    }

    #[test]
    fn no_predicted_positives() {
        let r = compute_metrics(&ConfusionMatrix { tp: 0, tn: 5, fp: 0, fn_: 3 });
        assert_eq!(r.precision, 0.0);
        assert!(r.degenerate.precision);
        assert!(!r.degenerate.recall);
        assert_eq!(r.f1, 0.0);
    }

    #[test]
    fn input_errors() {
        assert!(matches!(confusion(&[1], &[1, 0]), Err(MetricsError::LengthMismatch { .. })));
        assert_eq!(confusion(&[2], &[1]), Err(MetricsError::NonBinary(2)));
        assert_eq!(multiclass_accuracy(&[1, 2, 3], &[1, 2, 0]).unwrap(), 2.0 / 3.0);
    }

    proptest! {
        #[test]
        fn f1_is_harmonic_mean(tp in 0usize..500, tn in 0usize..500, fp in 0usize..500, fn_ in 0usize..500) {
            let r = compute_metrics(&ConfusionMatrix { tp, tn, fp, fn_ });
            for v in [r.accuracy, r.precision, r.recall, r.f1] {
                prop_assert!((0.0..=1.0).contains(&v));
            }
            if r.precision + r.recall > 0.0 {
                let h = 2.0 * r.precision * r.recall / (r.precision + r.recall);
                prop_assert!((h - r.f1).abs() <= 1e-12);
            }
            if tp == 0 {
                prop_assert_eq!(r.f1, 0.0);
            }
        }

        #[test]
        fn accuracy_invariant_under_relabeling(pairs in proptest::collection::vec((0usize..2, 0usize..2), 1..200)) {
            let (p, l): (Vec<_>, Vec<_>) = pairs.iter().copied().unzip();
            let flip = |v: &[usize]| v.iter().map(|x| 1 - x).collect::<Vec<_>>();
            let a = evaluate(&p, &l).unwrap().accuracy;
            let b = evaluate(&flip(&p), &flip(&l)).unwrap().accuracy;
            prop_assert_eq!(a, b);
        }
    }
}
