//! Confusion matrix, per-class precision/recall/F1, and one-vs-rest ROC.

use std::fmt::Write as _;

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::LABELS;
use crate::tensor::{argmax, Float};

/// Rows are true classes, columns predicted classes.
#[derive(Clone, Debug, PartialEq, Eq, Serialize)]
pub struct ConfusionMatrix {
    pub counts: Vec<Vec<u64>>,
}

impl ConfusionMatrix {
    pub fn classes(&self) -> usize {
        self.counts.len()
    }

    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..self.classes()).map(|c| self.counts[c][c]).sum()
    }

    fn row_sum(&self, c: usize) -> u64 {
        self.counts[c].iter().sum()
    }

    fn col_sum(&self, c: usize) -> u64 {
        self.counts.iter().map(|row| row[c]).sum()
    }
}

pub fn confusion(preds: &[usize], targets: &[usize], classes: usize) -> Result<ConfusionMatrix> {
    if preds.len() != targets.len() {
        return Err(Error::invalid(format!(
            "{} predictions for {} targets",
            preds.len(),
            targets.len()
        )));
    }
    let mut counts = vec![vec![0u64; classes]; classes];
    for (&p, &t) in preds.iter().zip(targets) {
        if p >= classes || t >= classes {
            return Err(Error::invalid(format!(
                "class index outside 0..{classes}: ({t}, {p})"
            )));
        }
        counts[t][p] += 1;
    }
    Ok(ConfusionMatrix { counts })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Fraction of all samples whose membership in this class (yes/no) was
    /// predicted correctly.
    pub one_vs_rest_accuracy: f64,
    pub support: u64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct ClassReport {
    pub per_class: Vec<ClassMetrics>,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub accuracy: f64,
    /// Set when some precision, recall or F1 had a zero denominator and was
    /// reported as 0.
    pub zero_division: bool,
}

fn ratio(num: u64, den: u64, flag: &mut bool) -> f64 {
    if den == 0 {
        *flag = true;
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn class_report(cm: &ConfusionMatrix) -> Result<ClassReport> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::NoSamples);
    }
    let mut zero_division = false;
    let mut per_class = Vec::with_capacity(cm.classes());
    for c in 0..cm.classes() {
        let tp = cm.counts[c][c];
        let predicted = cm.col_sum(c);
        let actual = cm.row_sum(c);
        let precision = ratio(tp, predicted, &mut zero_division);
        let recall = ratio(tp, actual, &mut zero_division);
        let f1 = if precision + recall > 0.0 {
            2.0 * precision * recall / (precision + recall)
        } else {
            zero_division = true;
            0.0
        };
        let true_negatives = total + tp - predicted - actual;
        per_class.push(ClassMetrics {
            precision,
            recall,
            f1,
            one_vs_rest_accuracy: (tp + true_negatives) as f64 / total as f64,
            support: actual,
        });
    }
    let n = per_class.len() as f64;
    let mean = |f: fn(&ClassMetrics) -> f64| per_class.iter().map(f).sum::<f64>() / n;
    Ok(ClassReport {
        macro_precision: mean(|m| m.precision),
        macro_recall: mean(|m| m.recall),
        macro_f1: mean(|m| m.f1),
        accuracy: cm.correct() as f64 / total as f64,
        zero_division,
        per_class,
    })
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct RocCurve {
    pub class: usize,
    /// `(false-positive rate, true-positive rate)` from (0,0) to (1,1).
    pub points: Vec<(f64, f64)>,
    pub auc: f64,
}

impl RocCurve {
    pub fn to_csv(&self) -> String {
        let mut out = String::from("fpr,tpr\n");
        for (x, y) in &self.points {
            let _ = writeln!(out, "{x},{y}");
        }
        out
    }
}

/// One-vs-rest ROC for `class`, one threshold per distinct score.
pub fn roc_curve(scores: &[f64], targets: &[usize], class: usize) -> Result<RocCurve> {
    if scores.len() != targets.len() {
        return Err(Error::invalid(format!(
            "{} scores for {} targets",
            scores.len(),
            targets.len()
        )));
    }
    if scores.iter().any(|s| !s.is_finite()) {
        return Err(Error::invalid("ROC scores must be finite"));
    }
    let positives = targets.iter().filter(|&&t| t == class).count() as u64;
    let negatives = targets.len() as u64 - positives;
    if positives == 0 || negatives == 0 {
        return Err(Error::DegenerateRoc(class));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    // twice the area in units of one (positive, negative) pair
    let mut doubled_area: u128 = 0;
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let score = scores[order[i]];
        let (prev_tp, prev_fp) = (tp, fp);
        while i < order.len() && scores[order[i]] == score {
            if targets[order[i]] == class {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        doubled_area += (fp - prev_fp) as u128 * (tp + prev_tp) as u128;
        points.push((fp as f64 / negatives as f64, tp as f64 / positives as f64));
    }
    let auc = doubled_area as f64 / (2.0 * positives as f64 * negatives as f64);
    Ok(RocCurve { class, points, auc })
}

/// Everything reported for one evaluated set.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct EvalReport {
    pub samples: usize,
    pub confusion: ConfusionMatrix,
    pub report: ClassReport,
    /// One curve per class; `None` where the class is absent or universal.
    pub roc: Vec<Option<RocCurve>>,
    pub macro_auc: Option<f64>,
}

pub fn evaluate(probs: &[Vec<Float>], targets: &[usize]) -> Result<EvalReport> {
    if probs.is_empty() {
        return Err(Error::NoSamples);
    }
    let classes = probs[0].len();
    let preds: Vec<usize> = probs.iter().map(|p| argmax(p)).collect();
    let confusion = confusion(&preds, targets, classes)?;
    let report = class_report(&confusion)?;
    let roc: Vec<Option<RocCurve>> = (0..classes)
        .map(|c| {
            let scores: Vec<f64> = probs.iter().map(|p| p[c] as f64).collect();
            roc_curve(&scores, targets, c).ok()
        })
        .collect();
    let aucs: Vec<f64> = roc.iter().flatten().map(|r| r.auc).collect();
    let macro_auc = (aucs.len() == classes).then(|| aucs.iter().sum::<f64>() / classes as f64);
    Ok(EvalReport {
        samples: probs.len(),
        confusion,
        report,
        roc,
        macro_auc,
    })
}

fn class_name(c: usize) -> String {
    LABELS
        .get(c)
        .map(|s| s.to_string())
        .unwrap_or_else(|| format!("class{c}"))
}

impl EvalReport {
    /// Aligned human-readable tables.
    pub fn render(&self) -> String {
        let mut out = String::new();
        let r = &self.report;
        let _ = writeln!(
            out,
            "{:<10} {:>9} {:>9} {:>9} {:>9} {:>9} {:>8}",
            "class", "precision", "recall", "f1", "ovr-acc", "auc", "support"
        );
        for (c, m) in r.per_class.iter().enumerate() {
            let auc = self.roc[c]
                .as_ref()
                .map(|roc| format!("{:.4}", roc.auc))
                .unwrap_or_else(|| "-".into());
            let _ = writeln!(
                out,
                "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>9.4} {:>9} {:>8}",
                class_name(c),
                m.precision,
                m.recall,
                m.f1,
                m.one_vs_rest_accuracy,
                auc,
                m.support
            );
        }
        let macro_auc = self
            .macro_auc
            .map(|a| format!("{a:.4}"))
            .unwrap_or_else(|| "-".into());
        let _ = writeln!(
            out,
            "{:<10} {:>9.4} {:>9.4} {:>9.4} {:>9} {:>9} {:>8}",
            "macro", r.macro_precision, r.macro_recall, r.macro_f1, "", macro_auc, self.samples
        );
        let _ = writeln!(out, "\naccuracy {:.4}", r.accuracy);
        if r.zero_division {
            let _ = writeln!(
                out,
                "warning: some metrics had a zero denominator and are reported as 0"
            );
        }
        let _ = writeln!(out, "\nconfusion (rows true, columns predicted)");
        let _ = write!(out, "{:<10}", "");
        for c in 0..self.confusion.classes() {
            let _ = write!(out, " {:>9}", class_name(c));
        }
        let _ = writeln!(out);
        for (c, row) in self.confusion.counts.iter().enumerate() {
            let _ = write!(out, "{:<10}", class_name(c));
            for v in row {
                let _ = write!(out, " {v:>9}");
            }
            let _ = writeln!(out);
        }
        out
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn worked_confusion_example() {
        let cm = ConfusionMatrix {
            counts: vec![vec![8, 2, 0], vec![1, 9, 0], vec![0, 0, 10]],
        };
        let r = class_report(&cm).unwrap();
        assert!((r.per_class[0].precision - 8.0 / 9.0).abs() < 1e-12);
        assert!((r.per_class[0].recall - 0.8).abs() < 1e-12);
        assert!((r.per_class[1].precision - 9.0 / 11.0).abs() < 1e-12);
        assert!((r.per_class[1].recall - 0.9).abs() < 1e-12);
        assert!((r.accuracy - 0.9).abs() < 1e-12);
        assert!(!r.zero_division);
        // class 0: TP 8, FN 2, FP 1, TN 19
        assert!((r.per_class[0].one_vs_rest_accuracy - 27.0 / 30.0).abs() < 1e-12);
    }

    #[test]
    fn empty_class_reports_zero_with_flag() {
        let cm = confusion(&[0, 1, 1], &[0, 1, 1], 3).unwrap();
        let r = class_report(&cm).unwrap();
        assert_eq!(r.per_class[2].precision, 0.0);
        assert_eq!(r.per_class[2].recall, 0.0);
        assert_eq!(r.per_class[2].f1, 0.0);
        assert!(r.zero_division);
        assert_eq!(r.accuracy, 1.0);
    }

    #[test]
    fn confusion_cells_and_errors() {
        let cm = confusion(&[0, 1], &[1, 1], 3).unwrap();
        assert_eq!(cm.counts[1][0], 1);
        assert_eq!(cm.counts[1][1], 1);
        assert_eq!(cm.total(), 2);
        assert!(confusion(&[0], &[0, 1], 3).is_err());
        assert!(confusion(&[3], &[0], 3).is_err());
        assert!(matches!(
            class_report(&confusion(&[], &[], 3).unwrap()),
            Err(Error::NoSamples)
        ));
    }

    #[test]
    fn roc_edge_cases() {
        let sep = roc_curve(&[0.9, 0.8, 0.2, 0.1], &[1, 1, 0, 0], 1).unwrap();
        assert_eq!(sep.auc, 1.0);
        assert_eq!(sep.points.first(), Some(&(0.0, 0.0)));
        assert_eq!(sep.points.last(), Some(&(1.0, 1.0)));
        let flat = roc_curve(&[0.5; 6], &[0, 1, 2, 1, 0, 1], 1).unwrap();
        assert_eq!(flat.points, vec![(0.0, 0.0), (1.0, 1.0)]);
        assert_eq!(flat.auc, 0.5);
        let err = roc_curve(&[0.1, 0.2], &[1, 1], 1).unwrap_err();
        assert!(err.to_string().contains("degenerate ROC"));
    }
}
