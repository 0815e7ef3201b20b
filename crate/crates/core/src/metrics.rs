//! Multi-label evaluation panel: top-k binarization, label-centric (macro)
//! and overall (micro) precision/recall/F1, per-class average precision and
//! mAP.
//!
//! Conventions:
//! - top-k ties go to the lower class index;
//! - AP ranking ties go to the lower image index;
//! - a per-class `0/0` ratio counts as 0 in the label-centric means;
//! - L-F1 is the mean of per-class F1, not the harmonic mean of L-P and L-R;
//! - classes without positives are left out of mAP.

use std::cmp::Ordering;
use std::fmt;

use crate::error::{Error, Result};
use crate::types::{validate_pair, LabelMatrix, ScoreMatrix};

pub const DEFAULT_K: usize = 3;

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct ClassCounts {
    pub tp: usize,
    pub fp: usize,
    pub fn_: usize,
}

#[derive(Debug, Clone, PartialEq)]
pub struct MetricsReport {
    pub map: f64,
    pub lp: f64,
    pub lr: f64,
    pub lf1: f64,
    pub op: f64,
    pub or: f64,
    pub of1: f64,
    pub k: usize,
    /// `None` for classes with no positive example.
    pub per_class_ap: Vec<Option<f64>>,
}

impl MetricsReport {
    /// `map,lp,lr,lf1,op,or,of1` with four decimals.
    pub fn csv_line(&self) -> String {
        self.panel()
            .iter()
            .map(|v| format!("{v:.4}"))
            .collect::<Vec<_>>()
            .join(",")
    }

    pub fn panel(&self) -> [f64; 7] {
        [
            self.map, self.lp, self.lr, self.lf1, self.op, self.or, self.of1,
        ]
    }
}

impl fmt::Display for MetricsReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(f, "top-k: {}", self.k)?;
        writeln!(f, "mAP   {:6.2}", 100.0 * self.map)?;
        writeln!(f, "L-P   {:6.2}", 100.0 * self.lp)?;
        writeln!(f, "L-R   {:6.2}", 100.0 * self.lr)?;
        writeln!(f, "L-F1  {:6.2}", 100.0 * self.lf1)?;
        writeln!(f, "O-P   {:6.2}", 100.0 * self.op)?;
        writeln!(f, "O-R   {:6.2}", 100.0 * self.or)?;
        writeln!(f, "O-F1  {:6.2}", 100.0 * self.of1)?;
        write!(f, "AP per class:")?;
        for ap in &self.per_class_ap {
            match ap {
                Some(v) => write!(f, " {:.2}", 100.0 * v)?,
                None => write!(f, " -")?,
            }
        }
        Ok(())
    }
}

/// Descending score, ascending index on ties.
fn rank_order(a: (usize, f64), b: (usize, f64)) -> Ordering {
    b.1.total_cmp(&a.1).then(a.0.cmp(&b.0))
}

/// Marks the `k` highest-scoring classes of every row.
pub fn top_k_binarize(scores: &ScoreMatrix, k: usize) -> Result<LabelMatrix> {
    let c = scores.cols();
    if k > c {
        return Err(Error::KTooLarge { k, classes: c });
    }
    if k == 0 {
        return Err(Error::InvalidConfig("k must be at least 1".into()));
    }
    let mut data = vec![false; scores.rows() * c];
    let mut order: Vec<(usize, f64)> = Vec::with_capacity(c);
    for r in 0..scores.rows() {
        order.clear();
        order.extend(scores.row(r).iter().copied().enumerate());
        order.sort_by(|&a, &b| rank_order(a, b));
        for &(j, _) in &order[..k] {
            data[r * c + j] = true;
        }
    }
    LabelMatrix::new(scores.rows(), c, data)
}

pub fn confusion_counts(pred: &LabelMatrix, truth: &LabelMatrix) -> Result<Vec<ClassCounts>> {
    if pred.shape() != truth.shape() {
        return Err(Error::ShapeMismatch {
            expected: truth.shape(),
            actual: pred.shape(),
        });
    }
    let mut counts = vec![ClassCounts::default(); truth.cols()];
    for (i, (&p, &t)) in pred.data().iter().zip(truth.data()).enumerate() {
        let c = &mut counts[i % truth.cols()];
        match (p, t) {
            (true, true) => c.tp += 1,
            (true, false) => c.fp += 1,
            (false, true) => c.fn_ += 1,
            (false, false) => {}
        }
    }
    Ok(counts)
}

fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn harmonic(p: f64, r: f64) -> f64 {
    if p + r > 0.0 {
        2.0 * p * r / (p + r)
    } else {
        0.0
    }
}

/// Per-class precision, recall and F1 averaged uniformly over classes.
pub fn label_centric_prf(counts: &[ClassCounts]) -> (f64, f64, f64) {
    if counts.is_empty() {
        return (0.0, 0.0, 0.0);
    }
    let (mut p, mut r, mut f1) = (0.0, 0.0, 0.0);
    for c in counts {
        p += ratio(c.tp, c.tp + c.fp);
        r += ratio(c.tp, c.tp + c.fn_);
        f1 += ratio(2 * c.tp, 2 * c.tp + c.fp + c.fn_);
    }
    let n = counts.len() as f64;
    (p / n, r / n, f1 / n)
}

/// Pooled precision `ΣTP / (n k)`, recall `ΣTP / Σ(TP + FN)` and their
/// harmonic mean.
pub fn overall_prf(counts: &[ClassCounts], n: usize, k: usize) -> (f64, f64, f64) {
    let tp: usize = counts.iter().map(|c| c.tp).sum();
    let positives: usize = counts.iter().map(|c| c.tp + c.fn_).sum();
    let p = ratio(tp, n * k);
    let r = ratio(tp, positives);
    (p, r, overall_f1(p, r))
}

/// Harmonic mean of overall precision and recall, 0 when both are 0.
pub fn overall_f1(precision: f64, recall: f64) -> f64 {
    harmonic(precision, recall)
}

/// Non-interpolated AP: mean over positives of the precision at their rank.
pub fn average_precision(scores: &[f64], truth: &[bool]) -> Result<f64> {
    if scores.len() != truth.len() {
        return Err(Error::ShapeMismatch {
            expected: (truth.len(), 1),
            actual: (scores.len(), 1),
        });
    }
    let positives = truth.iter().filter(|&&t| t).count();
    if positives == 0 {
        return Err(Error::NoPositives);
    }
    let mut order: Vec<(usize, f64)> = scores.iter().copied().enumerate().collect();
    order.sort_by(|&a, &b| rank_order(a, b));
    let mut hits = 0usize;
    let mut sum = 0.0;
    for (rank, &(i, _)) in order.iter().enumerate() {
        if truth[i] {
            hits += 1;
            sum += hits as f64 / (rank + 1) as f64;
        }
    }
    Ok(sum / positives as f64)
}

/// mAP over classes with at least one positive, plus per-class AP.
pub fn mean_ap(scores: &ScoreMatrix, truth: &LabelMatrix) -> Result<(f64, Vec<Option<f64>>)> {
    validate_pair(scores, truth)?;
    let per_class: Vec<Option<f64>> = (0..truth.cols())
        .map(
            |j| match average_precision(&scores.column(j), &truth.column(j)) {
                Ok(ap) => Ok(Some(ap)),
                Err(Error::NoPositives) => Ok(None),
                Err(e) => Err(e),
            },
        )
        .collect::<Result<_>>()?;
    let defined: Vec<f64> = per_class.iter().flatten().copied().collect();
    if defined.is_empty() {
        return Err(Error::AllClassesEmpty);
    }
    let map = defined.iter().sum::<f64>() / defined.len() as f64;
    Ok((map, per_class))
}

/// Full metric panel with top-`k` binarization.
pub fn evaluate(scores: &ScoreMatrix, truth: &LabelMatrix, k: usize) -> Result<MetricsReport> {
    validate_pair(scores, truth)?;
    let pred = top_k_binarize(scores, k)?;
    let counts = confusion_counts(&pred, truth)?;
    let (lp, lr, lf1) = label_centric_prf(&counts);
    let (op, or, of1) = overall_prf(&counts, scores.rows(), k);
    let (map, per_class_ap) = mean_ap(scores, truth)?;
    Ok(MetricsReport {
        map,
        lp,
        lr,
        lf1,
        op,
        or,
        of1,
        k,
        per_class_ap,
    })
}
