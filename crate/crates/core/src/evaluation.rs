//! Binary sentiment evaluation: rating labels, decision thresholds, confusion
//! matrix, classification report and ROC/AUC.

use std::fmt;

use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Error)]
pub enum EvalError {
    #[error("rating {0} outside [1, 5]")]
    RatingDomain(f64),
    #[error("length mismatch: {0} vs {1}")]
    LengthMismatch(usize, usize),
    #[error("label {0} not in {{0, 1}}")]
    BadLabel(u8),
    #[error("empty input")]
    Empty,
    #[error("ROC undefined: both classes must be present")]
    SingleClass,
    #[error("non-finite score at index {0}")]
    NonFinite(usize),
    #[error("invalid threshold grid: {0}")]
    Grid(String),
}

/// 0 (negative) for ratings ≤ 3, 1 (positive) otherwise.
pub fn rating_to_label(rating: f64) -> Result<u8, EvalError> {
    if !(1.0..=5.0).contains(&rating) {
        return Err(EvalError::RatingDomain(rating));
    }
    Ok(u8::from(rating > 3.0))
}

/// Scores at or below the threshold are negative.
#[inline]
pub fn apply_threshold(score: f64, threshold: f64) -> u8 {
    u8::from(score > threshold)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub struct ConfusionMatrix {
    pub tn: u64,
    pub fp: u64,
    pub fn_: u64,
    pub tp: u64,
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.tn + self.fp + self.fn_ + self.tp
    }
}

fn check_labels(labels: &[u8]) -> Result<(), EvalError> {
    match labels.iter().find(|&&l| l > 1) {
        Some(&l) => Err(EvalError::BadLabel(l)),
        None => Ok(()),
    }
}

pub fn confusion(truth: &[u8], pred: &[u8]) -> Result<ConfusionMatrix, EvalError> {
    if truth.len() != pred.len() {
        return Err(EvalError::LengthMismatch(truth.len(), pred.len()));
    }
    check_labels(truth)?;
    check_labels(pred)?;
    let mut cm = ConfusionMatrix::default();
    for (&t, &p) in truth.iter().zip(pred) {
        match (p, t) {
            (0, 0) => cm.tn += 1,
            (1, 0) => cm.fp += 1,
            (0, 1) => cm.fn_ += 1,
            _ => cm.tp += 1,
        }
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AveragedMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq)]
pub struct ClassificationReport {
    pub negative: ClassMetrics,
    pub positive: ClassMetrics,
    pub accuracy: f64,
    pub macro_avg: AveragedMetrics,
    pub weighted_avg: AveragedMetrics,
    pub total: u64,
    /// Set when some precision/recall/F1 had a zero denominator and was
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

fn f1(p: f64, r: f64, flag: &mut bool) -> f64 {
    if p + r == 0.0 {
        *flag = true;
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Per-class, macro and support-weighted metrics of a confusion matrix.
pub fn report(cm: &ConfusionMatrix) -> ClassificationReport {
    let mut zero = false;
    let total = cm.total();
    let pos_p = ratio(cm.tp, cm.tp + cm.fp, &mut zero);
    let pos_r = ratio(cm.tp, cm.tp + cm.fn_, &mut zero);
    let neg_p = ratio(cm.tn, cm.tn + cm.fn_, &mut zero);
    let neg_r = ratio(cm.tn, cm.tn + cm.fp, &mut zero);
    let positive = ClassMetrics {
        precision: pos_p,
        recall: pos_r,
        f1: f1(pos_p, pos_r, &mut zero),
        support: cm.tp + cm.fn_,
    };
    let negative = ClassMetrics {
        precision: neg_p,
        recall: neg_r,
        f1: f1(neg_p, neg_r, &mut zero),
        support: cm.tn + cm.fp,
    };
    let macro_avg = AveragedMetrics {
        precision: (negative.precision + positive.precision) / 2.0,
        recall: (negative.recall + positive.recall) / 2.0,
        f1: (negative.f1 + positive.f1) / 2.0,
    };
    let weighted = |a: f64, b: f64| {
        if total == 0 {
            0.0
        } else {
            (a * negative.support as f64 + b * positive.support as f64) / total as f64
        }
    };
    let weighted_avg = AveragedMetrics {
        precision: weighted(negative.precision, positive.precision),
        recall: weighted(negative.recall, positive.recall),
        f1: weighted(negative.f1, positive.f1),
    };
    ClassificationReport {
        negative,
        positive,
        accuracy: ratio(cm.tp + cm.tn, total, &mut zero),
        macro_avg,
        weighted_avg,
        total,
        zero_division: zero,
    }
}

impl fmt::Display for ClassificationReport {
    /// Aligned text in the familiar classification-report layout.
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        writeln!(
            f,
            "{:>14} {:>9} {:>9} {:>9} {:>9}",
            "", "precision", "recall", "f1-score", "support"
        )?;
        writeln!(f)?;
        for (name, c) in [("Negative", &self.negative), ("Positive", &self.positive)] {
            writeln!(
                f,
                "{:>14} {:>9.2} {:>9.2} {:>9.2} {:>9}",
                name, c.precision, c.recall, c.f1, c.support
            )?;
        }
        writeln!(f)?;
        writeln!(
            f,
            "{:>14} {:>9} {:>9} {:>9.2} {:>9}",
            "accuracy", "", "", self.accuracy, self.total
        )?;
        for (name, a) in [
            ("macro avg", &self.macro_avg),
            ("weighted avg", &self.weighted_avg),
        ] {
            writeln!(
                f,
                "{:>14} {:>9.2} {:>9.2} {:>9.2} {:>9}",
                name, a.precision, a.recall, a.f1, self.total
            )?;
        }
        Ok(())
    }
}

/// Evenly spaced thresholds `start + i·step` strictly below `stop`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ThresholdGrid {
    pub start: f64,
    pub stop: f64,
    pub step: f64,
}

impl Default for ThresholdGrid {
    fn default() -> Self {
        Self {
            start: -1.0,
            stop: 1.0,
            step: 0.1,
        }
    }
}

impl ThresholdGrid {
    pub fn points(&self) -> Result<Vec<f64>, EvalError> {
        if !(self.step > 0.0 && self.step.is_finite()) {
            return Err(EvalError::Grid(format!(
                "step {} must be positive",
                self.step
            )));
        }
        if !(self.start.is_finite() && self.stop.is_finite()) || self.start >= self.stop {
            return Err(EvalError::Grid(format!(
                "start {} must be below stop {}",
                self.start, self.stop
            )));
        }
        // the point count is decided in exact ratio terms so that e.g.
        // [-1, 1) step 0.1 has 20 points despite 0.1 not being representable
        let span = (self.stop - self.start) / self.step;
        let mut n = span.ceil() as usize;
        if (span - span.round()).abs() < 1e-9 {
            n = span.round() as usize;
        }
        Ok((0..n).map(|i| self.start + i as f64 * self.step).collect())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdSweepResult {
    pub grid: Vec<f64>,
    pub f1_by_threshold: Vec<f64>,
    pub best_threshold: f64,
    pub best_f1: f64,
}

/// Support-weighted F1 of thresholded predictions.
pub fn weighted_f1_at(scores: &[f64], labels: &[u8], threshold: f64) -> Result<f64, EvalError> {
    let pred: Vec<u8> = scores
        .iter()
        .map(|&s| apply_threshold(s, threshold))
        .collect();
    Ok(report(&confusion(labels, &pred)?).weighted_avg.f1)
}

/// Evaluates weighted F1 at every grid point and keeps the first maximum.
pub fn sweep_thresholds(
    scores: &[f64],
    labels: &[u8],
    grid: ThresholdGrid,
) -> Result<ThresholdSweepResult, EvalError> {
    if scores.is_empty() {
        return Err(EvalError::Empty);
    }
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch(scores.len(), labels.len()));
    }
    let points = grid.points()?;
    let f1s = points
        .iter()
        .map(|&t| weighted_f1_at(scores, labels, t))
        .collect::<Result<Vec<_>, _>>()?;
    let mut best = 0;
    for (i, &f) in f1s.iter().enumerate().skip(1) {
        if f > f1s[best] {
            best = i;
        }
    }
    Ok(ThresholdSweepResult {
        best_threshold: points[best],
        best_f1: f1s[best],
        grid: points,
        f1_by_threshold: f1s,
    })
}

#[derive(Debug, Clone, PartialEq)]
pub struct RocCurve {
    /// (fpr, tpr) pairs from (0, 0) to (1, 1).
    pub points: Vec<(f64, f64)>,
    /// Threshold producing each point; ±∞ for the added endpoints.
    pub thresholds: Vec<f64>,
    pub auc: f64,
}

/// ROC over the unique scores (descending), positive when score ≥ threshold,
/// with trapezoidal AUC.
pub fn roc(scores: &[f64], labels: &[u8]) -> Result<RocCurve, EvalError> {
    if scores.len() != labels.len() {
        return Err(EvalError::LengthMismatch(scores.len(), labels.len()));
    }
    check_labels(labels)?;
    if let Some(i) = scores.iter().position(|s| !s.is_finite()) {
        return Err(EvalError::NonFinite(i));
    }
    let pos = labels.iter().filter(|&&l| l == 1).count() as u64;
    let neg = labels.len() as u64 - pos;
    if pos == 0 || neg == 0 {
        return Err(EvalError::SingleClass);
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));

    let mut points = vec![(0.0, 0.0)];
    let mut thresholds = vec![f64::INFINITY];
    let (mut tp, mut fp) = (0u64, 0u64);
    let mut i = 0;
    while i < order.len() {
        let t = scores[order[i]];
        while i < order.len() && scores[order[i]] == t {
            if labels[order[i]] == 1 {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        // fp + tn = neg, tp + fn = pos
        points.push((fp as f64 / neg as f64, tp as f64 / pos as f64));
        thresholds.push(t);
    }
    if points.last() != Some(&(1.0, 1.0)) {
        points.push((1.0, 1.0));
        thresholds.push(f64::NEG_INFINITY);
    }
    let auc = trapezoid_auc(&points);
    Ok(RocCurve {
        points,
        thresholds,
        auc,
    })
}

/// Σ (TPR_{i+1} + TPR_i)/2 · (FPR_{i+1} − FPR_i).
pub fn trapezoid_auc(points: &[(f64, f64)]) -> f64 {
    points
        .windows(2)
        .map(|w| (w[1].1 + w[0].1) / 2.0 * (w[1].0 - w[0].0))
        .sum()
}
