//! Per-class precision/recall/F1, macro and weighted averages, accuracy and
//! the 7×7 confusion matrix (rows = true class, columns = predicted).

use std::collections::BTreeMap;
use std::fmt::Write;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::flow_model::{AttackGroup, N_CLASSES};

pub type Confusion = [[usize; N_CLASSES]; N_CLASSES];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Averages {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassificationReport {
    pub per_class: BTreeMap<AttackGroup, ClassMetrics>,
    pub accuracy: f64,
    /// Unweighted mean over all seven classes.
    pub macro_avg: Averages,
    pub weighted_avg: Averages,
    pub micro_f1: f64,
    pub confusion: Confusion,
    pub n: usize,
    /// Classes where a precision, recall or F1 denominator was zero and the score was set to 0.
    pub zero_division: Vec<AttackGroup>,
}

fn check(y_true: &[usize], y_pred: &[usize]) -> Result<()> {
    if y_true.len() != y_pred.len() {
        return Err(Error::LengthMismatch {
            left: y_true.len(),
            right: y_pred.len(),
        });
    }
    if let Some(&bad) = y_true.iter().chain(y_pred).find(|&&c| c >= N_CLASSES) {
        return Err(Error::BadCode(bad));
    }
    Ok(())
}

pub fn confusion_matrix(y_true: &[usize], y_pred: &[usize]) -> Result<Confusion> {
    check(y_true, y_pred)?;
    let mut m = [[0; N_CLASSES]; N_CLASSES];
    for (&t, &p) in y_true.iter().zip(y_pred) {
        m[t][p] += 1;
    }
    Ok(m)
}

fn ratio(num: f64, den: f64, zero: &mut bool) -> f64 {
    if den == 0.0 {
        *zero = true;
        0.0
    } else {
        num / den
    }
}

pub fn classification_report(y_true: &[usize], y_pred: &[usize]) -> Result<ClassificationReport> {
    let confusion = confusion_matrix(y_true, y_pred)?;
    let n = y_true.len();
    let mut per_class = BTreeMap::new();
    let mut zero_division = Vec::new();
    let mut trace = 0;
    for g in AttackGroup::ALL {
        let c = g.code();
        let tp = confusion[c][c];
        let support: usize = confusion[c].iter().sum();
        let predicted: usize = (0..N_CLASSES).map(|r| confusion[r][c]).sum();
        trace += tp;
        let mut zero = false;
        let precision = ratio(tp as f64, predicted as f64, &mut zero);
        let recall = ratio(tp as f64, support as f64, &mut zero);
        let f1 = ratio(2.0 * precision * recall, precision + recall, &mut zero);
        if zero {
            zero_division.push(g);
        }
        per_class.insert(
            g,
            ClassMetrics {
                precision,
                recall,
                f1,
                support,
            },
        );
    }
    let k = N_CLASSES as f64;
    let macro_avg = Averages {
        precision: per_class.values().map(|m| m.precision).sum::<f64>() / k,
        recall: per_class.values().map(|m| m.recall).sum::<f64>() / k,
        f1: per_class.values().map(|m| m.f1).sum::<f64>() / k,
    };
    let weighted = |f: fn(&ClassMetrics) -> f64| {
        if n == 0 {
            0.0
        } else {
            per_class.values().map(|m| f(m) * m.support as f64).sum::<f64>() / n as f64
        }
    };
    let weighted_avg = Averages {
        precision: weighted(|m| m.precision),
        recall: weighted(|m| m.recall),
        f1: weighted(|m| m.f1),
    };
    let accuracy = if n == 0 { 0.0 } else { trace as f64 / n as f64 };
    // Single-label multiclass: micro P = micro R = accuracy.
    let micro_f1 = accuracy;
    Ok(ClassificationReport {
        per_class,
        accuracy,
        macro_avg,
        weighted_avg,
        micro_f1,
        confusion,
        n,
        zero_division,
    })
}

pub fn macro_f1(y_true: &[usize], y_pred: &[usize]) -> Result<f64> {
    Ok(classification_report(y_true, y_pred)?.macro_avg.f1)
}

impl ClassificationReport {
    /// Aligned text table: one row per class, then accuracy and the two averages.
    pub fn to_text(&self) -> String {
        let mut s = String::new();
        let _ = writeln!(s, "{:>12} {:>9} {:>9} {:>9} {:>9}", "", "precision", "recall", "f1-score", "support");
        let _ = writeln!(s);
        for (g, m) in &self.per_class {
            let _ = writeln!(
                s,
                "{:>12} {:>9.2} {:>9.2} {:>9.2} {:>9}",
                g.name(),
                m.precision,
                m.recall,
                m.f1,
                m.support
            );
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "{:>12} {:>9} {:>9} {:>9.2} {:>9}", "accuracy", "", "", self.accuracy, self.n);
        for (name, a) in [("macro avg", &self.macro_avg), ("weighted avg", &self.weighted_avg)] {
            let _ = writeln!(
                s,
                "{:>12} {:>9.2} {:>9.2} {:>9.2} {:>9}",
                name, a.precision, a.recall, a.f1, self.n
            );
        }
        s
    }

    pub fn f1(&self, g: AttackGroup) -> f64 {
        self.per_class[&g].f1
    }
}
