//! Pixel-level segmentation metrics: accuracy plus per-class and macro
//! precision, recall and F1 over the three foreground classes.

use serde::{Deserialize, Serialize};

use crate::class::ClassLabel;
use crate::compositor::ClassMask;
use crate::error::{Error, Result};

/// `counts[t][p]` is the number of pixels of true class `t` predicted as `p`.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    pub counts: [[u64; 4]; 4],
}

impl ConfusionMatrix {
    pub fn total(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    pub fn correct(&self) -> u64 {
        (0..4).map(|c| self.counts[c][c]).sum()
    }

    pub fn add(&mut self, other: &ConfusionMatrix) {
        for t in 0..4 {
            for p in 0..4 {
                self.counts[t][p] += other.counts[t][p];
            }
        }
    }
}

pub fn confusion(pred: &ClassMask, truth: &ClassMask) -> Result<ConfusionMatrix> {
    if (pred.width(), pred.height()) != (truth.width(), truth.height()) {
        return Err(Error::Shape(format!(
            "prediction is {}x{} but ground truth is {}x{}",
            pred.width(),
            pred.height(),
            truth.width(),
            truth.height()
        )));
    }
    let mut cm = ConfusionMatrix::default();
    for (&p, &t) in pred.codes().iter().zip(truth.codes()) {
        cm.counts[t as usize][p as usize] += 1;
    }
    Ok(cm)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassScores {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    /// Ground-truth pixels of this class.
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub accuracy: f64,
    pub text: ClassScores,
    pub figure: ClassScores,
    pub table: ClassScores,
    pub macro_precision: f64,
    pub macro_recall: f64,
    pub macro_f1: f64,
    pub total_pixels: u64,
    /// Foreground classes with no ground-truth pixels; they score 0.
    pub zero_support: Vec<ClassLabel>,
}

impl Metrics {
    pub fn class(&self, class: ClassLabel) -> Option<&ClassScores> {
        match class {
            ClassLabel::Text => Some(&self.text),
            ClassLabel::Figure => Some(&self.figure),
            ClassLabel::Table => Some(&self.table),
            ClassLabel::Background => None,
        }
    }
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall > 0.0 {
        2.0 * precision * recall / (precision + recall)
    } else {
        0.0
    }
}

pub fn class_scores(cm: &ConfusionMatrix, class: ClassLabel) -> ClassScores {
    let c = class.code() as usize;
    let tp = cm.counts[c][c];
    let predicted: u64 = (0..4).map(|t| cm.counts[t][c]).sum();
    let actual: u64 = cm.counts[c].iter().sum();
    let precision = ratio(tp, predicted);
    let recall = ratio(tp, actual);
    ClassScores {
        precision,
        recall,
        f1: f1_score(precision, recall),
        support: actual,
    }
}

pub fn metrics(cm: &ConfusionMatrix) -> Result<Metrics> {
    let total = cm.total();
    if total == 0 {
        return Err(Error::Domain("cannot score an empty confusion matrix".into()));
    }
    let [text, figure, table] = ClassLabel::FOREGROUND.map(|c| class_scores(cm, c));
    let mean = |f: fn(&ClassScores) -> f64| (f(&text) + f(&figure) + f(&table)) / 3.0;
    let zero_support = ClassLabel::FOREGROUND
        .into_iter()
        .zip([&text, &figure, &table])
        .filter(|(_, s)| s.support == 0)
        .map(|(c, _)| c)
        .collect();
    Ok(Metrics {
        accuracy: cm.correct() as f64 / total as f64,
        macro_precision: mean(|s| s.precision),
        macro_recall: mean(|s| s.recall),
        macro_f1: mean(|s| s.f1),
        text,
        figure,
        table,
        total_pixels: total,
        zero_support,
    })
}
