//! Confusion matrices and per-class / macro / support-weighted F1.
//!
//! Zero denominators yield 0 for precision, recall and F1.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ClassCounts {
    pub tp: u64,
    pub fp: u64,
    pub fn_: u64,
}

impl ClassCounts {
    pub fn support(&self) -> u64 {
        self.tp + self.fn_
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClassMetrics {
    pub label: String,
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub support: u64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MetricsReport {
    pub labels: Vec<String>,
    /// `confusion[truth][predicted]`.
    pub confusion: Vec<Vec<u64>>,
    pub per_class: Vec<ClassMetrics>,
    pub macro_f1: f64,
    pub weighted_f1: f64,
    pub accuracy: f64,
    pub samples: u64,
}

fn ratio(num: u64, den: u64) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

fn f1(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

/// Per-class metrics with macro and support-weighted F1 from raw counts.
pub fn metrics_from_counts(
    labels: &[String],
    counts: &[ClassCounts],
) -> (Vec<ClassMetrics>, f64, f64) {
    let per_class: Vec<ClassMetrics> = labels
        .iter()
        .zip(counts)
        .map(|(label, c)| {
            let precision = ratio(c.tp, c.tp + c.fp);
            let recall = ratio(c.tp, c.tp + c.fn_);
            ClassMetrics {
                label: label.clone(),
                precision,
                recall,
                f1: f1(precision, recall),
                support: c.support(),
            }
        })
        .collect();
    let k = per_class.len().max(1) as f64;
    let macro_f1 = per_class.iter().map(|m| m.f1).sum::<f64>() / k;
    let total: u64 = per_class.iter().map(|m| m.support).sum();
    let weighted_f1 = if total == 0 {
        0.0
    } else {
        per_class
            .iter()
            .map(|m| m.f1 * m.support as f64)
            .sum::<f64>()
            / total as f64
    };
    (per_class, macro_f1, weighted_f1)
}

pub fn confusion_matrix(classes: usize, truth: &[usize], predicted: &[usize]) -> Vec<Vec<u64>> {
    let mut m = vec![vec![0u64; classes]; classes];
    for (&t, &p) in truth.iter().zip(predicted) {
        m[t][p] += 1;
    }
    m
}

pub fn metrics_from_confusion(labels: Vec<String>, confusion: Vec<Vec<u64>>) -> MetricsReport {
    let k = labels.len();
    let mut counts = vec![ClassCounts::default(); k];
    let mut samples = 0;
    let mut correct = 0;
    for (t, row) in confusion.iter().enumerate() {
        for (p, &n) in row.iter().enumerate() {
            samples += n;
            if t == p {
                counts[t].tp += n;
                correct += n;
            } else {
                counts[t].fn_ += n;
                counts[p].fp += n;
            }
        }
    }
    let (per_class, macro_f1, weighted_f1) = metrics_from_counts(&labels, &counts);
    MetricsReport {
        labels,
        confusion,
        per_class,
        macro_f1,
        weighted_f1,
        accuracy: ratio(correct, samples),
        samples,
    }
}

pub fn metrics_from_predictions(
    labels: Vec<String>,
    truth: &[usize],
    predicted: &[usize],
) -> MetricsReport {
    let confusion = confusion_matrix(labels.len(), truth, predicted);
    metrics_from_confusion(labels, confusion)
}
