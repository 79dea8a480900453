use serde::{Deserialize, Serialize};

use super::MetricsError;

/// Binary confusion matrix: rows are true classes, columns predictions.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ConfusionMatrix {
    counts: [[u64; 2]; 2],
}

impl ConfusionMatrix {
    pub fn from_counts(counts: [[u64; 2]; 2]) -> Result<Self, MetricsError> {
        if counts.iter().flatten().sum::<u64>() == 0 {
            return Err(MetricsError::Empty);
        }
        Ok(Self { counts })
    }

    pub fn build(true_labels: &[usize], predicted: &[usize]) -> Result<Self, MetricsError> {
        if true_labels.len() != predicted.len() {
            return Err(MetricsError::LengthMismatch {
                truth: true_labels.len(),
                predicted: predicted.len(),
            });
        }
        let mut counts = [[0u64; 2]; 2];
        for (&t, &p) in true_labels.iter().zip(predicted) {
            if t > 1 || p > 1 {
                return Err(MetricsError::BadLabel(t.max(p)));
            }
            counts[t][p] += 1;
        }
        Self::from_counts(counts)
    }

    pub fn counts(&self) -> [[u64; 2]; 2] {
        self.counts
    }

    pub fn get(&self, truth: usize, predicted: usize) -> u64 {
        self.counts[truth][predicted]
    }

    pub fn n(&self) -> u64 {
        self.counts.iter().flatten().sum()
    }

    /// Number of samples whose true class is `c`.
    pub fn true_total(&self, c: usize) -> u64 {
        self.counts[c][0] + self.counts[c][1]
    }

    /// Number of samples predicted as class `c`.
    pub fn predicted_total(&self, c: usize) -> u64 {
        self.counts[0][c] + self.counts[1][c]
    }

    /// `(TP, FN, FP, TN)` with class `c` as the positive class.
    pub fn one_vs_rest(&self, c: usize) -> (u64, u64, u64, u64) {
        let o = 1 - c;
        (
            self.counts[c][c],
            self.counts[c][o],
            self.counts[o][c],
            self.counts[o][o],
        )
    }
}
