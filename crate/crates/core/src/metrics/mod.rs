//! Confusion matrix, agreement statistics and evaluation reports.

mod confusion;
mod report;
mod stats;

pub use confusion::ConfusionMatrix;
pub use report::{
    class_rows, overall_rows, render_report, Report, CLASS_FILE, CONFUSION_FILE, OVERALL_FILE, TEXT_FILE,
    UNDEFINED,
};
pub use stats::{
    adjusted_f_score, balanced_auc, class_stats, confidence_interval, entropy_bits, f_beta, overall_stats,
    soa_altman, soa_fleiss, soa_landis_koch, ClassStats, OverallStats, Z_95,
};

#[derive(Debug, thiserror::Error)]
pub enum MetricsError {
    #[error("{truth} true labels but {predicted} predictions")]
    LengthMismatch { truth: usize, predicted: usize },
    #[error("label {0} is not a binary class")]
    BadLabel(usize),
    #[error("confusion matrix is empty")]
    Empty,
    #[error("overall statistics need at least 2 samples, got {0}")]
    TooFewSamples(u64),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Confusion matrix plus every derived statistic.
#[derive(Debug, Clone, PartialEq, serde::Serialize)]
pub struct Evaluation {
    pub confusion: ConfusionMatrix,
    pub classes: [ClassStats; 2],
    pub overall: OverallStats,
}

impl Evaluation {
    pub fn from_labels(truth: &[usize], predicted: &[usize]) -> Result<Self, MetricsError> {
        let confusion = ConfusionMatrix::build(truth, predicted)?;
        Ok(Self {
            classes: class_stats(&confusion),
            overall: overall_stats(&confusion)?,
            confusion,
        })
    }

    pub fn report(&self, train_accuracy: Option<f64>) -> Report {
        render_report(&self.classes, &self.overall, &self.confusion, train_accuracy)
    }
}
