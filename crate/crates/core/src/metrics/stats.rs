//! Per-class and overall agreement statistics of a binary confusion matrix.
//!
//! Ratios whose denominator is zero are `None` ("undefined"), never 0.

use serde::{Deserialize, Serialize};

use super::confusion::ConfusionMatrix;
use super::MetricsError;

/// Normal-approximation z value of the 95% confidence interval.
pub const Z_95: f64 = 1.96;

fn ratio(num: f64, den: f64) -> Option<f64> {
    (den != 0.0).then(|| num / den)
}

/// F-beta score from rates.
pub fn f_beta(precision: f64, recall: f64, beta: f64) -> Option<f64> {
    let b2 = beta * beta;
    ratio((1.0 + b2) * precision * recall, b2 * precision + recall)
}

/// F-beta score from counts, `(1+β²)TP / ((1+β²)TP + β²FN + FP)`.
fn f_beta_counts(tp: f64, fn_: f64, fp: f64, beta: f64) -> Option<f64> {
    let b2 = beta * beta;
    ratio((1.0 + b2) * tp, (1.0 + b2) * tp + b2 * fn_ + fp)
}

/// Single-threshold ROC area, `(TPR + TNR) / 2`.
pub fn balanced_auc(sensitivity: f64, specificity: f64) -> f64 {
    (sensitivity + specificity) / 2.0
}

/// Adjusted F-score from rates: `sqrt(F2 · InvF0.5)`, where `InvF0.5` is the
/// β = 0.5 score of the label-swapped problem (precision → NPV, recall → TNR).
pub fn adjusted_f_score(precision: f64, recall: f64, npv: f64, specificity: f64) -> Option<f64> {
    Some((f_beta(precision, recall, 2.0)? * f_beta(npv, specificity, 0.5)?).sqrt())
}

pub fn confidence_interval(accuracy: f64, standard_error: f64) -> (f64, f64) {
    (accuracy - Z_95 * standard_error, accuracy + Z_95 * standard_error)
}

/// Shannon entropy in bits; zero-probability terms contribute 0.
pub fn entropy_bits(counts: &[u64]) -> f64 {
    let n: u64 = counts.iter().sum();
    if n == 0 {
        return 0.0;
    }
    counts
        .iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / n as f64;
            -p * p.log2()
        })
        .sum()
}

/// Landis & Koch strength-of-agreement label.
pub fn soa_landis_koch(kappa: f64) -> &'static str {
    if kappa < 0.0 {
        "Poor"
    } else if kappa <= 0.20 {
        "Slight"
    } else if kappa <= 0.40 {
        "Fair"
    } else if kappa <= 0.60 {
        "Moderate"
    } else if kappa <= 0.80 {
        "Substantial"
    } else {
        "Almost Perfect"
    }
}

/// Fleiss strength-of-agreement label.
pub fn soa_fleiss(kappa: f64) -> &'static str {
    if kappa < 0.40 {
        "Poor"
    } else if kappa <= 0.75 {
        "Intermediate to Good"
    } else {
        "Excellent"
    }
}

/// Altman strength-of-agreement label.
pub fn soa_altman(kappa: f64) -> &'static str {
    if kappa < 0.2 {
        "Poor"
    } else if kappa < 0.4 {
        "Fair"
    } else if kappa < 0.6 {
        "Moderate"
    } else if kappa < 0.8 {
        "Good"
    } else {
        "Very Good"
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ClassStats {
    pub class: usize,
    pub sensitivity: Option<f64>,
    pub specificity: Option<f64>,
    pub precision: Option<f64>,
    /// Negative predictive value.
    pub npv: Option<f64>,
    pub f1: Option<f64>,
    pub fnr: Option<f64>,
    pub fpr: Option<f64>,
    pub err: f64,
    pub auc: Option<f64>,
    pub agf: Option<f64>,
}

/// One-vs-rest statistics for both classes.
pub fn class_stats(cm: &ConfusionMatrix) -> [ClassStats; 2] {
    [0, 1].map(|c| {
        let (tp, fn_, fp, tn) = cm.one_vs_rest(c);
        let (tp, fn_, fp, tn) = (tp as f64, fn_ as f64, fp as f64, tn as f64);
        let sensitivity = ratio(tp, tp + fn_);
        let specificity = ratio(tn, tn + fp);
        let f2 = f_beta_counts(tp, fn_, fp, 2.0);
        // β = 0.5 on the swapped problem: TN plays TP, FP plays FN, FN plays FP
        let inv_f05 = f_beta_counts(tn, fp, fn_, 0.5);
        ClassStats {
            class: c,
            sensitivity,
            specificity,
            precision: ratio(tp, tp + fp),
            npv: ratio(tn, tn + fn_),
            f1: f_beta_counts(tp, fn_, fp, 1.0),
            fnr: sensitivity.map(|s| 1.0 - s),
            fpr: specificity.map(|s| 1.0 - s),
            err: (fp + fn_) / cm.n() as f64,
            auc: sensitivity.zip(specificity).map(|(a, b)| balanced_auc(a, b)),
            agf: f2.zip(inv_f05).map(|(a, b)| (a * b).sqrt()),
        }
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct OverallStats {
    pub n: u64,
    pub accuracy: f64,
    pub f1_macro: Option<f64>,
    pub f1_micro: f64,
    pub hamming_loss: f64,
    pub kappa: Option<f64>,
    pub kappa_se: Option<f64>,
    pub standard_error: f64,
    pub ci95: (f64, f64),
    pub reference_entropy: f64,
    pub response_entropy: f64,
    pub soa1_landis_koch: Option<&'static str>,
    pub soa2_fleiss: Option<&'static str>,
    pub soa3_altman: Option<&'static str>,
}

pub fn overall_stats(cm: &ConfusionMatrix) -> Result<OverallStats, MetricsError> {
    let n_int = cm.n();
    if n_int < 2 {
        return Err(MetricsError::TooFewSamples(n_int));
    }
    let n = n_int as f64;
    let accuracy = (cm.get(0, 0) + cm.get(1, 1)) as f64 / n;
    let standard_error = (accuracy * (1.0 - accuracy) / n).sqrt();
    let pe: f64 = (0..2)
        .map(|c| (cm.true_total(c) as f64 / n) * (cm.predicted_total(c) as f64 / n))
        .sum();
    let kappa = ratio(accuracy - pe, 1.0 - pe);
    let kappa_se = (pe != 1.0).then(|| (accuracy * (1.0 - accuracy) / (n * (1.0 - pe).powi(2))).sqrt());
    let per_class = class_stats(cm);
    let f1_macro = per_class[0].f1.zip(per_class[1].f1).map(|(a, b)| (a + b) / 2.0);
    Ok(OverallStats {
        n: n_int,
        accuracy,
        f1_macro,
        f1_micro: accuracy,
        hamming_loss: 1.0 - accuracy,
        kappa,
        kappa_se,
        standard_error,
        ci95: confidence_interval(accuracy, standard_error),
        reference_entropy: entropy_bits(&[cm.true_total(0), cm.true_total(1)]),
        response_entropy: entropy_bits(&[cm.predicted_total(0), cm.predicted_total(1)]),
        soa1_landis_koch: kappa.map(soa_landis_koch),
        soa2_fleiss: kappa.map(soa_fleiss),
        soa3_altman: kappa.map(soa_altman),
    })
}
