use super::tensor::{Matrix, Real};
use super::NnError;

pub const PROB_EPSILON: f64 = 1e-7;

#[inline]
pub fn clip_probability<F: Real>(p: F) -> F {
    let lo = F::of(PROB_EPSILON);
    let hi = F::one() - lo;
    p.max(lo).min(hi)
}

/// Row-wise softmax (max-shifted).
pub fn softmax_rows<F: Real>(mut logits: Matrix<F>) -> Matrix<F> {
    for i in 0..logits.rows() {
        let row = logits.row_mut(i);
        let max = row.iter().copied().fold(F::neg_infinity(), F::max);
        let mut sum = F::zero();
        for v in row.iter_mut() {
            *v = (*v - max).exp();
            sum = sum + *v;
        }
        for v in row.iter_mut() {
            *v = *v / sum;
        }
    }
    logits
}

/// Mean of `-ln p[label]` over the batch, with probabilities clipped to
/// `[1e-7, 1 - 1e-7]`.
pub fn categorical_cross_entropy<F: Real>(probs: &Matrix<F>, labels: &[usize]) -> Result<F, NnError> {
    if labels.len() != probs.rows() {
        return Err(NnError::ShapeMismatch {
            what: "label count",
            expected: probs.rows(),
            found: labels.len(),
        });
    }
    if labels.is_empty() {
        return Ok(F::zero());
    }
    let mut total = F::zero();
    for (i, &label) in labels.iter().enumerate() {
        if label >= probs.cols() {
            return Err(NnError::LabelOutOfRange {
                label,
                classes: probs.cols(),
            });
        }
        total = total - clip_probability(probs.get(i, label)).ln();
    }
    Ok(total / F::of(labels.len() as f64))
}

/// Index of the largest entry of each row (first wins on ties).
pub fn argmax_rows<F: Real>(probs: &Matrix<F>) -> Vec<usize> {
    (0..probs.rows())
        .map(|i| {
            let row = probs.row(i);
            let mut best = 0;
            for j in 1..row.len() {
                if row[j] > row[best] {
                    best = j;
                }
            }
            best
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn perfect_prediction_is_clipped() {
        let p = Matrix::from_vec(1, 2, vec![1.0f64, 0.0]);
        let loss = categorical_cross_entropy(&p, &[0]).unwrap();
        assert_eq!(loss, -(1.0f64 - 1e-7).ln());
        let wrong = categorical_cross_entropy(&p, &[1]).unwrap();
        assert!((wrong - -(1e-7f64).ln()).abs() < 1e-12);
    }

    #[test]
    fn uniform_prediction_is_ln2() {
        let p = Matrix::from_vec(1, 2, vec![0.5f64, 0.5]);
        let loss = categorical_cross_entropy(&p, &[1]).unwrap();
        assert_eq!(loss, std::f64::consts::LN_2);
    }

    #[test]
    fn mean_reduction() {
        let p = Matrix::from_vec(2, 2, vec![0.9f64, 0.1, 0.3, 0.7]);
        let a = -(0.9f64).ln();
        let b = -(0.3f64).ln();
        let loss = categorical_cross_entropy(&p, &[0, 0]).unwrap();
        assert!((loss - (a + b) / 2.0).abs() < 1e-15);
    }

    #[test]
    fn shape_errors() {
        let p = Matrix::from_vec(1, 2, vec![0.5f64, 0.5]);
        assert!(categorical_cross_entropy(&p, &[0, 1]).is_err());
        assert!(categorical_cross_entropy(&p, &[2]).is_err());
    }

    #[test]
    fn softmax_of_equal_logits() {
        let s = softmax_rows(Matrix::from_vec(1, 2, vec![3.0f64, 3.0]));
        assert_eq!(s.row(0), &[0.5, 0.5]);
        let big = softmax_rows(Matrix::from_vec(1, 3, vec![1000.0f64, 0.0, -1000.0]));
        assert!((big.row(0).iter().sum::<f64>() - 1.0).abs() < 1e-12);
    }
}
