use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::TrainError;
use crate::nn::init::rng_from;

pub const MIN_SPLIT_SAMPLES: usize = 10;

/// Train/validation/test fractions and the shuffle seed.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SplitSpec {
    pub train_frac: f64,
    pub val_frac: f64,
    pub test_frac: f64,
    pub shuffle_seed: u64,
}

impl Default for SplitSpec {
    fn default() -> Self {
        Self {
            train_frac: 0.5,
            val_frac: 0.2,
            test_frac: 0.3,
            shuffle_seed: 0,
        }
    }
}

impl SplitSpec {
    pub fn validate(&self) -> Result<(), TrainError> {
        let fracs = [self.train_frac, self.val_frac, self.test_frac];
        if fracs.iter().any(|f| !(f.is_finite() && *f > 0.0)) {
            return Err(TrainError::BadFractions(fracs));
        }
        if (fracs.iter().sum::<f64>() - 1.0).abs() > 1e-9 {
            return Err(TrainError::BadFractions(fracs));
        }
        Ok(())
    }

    /// Sizes `(floor(train·n), floor(val·n), remainder)`.
    pub fn sizes(&self, n: usize) -> (usize, usize, usize) {
        // the epsilon absorbs products like 0.29 * 100 = 28.999999999999996
        let part = |f: f64| (f * n as f64 + 1e-9).floor() as usize;
        let train = part(self.train_frac);
        let val = part(self.val_frac);
        (train, val, n - train - val)
    }
}

/// Positions of each partition in the original sample order.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct SplitIndices {
    pub train: Vec<usize>,
    pub val: Vec<usize>,
    pub test: Vec<usize>,
}

/// Seeded uniform shuffle of `0..n` followed by a contiguous three-way cut.
pub fn split_indices(n: usize, spec: &SplitSpec) -> Result<SplitIndices, TrainError> {
    spec.validate()?;
    if n < MIN_SPLIT_SAMPLES {
        return Err(TrainError::TooFewSamples(n));
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.shuffle(&mut rng_from(spec.shuffle_seed));
    let (a, b, _) = spec.sizes(n);
    let test = order.split_off(a + b);
    let val = order.split_off(a);
    Ok(SplitIndices {
        train: order,
        val,
        test,
    })
}

/// Train, validation and test partitions.
pub type Partitions<T> = (Partition<T>, Partition<T>, Partition<T>);

/// One partition of a labelled dataset.
#[derive(Debug, Clone, PartialEq)]
pub struct Partition<T> {
    pub samples: Vec<T>,
    pub labels: Vec<usize>,
}

impl<T: Clone> Partition<T> {
    fn gather(samples: &[T], labels: &[usize], idx: &[usize]) -> Self {
        Self {
            samples: idx.iter().map(|&i| samples[i].clone()).collect(),
            labels: idx.iter().map(|&i| labels[i]).collect(),
        }
    }
}

pub fn split_dataset<T: Clone>(
    samples: &[T],
    labels: &[usize],
    spec: &SplitSpec,
) -> Result<Partitions<T>, TrainError> {
    if samples.len() != labels.len() {
        return Err(TrainError::LengthMismatch {
            samples: samples.len(),
            labels: labels.len(),
        });
    }
    let idx = split_indices(samples.len(), spec)?;
    Ok((
        Partition::gather(samples, labels, &idx.train),
        Partition::gather(samples, labels, &idx.val),
        Partition::gather(samples, labels, &idx.test),
    ))
}
