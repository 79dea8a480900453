use rayon::prelude::*;

use super::fit::{BatchContext, BatchStats, Dataset, EvalStats, Learner};
use super::TrainError;
use crate::nn::init::{derive_seed, rng_from};
use crate::nn::{
    argmax_rows, categorical_cross_entropy, AdamConfig, AdamState, DropoutMasks, Gradients, GruStackModel,
    Matrix, Real,
};
use crate::text::EncodedSequence;

/// Samples per parallel work unit. Fixed so that results do not depend on
/// the number of threads.
pub const CHUNK: usize = 16;

/// Drives a [`GruStackModel`] with Adam and seeded inverted dropout.
#[derive(Debug, Clone)]
pub struct GruLearner<F> {
    pub model: GruStackModel<F>,
    pub optimizer: AdamState<F>,
    dropout_seed: u64,
}

impl<F: Real> GruLearner<F> {
    pub fn new(model: GruStackModel<F>, optimizer: AdamConfig, dropout_seed: u64) -> Self {
        let lens = model.trainable_lens();
        Self {
            model,
            optimizer: AdamState::new(optimizer, &lens),
            dropout_seed,
        }
    }

    pub fn into_model(self) -> GruStackModel<F> {
        self.model
    }
}

/// Inference-mode probabilities for any number of samples, computed in
/// fixed-size chunks on the rayon pool.
pub fn predict_all<F: Real>(
    model: &GruStackModel<F>,
    sequences: &[EncodedSequence],
) -> Result<Matrix<F>, TrainError> {
    let classes = model.config().num_classes;
    let parts: Vec<Matrix<F>> = sequences
        .par_chunks(4 * CHUNK)
        .map(|chunk| model.predict(chunk))
        .collect::<Result<_, _>>()?;
    let mut data = Vec::with_capacity(sequences.len() * classes);
    for p in parts {
        data.extend(p.into_vec());
    }
    Ok(Matrix::from_vec(sequences.len(), classes, data))
}

impl<F: Real> Learner for GruLearner<F> {
    type Snapshot = GruStackModel<F>;

    fn train_batch(
        &mut self,
        batch: &[EncodedSequence],
        labels: &[usize],
        ctx: BatchContext,
    ) -> Result<BatchStats, TrainError> {
        let model = &self.model;
        let n = batch.len();
        let seed = derive_seed(self.dropout_seed, &[ctx.epoch as u64, ctx.batch as u64]);
        let parts: Vec<(F, usize, Gradients<F>, usize)> = batch
            .par_chunks(CHUNK)
            .zip(labels.par_chunks(CHUNK))
            .enumerate()
            .map(|(ci, (xs, ys))| {
                let mut rng = rng_from(derive_seed(seed, &[ci as u64]));
                let masks = DropoutMasks::sample(model.config(), xs.len(), &mut rng);
                let cache = model.forward_train(xs, Some(&masks))?;
                let loss = categorical_cross_entropy(&cache.probs, ys)?;
                let correct = argmax_rows(&cache.probs)
                    .iter()
                    .zip(ys)
                    .filter(|(p, y)| p == y)
                    .count();
                let grads = model.backward(&cache, ys)?;
                Ok((loss, correct, grads, xs.len()))
            })
            .collect::<Result<_, TrainError>>()?;

        let mut parts = parts.into_iter();
        let (loss0, mut correct, mut total, len0) = parts.next().ok_or(TrainError::EmptyDataset)?;
        let inv_n = F::one() / F::of(n as f64);
        let w0 = F::of(len0 as f64) * inv_n;
        total.scale(w0);
        let mut loss = loss0.as_f64() * len0 as f64;
        for (l, c, g, len) in parts {
            total.add_scaled(&g, F::of(len as f64) * inv_n);
            loss += l.as_f64() * len as f64;
            correct += c;
        }
        self.model.apply_adam(&mut self.optimizer, &total)?;
        Ok(BatchStats {
            loss: loss / n as f64,
            correct,
        })
    }

    fn evaluate(&self, data: &Dataset) -> Result<EvalStats, TrainError> {
        let probs = predict_all(&self.model, &data.sequences)?;
        let loss = categorical_cross_entropy(&probs, &data.labels)?.as_f64();
        let correct = argmax_rows(&probs)
            .iter()
            .zip(&data.labels)
            .filter(|(p, y)| p == y)
            .count();
        Ok(EvalStats {
            loss,
            accuracy: correct as f64 / data.len().max(1) as f64,
        })
    }

    fn snapshot(&self) -> Self::Snapshot {
        self.model.clone()
    }

    fn restore(&mut self, snapshot: Self::Snapshot) {
        self.model = snapshot;
    }
}
