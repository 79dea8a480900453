//! Finite-difference gradient check shared by the test targets.

#![allow(dead_code)]

use ideation_core::nn::{categorical_cross_entropy, DropoutMasks, GruStackModel, ModelConfig};
use ideation_core::EncodedSequence;

pub const STEP: f64 = 1e-5;
pub const TOLERANCE: f64 = 1e-4;

pub fn tiny_config(embedding_trainable: bool) -> ModelConfig {
    ModelConfig {
        vocab_size: 20,
        embed_dim: 4,
        seq_len: 5,
        gru_units: 3,
        num_classes: 2,
        dropout_rate: 0.2,
        embedding_trainable,
    }
}

pub fn batch() -> (Vec<EncodedSequence>, Vec<usize>) {
    (
        vec![
            EncodedSequence(vec![3, 17, 5, 0, 0]),
            EncodedSequence(vec![19, 2, 2, 8, 11]),
        ],
        vec![0, 1],
    )
}

fn loss(model: &GruStackModel<f64>, masks: Option<&DropoutMasks<f64>>) -> f64 {
    let (x, y) = batch();
    let cache = model.forward_train(&x, masks).unwrap();
    categorical_cross_entropy(&cache.probs, &y).unwrap()
}

/// Per-tensor relative error `‖a − n‖ / max(‖a‖, ‖n‖)` between the analytic
/// gradient and central differences.
pub fn tensor_errors(
    model_seed: u64,
    masks: Option<&DropoutMasks<f64>>,
    embedding_trainable: bool,
) -> Vec<(String, f64)> {
    let mut model = GruStackModel::<f64>::new(tiny_config(embedding_trainable), model_seed).unwrap();
    // Non-zero biases so every bias gradient carries signal.
    for layer in 0..3 {
        let g = model.gru_mut(layer);
        for b in g.bias_in.iter_mut().chain(g.bias_rec.iter_mut()) {
            *b = 0.1;
        }
    }
    let (x, y) = batch();
    let cache = model.forward_train(&x, masks).unwrap();
    let analytic = model.backward(&cache, &y).unwrap();
    let names = model.trainable_names();
    assert_eq!(names.len(), analytic.tensors.len());

    let mut errors = Vec::new();
    for (ti, name) in names.iter().enumerate() {
        let len = analytic.tensors[ti].len();
        let mut numeric = vec![0.0; len];
        #[allow(clippy::needless_range_loop)]
        for i in 0..len {
            let orig = model.trainable_mut()[ti][i];
            model.trainable_mut()[ti][i] = orig + STEP;
            let up = loss(&model, masks);
            model.trainable_mut()[ti][i] = orig - STEP;
            let down = loss(&model, masks);
            model.trainable_mut()[ti][i] = orig;
            numeric[i] = (up - down) / (2.0 * STEP);
        }
        let a = &analytic.tensors[ti];
        let diff: f64 = a
            .iter()
            .zip(&numeric)
            .map(|(p, q)| (p - q).powi(2))
            .sum::<f64>()
            .sqrt();
        let na: f64 = a.iter().map(|p| p * p).sum::<f64>().sqrt();
        let nn: f64 = numeric.iter().map(|p| p * p).sum::<f64>().sqrt();
        let scale = na.max(nn);
        let rel = if scale < 1e-12 { diff } else { diff / scale };
        if *name == "embedding" {
            // rows of tokens absent from the batch receive exactly zero
            for row in [1usize, 4, 6] {
                assert!(a[row * 4..row * 4 + 4].iter().all(|&g| g == 0.0));
            }
        }
        assert!(scale > 0.0, "{name}: gradient identically zero");
        errors.push((name.to_string(), rel));
    }
    errors
}

/// The worst entry of [`tensor_errors`] as `(error, tensor name)`.
pub fn check(model_seed: u64, masks: Option<&DropoutMasks<f64>>, embedding_trainable: bool) -> (f64, String) {
    tensor_errors(model_seed, masks, embedding_trainable)
        .into_iter()
        .map(|(n, e)| (e, n))
        .fold((0.0, String::new()), |w, c| if c.0 > w.0 { c } else { w })
}
