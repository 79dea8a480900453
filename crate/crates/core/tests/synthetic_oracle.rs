//! The bundled synthetic corpus is separable by a linear bag-of-words model,
//! and the training loop handles the degenerate constant-label task.

use std::collections::HashMap;

use ideation_core::nn::AdamConfig;
use ideation_core::train::synth::synthetic_corpus;
use ideation_core::train::{
    split_dataset, train, Dataset, EarlyStopConfig, GruLearner, Monitor, SplitSpec, TrainConfig,
    TrainingHistory,
};
use ideation_core::{clean_text, CleanRules, EncodedSequence, GruStackModel, ModelConfig, Vocabulary};

/// Plain logistic regression on binary word-presence features, full-batch
/// gradient descent.
struct BagOfWords {
    index: HashMap<String, usize>,
    weights: Vec<f64>,
    bias: f64,
}

impl BagOfWords {
    fn features(&self, text: &str) -> Vec<usize> {
        let mut f: Vec<usize> = text
            .split_whitespace()
            .filter_map(|w| self.index.get(w).copied())
            .collect();
        f.sort_unstable();
        f.dedup();
        f
    }

    fn prob(&self, features: &[usize]) -> f64 {
        let z = self.bias + features.iter().map(|&i| self.weights[i]).sum::<f64>();
        1.0 / (1.0 + (-z).exp())
    }

    fn fit(texts: &[String], labels: &[usize], epochs: usize, lr: f64) -> Self {
        let mut index = HashMap::new();
        for t in texts {
            for w in t.split_whitespace() {
                let next = index.len();
                index.entry(w.to_owned()).or_insert(next);
            }
        }
        let mut m = Self {
            weights: vec![0.0; index.len()],
            index,
            bias: 0.0,
        };
        let feats: Vec<Vec<usize>> = texts.iter().map(|t| m.features(t)).collect();
        let n = texts.len() as f64;
        for _ in 0..epochs {
            let mut gw = vec![0.0; m.weights.len()];
            let mut gb = 0.0;
            for (f, &y) in feats.iter().zip(labels) {
                let err = m.prob(f) - y as f64;
                gb += err;
                for &i in f {
                    gw[i] += err;
                }
            }
            m.bias -= lr * gb / n;
            for (w, g) in m.weights.iter_mut().zip(gw) {
                *w -= lr * g / n;
            }
        }
        m
    }
}

#[test]
fn bag_of_words_oracle_separates_synthetic_corpus() {
    let docs = synthetic_corpus(2000, 7);
    let rules = CleanRules::default();
    let texts: Vec<String> = docs.iter().map(|d| clean_text(&d.text, &rules)).collect();
    let labels: Vec<usize> = docs.iter().map(|d| d.label).collect();
    let (train, _, test) = split_dataset(&texts, &labels, &SplitSpec::default()).unwrap();

    let model = BagOfWords::fit(&train.samples, &train.labels, 200, 0.5);
    let correct = test
        .samples
        .iter()
        .zip(&test.labels)
        .filter(|(t, &y)| usize::from(model.prob(&model.features(t)) >= 0.5) == y)
        .count();
    let accuracy = correct as f64 / test.samples.len() as f64;
    assert!(accuracy >= 0.99, "oracle accuracy {accuracy}");
}

fn constant_label_run(monitor: Monitor) -> TrainingHistory {
    let cfg = ModelConfig {
        vocab_size: 30,
        embed_dim: 6,
        seq_len: 8,
        gru_units: 5,
        ..ModelConfig::default()
    };
    let texts = ["alpha beta", "beta gamma delta", "gamma", "alpha delta alpha"];
    let vocab = Vocabulary::fit(&texts, cfg.vocab_size).unwrap();
    let seqs: Vec<EncodedSequence> = (0..64).map(|i| vocab.encode(texts[i % 4], cfg.seq_len)).collect();
    let data = Dataset::new(seqs, vec![1; 64]).unwrap();
    let mut learner = GruLearner::new(
        GruStackModel::<f32>::new(cfg, 3).unwrap(),
        AdamConfig::default(),
        1,
    );
    let train_cfg = TrainConfig {
        epochs: 25,
        batch_size: 16,
        early_stop: EarlyStopConfig {
            monitor,
            patience: 2,
            ..EarlyStopConfig::default()
        },
        ..TrainConfig::default()
    };
    train(&mut learner, &data, &data, &train_cfg).unwrap()
}

#[test]
fn constant_label_task_stops_after_patience_on_accuracy() {
    let history = constant_label_run(Monitor::ValAccuracy);
    assert_eq!(history.records[0].val_accuracy, 1.0);
    assert_eq!(history.stopped_epoch, 3);
    assert_eq!(history.best_epoch, 1);
}

#[test]
fn constant_label_task_keeps_improving_on_loss() {
    // every epoch pushes the single class further, so val loss never plateaus
    let history = constant_label_run(Monitor::ValLoss);
    assert_eq!(history.records[0].val_accuracy, 1.0);
    assert_eq!(history.stopped_epoch, 25);
    assert!(history
        .records
        .windows(2)
        .all(|w| w[1].val_loss < w[0].val_loss - 1e-4));
}
