use rand::seq::SliceRandom;
use serde::{Deserialize, Serialize};

use super::history::{EpochRecord, TrainingHistory};
use super::TrainError;
use crate::nn::init::{derive_seed, rng_from};
use crate::nn::AdamConfig;
use crate::text::EncodedSequence;

/// Encoded samples with their class labels.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Dataset {
    pub sequences: Vec<EncodedSequence>,
    pub labels: Vec<usize>,
}

impl Dataset {
    pub fn new(sequences: Vec<EncodedSequence>, labels: Vec<usize>) -> Result<Self, TrainError> {
        if sequences.len() != labels.len() {
            return Err(TrainError::LengthMismatch {
                samples: sequences.len(),
                labels: labels.len(),
            });
        }
        Ok(Self { sequences, labels })
    }

    pub fn len(&self) -> usize {
        self.labels.len()
    }

    pub fn is_empty(&self) -> bool {
        self.labels.is_empty()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Monitor {
    ValLoss,
    ValAccuracy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EarlyStopConfig {
    pub monitor: Monitor,
    pub patience: usize,
    pub min_delta: f64,
    pub restore_best: bool,
}

impl Default for EarlyStopConfig {
    fn default() -> Self {
        Self {
            monitor: Monitor::ValLoss,
            patience: 3,
            min_delta: 1e-4,
            restore_best: true,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct TrainConfig {
    pub epochs: usize,
    pub batch_size: usize,
    pub early_stop: EarlyStopConfig,
    pub optimizer: AdamConfig,
    pub seed: u64,
}

impl Default for TrainConfig {
    fn default() -> Self {
        Self {
            epochs: 25,
            batch_size: 128,
            early_stop: EarlyStopConfig::default(),
            optimizer: AdamConfig::default(),
            seed: 0,
        }
    }
}

impl TrainConfig {
    pub fn validate(&self) -> Result<(), TrainError> {
        if self.epochs == 0 || self.batch_size == 0 || self.early_stop.patience == 0 {
            return Err(TrainError::InvalidConfig(
                "epochs, batch_size and patience must be at least 1".into(),
            ));
        }
        if self.early_stop.min_delta.is_nan() || self.early_stop.min_delta < 0.0 {
            return Err(TrainError::InvalidConfig("min_delta must be non-negative".into()));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Verdict {
    Improved,
    Waiting,
    Stop,
}

/// Patience-based stopping rule on a monitored quantity.
#[derive(Debug, Clone)]
pub struct EarlyStopping {
    config: EarlyStopConfig,
    best: Option<f64>,
    best_epoch: usize,
    wait: usize,
}

impl EarlyStopping {
    pub fn new(config: EarlyStopConfig) -> Self {
        Self {
            config,
            best: None,
            best_epoch: 0,
            wait: 0,
        }
    }

    pub fn best_epoch(&self) -> usize {
        self.best_epoch
    }

    pub fn best_value(&self) -> Option<f64> {
        self.best
    }

    pub fn observe(&mut self, epoch: usize, val_loss: f64, val_accuracy: f64) -> Verdict {
        // normalise to "lower is better"
        let value = match self.config.monitor {
            Monitor::ValLoss => val_loss,
            Monitor::ValAccuracy => -val_accuracy,
        };
        let improved = match self.best {
            None => true,
            Some(best) => value < best - self.config.min_delta,
        };
        if improved {
            self.best = Some(value);
            self.best_epoch = epoch;
            self.wait = 0;
            Verdict::Improved
        } else {
            self.wait += 1;
            if self.wait >= self.config.patience {
                Verdict::Stop
            } else {
                Verdict::Waiting
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BatchStats {
    /// Mean loss over the batch.
    pub loss: f64,
    pub correct: usize,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EvalStats {
    pub loss: f64,
    pub accuracy: f64,
}

/// Position of a mini-batch within a run; used to seed dropout.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct BatchContext {
    pub epoch: usize,
    pub batch: usize,
}

/// A model the training loop can drive.
pub trait Learner {
    type Snapshot;

    /// One optimizer step on a mini-batch.
    fn train_batch(
        &mut self,
        batch: &[EncodedSequence],
        labels: &[usize],
        ctx: BatchContext,
    ) -> Result<BatchStats, TrainError>;

    /// Inference-mode loss and accuracy.
    fn evaluate(&self, data: &Dataset) -> Result<EvalStats, TrainError>;

    fn snapshot(&self) -> Self::Snapshot;

    fn restore(&mut self, snapshot: Self::Snapshot);
}

/// Mini-batch training with per-epoch validation and early stopping.
///
/// Each epoch visits every training sample once, in an order shuffled from
/// `(seed, epoch)`; the last batch may be partial. When early stopping is
/// configured to restore, the learner ends with the weights of the best
/// monitored epoch.
pub fn train<L: Learner>(
    learner: &mut L,
    train_set: &Dataset,
    val_set: &Dataset,
    cfg: &TrainConfig,
) -> Result<TrainingHistory, TrainError> {
    train_with_progress(learner, train_set, val_set, cfg, &mut |_| {})
}

/// [`train`], calling `progress` after every completed epoch.
pub fn train_with_progress<L: Learner>(
    learner: &mut L,
    train_set: &Dataset,
    val_set: &Dataset,
    cfg: &TrainConfig,
    progress: &mut dyn FnMut(&EpochRecord),
) -> Result<TrainingHistory, TrainError> {
    cfg.validate()?;
    if train_set.is_empty() || val_set.is_empty() {
        return Err(TrainError::EmptyDataset);
    }
    let mut stopper = EarlyStopping::new(cfg.early_stop.clone());
    let mut best: Option<L::Snapshot> = None;
    let mut history = TrainingHistory::default();
    let mut order: Vec<usize> = (0..train_set.len()).collect();
    let mut batch_x = Vec::with_capacity(cfg.batch_size);
    let mut batch_y = Vec::with_capacity(cfg.batch_size);

    for epoch in 1..=cfg.epochs {
        order.sort_unstable();
        order.shuffle(&mut rng_from(derive_seed(cfg.seed, &[epoch as u64])));
        let mut loss_sum = 0.0;
        let mut correct = 0usize;
        for (bi, chunk) in order.chunks(cfg.batch_size).enumerate() {
            batch_x.clear();
            batch_y.clear();
            for &i in chunk {
                batch_x.push(train_set.sequences[i].clone());
                batch_y.push(train_set.labels[i]);
            }
            let stats = learner.train_batch(&batch_x, &batch_y, BatchContext { epoch, batch: bi })?;
            loss_sum += stats.loss * chunk.len() as f64;
            correct += stats.correct;
        }
        let val = learner.evaluate(val_set)?;
        let record = EpochRecord {
            epoch,
            train_loss: loss_sum / train_set.len() as f64,
            train_accuracy: correct as f64 / train_set.len() as f64,
            val_loss: val.loss,
            val_accuracy: val.accuracy,
        };
        if ![
            record.train_loss,
            record.train_accuracy,
            record.val_loss,
            record.val_accuracy,
        ]
        .iter()
        .all(|v| v.is_finite())
        {
            return Err(TrainError::NonFinite { epoch });
        }
        progress(&record);
        history.records.push(record);
        history.stopped_epoch = epoch;
        match stopper.observe(epoch, val.loss, val.accuracy) {
            Verdict::Improved => {
                if cfg.early_stop.restore_best {
                    best = Some(learner.snapshot());
                }
            }
            Verdict::Waiting => {}
            Verdict::Stop => break,
        }
    }
    if let Some(snapshot) = best {
        learner.restore(snapshot);
        history.best_epoch = stopper.best_epoch();
    } else {
        history.best_epoch = history.stopped_epoch;
    }
    Ok(history)
}

#[cfg(test)]
mod tests {
    use super::*;

    /// Learner whose validation loss follows a script and whose "weights"
    /// are the number of batches trained so far.
    struct Scripted {
        val_losses: Vec<f64>,
        evaluations: std::cell::Cell<usize>,
        steps: usize,
        restored: Option<usize>,
    }

    impl Learner for Scripted {
        type Snapshot = usize;

        fn train_batch(
            &mut self,
            batch: &[EncodedSequence],
            _labels: &[usize],
            _ctx: BatchContext,
        ) -> Result<BatchStats, TrainError> {
            self.steps += 1;
            Ok(BatchStats {
                loss: 0.5,
                correct: batch.len(),
            })
        }

        fn evaluate(&self, _data: &Dataset) -> Result<EvalStats, TrainError> {
            let i = self.evaluations.get();
            self.evaluations.set(i + 1);
            Ok(EvalStats {
                loss: self.val_losses[i.min(self.val_losses.len() - 1)],
                accuracy: 1.0,
            })
        }

        fn snapshot(&self) -> usize {
            self.evaluations.get()
        }

        fn restore(&mut self, snapshot: usize) {
            self.restored = Some(snapshot);
        }
    }

    fn data(n: usize) -> Dataset {
        Dataset::new(vec![EncodedSequence(vec![1]); n], vec![0; n]).unwrap()
    }

    fn scripted(losses: &[f64]) -> Scripted {
        Scripted {
            val_losses: losses.to_vec(),
            evaluations: Default::default(),
            steps: 0,
            restored: None,
        }
    }

    #[test]
    fn plateau_stops_after_patience() {
        let mut l = scripted(&[1.0, 0.9, 0.9, 0.9, 0.1]);
        let cfg = TrainConfig {
            early_stop: EarlyStopConfig {
                patience: 2,
                ..Default::default()
            },
            ..Default::default()
        };
        let h = train(&mut l, &data(10), &data(3), &cfg).unwrap();
        assert_eq!(h.stopped_epoch, 4);
        assert_eq!(h.records.len(), 4);
        assert_eq!(h.best_epoch, 2);
        assert_eq!(l.restored, Some(2));
    }

    #[test]
    fn partial_last_batch_is_trained() {
        let mut l = scripted(&[1.0, 0.5]);
        let cfg = TrainConfig {
            epochs: 2,
            batch_size: 4,
            ..Default::default()
        };
        let h = train(&mut l, &data(10), &data(3), &cfg).unwrap();
        assert_eq!(l.steps, 6);
        assert_eq!(h.stopped_epoch, 2);
        assert_eq!(h.records[0].train_accuracy, 1.0);
    }

    #[test]
    fn tiny_improvements_do_not_count() {
        let mut stop = EarlyStopping::new(EarlyStopConfig {
            patience: 2,
            ..Default::default()
        });
        assert_eq!(stop.observe(1, 1.0, 0.0), Verdict::Improved);
        assert_eq!(stop.observe(2, 0.99995, 0.0), Verdict::Waiting);
        assert_eq!(stop.observe(3, 0.5, 0.0), Verdict::Improved);
        assert_eq!(stop.observe(4, 0.6, 0.0), Verdict::Waiting);
        assert_eq!(stop.observe(5, 0.6, 0.0), Verdict::Stop);
        assert_eq!(stop.best_epoch(), 3);
    }

    #[test]
    fn accuracy_monitor() {
        let mut stop = EarlyStopping::new(EarlyStopConfig {
            monitor: Monitor::ValAccuracy,
            patience: 1,
            ..Default::default()
        });
        assert_eq!(stop.observe(1, 9.0, 0.5), Verdict::Improved);
        assert_eq!(stop.observe(2, 9.0, 0.8), Verdict::Improved);
        assert_eq!(stop.observe(3, 0.1, 0.8), Verdict::Stop);
    }

    #[test]
    fn empty_sets_rejected() {
        let mut l = scripted(&[1.0]);
        let cfg = TrainConfig::default();
        assert!(matches!(
            train(&mut l, &Dataset::default(), &data(2), &cfg),
            Err(TrainError::EmptyDataset)
        ));
        assert!(matches!(
            train(&mut l, &data(2), &Dataset::default(), &cfg),
            Err(TrainError::EmptyDataset)
        ));
    }
}
