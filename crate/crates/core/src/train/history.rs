use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TrainError;

pub const HISTORY_HEADER: &str = "epoch,train_loss,train_acc,val_loss,val_acc";

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EpochRecord {
    /// 1-based.
    pub epoch: usize,
    pub train_loss: f64,
    pub train_accuracy: f64,
    pub val_loss: f64,
    pub val_accuracy: f64,
}

/// Per-epoch learning curves of one run.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct TrainingHistory {
    pub records: Vec<EpochRecord>,
    /// Number of epochs actually run.
    pub stopped_epoch: usize,
    /// Epoch whose weights were kept.
    pub best_epoch: usize,
}

impl TrainingHistory {
    pub fn best(&self) -> Option<&EpochRecord> {
        self.records.iter().find(|r| r.epoch == self.best_epoch)
    }

    /// Writes the curves as CSV with six fixed decimals.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<(), TrainError> {
        if self.records.is_empty() {
            return Err(TrainError::EmptyHistory);
        }
        writeln!(out, "{HISTORY_HEADER}")?;
        for r in &self.records {
            writeln!(
                out,
                "{},{:.6},{:.6},{:.6},{:.6}",
                r.epoch, r.train_loss, r.train_accuracy, r.val_loss, r.val_accuracy
            )?;
        }
        Ok(())
    }

    pub fn export(&self, path: &Path) -> Result<(), TrainError> {
        let mut buf = Vec::new();
        self.write_csv(&mut buf)?;
        std::fs::write(path, buf)?;
        Ok(())
    }

    /// Parses the CSV produced by [`Self::write_csv`]. `stopped_epoch` is the
    /// last epoch listed; `best_epoch` the one with the lowest validation loss.
    pub fn read_csv<R: BufRead>(input: R) -> Result<Self, TrainError> {
        let mut lines = input.lines();
        match lines.next().transpose()? {
            Some(h) if h.trim() == HISTORY_HEADER => {}
            other => {
                return Err(TrainError::MalformedHistory(format!(
                    "bad header {:?}",
                    other.unwrap_or_default()
                )))
            }
        }
        let mut records = Vec::new();
        for (i, line) in lines.enumerate() {
            let line = line?;
            if line.trim().is_empty() {
                continue;
            }
            let bad = || TrainError::MalformedHistory(format!("row {}: {line:?}", i + 1));
            let cols: Vec<&str> = line.split(',').collect();
            if cols.len() != 5 {
                return Err(bad());
            }
            let f = |s: &str| s.trim().parse::<f64>().map_err(|_| bad());
            records.push(EpochRecord {
                epoch: cols[0].trim().parse().map_err(|_| bad())?,
                train_loss: f(cols[1])?,
                train_accuracy: f(cols[2])?,
                val_loss: f(cols[3])?,
                val_accuracy: f(cols[4])?,
            });
        }
        let stopped_epoch = records.last().map_or(0, |r| r.epoch);
        let best_epoch = records
            .iter()
            .min_by(|a, b| a.val_loss.total_cmp(&b.val_loss))
            .map_or(0, |r| r.epoch);
        Ok(Self {
            records,
            stopped_epoch,
            best_epoch,
        })
    }
}
