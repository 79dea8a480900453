use std::collections::HashMap;

use parking_lot::Mutex;
use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::Classifier;
use crate::store;

/// Scores one user message: probability of the "suicide" class.
pub trait Detector: Send + Sync {
    fn score(&self, text: &str) -> Result<f64, String>;

    /// Identifies the scoring model in reports, e.g. an archive checksum.
    fn model_id(&self) -> Option<String> {
        None
    }
}

/// [`Detector`] backed by a trained classifier.
#[derive(Debug)]
pub struct ModelDetector {
    classifier: Classifier,
    checksum: String,
}

impl ModelDetector {
    /// `checksum` should identify the archive the classifier came from.
    pub fn new(classifier: Classifier, checksum: String) -> Self {
        Self { classifier, checksum }
    }

    /// Uses the SHA-256 of the archive encoding as the checksum.
    pub fn from_classifier(classifier: Classifier) -> Self {
        let checksum = archive_checksum(&store::encode(&classifier, None));
        Self::new(classifier, checksum)
    }

    pub fn classifier(&self) -> &Classifier {
        &self.classifier
    }
}

/// Hex SHA-256 of archive bytes, as shown by `/v1/health` and in reports.
pub fn archive_checksum(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

impl Detector for ModelDetector {
    fn score(&self, text: &str) -> Result<f64, String> {
        self.classifier.score(text).map_err(|e| e.to_string())
    }

    fn model_id(&self) -> Option<String> {
        Some(self.checksum.clone())
    }
}

/// Test double: scores come from a per-text table, then a fallback.
#[derive(Debug, Default)]
pub struct StubDetector {
    table: HashMap<String, f64>,
    fallback: f64,
    calls: Mutex<u64>,
}

impl StubDetector {
    pub fn constant(score: f64) -> Self {
        Self {
            fallback: score,
            ..Self::default()
        }
    }

    pub fn with_table<I: IntoIterator<Item = (String, f64)>>(table: I, fallback: f64) -> Self {
        Self {
            table: table.into_iter().collect(),
            fallback,
            calls: Mutex::new(0),
        }
    }

    pub fn calls(&self) -> u64 {
        *self.calls.lock()
    }
}

impl Detector for StubDetector {
    fn score(&self, text: &str) -> Result<f64, String> {
        *self.calls.lock() += 1;
        Ok(self.table.get(text).copied().unwrap_or(self.fallback))
    }

    fn model_id(&self) -> Option<String> {
        Some("stub".to_owned())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct IssueFinding {
    pub message_index: usize,
    pub issue: String,
    pub evidence: String,
}

/// Hook for detectors of other mental-health issues.
pub trait IssueDetector: Send + Sync {
    fn name(&self) -> &str;
    fn detect(&self, message_index: usize, cleaned: &str) -> Vec<IssueFinding>;
}

/// Default [`IssueDetector`]; finds nothing.
#[derive(Debug, Default, Clone, Copy)]
pub struct NoopIssueDetector;

impl IssueDetector for NoopIssueDetector {
    fn name(&self) -> &str {
        "none"
    }

    fn detect(&self, _message_index: usize, _cleaned: &str) -> Vec<IssueFinding> {
        Vec::new()
    }
}
