use serde::{Deserialize, Serialize};

use super::ChatError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum RiskLevel {
    None,
    Elevated,
    High,
}

impl RiskLevel {
    pub fn as_str(self) -> &'static str {
        match self {
            Self::None => "none",
            Self::Elevated => "elevated",
            Self::High => "high",
        }
    }

    pub fn recommended_action(self) -> &'static str {
        match self {
            Self::None => "no action indicated",
            Self::Elevated => "review transcript",
            Self::High => "immediate professional referral",
        }
    }
}

/// Thresholds of the aggregation. Loadable from a JSON file; missing
/// fields keep their defaults.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RiskPolicy {
    /// A message is flagged when its score is at least this.
    pub flag_threshold: f64,
    pub high_max: f64,
    pub high_ewma: f64,
    pub elevated_max: f64,
    /// Weight of the previous EWMA value.
    pub ewma_decay: f64,
}

impl Default for RiskPolicy {
    fn default() -> Self {
        Self {
            flag_threshold: 0.8,
            high_max: 0.8,
            high_ewma: 0.6,
            elevated_max: 0.5,
            ewma_decay: 0.7,
        }
    }
}

impl RiskPolicy {
    pub fn validate(&self) -> Result<(), ChatError> {
        let fields = [
            ("flag_threshold", self.flag_threshold),
            ("high_max", self.high_max),
            ("high_ewma", self.high_ewma),
            ("elevated_max", self.elevated_max),
            ("ewma_decay", self.ewma_decay),
        ];
        for (name, v) in fields {
            if !(0.0..=1.0).contains(&v) {
                return Err(ChatError::PolicyInvalid(format!(
                    "{name} = {v} is outside [0, 1]"
                )));
            }
        }
        Ok(())
    }

    pub fn from_json(json: &str) -> Result<Self, ChatError> {
        let p: Self = serde_json::from_str(json).map_err(|e| ChatError::PolicyInvalid(e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn level(&self, max_prob: f64, ewma_prob: f64) -> RiskLevel {
        if max_prob >= self.high_max || ewma_prob >= self.high_ewma {
            RiskLevel::High
        } else if max_prob >= self.elevated_max {
            RiskLevel::Elevated
        } else {
            RiskLevel::None
        }
    }

    pub fn is_flagged(&self, score: f64) -> bool {
        score >= self.flag_threshold
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RiskAggregate {
    pub max_prob: f64,
    pub ewma_prob: f64,
    pub flagged_count: u32,
    pub level: RiskLevel,
}

impl Default for RiskAggregate {
    fn default() -> Self {
        Self {
            max_prob: 0.0,
            ewma_prob: 0.0,
            flagged_count: 0,
            level: RiskLevel::None,
        }
    }
}

impl RiskAggregate {
    /// Folds in the score of the `count`-th message (1-based); the first
    /// score seeds the EWMA directly.
    pub fn update(&self, score: f64, count: usize, policy: &RiskPolicy) -> Self {
        let (max_prob, ewma_prob) = if count <= 1 {
            (score, score)
        } else {
            (
                self.max_prob.max(score),
                policy.ewma_decay * self.ewma_prob + (1.0 - policy.ewma_decay) * score,
            )
        };
        Self {
            max_prob,
            ewma_prob,
            flagged_count: self.flagged_count + u32::from(policy.is_flagged(score)),
            level: policy.level(max_prob, ewma_prob),
        }
    }

    pub fn from_scores(scores: &[f64], policy: &RiskPolicy) -> Self {
        scores
            .iter()
            .enumerate()
            .fold(Self::default(), |agg, (i, &s)| agg.update(s, i + 1, policy))
    }
}
