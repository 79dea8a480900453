use std::fmt::Write as _;

use chrono::{DateTime, SecondsFormat, Utc};
use serde::{Deserialize, Serialize};

use super::detector::IssueFinding;
use super::risk::{RiskAggregate, RiskLevel, RiskPolicy};
use super::session::{ChatSession, Role, SessionState, TranscriptEntry};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FlaggedMessage {
    /// Position among the user's messages, 0-based.
    pub message_index: usize,
    pub text: String,
    pub score: f64,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct OtherIssues {
    pub detector: String,
    pub findings: Vec<IssueFinding>,
}

/// The final report on a session for the responsible authority.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RiskReport {
    pub session_id: String,
    pub generated_at: DateTime<Utc>,
    pub state: SessionState,
    pub transcript: Vec<TranscriptEntry>,
    pub scores: Vec<f64>,
    pub flag_threshold: f64,
    pub flagged: Vec<FlaggedMessage>,
    pub aggregate: RiskAggregate,
    pub level: RiskLevel,
    pub recommended_action: String,
    pub model_checksum: Option<String>,
    pub other_issues: OtherIssues,
}

impl RiskReport {
    pub fn build(
        session: &ChatSession,
        policy: &RiskPolicy,
        model_checksum: Option<String>,
        issue_detector: &str,
        generated_at: DateTime<Utc>,
    ) -> Self {
        let flagged = session
            .user_messages()
            .zip(&session.scores)
            .enumerate()
            .filter(|(_, (_, &s))| policy.is_flagged(s))
            .map(|(i, (m, &score))| FlaggedMessage {
                message_index: i,
                text: m.text.clone(),
                score,
                timestamp: m.timestamp,
            })
            .collect();
        let level = session.aggregate.level;
        Self {
            session_id: session.session_id.clone(),
            generated_at,
            state: session.state,
            transcript: session.transcript.clone(),
            scores: session.scores.clone(),
            flag_threshold: policy.flag_threshold,
            flagged,
            aggregate: session.aggregate,
            level,
            recommended_action: level.recommended_action().to_owned(),
            model_checksum,
            other_issues: OtherIssues {
                detector: issue_detector.to_owned(),
                findings: session.issues.clone(),
            },
        }
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("report serialises")
    }

    /// Plain-text rendering.
    pub fn to_text(&self) -> String {
        let ts = |t: &DateTime<Utc>| t.to_rfc3339_opts(SecondsFormat::Millis, true);
        let mut s = String::new();
        let _ = writeln!(s, "Risk report for session {}", self.session_id);
        let _ = writeln!(s, "Generated:          {}", ts(&self.generated_at));
        let state = match self.state {
            SessionState::Active => "active",
            SessionState::Closed => "closed",
        };
        let _ = writeln!(s, "Session state:      {state}");
        let _ = writeln!(
            s,
            "Model checksum:     {}",
            self.model_checksum.as_deref().unwrap_or("n/a")
        );
        let _ = writeln!(s, "Risk level:         {}", self.level.as_str());
        let _ = writeln!(s, "Recommended action: {}", self.recommended_action);
        let _ = writeln!(
            s,
            "Messages scored:    {} (max {:.4}, ewma {:.4}, flagged {})",
            self.scores.len(),
            self.aggregate.max_prob,
            self.aggregate.ewma_prob,
            self.aggregate.flagged_count
        );
        let _ = writeln!(s);
        let _ = writeln!(s, "Flagged messages (score >= {}):", self.flag_threshold);
        if self.flagged.is_empty() {
            let _ = writeln!(s, "  none");
        }
        for f in &self.flagged {
            let _ = writeln!(s, "  #{} [{:.4}] {}", f.message_index + 1, f.score, f.text);
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "Transcript:");
        let mut scores = self.scores.iter();
        for e in &self.transcript {
            match e.role {
                Role::Bot => {
                    let _ = writeln!(s, "  {} bot:  {}", ts(&e.timestamp), e.text);
                }
                Role::User => {
                    let score = scores.next().map_or_else(String::new, |v| format!(" [{v:.4}]"));
                    let _ = writeln!(s, "  {} user:{score} {}", ts(&e.timestamp), e.text);
                }
            }
        }
        let _ = writeln!(s);
        let _ = writeln!(s, "Other issues ({}):", self.other_issues.detector);
        if self.other_issues.findings.is_empty() {
            let _ = writeln!(s, "  none");
        }
        for f in &self.other_issues.findings {
            let _ = writeln!(s, "  #{} {}: {}", f.message_index + 1, f.issue, f.evidence);
        }
        s
    }
}
