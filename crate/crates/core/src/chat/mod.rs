//! Screening conversations: question-bank dialogue, per-message scoring,
//! risk aggregation and reports.

mod bank;
mod detector;
mod report;
mod risk;
mod session;

pub use bank::{Question, QuestionBank, DEFAULT_CLOSING_PROMPT};
pub use detector::{
    archive_checksum, Detector, IssueDetector, IssueFinding, ModelDetector, NoopIssueDetector, StubDetector,
};
pub use report::{FlaggedMessage, OtherIssues, RiskReport};
pub use risk::{RiskAggregate, RiskLevel, RiskPolicy};
pub use session::{
    valid_session_id, ChatSession, Clock, EventLog, MessageOutcome, NextQuestion, Role, SessionEvent,
    SessionManager, SessionStart, SessionState, StepClock, SystemClock, TranscriptEntry, MAX_MESSAGE_BYTES,
};

#[derive(Debug, thiserror::Error)]
pub enum ChatError {
    #[error("invalid question bank: {0}")]
    BankInvalid(String),
    #[error("invalid risk policy: {0}")]
    PolicyInvalid(String),
    #[error("session {0} not found")]
    SessionNotFound(String),
    #[error("session {0} is closed")]
    SessionClosed(String),
    #[error("no model is loaded")]
    ModelNotLoaded,
    #[error("invalid message: {0}")]
    InvalidMessage(String),
    #[error("detector failed: {0}")]
    Detector(String),
    #[error("event log: {0}")]
    Log(String),
}

impl ChatError {
    fn log(e: impl std::fmt::Display) -> Self {
        Self::Log(e.to_string())
    }
}
