use std::collections::{BTreeSet, HashMap};
use std::fs::{self, File, OpenOptions};
use std::io::{BufRead, BufReader, Write};
use std::path::{Path, PathBuf};
use std::sync::atomic::{AtomicI64, Ordering};
use std::sync::Arc;

use chrono::{DateTime, DurationRound, TimeDelta, Utc};
use parking_lot::{Mutex, RwLock};
use rand::{Rng, RngCore, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::bank::QuestionBank;
use super::detector::{Detector, IssueDetector, IssueFinding, NoopIssueDetector};
use super::report::RiskReport;
use super::risk::{RiskAggregate, RiskPolicy};
use super::ChatError;
use crate::text::{clean_text, CleanRules};

/// Longest accepted user message, in bytes.
pub const MAX_MESSAGE_BYTES: usize = 10_000;

pub trait Clock: Send + Sync {
    fn now(&self) -> DateTime<Utc>;
}

/// Wall clock, millisecond resolution.
#[derive(Debug, Default, Clone, Copy)]
pub struct SystemClock;

impl Clock for SystemClock {
    fn now(&self) -> DateTime<Utc> {
        let now = Utc::now();
        now.duration_trunc(TimeDelta::milliseconds(1)).unwrap_or(now)
    }
}

/// Deterministic clock that advances one second per reading.
#[derive(Debug)]
pub struct StepClock {
    start: DateTime<Utc>,
    ticks: AtomicI64,
}

impl StepClock {
    pub fn new(start: DateTime<Utc>) -> Self {
        Self {
            start,
            ticks: AtomicI64::new(0),
        }
    }
}

impl Clock for StepClock {
    fn now(&self) -> DateTime<Utc> {
        self.start + TimeDelta::seconds(self.ticks.fetch_add(1, Ordering::Relaxed))
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Role {
    Bot,
    User,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEntry {
    pub role: Role,
    pub text: String,
    pub timestamp: DateTime<Utc>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum SessionState {
    Active,
    Closed,
}

/// A question put to the user, or the closing prompt (`id` absent).
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct NextQuestion {
    pub id: Option<u32>,
    pub text: String,
    pub closing: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SessionStart {
    pub session_id: String,
    pub question: NextQuestion,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MessageOutcome {
    pub score: f64,
    pub next_question: NextQuestion,
    pub aggregate: RiskAggregate,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChatSession {
    pub session_id: String,
    pub created_at: DateTime<Utc>,
    pub transcript: Vec<TranscriptEntry>,
    /// One score per user message, in order.
    pub scores: Vec<f64>,
    pub asked: BTreeSet<u32>,
    pub last_question: Option<u32>,
    pub state: SessionState,
    pub aggregate: RiskAggregate,
    pub issues: Vec<IssueFinding>,
}

impl ChatSession {
    /// User messages in order, aligned with `scores`.
    pub fn user_messages(&self) -> impl Iterator<Item = &TranscriptEntry> {
        self.transcript.iter().filter(|e| e.role == Role::User)
    }
}

/// One line of a session's event log.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "event", rename_all = "snake_case")]
pub enum SessionEvent {
    Created {
        session_id: String,
        at: DateTime<Utc>,
        question: NextQuestion,
    },
    Message {
        at: DateTime<Utc>,
        text: String,
        score: f64,
        #[serde(default)]
        issues: Vec<IssueFinding>,
        next: NextQuestion,
    },
}

fn ask(session: &mut ChatSession, q: &NextQuestion, at: DateTime<Utc>) {
    session.transcript.push(TranscriptEntry {
        role: Role::Bot,
        text: q.text.clone(),
        timestamp: at,
    });
    match q.id {
        Some(id) if !q.closing => {
            session.asked.insert(id);
            session.last_question = Some(id);
        }
        _ => session.state = SessionState::Closed,
    }
}

/// Applies a message event to an existing session.
fn apply_message(session: &mut ChatSession, event: &SessionEvent, policy: &RiskPolicy) {
    if let SessionEvent::Message {
        at,
        text,
        score,
        issues,
        next,
    } = event
    {
        session.transcript.push(TranscriptEntry {
            role: Role::User,
            text: text.clone(),
            timestamp: *at,
        });
        session.scores.push(*score);
        session.aggregate = session.aggregate.update(*score, session.scores.len(), policy);
        session.issues.extend(issues.iter().cloned());
        ask(session, next, *at);
    }
}

fn start_session(event: &SessionEvent) -> Option<ChatSession> {
    let SessionEvent::Created {
        session_id,
        at,
        question,
    } = event
    else {
        return None;
    };
    let mut s = ChatSession {
        session_id: session_id.clone(),
        created_at: *at,
        transcript: Vec::new(),
        scores: Vec::new(),
        asked: BTreeSet::new(),
        last_question: None,
        state: SessionState::Active,
        aggregate: RiskAggregate::default(),
        issues: Vec::new(),
    };
    ask(&mut s, question, *at);
    Some(s)
}

/// Append-only JSON-lines log, one file per session.
#[derive(Debug, Clone)]
pub struct EventLog {
    dir: PathBuf,
}

impl EventLog {
    pub fn open(dir: &Path) -> Result<Self, ChatError> {
        fs::create_dir_all(dir).map_err(ChatError::log)?;
        Ok(Self { dir: dir.to_owned() })
    }

    fn path(&self, session_id: &str) -> PathBuf {
        self.dir.join(format!("{session_id}.jsonl"))
    }

    pub fn append(&self, session_id: &str, event: &SessionEvent) -> Result<(), ChatError> {
        let mut line = serde_json::to_vec(event).map_err(ChatError::log)?;
        line.push(b'\n');
        let mut f = OpenOptions::new()
            .create(true)
            .append(true)
            .open(self.path(session_id))
            .map_err(ChatError::log)?;
        f.write_all(&line).map_err(ChatError::log)?;
        f.flush().map_err(ChatError::log)
    }

    /// Events of every logged session, keyed by session id.
    pub fn read_all(&self) -> Result<Vec<(String, Vec<SessionEvent>)>, ChatError> {
        let mut out = Vec::new();
        let mut entries: Vec<PathBuf> = fs::read_dir(&self.dir)
            .map_err(ChatError::log)?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().is_some_and(|x| x == "jsonl"))
            .collect();
        entries.sort();
        for path in entries {
            let id = path
                .file_stem()
                .and_then(|s| s.to_str())
                .unwrap_or_default()
                .to_owned();
            let reader = BufReader::new(File::open(&path).map_err(ChatError::log)?);
            let mut events = Vec::new();
            for (n, line) in reader.lines().enumerate() {
                let line = line.map_err(ChatError::log)?;
                if line.trim().is_empty() {
                    continue;
                }
                let event = serde_json::from_str(&line)
                    .map_err(|e| ChatError::Log(format!("{}:{}: {e}", path.display(), n + 1)))?;
                events.push(event);
            }
            out.push((id, events));
        }
        Ok(out)
    }
}

/// Owns every chat session. Sessions are independent: each has its own
/// lock, so one session's messages are handled strictly one at a time
/// while different sessions proceed in parallel.
pub struct SessionManager {
    bank: Arc<QuestionBank>,
    detector: Option<Arc<dyn Detector>>,
    issues: Arc<dyn IssueDetector>,
    policy: RiskPolicy,
    rules: CleanRules,
    clock: Arc<dyn Clock>,
    ids: Mutex<ChaCha8Rng>,
    log: Option<EventLog>,
    sessions: RwLock<HashMap<String, Arc<Mutex<ChatSession>>>>,
}

impl std::fmt::Debug for SessionManager {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("SessionManager")
            .field("sessions", &self.sessions.read().len())
            .field("model_loaded", &self.detector.is_some())
            .field("policy", &self.policy)
            .finish_non_exhaustive()
    }
}

impl SessionManager {
    pub fn new(bank: QuestionBank, detector: Option<Arc<dyn Detector>>) -> Result<Self, ChatError> {
        bank.validate()?;
        Ok(Self {
            bank: Arc::new(bank),
            detector,
            issues: Arc::new(NoopIssueDetector),
            policy: RiskPolicy::default(),
            rules: CleanRules::default(),
            clock: Arc::new(SystemClock),
            ids: Mutex::new(ChaCha8Rng::from_seed(rand::rng().random())),
            log: None,
            sessions: RwLock::new(HashMap::new()),
        })
    }

    pub fn with_policy(mut self, policy: RiskPolicy) -> Result<Self, ChatError> {
        policy.validate()?;
        self.policy = policy;
        Ok(self)
    }

    pub fn with_clean_rules(mut self, rules: CleanRules) -> Self {
        self.rules = rules;
        self
    }

    pub fn with_clock(mut self, clock: Arc<dyn Clock>) -> Self {
        self.clock = clock;
        self
    }

    /// Makes session ids reproducible.
    pub fn with_id_seed(self, seed: u64) -> Self {
        *self.ids.lock() = ChaCha8Rng::seed_from_u64(seed);
        self
    }

    pub fn with_issue_detector(mut self, issues: Arc<dyn IssueDetector>) -> Self {
        self.issues = issues;
        self
    }

    /// Persists every event under `dir`, first replaying sessions already
    /// logged there.
    pub fn with_event_log(mut self, dir: &Path) -> Result<Self, ChatError> {
        let log = EventLog::open(dir)?;
        let mut sessions = HashMap::new();
        for (id, events) in log.read_all()? {
            let mut iter = events.iter();
            let mut session = iter.next().and_then(start_session).ok_or_else(|| {
                ChatError::Log(format!("session {id}: log does not start with a creation event"))
            })?;
            if session.session_id != id {
                return Err(ChatError::Log(format!(
                    "session {id}: log names session {}",
                    session.session_id
                )));
            }
            for e in iter {
                if matches!(e, SessionEvent::Created { .. }) {
                    return Err(ChatError::Log(format!("session {id}: created twice")));
                }
                apply_message(&mut session, e, &self.policy);
            }
            sessions.insert(id, Arc::new(Mutex::new(session)));
        }
        self.sessions = RwLock::new(sessions);
        self.log = Some(log);
        Ok(self)
    }

    pub fn bank(&self) -> &QuestionBank {
        &self.bank
    }

    pub fn policy(&self) -> &RiskPolicy {
        &self.policy
    }

    pub fn model_loaded(&self) -> bool {
        self.detector.is_some()
    }

    pub fn model_id(&self) -> Option<String> {
        self.detector.as_ref().and_then(|d| d.model_id())
    }

    pub fn session_count(&self) -> usize {
        self.sessions.read().len()
    }

    fn new_id(&self) -> String {
        let mut bytes = [0u8; 16];
        self.ids.lock().fill_bytes(&mut bytes);
        hex::encode(bytes)
    }

    fn session(&self, id: &str) -> Result<Arc<Mutex<ChatSession>>, ChatError> {
        self.sessions
            .read()
            .get(id)
            .cloned()
            .ok_or_else(|| ChatError::SessionNotFound(id.to_owned()))
    }

    pub fn create_session(&self) -> Result<SessionStart, ChatError> {
        let opener = self.bank.opener();
        let question = NextQuestion {
            id: Some(opener.id),
            text: opener.text.clone(),
            closing: false,
        };
        let mut sessions = self.sessions.write();
        let session_id = loop {
            let id = self.new_id();
            if !sessions.contains_key(&id) {
                break id;
            }
        };
        let event = SessionEvent::Created {
            session_id: session_id.clone(),
            at: self.clock.now(),
            question: question.clone(),
        };
        if let Some(log) = &self.log {
            log.append(&session_id, &event)?;
        }
        let session = start_session(&event).expect("creation event");
        sessions.insert(session_id.clone(), Arc::new(Mutex::new(session)));
        Ok(SessionStart { session_id, question })
    }

    pub fn post_message(&self, session_id: &str, text: &str) -> Result<MessageOutcome, ChatError> {
        if text.trim().is_empty() {
            return Err(ChatError::InvalidMessage("message is empty".into()));
        }
        if text.len() > MAX_MESSAGE_BYTES {
            return Err(ChatError::InvalidMessage(format!(
                "message is longer than {MAX_MESSAGE_BYTES} bytes"
            )));
        }
        let handle = self.session(session_id)?;
        let mut session = handle.lock();
        if session.state == SessionState::Closed {
            return Err(ChatError::SessionClosed(session_id.to_owned()));
        }
        let detector = self.detector.as_ref().ok_or(ChatError::ModelNotLoaded)?;
        let score = detector.score(text).map_err(ChatError::Detector)?;
        if !(0.0..=1.0).contains(&score) {
            return Err(ChatError::Detector(format!("score {score} is not a probability")));
        }

        let cleaned = clean_text(text, &self.rules);
        let issues = self.issues.detect(session.scores.len(), &cleaned);
        let next = match self
            .bank
            .select_next(session.last_question, &cleaned, &session.asked)
        {
            Some(q) => NextQuestion {
                id: Some(q.id),
                text: q.text.clone(),
                closing: false,
            },
            None => NextQuestion {
                id: None,
                text: self.bank.closing_prompt.clone(),
                closing: true,
            },
        };
        let event = SessionEvent::Message {
            at: self.clock.now(),
            text: text.to_owned(),
            score,
            issues,
            next: next.clone(),
        };
        if let Some(log) = &self.log {
            log.append(session_id, &event)?;
        }
        apply_message(&mut session, &event, &self.policy);
        Ok(MessageOutcome {
            score,
            next_question: next,
            aggregate: session.aggregate,
        })
    }

    /// A consistent copy of one session.
    pub fn snapshot(&self, session_id: &str) -> Result<ChatSession, ChatError> {
        Ok(self.session(session_id)?.lock().clone())
    }

    pub fn report(&self, session_id: &str) -> Result<RiskReport, ChatError> {
        let session = self.snapshot(session_id)?;
        Ok(RiskReport::build(
            &session,
            &self.policy,
            self.model_id(),
            self.issues.name(),
            self.clock.now(),
        ))
    }
}

/// Shape check for session ids (32 lowercase hex digits).
pub fn valid_session_id(id: &str) -> bool {
    id.len() == 32 && id.bytes().all(|b| matches!(b, b'0'..=b'9' | b'a'..=b'f'))
}
