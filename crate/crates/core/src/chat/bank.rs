use std::collections::{BTreeMap, BTreeSet, HashSet};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::ChatError;

pub const DEFAULT_CLOSING_PROMPT: &str =
    "Thank you for talking with me today. This conversation is now closed.";

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Question {
    pub id: u32,
    pub text: String,
    #[serde(default)]
    pub opener: bool,
    #[serde(default)]
    pub priority: i32,
    #[serde(default)]
    pub topic_keywords: Vec<String>,
    /// Cleaned keyword → id of the question to ask when the answer contains it.
    #[serde(default)]
    pub followups: BTreeMap<String, u32>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct QuestionBank {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub notice: Option<String>,
    #[serde(default = "default_closing")]
    pub closing_prompt: String,
    pub questions: Vec<Question>,
}

fn default_closing() -> String {
    DEFAULT_CLOSING_PROMPT.to_owned()
}

fn is_keyword(k: &str) -> bool {
    !k.is_empty() && k.bytes().all(|b| b.is_ascii_lowercase() || b.is_ascii_digit())
}

/// `a` outranks `b`: higher priority first, then lower id.
fn outranks(a: &Question, b: &Question) -> bool {
    (a.priority, std::cmp::Reverse(a.id)) > (b.priority, std::cmp::Reverse(b.id))
}

impl QuestionBank {
    pub fn new(questions: Vec<Question>) -> Result<Self, ChatError> {
        let bank = Self {
            notice: None,
            closing_prompt: default_closing(),
            questions,
        };
        bank.validate()?;
        Ok(bank)
    }

    pub fn from_json(json: &str) -> Result<Self, ChatError> {
        let bank: Self = serde_json::from_str(json).map_err(|e| ChatError::BankInvalid(e.to_string()))?;
        bank.validate()?;
        Ok(bank)
    }

    pub fn load(path: &Path) -> Result<Self, ChatError> {
        let json = std::fs::read_to_string(path)
            .map_err(|e| ChatError::BankInvalid(format!("{}: {e}", path.display())))?;
        Self::from_json(&json)
    }

    pub fn validate(&self) -> Result<(), ChatError> {
        let bad = |m: String| Err(ChatError::BankInvalid(m));
        if self.questions.is_empty() {
            return bad("question bank is empty".into());
        }
        let mut ids = HashSet::new();
        for q in &self.questions {
            if !ids.insert(q.id) {
                return bad(format!("duplicate question id {}", q.id));
            }
            if q.text.trim().is_empty() {
                return bad(format!("question {} has no text", q.id));
            }
        }
        for q in &self.questions {
            for (k, target) in &q.followups {
                if !ids.contains(target) {
                    return bad(format!("question {} follows up to unknown id {target}", q.id));
                }
                if !is_keyword(k) {
                    return bad(format!(
                        "question {}: followup keyword {k:?} must be a lowercase [a-z0-9] token",
                        q.id
                    ));
                }
            }
            if let Some(k) = q.topic_keywords.iter().find(|k| !is_keyword(k)) {
                return bad(format!(
                    "question {}: topic keyword {k:?} must be a lowercase [a-z0-9] token",
                    q.id
                ));
            }
        }
        if !self.questions.iter().any(|q| q.opener) {
            return bad("no question is marked as opener".into());
        }
        if self.closing_prompt.trim().is_empty() {
            return bad("closing prompt is empty".into());
        }
        Ok(())
    }

    pub fn get(&self, id: u32) -> Option<&Question> {
        self.questions.iter().find(|q| q.id == id)
    }

    fn best<'a>(candidates: impl Iterator<Item = &'a Question>) -> Option<&'a Question> {
        candidates.fold(None, |best, q| match best {
            Some(b) if !outranks(q, b) => Some(b),
            _ => Some(q),
        })
    }

    /// Highest-priority opener, lowest id on ties.
    pub fn opener(&self) -> &Question {
        Self::best(self.questions.iter().filter(|q| q.opener)).expect("validated bank has an opener")
    }

    /// The next question to ask, or `None` when every question has been asked.
    ///
    /// A cleaned token matching a followup keyword of `last` selects among
    /// that question's unasked followup targets; otherwise any unasked
    /// question is eligible.
    pub fn select_next(&self, last: Option<u32>, cleaned: &str, asked: &BTreeSet<u32>) -> Option<&Question> {
        let tokens: HashSet<&str> = cleaned.split_whitespace().collect();
        if let Some(last) = last.and_then(|id| self.get(id)) {
            let targets: BTreeSet<u32> = last
                .followups
                .iter()
                .filter(|(k, _)| tokens.contains(k.as_str()))
                .map(|(_, &id)| id)
                .filter(|id| !asked.contains(id))
                .collect();
            if let Some(q) = Self::best(targets.iter().filter_map(|&id| self.get(id))) {
                return Some(q);
            }
        }
        Self::best(self.questions.iter().filter(|q| !asked.contains(&q.id)))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn q(id: u32, priority: i32) -> Question {
        Question {
            id,
            text: format!("question {id}"),
            opener: false,
            priority,
            topic_keywords: vec![],
            followups: BTreeMap::new(),
        }
    }

    fn bank() -> QuestionBank {
        let mut first = q(1, 5);
        first.opener = true;
        first.followups.insert("hopeless".into(), 7);
        first.followups.insert("tired".into(), 3);
        QuestionBank::new(vec![first, q(2, 1), q(3, 0), q(4, 1), q(7, 0)]).unwrap()
    }

    #[test]
    fn followup_keyword_wins() {
        let b = bank();
        let asked = BTreeSet::from([1]);
        assert_eq!(
            b.select_next(Some(1), "feel hopeless today", &asked).unwrap().id,
            7
        );
    }

    #[test]
    fn followup_targets_ranked_by_priority_then_id() {
        let b = bank();
        let asked = BTreeSet::from([1]);
        // both 3 and 7 have priority 0, so the lower id wins
        assert_eq!(b.select_next(Some(1), "tired hopeless", &asked).unwrap().id, 3);
    }

    #[test]
    fn asked_followup_falls_back() {
        let b = bank();
        let asked = BTreeSet::from([1, 7]);
        assert_eq!(b.select_next(Some(1), "hopeless", &asked).unwrap().id, 2);
    }

    #[test]
    fn fallback_is_lowest_id_among_highest_priority() {
        let b = bank();
        let asked = BTreeSet::from([1]);
        assert_eq!(b.select_next(Some(1), "nothing matches", &asked).unwrap().id, 2);
        let asked = BTreeSet::from([1, 2]);
        assert_eq!(b.select_next(Some(1), "", &asked).unwrap().id, 4);
    }

    #[test]
    fn keywords_match_whole_tokens_only() {
        let b = bank();
        let asked = BTreeSet::from([1]);
        assert_eq!(b.select_next(Some(1), "hopelessness", &asked).unwrap().id, 2);
    }

    #[test]
    fn exhausted() {
        let b = bank();
        let asked: BTreeSet<u32> = [1, 2, 3, 4, 7].into();
        assert!(b.select_next(Some(4), "hopeless", &asked).is_none());
    }

    #[test]
    fn opener_selection() {
        let b = bank();
        assert_eq!(b.opener().id, 1);
        let mut a = q(9, 0);
        a.opener = true;
        let mut c = q(4, 0);
        c.opener = true;
        assert_eq!(QuestionBank::new(vec![a, c]).unwrap().opener().id, 4);
    }

    #[test]
    fn invalid_banks() {
        assert!(matches!(
            QuestionBank::new(vec![]),
            Err(ChatError::BankInvalid(_))
        ));
        assert!(QuestionBank::new(vec![q(1, 0)]).is_err(), "no opener");
        let mut a = q(1, 0);
        a.opener = true;
        assert!(
            QuestionBank::new(vec![a.clone(), q(1, 2)]).is_err(),
            "duplicate id"
        );
        let mut dangling = a.clone();
        dangling.followups.insert("sad".into(), 99);
        assert!(QuestionBank::new(vec![dangling]).is_err());
        let mut upper = a;
        upper.followups.insert("Sad".into(), 1);
        assert!(QuestionBank::new(vec![upper]).is_err());
    }

    #[test]
    fn json_defaults() {
        let b = QuestionBank::from_json(r#"{"questions":[{"id":3,"text":"Hi?","opener":true}]}"#).unwrap();
        assert_eq!(b.closing_prompt, DEFAULT_CLOSING_PROMPT);
        assert_eq!(b.opener().priority, 0);
        assert!(QuestionBank::from_json("{").is_err());
    }
}
