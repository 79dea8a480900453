//! Desk-scale synthetic corpus: two disjoint 30-word lexicons, one per
//! class, padded with stopwords and punctuation that cleaning removes.

use rand::seq::SliceRandom;
use rand::Rng;

use crate::nn::init::rng_from;
use crate::text::{LabeledText, NON_SUICIDE, SUICIDE};

pub const SUICIDE_LEXICON: [&str; 30] = [
    "hopeless",
    "worthless",
    "empty",
    "alone",
    "pain",
    "tired",
    "numb",
    "die",
    "goodbye",
    "burden",
    "darkness",
    "cry",
    "hurt",
    "lost",
    "broken",
    "suffer",
    "overdose",
    "pills",
    "end",
    "trapped",
    "regret",
    "sorry",
    "useless",
    "exhausted",
    "hate",
    "scared",
    "tears",
    "grief",
    "funeral",
    "rope",
];

pub const NON_SUICIDE_LEXICON: [&str; 30] = [
    "game",
    "school",
    "friends",
    "music",
    "homework",
    "pizza",
    "weekend",
    "movie",
    "soccer",
    "teacher",
    "party",
    "phone",
    "crush",
    "class",
    "video",
    "funny",
    "meme",
    "dance",
    "guitar",
    "summer",
    "basketball",
    "snack",
    "concert",
    "anime",
    "shopping",
    "birthday",
    "beach",
    "puppy",
    "laugh",
    "sneakers",
];

const FILLER: [&str; 10] = ["i", "the", "and", "to", "my", "so", "just", "very", "it", "was"];

pub const MIN_WORDS: usize = 60;
pub const MAX_WORDS: usize = 90;

/// Generates `n` documents, balanced between the classes (the odd one out
/// is "suicide"), in a seeded random order.
pub fn synthetic_corpus(n: usize, seed: u64) -> Vec<LabeledText> {
    synthetic_corpus_with(n, seed, MIN_WORDS, MAX_WORDS)
}

/// [`synthetic_corpus`] with document lengths drawn uniformly from
/// `min_words..=max_words` (before cleaning).
pub fn synthetic_corpus_with(n: usize, seed: u64, min_words: usize, max_words: usize) -> Vec<LabeledText> {
    assert!(1 <= min_words && min_words <= max_words, "bad length range");
    let mut rng = rng_from(seed);
    let mut labels: Vec<usize> = (0..n)
        .map(|i| if i < n.div_ceil(2) { SUICIDE } else { NON_SUICIDE })
        .collect();
    labels.shuffle(&mut rng);
    labels
        .into_iter()
        .map(|label| {
            let lexicon: &[&str] = if label == SUICIDE {
                &SUICIDE_LEXICON
            } else {
                &NON_SUICIDE_LEXICON
            };
            let len = rng.random_range(min_words..=max_words);
            let mut text = String::new();
            for i in 0..len {
                let word = if rng.random_bool(0.25) {
                    FILLER[rng.random_range(0..FILLER.len())]
                } else {
                    lexicon[rng.random_range(0..lexicon.len())]
                };
                if i > 0 {
                    text.push_str(if rng.random_bool(0.1) { ", " } else { " " });
                }
                if i == 0 || rng.random_bool(0.05) {
                    let mut c = word.chars();
                    if let Some(first) = c.next() {
                        text.extend(first.to_uppercase());
                        text.push_str(c.as_str());
                    }
                } else {
                    text.push_str(word);
                }
            }
            text.push(if rng.random_bool(0.5) { '.' } else { '!' });
            LabeledText { text, label }
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::text::{clean_text, CleanRules};

    #[test]
    fn lexicons_are_disjoint_and_survive_cleaning() {
        let rules = CleanRules::default();
        for w in SUICIDE_LEXICON.iter().chain(&NON_SUICIDE_LEXICON) {
            assert_eq!(clean_text(w, &rules), *w);
            assert!(!(SUICIDE_LEXICON.contains(w) && NON_SUICIDE_LEXICON.contains(w)));
        }
        for w in FILLER {
            assert!(rules.stopwords.contains(w));
        }
    }

    #[test]
    fn balanced_and_deterministic() {
        let a = synthetic_corpus(2000, 7);
        assert_eq!(a, synthetic_corpus(2000, 7));
        assert_eq!(a.iter().filter(|d| d.label == SUICIDE).count(), 1000);
        assert_ne!(a, synthetic_corpus(2000, 8));
    }

    #[test]
    fn cleaned_documents_use_one_lexicon() {
        let rules = CleanRules::default();
        for doc in synthetic_corpus(200, 1) {
            let clean = clean_text(&doc.text, &rules);
            let lex: &[&str] = if doc.label == SUICIDE {
                &SUICIDE_LEXICON
            } else {
                &NON_SUICIDE_LEXICON
            };
            assert!(!clean.is_empty());
            assert!(clean.split(' ').all(|w| lex.contains(&w)), "{clean}");
        }
    }
}
