//! Text normalisation applied to every document before tokenization.
//!
//! Rules run in a fixed order: markup strip, email strip, accent folding,
//! lowercasing, punctuation/special-character strip, whitespace collapse and
//! finally stopword removal. The output only ever contains `[a-z0-9]` words
//! separated by single spaces, which makes the whole pipeline idempotent.

use std::collections::BTreeSet;
use std::sync::OnceLock;

use regex::Regex;
use unicode_normalization::char::is_combining_mark;
use unicode_normalization::UnicodeNormalization;

/// The bundled English stopword list, one word per line.
pub const STOPWORDS_EN: &str = include_str!("stopwords_en.txt");

/// Pattern used to recognise email-shaped tokens.
pub const EMAIL_PATTERN: &str = r"[^\s]+@[^\s]+\.[^\s]+";

const HTML_TAG_PATTERN: &str = r"<[^>]*>";
const HTML_ENTITY_PATTERN: &str = r"&(#[0-9]+|#[xX][0-9a-fA-F]+|[a-zA-Z]+);";

fn html_tag_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(HTML_TAG_PATTERN).unwrap())
}

fn html_entity_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(HTML_ENTITY_PATTERN).unwrap())
}

fn email_re() -> &'static Regex {
    static RE: OnceLock<Regex> = OnceLock::new();
    RE.get_or_init(|| Regex::new(EMAIL_PATTERN).unwrap())
}

/// Configuration of [`clean_text`].
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CleanRules {
    pub stopwords: BTreeSet<String>,
    pub strip_html: bool,
    pub strip_emails: bool,
    pub strip_punctuation: bool,
    pub fold_accents: bool,
}

impl CleanRules {
    /// All rules enabled, with the given stopword list.
    pub fn with_stopwords<I, S>(words: I) -> Self
    where
        I: IntoIterator<Item = S>,
        S: Into<String>,
    {
        Self {
            stopwords: words.into_iter().map(Into::into).collect(),
            strip_html: true,
            strip_emails: true,
            strip_punctuation: true,
            fold_accents: true,
        }
    }

    /// Parses a stopword file: one word per line, blank lines ignored.
    pub fn parse_stopwords(contents: &str) -> BTreeSet<String> {
        contents
            .lines()
            .map(str::trim)
            .filter(|l| !l.is_empty())
            .map(str::to_lowercase)
            .collect()
    }
}

impl Default for CleanRules {
    fn default() -> Self {
        Self::with_stopwords(Self::parse_stopwords(STOPWORDS_EN))
    }
}

/// Letters that carry no canonical decomposition but have a conventional
/// ASCII spelling.
fn transliterate(c: char) -> Option<&'static str> {
    Some(match c {
        'ß' => "ss",
        'ẞ' => "SS",
        'æ' => "ae",
        'Æ' => "AE",
        'œ' => "oe",
        'Œ' => "OE",
        'ø' => "o",
        'Ø' => "O",
        'ł' => "l",
        'Ł' => "L",
        'đ' => "d",
        'Đ' => "D",
        'þ' => "th",
        'Þ' => "TH",
        'ı' => "i",
        _ => return None,
    })
}

fn fold_accents(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.nfd() {
        if is_combining_mark(c) {
            continue;
        }
        match transliterate(c) {
            Some(s) => out.push_str(s),
            None => out.push(c),
        }
    }
    out
}

fn strip_special(text: &str) -> String {
    text.chars()
        .filter(|c| !is_combining_mark(*c))
        .map(|c| if c.is_ascii_alphanumeric() { c } else { ' ' })
        .collect()
}

/// Normalises `raw` according to `rules`.
pub fn clean_text(raw: &str, rules: &CleanRules) -> String {
    let mut text = raw.to_owned();
    if rules.strip_html {
        text = html_tag_re().replace_all(&text, " ").into_owned();
        text = html_entity_re().replace_all(&text, " ").into_owned();
    }
    if rules.strip_emails {
        text = email_re().replace_all(&text, " ").into_owned();
    }
    if rules.fold_accents {
        text = fold_accents(&text);
    }
    text = text.to_lowercase();
    if rules.strip_punctuation {
        text = strip_special(&text);
    }
    let mut out = String::with_capacity(text.len());
    for word in text.split_whitespace() {
        if rules.stopwords.contains(word) {
            continue;
        }
        if !out.is_empty() {
            out.push(' ');
        }
        out.push_str(word);
    }
    out
}
