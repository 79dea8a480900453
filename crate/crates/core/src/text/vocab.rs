use std::collections::HashMap;
use std::io::{BufRead, Write};

use super::TextError;

/// Frequency-ranked word index. Index 0 is reserved for padding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Vocabulary {
    words: Vec<String>,
    index: HashMap<String, u32>,
    max_words: usize,
}

impl Vocabulary {
    /// Fits a vocabulary on already-cleaned documents.
    ///
    /// Words are ranked by descending frequency, ties broken by first
    /// occurrence in corpus order. At most `max_words - 1` words are kept.
    pub fn fit<S: AsRef<str>>(corpus: &[S], max_words: usize) -> Result<Self, TextError> {
        if max_words < 2 {
            return Err(TextError::InvalidMaxWords(max_words));
        }
        // word -> (count, first occurrence)
        let mut stats: HashMap<&str, (u64, usize)> = HashMap::new();
        let mut position = 0usize;
        for doc in corpus {
            for word in doc.as_ref().split(' ').filter(|w| !w.is_empty()) {
                stats
                    .entry(word)
                    .and_modify(|(count, _)| *count += 1)
                    .or_insert((1, position));
                position += 1;
            }
        }
        if stats.is_empty() {
            return Err(TextError::EmptyCorpus);
        }
        let mut ranked: Vec<(&str, u64, usize)> = stats.into_iter().map(|(w, (c, f))| (w, c, f)).collect();
        ranked.sort_by(|a, b| b.1.cmp(&a.1).then(a.2.cmp(&b.2)));
        ranked.truncate(max_words - 1);
        let words = ranked.into_iter().map(|(w, _, _)| w.to_owned()).collect();
        Self::from_words(words, max_words)
    }

    /// Builds a vocabulary from words listed in index order (first word gets index 1).
    pub fn from_words(words: Vec<String>, max_words: usize) -> Result<Self, TextError> {
        if max_words < 2 {
            return Err(TextError::InvalidMaxWords(max_words));
        }
        if words.len() > max_words - 1 {
            return Err(TextError::VocabularyTooLarge {
                words: words.len(),
                max_words,
            });
        }
        let mut index = HashMap::with_capacity(words.len());
        for (i, w) in words.iter().enumerate() {
            if w.is_empty() || w.contains(char::is_whitespace) {
                return Err(TextError::MalformedVocabulary(format!("invalid word {w:?}")));
            }
            if index.insert(w.clone(), i as u32 + 1).is_some() {
                return Err(TextError::MalformedVocabulary(format!("duplicate word {w:?}")));
            }
        }
        Ok(Self {
            words,
            index,
            max_words,
        })
    }

    pub fn len(&self) -> usize {
        self.words.len()
    }

    pub fn is_empty(&self) -> bool {
        self.words.is_empty()
    }

    pub fn max_words(&self) -> usize {
        self.max_words
    }

    pub fn get(&self, word: &str) -> Option<u32> {
        self.index.get(word).copied()
    }

    /// Word at `index`, `None` for padding or out-of-range indices.
    pub fn word(&self, index: u32) -> Option<&str> {
        let i = index.checked_sub(1)? as usize;
        self.words.get(i).map(String::as_str)
    }

    /// Words in index order (index 1 first).
    pub fn words(&self) -> &[String] {
        &self.words
    }

    /// Encodes cleaned text into exactly `seq_len` indices.
    ///
    /// Unknown words are dropped, long texts keep their first `seq_len`
    /// indices, short ones are zero-padded at the end.
    pub fn encode(&self, text: &str, seq_len: usize) -> EncodedSequence {
        let mut indices: Vec<u32> = text
            .split(' ')
            .filter_map(|w| self.get(w))
            .take(seq_len)
            .collect();
        indices.resize(seq_len, 0);
        EncodedSequence(indices)
    }

    /// Writes `word<TAB>index` lines in index order.
    pub fn write_tsv<W: Write>(&self, mut out: W) -> std::io::Result<()> {
        for (i, w) in self.words.iter().enumerate() {
            writeln!(out, "{w}\t{}", i + 1)?;
        }
        Ok(())
    }

    /// Reads the `word<TAB>index` format. Indices must be exactly `1..=n` in order.
    pub fn read_tsv<R: BufRead>(input: R, max_words: usize) -> Result<Self, TextError> {
        let mut words = Vec::new();
        for (lineno, line) in input.lines().enumerate() {
            let line = line?;
            if line.is_empty() {
                continue;
            }
            let (word, idx) = line
                .split_once('\t')
                .ok_or_else(|| TextError::MalformedVocabulary(format!("line {}: missing tab", lineno + 1)))?;
            let idx: usize = idx.trim().parse().map_err(|_| {
                TextError::MalformedVocabulary(format!("line {}: bad index {idx:?}", lineno + 1))
            })?;
            if idx != words.len() + 1 {
                return Err(TextError::MalformedVocabulary(format!(
                    "line {}: expected index {}, found {idx}",
                    lineno + 1,
                    words.len() + 1
                )));
            }
            words.push(word.to_owned());
        }
        Self::from_words(words, max_words)
    }
}

/// Fixed-length, post-padded index sequence.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct EncodedSequence(pub Vec<u32>);

impl EncodedSequence {
    pub fn indices(&self) -> &[u32] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }
}

impl From<Vec<u32>> for EncodedSequence {
    fn from(v: Vec<u32>) -> Self {
        Self(v)
    }
}
