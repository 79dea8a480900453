//! Cleaning, vocabulary fitting and fixed-length encoding of documents.

mod clean;
mod corpus;
mod vocab;

pub use clean::{clean_text, CleanRules, EMAIL_PATTERN, STOPWORDS_EN};
pub use corpus::{
    class_index, read_corpus, read_corpus_file, write_corpus, LabeledText, CLASS_NAMES, NON_SUICIDE, SUICIDE,
};
pub use vocab::{EncodedSequence, Vocabulary};

#[derive(Debug, thiserror::Error)]
pub enum TextError {
    #[error("corpus contains no words after cleaning")]
    EmptyCorpus,
    #[error("max_words must be at least 2, got {0}")]
    InvalidMaxWords(usize),
    #[error("{words} words do not fit in a vocabulary capped at {max_words}")]
    VocabularyTooLarge { words: usize, max_words: usize },
    #[error("malformed vocabulary: {0}")]
    MalformedVocabulary(String),
    #[error("row {row}: unknown class {class:?}")]
    UnknownClass { row: usize, class: String },
    #[error("label {0} has no class name")]
    UnknownLabel(usize),
    #[error(transparent)]
    Csv(#[from] csv::Error),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}
