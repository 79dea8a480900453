use crate::nn::{argmax_rows, GruStackModel, NnError};
use crate::text::{clean_text, CleanRules, EncodedSequence, Vocabulary, SUICIDE};
use crate::train::predict_all;

/// A trained model together with the text pipeline it was trained with.
#[derive(Debug, Clone)]
pub struct Classifier {
    model: GruStackModel<f32>,
    vocab: Vocabulary,
    rules: CleanRules,
}

impl Classifier {
    /// Fails if the vocabulary produces indices outside the embedding table.
    pub fn new(model: GruStackModel<f32>, vocab: Vocabulary, rules: CleanRules) -> Result<Self, NnError> {
        let rows = model.config().vocab_size;
        if vocab.len() >= rows {
            return Err(NnError::ShapeMismatch {
                what: "vocabulary size (embedding rows - 1)",
                expected: rows - 1,
                found: vocab.len(),
            });
        }
        Ok(Self { model, vocab, rules })
    }

    pub fn model(&self) -> &GruStackModel<f32> {
        &self.model
    }

    pub fn vocab(&self) -> &Vocabulary {
        &self.vocab
    }

    pub fn rules(&self) -> &CleanRules {
        &self.rules
    }

    pub fn clean(&self, raw: &str) -> String {
        clean_text(raw, &self.rules)
    }

    pub fn encode_clean(&self, cleaned: &str) -> EncodedSequence {
        self.vocab.encode(cleaned, self.model.config().seq_len)
    }

    /// Probability of the "suicide" class for already-cleaned text.
    pub fn score_clean(&self, cleaned: &str) -> Result<f64, NnError> {
        let probs = self.model.predict(&[self.encode_clean(cleaned)])?;
        Ok(f64::from(probs.get(0, SUICIDE)))
    }

    /// Probability of the "suicide" class for raw text.
    pub fn score(&self, raw: &str) -> Result<f64, NnError> {
        self.score_clean(&self.clean(raw))
    }

    /// Suicide-class probabilities and argmax labels for raw texts.
    pub fn predict_texts<S: AsRef<str>>(&self, raw: &[S]) -> Result<(Vec<f64>, Vec<usize>), NnError> {
        let seqs: Vec<EncodedSequence> = raw
            .iter()
            .map(|t| self.encode_clean(&self.clean(t.as_ref())))
            .collect();
        let probs = predict_all(&self.model, &seqs).map_err(|e| match e {
            crate::train::TrainError::Nn(e) => e,
            other => NnError::Parse(other.to_string()),
        })?;
        let labels = argmax_rows(&probs);
        let scores = (0..probs.rows())
            .map(|i| f64::from(probs.get(i, SUICIDE)))
            .collect();
        Ok((scores, labels))
    }
}
