use std::io::BufRead;

use super::model::GruStackModel;
use super::tensor::Real;
use super::NnError;
use crate::text::Vocabulary;

/// Overwrites embedding rows from a text word-vector file (`word v1 ... vN`
/// per line). Words missing from the vocabulary, or whose index falls
/// outside the embedding table, are skipped. Returns the number of rows set.
pub fn load_pretrained_embedding<F: Real, R: BufRead>(
    input: R,
    vocab: &Vocabulary,
    model: &mut GruStackModel<F>,
) -> Result<usize, NnError> {
    let dim = model.config().embed_dim;
    let rows = model.config().vocab_size;
    let table = model.embedding_mut();
    let mut filled = 0;
    for (lineno, line) in input.lines().enumerate() {
        let line = line?;
        let mut parts = line.split_whitespace();
        let Some(word) = parts.next() else { continue };
        let values = parts
            .map(|v| v.parse::<f64>())
            .collect::<Result<Vec<_>, _>>()
            .map_err(|e| NnError::Parse(format!("line {}: {e}", lineno + 1)))?;
        if values.len() != dim {
            return Err(NnError::ShapeMismatch {
                what: "pretrained vector dimension",
                expected: dim,
                found: values.len(),
            });
        }
        let Some(idx) = vocab.get(word) else { continue };
        if idx as usize >= rows {
            continue;
        }
        for (slot, v) in table.row_mut(idx as usize).iter_mut().zip(values) {
            *slot = F::of(v);
        }
        filled += 1;
    }
    Ok(filled)
}
