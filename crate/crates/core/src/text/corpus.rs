use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::TextError;

/// Class index of the positive ("suicide") class.
pub const SUICIDE: usize = 0;
/// Class index of the negative ("non-suicide") class.
pub const NON_SUICIDE: usize = 1;

pub const CLASS_NAMES: [&str; 2] = ["suicide", "non-suicide"];

pub fn class_index(name: &str) -> Option<usize> {
    CLASS_NAMES.iter().position(|c| *c == name.trim())
}

#[derive(Debug, Deserialize, Serialize)]
struct Row {
    text: String,
    class: String,
}

/// A labelled document as read from the corpus CSV.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabeledText {
    pub text: String,
    pub label: usize,
}

/// Reads a `text,class` CSV (with header). Extra columns are ignored.
pub fn read_corpus<R: Read>(input: R) -> Result<Vec<LabeledText>, TextError> {
    let mut reader = csv::ReaderBuilder::new().flexible(true).from_reader(input);
    let mut out = Vec::new();
    for (i, row) in reader.deserialize::<Row>().enumerate() {
        let row = row?;
        let label = class_index(&row.class).ok_or_else(|| TextError::UnknownClass {
            row: i + 2,
            class: row.class.clone(),
        })?;
        out.push(LabeledText {
            text: row.text,
            label,
        });
    }
    Ok(out)
}

pub fn read_corpus_file(path: &Path) -> Result<Vec<LabeledText>, TextError> {
    let file = std::fs::File::open(path)?;
    read_corpus(std::io::BufReader::new(file))
}

pub fn write_corpus<W: Write>(out: W, docs: &[LabeledText]) -> Result<(), TextError> {
    let mut writer = csv::Writer::from_writer(out);
    for doc in docs {
        let class = CLASS_NAMES
            .get(doc.label)
            .ok_or(TextError::UnknownLabel(doc.label))?;
        writer.serialize(Row {
            text: doc.text.clone(),
            class: (*class).to_owned(),
        })?;
    }
    writer.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn reads_kaggle_layout() {
        let csv = ",text,class\n0,\"I feel, sad\",suicide\n1,great game,non-suicide\n";
        let docs = read_corpus(csv.as_bytes()).unwrap();
        assert_eq!(docs.len(), 2);
        assert_eq!(docs[0].text, "I feel, sad");
        assert_eq!(docs[0].label, SUICIDE);
        assert_eq!(docs[1].label, NON_SUICIDE);
    }

    #[test]
    fn rejects_unknown_class() {
        let csv = "text,class\nhello,depression\n";
        assert!(matches!(
            read_corpus(csv.as_bytes()),
            Err(TextError::UnknownClass { row: 2, .. })
        ));
    }

    #[test]
    fn write_then_read() {
        let docs = vec![
            LabeledText {
                text: "a \"quoted\", text".into(),
                label: 1,
            },
            LabeledText {
                text: "b".into(),
                label: 0,
            },
        ];
        let mut buf = Vec::new();
        write_corpus(&mut buf, &docs).unwrap();
        assert_eq!(read_corpus(&buf[..]).unwrap(), docs);
    }
}
