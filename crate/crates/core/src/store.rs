//! Single-file model archive: config, vocabulary and weights, with a
//! trailing SHA-256 checksum. The byte layout is described in
//! `docs/model-format.md`.

use std::fs::{self, OpenOptions};
use std::io::Write;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::classifier::Classifier;
use crate::nn::{GruStackModel, ModelConfig, NnError};
use crate::text::{CleanRules, TextError, Vocabulary};

pub const MAGIC: &[u8; 8] = b"CSUICIDE";
pub const FORMAT_VERSION: u32 = 1;
pub const CHECKSUM_LEN: usize = 32;
const HEADER_LEN: usize = 12;

#[derive(Debug, thiserror::Error)]
pub enum StoreError {
    #[error("not a model archive (bad magic)")]
    BadMagic,
    #[error("unsupported archive format version {0} (this build reads version {FORMAT_VERSION})")]
    VersionUnsupported(u32),
    #[error("checksum mismatch: stored {stored}, computed {computed}")]
    ChecksumMismatch { stored: String, computed: String },
    #[error("archive truncated: needs {needed} bytes, has {available}")]
    Truncated { needed: usize, available: usize },
    #[error("tensor {tensor}: expected shape {expected:?}, found {found:?}")]
    ShapeMismatch {
        tensor: String,
        expected: [usize; 2],
        found: [usize; 2],
    },
    #[error("malformed archive: {0}")]
    Malformed(String),
    #[error(transparent)]
    Nn(#[from] NnError),
    #[error(transparent)]
    Text(#[from] TextError),
    #[error(transparent)]
    Io(#[from] std::io::Error),
}

/// Cleaning rules as stored in the archive config.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct CleaningMeta {
    pub strip_html: bool,
    pub strip_emails: bool,
    pub strip_punctuation: bool,
    pub fold_accents: bool,
    pub stopwords: Vec<String>,
}

impl From<&CleanRules> for CleaningMeta {
    fn from(r: &CleanRules) -> Self {
        Self {
            strip_html: r.strip_html,
            strip_emails: r.strip_emails,
            strip_punctuation: r.strip_punctuation,
            fold_accents: r.fold_accents,
            stopwords: r.stopwords.iter().cloned().collect(),
        }
    }
}

impl From<CleaningMeta> for CleanRules {
    fn from(m: CleaningMeta) -> Self {
        Self {
            stopwords: m.stopwords.into_iter().collect(),
            strip_html: m.strip_html,
            strip_emails: m.strip_emails,
            strip_punctuation: m.strip_punctuation,
            fold_accents: m.fold_accents,
        }
    }
}

/// The JSON config blob.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ArchiveConfig {
    pub model: ModelConfig,
    pub param_count: u64,
    pub cleaning: CleaningMeta,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub train_accuracy: Option<f64>,
}

/// A decoded archive.
#[derive(Debug, Clone)]
pub struct LoadedModel {
    pub classifier: Classifier,
    pub train_accuracy: Option<f64>,
}

fn put_u32(out: &mut Vec<u8>, v: usize) {
    out.extend_from_slice(&u32::try_from(v).expect("length fits in u32").to_le_bytes());
}

/// Serialises a classifier into archive bytes.
pub fn encode(classifier: &Classifier, train_accuracy: Option<f64>) -> Vec<u8> {
    let model = classifier.model();
    let config = ArchiveConfig {
        model: model.config().clone(),
        param_count: model.param_count().total as u64,
        cleaning: classifier.rules().into(),
        train_accuracy,
    };
    let json = serde_json::to_vec(&config).expect("config serialises");

    let mut out = Vec::with_capacity(model.param_count().total * 4 + json.len() + 4096);
    out.extend_from_slice(MAGIC);
    out.extend_from_slice(&FORMAT_VERSION.to_le_bytes());
    put_u32(&mut out, json.len());
    out.extend_from_slice(&json);

    let words = classifier.vocab().words();
    put_u32(&mut out, words.len());
    for w in words {
        put_u32(&mut out, w.len());
        out.extend_from_slice(w.as_bytes());
    }

    let tensors = model.tensors();
    put_u32(&mut out, tensors.len());
    for t in tensors {
        put_u32(&mut out, t.name.len());
        out.extend_from_slice(t.name.as_bytes());
        put_u32(&mut out, t.shape[0]);
        put_u32(&mut out, t.shape[1]);
        for v in t.data {
            out.extend_from_slice(&v.to_le_bytes());
        }
    }
    let digest = Sha256::digest(&out);
    out.extend_from_slice(&digest);
    out
}

struct Cursor<'a> {
    data: &'a [u8],
    pos: usize,
}

impl<'a> Cursor<'a> {
    fn take(&mut self, n: usize) -> Result<&'a [u8], StoreError> {
        let end = self.pos.checked_add(n).filter(|&e| e <= self.data.len());
        let end = end.ok_or(StoreError::Truncated {
            needed: self.pos.saturating_add(n),
            available: self.data.len(),
        })?;
        let s = &self.data[self.pos..end];
        self.pos = end;
        Ok(s)
    }

    fn u32(&mut self) -> Result<usize, StoreError> {
        let b = self.take(4)?;
        Ok(u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as usize)
    }

    fn str(&mut self) -> Result<&'a str, StoreError> {
        let n = self.u32()?;
        std::str::from_utf8(self.take(n)?).map_err(|e| StoreError::Malformed(e.to_string()))
    }
}

fn check_header(bytes: &[u8]) -> Result<(), StoreError> {
    if bytes.len() < MAGIC.len() {
        return Err(StoreError::Truncated {
            needed: HEADER_LEN + CHECKSUM_LEN,
            available: bytes.len(),
        });
    }
    if &bytes[..MAGIC.len()] != MAGIC {
        return Err(StoreError::BadMagic);
    }
    if bytes.len() < HEADER_LEN + CHECKSUM_LEN {
        return Err(StoreError::Truncated {
            needed: HEADER_LEN + CHECKSUM_LEN,
            available: bytes.len(),
        });
    }
    let version = u32::from_le_bytes(bytes[8..12].try_into().expect("4 bytes"));
    if version != FORMAT_VERSION {
        return Err(StoreError::VersionUnsupported(version));
    }
    Ok(())
}

/// Walks the payload structure without building anything. Used to tell a
/// truncated archive apart from a corrupted one.
fn scan(body: &[u8]) -> Result<usize, StoreError> {
    let mut c = Cursor {
        data: body,
        pos: HEADER_LEN,
    };
    let n = c.u32()?;
    c.take(n)?;
    for _ in 0..c.u32()? {
        c.str()?;
    }
    for _ in 0..c.u32()? {
        c.str()?;
        let (r, k) = (c.u32()?, c.u32()?);
        c.take(r.saturating_mul(k).saturating_mul(4))?;
    }
    Ok(c.pos)
}

/// Decodes and verifies archive bytes.
pub fn decode(bytes: &[u8]) -> Result<LoadedModel, StoreError> {
    check_header(bytes)?;
    let (body, stored) = bytes.split_at(bytes.len() - CHECKSUM_LEN);
    let computed = Sha256::digest(body);
    if computed.as_slice() != stored {
        // A short file usually fails the structural walk; report that instead.
        match scan(bytes) {
            Err(e @ StoreError::Truncated { .. }) => return Err(e),
            Ok(end) if end + CHECKSUM_LEN > bytes.len() => {
                return Err(StoreError::Truncated {
                    needed: end + CHECKSUM_LEN,
                    available: bytes.len(),
                })
            }
            _ => {}
        }
        return Err(StoreError::ChecksumMismatch {
            stored: hex::encode(stored),
            computed: hex::encode(computed),
        });
    }

    let mut c = Cursor {
        data: body,
        pos: HEADER_LEN,
    };
    let json_len = c.u32()?;
    let config: ArchiveConfig = serde_json::from_slice(c.take(json_len)?)
        .map_err(|e| StoreError::Malformed(format!("config: {e}")))?;
    config.model.validate()?;

    let n_words = c.u32()?;
    let mut words = Vec::with_capacity(n_words.min(body.len()));
    for _ in 0..n_words {
        words.push(c.str()?.to_owned());
    }
    let vocab = Vocabulary::from_words(words, config.model.vocab_size)?;

    let expected = GruStackModel::<f32>::zeros(config.model.clone());
    let expected = expected.tensors();
    let n_tensors = c.u32()?;
    if n_tensors != expected.len() {
        return Err(StoreError::Malformed(format!(
            "{n_tensors} tensors, expected {}",
            expected.len()
        )));
    }
    let mut tensors = Vec::with_capacity(n_tensors);
    for want in &expected {
        let name = c.str()?;
        if name != want.name {
            return Err(StoreError::Malformed(format!(
                "tensor {name:?} where {:?} was expected",
                want.name
            )));
        }
        let shape = [c.u32()?, c.u32()?];
        if shape != want.shape {
            return Err(StoreError::ShapeMismatch {
                tensor: name.to_owned(),
                expected: want.shape,
                found: shape,
            });
        }
        let raw = c.take(shape[0] * shape[1] * 4)?;
        tensors.push(
            raw.chunks_exact(4)
                .map(|b| f32::from_le_bytes([b[0], b[1], b[2], b[3]]))
                .collect(),
        );
    }
    if c.pos != body.len() {
        return Err(StoreError::Malformed(format!(
            "{} unexpected bytes before the checksum",
            body.len() - c.pos
        )));
    }

    let model = GruStackModel::from_tensors(config.model, tensors)?;
    if model.param_count().total as u64 != config.param_count {
        return Err(StoreError::Malformed(format!(
            "config declares {} parameters, weights have {}",
            config.param_count,
            model.param_count().total
        )));
    }
    Ok(LoadedModel {
        classifier: Classifier::new(model, vocab, config.cleaning.into())?,
        train_accuracy: config.train_accuracy,
    })
}

fn staging_path(path: &Path) -> PathBuf {
    let mut name = path.file_name().unwrap_or_default().to_os_string();
    name.push(format!(".{}.partial", std::process::id()));
    path.with_file_name(name)
}

/// Writes the archive next to `path` and renames it into place, so readers
/// never observe a partially written file.
pub fn save(classifier: &Classifier, train_accuracy: Option<f64>, path: &Path) -> Result<(), StoreError> {
    let bytes = encode(classifier, train_accuracy);
    let tmp = staging_path(path);
    let result = (|| {
        let mut f = OpenOptions::new().write(true).create_new(true).open(&tmp)?;
        f.write_all(&bytes)?;
        f.sync_all()?;
        fs::rename(&tmp, path)
    })();
    if result.is_err() {
        let _ = fs::remove_file(&tmp);
    }
    Ok(result?)
}

pub fn load(path: &Path) -> Result<LoadedModel, StoreError> {
    decode(&fs::read(path)?)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::nn::ModelConfig;

    fn tiny() -> Classifier {
        let cfg = ModelConfig {
            vocab_size: 20,
            embed_dim: 4,
            gru_units: 3,
            seq_len: 6,
            ..ModelConfig::default()
        };
        let vocab = Vocabulary::from_words(vec!["sad".into(), "day".into()], 20).unwrap();
        let model = GruStackModel::new(cfg, 5).unwrap();
        Classifier::new(model, vocab, CleanRules::default()).unwrap()
    }

    #[test]
    fn layout_prefix() {
        let bytes = encode(&tiny(), Some(0.5));
        assert_eq!(&bytes[..8], b"CSUICIDE");
        assert_eq!(&bytes[8..12], &[1, 0, 0, 0]);
        let json_len = u32::from_le_bytes(bytes[12..16].try_into().unwrap()) as usize;
        let cfg: ArchiveConfig = serde_json::from_slice(&bytes[16..16 + json_len]).unwrap();
        assert_eq!(cfg.train_accuracy, Some(0.5));
        assert_eq!(cfg.param_count, tiny().model().param_count().total as u64);
        assert_eq!(
            scan(&bytes[..bytes.len() - CHECKSUM_LEN]).unwrap(),
            bytes.len() - CHECKSUM_LEN
        );
    }

    #[test]
    fn decode_round_trip() {
        let c = tiny();
        let back = decode(&encode(&c, None)).unwrap();
        assert_eq!(back.train_accuracy, None);
        assert_eq!(back.classifier.vocab(), c.vocab());
        assert_eq!(back.classifier.rules(), c.rules());
        for (a, b) in back.classifier.model().tensors().iter().zip(c.model().tensors()) {
            assert_eq!(a.name, b.name);
            assert!(a.data.iter().zip(b.data).all(|(x, y)| x.to_bits() == y.to_bits()));
        }
    }

    #[test]
    fn corruption_is_detected() {
        let bytes = encode(&tiny(), None);
        let mut flipped = bytes.clone();
        let last = flipped.len() - 40;
        flipped[last] ^= 1;
        assert!(matches!(
            decode(&flipped),
            Err(StoreError::ChecksumMismatch { .. })
        ));

        assert!(matches!(
            decode(&bytes[..bytes.len() / 2]),
            Err(StoreError::Truncated { .. })
        ));
        assert!(matches!(decode(&bytes[..5]), Err(StoreError::Truncated { .. })));

        let mut v2 = bytes.clone();
        v2[8] = 2;
        assert!(matches!(decode(&v2), Err(StoreError::VersionUnsupported(2))));

        let mut magic = bytes;
        magic[0] = b'X';
        assert!(matches!(decode(&magic), Err(StoreError::BadMagic)));
    }
}
