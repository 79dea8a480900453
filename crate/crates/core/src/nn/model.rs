use rand::Rng;
use serde::{Deserialize, Serialize};

use super::adam::AdamState;
use super::gru::{GruCache, GruGrads, GruLayer};
use super::init::{derive_seed, glorot_uniform, orthogonal, uniform};
use super::loss::{clip_probability, softmax_rows};
use super::tensor::{gemm_acc, gemm_tn_acc, sum_rows_acc, Matrix, Real};
use super::NnError;
use crate::text::EncodedSequence;

/// Range of the seeded uniform initialization of the frozen embedding.
pub const EMBEDDING_INIT_LIMIT: f64 = 0.05;

/// Architecture hyperparameters.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ModelConfig {
    pub vocab_size: usize,
    pub embed_dim: usize,
    pub seq_len: usize,
    pub gru_units: usize,
    pub num_classes: usize,
    pub dropout_rate: f64,
    pub embedding_trainable: bool,
}

impl Default for ModelConfig {
    fn default() -> Self {
        Self {
            vocab_size: 10_000,
            embed_dim: 100,
            seq_len: 50,
            gru_units: 50,
            num_classes: 2,
            dropout_rate: 0.2,
            embedding_trainable: false,
        }
    }
}

impl ModelConfig {
    pub fn validate(&self) -> Result<(), NnError> {
        let dims = [
            ("vocab_size", self.vocab_size),
            ("embed_dim", self.embed_dim),
            ("seq_len", self.seq_len),
            ("gru_units", self.gru_units),
            ("num_classes", self.num_classes),
        ];
        for (name, v) in dims {
            if v == 0 {
                return Err(NnError::InvalidConfig(format!("{name} must be positive")));
            }
        }
        if !(0.0..1.0).contains(&self.dropout_rate) {
            return Err(NnError::InvalidConfig(format!(
                "dropout_rate must be in [0, 1), got {}",
                self.dropout_rate
            )));
        }
        Ok(())
    }
}

/// Per-layer parameter counts.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ParamCounts {
    pub embedding: usize,
    pub gru1: usize,
    pub gru2: usize,
    pub gru3: usize,
    pub dense: usize,
    pub total: usize,
    pub trainable: usize,
    pub non_trainable: usize,
}

pub fn param_count(config: &ModelConfig) -> ParamCounts {
    let u = config.gru_units;
    let embedding = config.vocab_size * config.embed_dim;
    let gru1 = GruLayer::<f32>::param_count(config.embed_dim, u);
    let gru2 = GruLayer::<f32>::param_count(u, u);
    let gru3 = gru2;
    let dense = u * config.num_classes + config.num_classes;
    let total = embedding + gru1 + gru2 + gru3 + dense;
    let non_trainable = if config.embedding_trainable { 0 } else { embedding };
    ParamCounts {
        embedding,
        gru1,
        gru2,
        gru3,
        dense,
        total,
        trainable: total - non_trainable,
        non_trainable,
    }
}

/// Inverted-dropout masks for the three dropout layers of one batch, stored
/// time-major like the activations they scale. Entries are `0` or `1/(1-p)`.
#[derive(Debug, Clone, PartialEq)]
pub struct DropoutMasks<F> {
    pub batch: usize,
    pub embed: Vec<F>,
    pub gru1: Vec<F>,
    pub gru2: Vec<F>,
}

impl<F: Real> DropoutMasks<F> {
    pub fn identity(config: &ModelConfig, batch: usize) -> Self {
        let n = config.seq_len * batch;
        Self {
            batch,
            embed: vec![F::one(); n * config.embed_dim],
            gru1: vec![F::one(); n * config.gru_units],
            gru2: vec![F::one(); n * config.gru_units],
        }
    }

    pub fn sample<R: Rng + ?Sized>(config: &ModelConfig, batch: usize, rng: &mut R) -> Self {
        let p = config.dropout_rate;
        let keep = F::of(1.0 / (1.0 - p));
        let n = config.seq_len * batch;
        let mut draw = |len: usize| -> Vec<F> {
            (0..len)
                .map(|_| {
                    if p > 0.0 && rng.random::<f64>() < p {
                        F::zero()
                    } else {
                        keep
                    }
                })
                .collect()
        };
        let embed = draw(n * config.embed_dim);
        let gru1 = draw(n * config.gru_units);
        let gru2 = draw(n * config.gru_units);
        Self {
            batch,
            embed,
            gru1,
            gru2,
        }
    }
}

/// Everything `backward` needs from a training-mode forward pass.
#[derive(Debug, Clone)]
pub struct ForwardCache<F> {
    generation: u64,
    tokens: Vec<u32>,
    masks: DropoutMasks<F>,
    grus: [GruCache<F>; 3],
    pub probs: Matrix<F>,
}

/// Gradients of the trainable tensors, aligned with
/// [`GruStackModel::trainable_names`].
#[derive(Debug, Clone, PartialEq)]
pub struct Gradients<F> {
    pub tensors: Vec<Vec<F>>,
}

impl<F: Real> Gradients<F> {
    /// `self += other * scale`
    pub fn add_scaled(&mut self, other: &Self, scale: F) {
        for (a, b) in self.tensors.iter_mut().zip(&other.tensors) {
            for (x, &y) in a.iter_mut().zip(b) {
                *x = *x + y * scale;
            }
        }
    }

    pub fn scale(&mut self, s: F) {
        for t in &mut self.tensors {
            for x in t.iter_mut() {
                *x = *x * s;
            }
        }
    }
}

/// Read-only view of a named parameter tensor.
#[derive(Debug, Clone, Copy)]
pub struct TensorRef<'a, F> {
    pub name: &'static str,
    pub shape: [usize; 2],
    pub data: &'a [F],
}

const TENSOR_NAMES: [&str; 15] = [
    "embedding",
    "gru1.W_in",
    "gru1.W_rec",
    "gru1.b_in",
    "gru1.b_rec",
    "gru2.W_in",
    "gru2.W_rec",
    "gru2.b_in",
    "gru2.b_rec",
    "gru3.W_in",
    "gru3.W_rec",
    "gru3.b_in",
    "gru3.b_rec",
    "dense_W",
    "dense_b",
];

/// Frozen embedding, three stacked GRUs and a softmax dense layer.
///
/// The first two GRUs return full sequences, the third only its final
/// state. Dropout follows the embedding and the first two GRUs.
#[derive(Debug, Clone, PartialEq)]
pub struct GruStackModel<F> {
    config: ModelConfig,
    embedding: Matrix<F>,
    grus: [GruLayer<F>; 3],
    dense_w: Matrix<F>,
    dense_b: Vec<F>,
    generation: u64,
}

impl<F: Real> GruStackModel<F> {
    /// Seeded initialization: glorot-uniform kernels, orthogonal recurrent
    /// kernels, zero biases, uniform ±0.05 embedding.
    pub fn new(config: ModelConfig, seed: u64) -> Result<Self, NnError> {
        config.validate()?;
        let (e, u, c) = (config.embed_dim, config.gru_units, config.num_classes);
        let layer = |input: usize, k: u64| GruLayer {
            kernel: glorot_uniform(input, 3 * u, derive_seed(seed, &[k, 0])),
            recurrent: orthogonal(u, 3 * u, derive_seed(seed, &[k, 1])),
            bias_in: vec![F::zero(); 3 * u],
            bias_rec: vec![F::zero(); 3 * u],
        };
        Ok(Self {
            embedding: uniform(
                config.vocab_size,
                e,
                EMBEDDING_INIT_LIMIT,
                derive_seed(seed, &[0]),
            ),
            grus: [layer(e, 1), layer(u, 2), layer(u, 3)],
            dense_w: glorot_uniform(u, c, derive_seed(seed, &[4])),
            dense_b: vec![F::zero(); c],
            config,
            generation: 0,
        })
    }

    /// Builds a model from tensors in archive order (see [`Self::tensors`]).
    pub fn from_tensors(config: ModelConfig, tensors: Vec<Vec<F>>) -> Result<Self, NnError> {
        config.validate()?;
        let mut model = Self::zeros(config);
        if tensors.len() != TENSOR_NAMES.len() {
            return Err(NnError::ShapeMismatch {
                what: "tensor count",
                expected: TENSOR_NAMES.len(),
                found: tensors.len(),
            });
        }
        for (slot, data) in model.all_tensors_mut().into_iter().zip(tensors) {
            if slot.len() != data.len() {
                return Err(NnError::ShapeMismatch {
                    what: "tensor length",
                    expected: slot.len(),
                    found: data.len(),
                });
            }
            slot.copy_from_slice(&data);
        }
        Ok(model)
    }

    /// Every parameter zero (useful for hand-constructed fixtures).
    pub fn zeros(config: ModelConfig) -> Self {
        let (e, u, c) = (config.embed_dim, config.gru_units, config.num_classes);
        Self {
            embedding: Matrix::zeros(config.vocab_size, e),
            grus: [
                GruLayer::zeros(e, u),
                GruLayer::zeros(u, u),
                GruLayer::zeros(u, u),
            ],
            dense_w: Matrix::zeros(u, c),
            dense_b: vec![F::zero(); c],
            config,
            generation: 0,
        }
    }

    /// Converts every parameter to another precision.
    pub fn cast<G: Real>(&self) -> GruStackModel<G> {
        let layer = |l: &GruLayer<F>| GruLayer {
            kernel: l.kernel.map(|x| G::of(x.as_f64())),
            recurrent: l.recurrent.map(|x| G::of(x.as_f64())),
            bias_in: l.bias_in.iter().map(|x| G::of(x.as_f64())).collect(),
            bias_rec: l.bias_rec.iter().map(|x| G::of(x.as_f64())).collect(),
        };
        GruStackModel {
            config: self.config.clone(),
            embedding: self.embedding.map(|x| G::of(x.as_f64())),
            grus: [layer(&self.grus[0]), layer(&self.grus[1]), layer(&self.grus[2])],
            dense_w: self.dense_w.map(|x| G::of(x.as_f64())),
            dense_b: self.dense_b.iter().map(|x| G::of(x.as_f64())).collect(),
            generation: 0,
        }
    }

    pub fn config(&self) -> &ModelConfig {
        &self.config
    }

    pub fn param_count(&self) -> ParamCounts {
        param_count(&self.config)
    }

    pub fn embedding(&self) -> &Matrix<F> {
        &self.embedding
    }

    pub fn gru(&self, i: usize) -> &GruLayer<F> {
        &self.grus[i]
    }

    pub fn dense_weights(&self) -> (&Matrix<F>, &[F]) {
        (&self.dense_w, &self.dense_b)
    }

    pub fn embedding_mut(&mut self) -> &mut Matrix<F> {
        self.generation += 1;
        &mut self.embedding
    }

    pub fn gru_mut(&mut self, i: usize) -> &mut GruLayer<F> {
        self.generation += 1;
        &mut self.grus[i]
    }

    pub fn dense_mut(&mut self) -> (&mut Matrix<F>, &mut Vec<F>) {
        self.generation += 1;
        (&mut self.dense_w, &mut self.dense_b)
    }

    /// All tensors in the fixed archive order.
    pub fn tensors(&self) -> Vec<TensorRef<'_, F>> {
        let (v, e, u, c) = (
            self.config.vocab_size,
            self.config.embed_dim,
            self.config.gru_units,
            self.config.num_classes,
        );
        let mut out = vec![TensorRef {
            name: TENSOR_NAMES[0],
            shape: [v, e],
            data: self.embedding.as_slice(),
        }];
        for (i, g) in self.grus.iter().enumerate() {
            let names = &TENSOR_NAMES[1 + 4 * i..5 + 4 * i];
            let input = if i == 0 { e } else { u };
            out.push(TensorRef {
                name: names[0],
                shape: [input, 3 * u],
                data: g.kernel.as_slice(),
            });
            out.push(TensorRef {
                name: names[1],
                shape: [u, 3 * u],
                data: g.recurrent.as_slice(),
            });
            out.push(TensorRef {
                name: names[2],
                shape: [1, 3 * u],
                data: &g.bias_in,
            });
            out.push(TensorRef {
                name: names[3],
                shape: [1, 3 * u],
                data: &g.bias_rec,
            });
        }
        out.push(TensorRef {
            name: TENSOR_NAMES[13],
            shape: [u, c],
            data: self.dense_w.as_slice(),
        });
        out.push(TensorRef {
            name: TENSOR_NAMES[14],
            shape: [1, c],
            data: &self.dense_b,
        });
        out
    }

    fn all_tensors_mut(&mut self) -> Vec<&mut [F]> {
        self.generation += 1;
        let mut out: Vec<&mut [F]> = vec![self.embedding.as_mut_slice()];
        for g in self.grus.iter_mut() {
            out.push(g.kernel.as_mut_slice());
            out.push(g.recurrent.as_mut_slice());
            out.push(&mut g.bias_in);
            out.push(&mut g.bias_rec);
        }
        out.push(self.dense_w.as_mut_slice());
        out.push(&mut self.dense_b);
        out
    }

    /// Names of the trainable tensors, in gradient order.
    pub fn trainable_names(&self) -> Vec<&'static str> {
        let skip = usize::from(!self.config.embedding_trainable);
        TENSOR_NAMES[skip..].to_vec()
    }

    /// Mutable trainable tensors, in gradient order.
    pub fn trainable_mut(&mut self) -> Vec<&mut [F]> {
        let skip = usize::from(!self.config.embedding_trainable);
        self.all_tensors_mut().into_iter().skip(skip).collect()
    }

    pub fn trainable_lens(&self) -> Vec<usize> {
        let skip = usize::from(!self.config.embedding_trainable);
        self.tensors().iter().skip(skip).map(|t| t.data.len()).collect()
    }

    /// Applies one optimizer step with `grads` (in trainable order).
    pub fn apply_adam(&mut self, adam: &mut AdamState<F>, grads: &Gradients<F>) -> Result<(), NnError> {
        adam.step(self.trainable_mut(), &grads.tensors)
    }

    fn check_batch(&self, batch: &[EncodedSequence]) -> Result<Vec<u32>, NnError> {
        let (t_len, b) = (self.config.seq_len, batch.len());
        let mut tokens = vec![0u32; t_len * b];
        for (bi, seq) in batch.iter().enumerate() {
            if seq.len() != t_len {
                return Err(NnError::ShapeMismatch {
                    what: "sequence length",
                    expected: t_len,
                    found: seq.len(),
                });
            }
            for (t, &idx) in seq.indices().iter().enumerate() {
                if idx as usize >= self.config.vocab_size {
                    return Err(NnError::IndexOutOfVocab {
                        index: idx,
                        vocab_size: self.config.vocab_size,
                    });
                }
                tokens[t * b + bi] = idx;
            }
        }
        Ok(tokens)
    }

    fn embed(&self, tokens: &[u32]) -> Vec<F> {
        let e = self.config.embed_dim;
        let mut out = Vec::with_capacity(tokens.len() * e);
        for &idx in tokens {
            out.extend_from_slice(self.embedding.row(idx as usize));
        }
        out
    }

    fn run(
        &self,
        batch: &[EncodedSequence],
        masks: Option<&DropoutMasks<F>>,
    ) -> Result<ForwardCache<F>, NnError> {
        let tokens = self.check_batch(batch)?;
        let b = batch.len();
        let t_len = self.config.seq_len;
        let masks = match masks {
            Some(m) if m.batch != b => {
                return Err(NnError::ShapeMismatch {
                    what: "dropout mask batch",
                    expected: b,
                    found: m.batch,
                })
            }
            Some(m) => m.clone(),
            None => DropoutMasks::identity(&self.config, b),
        };
        let apply = |mut x: Vec<F>, mask: &[F]| {
            for (v, &m) in x.iter_mut().zip(mask) {
                *v = *v * m;
            }
            x
        };
        let x0 = apply(self.embed(&tokens), &masks.embed);
        let c1 = self.grus[0].forward(x0, t_len, b);
        let x1 = apply(c1.hidden.clone(), &masks.gru1);
        let c2 = self.grus[1].forward(x1, t_len, b);
        let x2 = apply(c2.hidden.clone(), &masks.gru2);
        let c3 = self.grus[2].forward(x2, t_len, b);
        let probs = self.head(c3.last_hidden(), b);
        Ok(ForwardCache {
            generation: self.generation,
            tokens,
            masks,
            grus: [c1, c2, c3],
            probs,
        })
    }

    fn head(&self, h: &[F], b: usize) -> Matrix<F> {
        let c = self.config.num_classes;
        let mut logits = Vec::with_capacity(b * c);
        for _ in 0..b {
            logits.extend_from_slice(&self.dense_b);
        }
        gemm_acc(
            h,
            b,
            self.config.gru_units,
            self.dense_w.as_slice(),
            c,
            &mut logits,
        );
        softmax_rows(Matrix::from_vec(b, c, logits))
    }

    /// Inference-mode class probabilities, `[batch × num_classes]`.
    pub fn predict(&self, batch: &[EncodedSequence]) -> Result<Matrix<F>, NnError> {
        self.run(batch, None).map(|c| c.probs)
    }

    /// Forward pass that keeps activations for [`Self::backward`]. `None`
    /// masks means no dropout.
    pub fn forward_train(
        &self,
        batch: &[EncodedSequence],
        masks: Option<&DropoutMasks<F>>,
    ) -> Result<ForwardCache<F>, NnError> {
        self.run(batch, masks)
    }

    /// Gradient of the mean clipped cross-entropy of the cached batch.
    pub fn backward(&self, cache: &ForwardCache<F>, labels: &[usize]) -> Result<Gradients<F>, NnError> {
        if cache.generation != self.generation {
            return Err(NnError::StaleCache);
        }
        let b = cache.probs.rows();
        let c = self.config.num_classes;
        let u = self.config.gru_units;
        let t_len = self.config.seq_len;
        if labels.len() != b {
            return Err(NnError::ShapeMismatch {
                what: "label count",
                expected: b,
                found: labels.len(),
            });
        }
        if let Some(&bad) = labels.iter().find(|&&l| l >= c) {
            return Err(NnError::LabelOutOfRange {
                label: bad,
                classes: c,
            });
        }

        let inv_b = F::one() / F::of(b as f64);
        let mut d_logits = vec![F::zero(); b * c];
        for (i, &label) in labels.iter().enumerate() {
            let p = cache.probs.row(i);
            if clip_probability(p[label]) != p[label] {
                continue;
            }
            for j in 0..c {
                let y = if j == label { F::one() } else { F::zero() };
                d_logits[i * c + j] = (p[j] - y) * inv_b;
            }
        }

        let h3 = cache.grus[2].last_hidden();
        let mut d_dense_w = vec![F::zero(); u * c];
        let mut d_dense_b = vec![F::zero(); c];
        gemm_tn_acc(h3, b, u, &d_logits, c, &mut d_dense_w);
        sum_rows_acc(&d_logits, c, &mut d_dense_b);

        let mut d_h3 = vec![F::zero(); t_len * b * u];
        let w_t = self.dense_w.transpose();
        gemm_acc(
            &d_logits,
            b,
            c,
            w_t.as_slice(),
            u,
            &mut d_h3[(t_len - 1) * b * u..],
        );

        let mut g: [GruGrads<F>; 3] = [
            GruGrads::zeros_like(&self.grus[0]),
            GruGrads::zeros_like(&self.grus[1]),
            GruGrads::zeros_like(&self.grus[2]),
        ];
        let mask = |mut d: Vec<F>, m: &[F]| {
            for (v, &k) in d.iter_mut().zip(m) {
                *v = *v * k;
            }
            d
        };
        let d_x3 = self.grus[2]
            .backward(&cache.grus[2], &d_h3, &mut g[2], true)
            .expect("input gradient requested");
        let d_h2 = mask(d_x3, &cache.masks.gru2);
        let d_x2 = self.grus[1]
            .backward(&cache.grus[1], &d_h2, &mut g[1], true)
            .expect("input gradient requested");
        let d_h1 = mask(d_x2, &cache.masks.gru1);
        let trainable_embedding = self.config.embedding_trainable;
        let d_x1 = self.grus[0].backward(&cache.grus[0], &d_h1, &mut g[0], trainable_embedding);

        let mut tensors = Vec::with_capacity(TENSOR_NAMES.len());
        if let Some(d_x1) = d_x1 {
            let e = self.config.embed_dim;
            let d_emb_in = mask(d_x1, &cache.masks.embed);
            let mut d_emb = vec![F::zero(); self.config.vocab_size * e];
            for (pos, &tok) in cache.tokens.iter().enumerate() {
                let row = &mut d_emb[tok as usize * e..(tok as usize + 1) * e];
                for (r, &d) in row.iter_mut().zip(&d_emb_in[pos * e..(pos + 1) * e]) {
                    *r = *r + d;
                }
            }
            tensors.push(d_emb);
        }
        for layer in g {
            tensors.push(layer.kernel);
            tensors.push(layer.recurrent);
            tensors.push(layer.bias_in);
            tensors.push(layer.bias_rec);
        }
        tensors.push(d_dense_w);
        tensors.push(d_dense_b);
        Ok(Gradients { tensors })
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn default_counts() {
        let p = param_count(&ModelConfig::default());
        assert_eq!(p.embedding, 1_000_000);
        assert_eq!(p.gru1, 22_800);
        assert_eq!(p.gru2, 15_300);
        assert_eq!(p.gru3, 15_300);
        assert_eq!(p.dense, 102);
        assert_eq!(p.total, 1_053_502);
        assert_eq!(p.trainable, 53_502);
        assert_eq!(p.non_trainable, 1_000_000);
    }

    #[test]
    fn minimal_counts() {
        let cfg = ModelConfig {
            vocab_size: 1,
            embed_dim: 1,
            gru_units: 1,
            num_classes: 1,
            ..ModelConfig::default()
        };
        let p = param_count(&cfg);
        assert_eq!((p.embedding, p.gru1, p.gru2, p.gru3, p.dense), (1, 12, 12, 12, 2));
    }

    #[test]
    fn trainable_embedding_moves_counts() {
        let cfg = ModelConfig {
            embedding_trainable: true,
            ..ModelConfig::default()
        };
        let p = param_count(&cfg);
        assert_eq!(p.non_trainable, 0);
        assert_eq!(p.trainable, 1_053_502);
    }

    #[test]
    fn config_validation() {
        let bad = ModelConfig {
            dropout_rate: 1.0,
            ..ModelConfig::default()
        };
        assert!(bad.validate().is_err());
        let bad = ModelConfig {
            gru_units: 0,
            ..ModelConfig::default()
        };
        assert!(GruStackModel::<f32>::new(bad, 0).is_err());
    }

    #[test]
    fn tensor_lengths_match_counts() {
        let m = GruStackModel::<f32>::new(ModelConfig::default(), 1).unwrap();
        let total: usize = m.tensors().iter().map(|t| t.data.len()).sum();
        assert_eq!(total, 1_053_502);
        for t in m.tensors() {
            assert_eq!(t.shape[0] * t.shape[1], t.data.len(), "{}", t.name);
        }
        assert_eq!(m.trainable_lens().iter().sum::<usize>(), 53_502);
    }

    #[test]
    fn stale_cache_rejected() {
        let cfg = ModelConfig {
            vocab_size: 5,
            embed_dim: 2,
            seq_len: 3,
            gru_units: 2,
            ..ModelConfig::default()
        };
        let mut m = GruStackModel::<f64>::new(cfg, 3).unwrap();
        let batch = vec![EncodedSequence(vec![1, 2, 0])];
        let cache = m.forward_train(&batch, None).unwrap();
        assert!(m.backward(&cache, &[0]).is_ok());
        m.dense_mut().1[0] = 0.1;
        assert!(matches!(m.backward(&cache, &[0]), Err(NnError::StaleCache)));
    }

    #[test]
    fn batch_errors() {
        let cfg = ModelConfig {
            vocab_size: 5,
            embed_dim: 2,
            seq_len: 3,
            gru_units: 2,
            ..ModelConfig::default()
        };
        let m = GruStackModel::<f32>::new(cfg, 3).unwrap();
        assert!(matches!(
            m.predict(&[EncodedSequence(vec![1, 5, 0])]),
            Err(NnError::IndexOutOfVocab { index: 5, .. })
        ));
        assert!(matches!(
            m.predict(&[EncodedSequence(vec![1])]),
            Err(NnError::ShapeMismatch { .. })
        ));
    }
}
