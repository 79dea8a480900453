use serde::{Deserialize, Serialize};

use super::tensor::Real;
use super::NnError;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AdamConfig {
    pub learning_rate: f64,
    pub beta1: f64,
    pub beta2: f64,
    pub epsilon: f64,
}

impl Default for AdamConfig {
    fn default() -> Self {
        Self {
            learning_rate: 0.001,
            beta1: 0.9,
            beta2: 0.999,
            epsilon: 1e-7,
        }
    }
}

/// Adam moment accumulators for a fixed list of parameter tensors.
#[derive(Debug, Clone, PartialEq)]
pub struct AdamState<F> {
    pub config: AdamConfig,
    step: u64,
    m: Vec<Vec<F>>,
    v: Vec<Vec<F>>,
}

impl<F: Real> AdamState<F> {
    pub fn new(config: AdamConfig, tensor_lens: &[usize]) -> Self {
        Self {
            config,
            step: 0,
            m: tensor_lens.iter().map(|&n| vec![F::zero(); n]).collect(),
            v: tensor_lens.iter().map(|&n| vec![F::zero(); n]).collect(),
        }
    }

    pub fn step_count(&self) -> u64 {
        self.step
    }

    /// Applies one bias-corrected Adam update in place.
    pub fn step(&mut self, params: Vec<&mut [F]>, grads: &[Vec<F>]) -> Result<(), NnError> {
        if params.len() != self.m.len() || grads.len() != self.m.len() {
            return Err(NnError::ShapeMismatch {
                what: "adam tensor count",
                expected: self.m.len(),
                found: params.len().min(grads.len()),
            });
        }
        for ((p, g), m) in params.iter().zip(grads).zip(&self.m) {
            if p.len() != m.len() || g.len() != m.len() {
                return Err(NnError::ShapeMismatch {
                    what: "adam tensor length",
                    expected: m.len(),
                    found: if p.len() != m.len() { p.len() } else { g.len() },
                });
            }
        }
        self.step += 1;
        let c = self.config;
        let t = self.step as i32;
        let b1 = F::of(c.beta1);
        let b2 = F::of(c.beta2);
        let one_b1 = F::of(1.0 - c.beta1);
        let one_b2 = F::of(1.0 - c.beta2);
        let corr1 = F::of(1.0 - c.beta1.powi(t));
        let corr2 = F::of(1.0 - c.beta2.powi(t));
        let lr = F::of(c.learning_rate);
        let eps = F::of(c.epsilon);
        for (((p, g), m), v) in params.into_iter().zip(grads).zip(&mut self.m).zip(&mut self.v) {
            for i in 0..p.len() {
                let gi = g[i];
                m[i] = b1 * m[i] + one_b1 * gi;
                v[i] = b2 * v[i] + one_b2 * gi * gi;
                let m_hat = m[i] / corr1;
                let v_hat = v[i] / corr2;
                p[i] = p[i] - lr * m_hat / (v_hat.sqrt() + eps);
            }
        }
        Ok(())
    }
}
