//! Gated recurrent unit layer, "reset-after" variant.
//!
//! Gate columns in every weight matrix and bias are laid out as
//! `[update z | reset r | candidate h̃]`, each `units` wide:
//!
//! ```text
//! z  = σ(x·Wz + bz + h·Uz + cz)
//! r  = σ(x·Wr + br + h·Ur + cr)
//! h̃  = tanh(x·Wh + bh + r ⊙ (h·Uh + ch))
//! h' = z ⊙ h + (1 − z) ⊙ h̃
//! ```
//!
//! Sequences are stored time-major: element `(t, b, f)` lives at
//! `(t * batch + b) * features + f`.

use super::tensor::{gemm_acc, gemm_tn_acc, sigmoid, sum_rows_acc, Matrix, Real};
use super::NnError;

#[derive(Debug, Clone, PartialEq)]
pub struct GruLayer<F> {
    pub kernel: Matrix<F>,
    pub recurrent: Matrix<F>,
    pub bias_in: Vec<F>,
    pub bias_rec: Vec<F>,
}

/// Activations kept from a forward pass for backpropagation.
#[derive(Debug, Clone)]
pub struct GruCache<F> {
    pub steps: usize,
    pub batch: usize,
    pub inputs: Vec<F>,
    /// Hidden state after every step, `[T × B × units]`.
    pub hidden: Vec<F>,
    update: Vec<F>,
    reset: Vec<F>,
    candidate: Vec<F>,
    /// `h_prev·Uh + ch`, the recurrent part of the candidate pre-activation.
    rec_candidate: Vec<F>,
}

/// Gradients of one layer, same shapes as its parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct GruGrads<F> {
    pub kernel: Vec<F>,
    pub recurrent: Vec<F>,
    pub bias_in: Vec<F>,
    pub bias_rec: Vec<F>,
}

impl<F: Real> GruGrads<F> {
    pub fn zeros_like(layer: &GruLayer<F>) -> Self {
        Self {
            kernel: vec![F::zero(); layer.kernel.as_slice().len()],
            recurrent: vec![F::zero(); layer.recurrent.as_slice().len()],
            bias_in: vec![F::zero(); layer.bias_in.len()],
            bias_rec: vec![F::zero(); layer.bias_rec.len()],
        }
    }
}

impl<F: Real> GruLayer<F> {
    pub fn zeros(input_dim: usize, units: usize) -> Self {
        Self {
            kernel: Matrix::zeros(input_dim, 3 * units),
            recurrent: Matrix::zeros(units, 3 * units),
            bias_in: vec![F::zero(); 3 * units],
            bias_rec: vec![F::zero(); 3 * units],
        }
    }

    pub fn input_dim(&self) -> usize {
        self.kernel.rows()
    }

    pub fn units(&self) -> usize {
        self.recurrent.rows()
    }

    pub fn param_count(input_dim: usize, units: usize) -> usize {
        3 * (input_dim * units + units * units + 2 * units)
    }

    pub fn validate(&self) -> Result<(), NnError> {
        let u = self.units();
        let checks = [
            ("gru.kernel.cols", 3 * u, self.kernel.cols()),
            ("gru.recurrent.cols", 3 * u, self.recurrent.cols()),
            ("gru.bias_in", 3 * u, self.bias_in.len()),
            ("gru.bias_rec", 3 * u, self.bias_rec.len()),
        ];
        for (what, expected, found) in checks {
            if expected != found {
                return Err(NnError::ShapeMismatch {
                    what,
                    expected,
                    found,
                });
            }
        }
        Ok(())
    }

    /// One step for a single example.
    pub fn cell_forward(&self, x: &[F], h_prev: &[F]) -> Result<Vec<F>, NnError> {
        if x.len() != self.input_dim() {
            return Err(NnError::ShapeMismatch {
                what: "gru input",
                expected: self.input_dim(),
                found: x.len(),
            });
        }
        if h_prev.len() != self.units() {
            return Err(NnError::ShapeMismatch {
                what: "gru hidden state",
                expected: self.units(),
                found: h_prev.len(),
            });
        }
        self.validate()?;
        let u = self.units();
        let mut xw = self.bias_in.clone();
        gemm_acc(x, 1, self.input_dim(), self.kernel.as_slice(), 3 * u, &mut xw);
        let mut hu = self.bias_rec.clone();
        gemm_acc(h_prev, 1, u, self.recurrent.as_slice(), 3 * u, &mut hu);
        Ok((0..u)
            .map(|j| {
                let z = sigmoid(xw[j] + hu[j]);
                let r = sigmoid(xw[u + j] + hu[u + j]);
                let cand = (xw[2 * u + j] + r * hu[2 * u + j]).tanh();
                z * h_prev[j] + (F::one() - z) * cand
            })
            .collect())
    }

    /// Runs the layer over a time-major `[steps × batch × input_dim]` input
    /// from a zero initial state.
    pub fn forward(&self, inputs: Vec<F>, steps: usize, batch: usize) -> GruCache<F> {
        let u = self.units();
        let d = self.input_dim();
        debug_assert_eq!(inputs.len(), steps * batch * d);
        let n = steps * batch * u;
        let mut hidden = vec![F::zero(); n];
        let mut update = vec![F::zero(); n];
        let mut reset = vec![F::zero(); n];
        let mut candidate = vec![F::zero(); n];
        let mut rec_candidate = vec![F::zero(); n];

        // Input projections for all steps at once: [T·B × 3u].
        let mut xw = Vec::with_capacity(steps * batch * 3 * u);
        for _ in 0..steps * batch {
            xw.extend_from_slice(&self.bias_in);
        }
        gemm_acc(&inputs, steps * batch, d, self.kernel.as_slice(), 3 * u, &mut xw);

        let zero_state = vec![F::zero(); batch * u];
        let mut hu = vec![F::zero(); batch * 3 * u];
        for t in 0..steps {
            let span = t * batch * u..(t + 1) * batch * u;
            let (before, current) = hidden.split_at_mut(span.start);
            let h_prev: &[F] = if t == 0 {
                &zero_state
            } else {
                &before[(t - 1) * batch * u..]
            };
            for row in hu.chunks_exact_mut(3 * u) {
                row.copy_from_slice(&self.bias_rec);
            }
            gemm_acc(h_prev, batch, u, self.recurrent.as_slice(), 3 * u, &mut hu);
            let h_out = &mut current[..batch * u];
            for b in 0..batch {
                let xrow = &xw[(t * batch + b) * 3 * u..(t * batch + b + 1) * 3 * u];
                let hrow = &hu[b * 3 * u..(b + 1) * 3 * u];
                for j in 0..u {
                    let k = b * u + j;
                    let z = sigmoid(xrow[j] + hrow[j]);
                    let r = sigmoid(xrow[u + j] + hrow[u + j]);
                    let rc = hrow[2 * u + j];
                    let cand = (xrow[2 * u + j] + r * rc).tanh();
                    h_out[k] = z * h_prev[k] + (F::one() - z) * cand;
                    let g = span.start + k;
                    update[g] = z;
                    reset[g] = r;
                    candidate[g] = cand;
                    rec_candidate[g] = rc;
                }
            }
        }
        GruCache {
            steps,
            batch,
            inputs,
            hidden,
            update,
            reset,
            candidate,
            rec_candidate,
        }
    }

    /// Backpropagation through time.
    ///
    /// `d_hidden` is the loss gradient w.r.t. every output state
    /// (`[T × B × units]`, zeros where a step's output is unused). Parameter
    /// gradients are accumulated into `grads`. Returns the gradient w.r.t.
    /// the inputs when `want_input_grad` is set.
    pub fn backward(
        &self,
        cache: &GruCache<F>,
        d_hidden: &[F],
        grads: &mut GruGrads<F>,
        want_input_grad: bool,
    ) -> Option<Vec<F>> {
        let u = self.units();
        let d = self.input_dim();
        let (steps, batch) = (cache.steps, cache.batch);
        debug_assert_eq!(d_hidden.len(), steps * batch * u);

        let kernel_t = self.kernel.transpose();
        let recurrent_t = self.recurrent.transpose();
        let mut d_inputs = want_input_grad.then(|| vec![F::zero(); steps * batch * d]);
        let zero_state = vec![F::zero(); batch * u];
        let mut carry = vec![F::zero(); batch * u];
        let mut d_xw = vec![F::zero(); batch * 3 * u];
        let mut d_hu = vec![F::zero(); batch * 3 * u];

        for t in (0..steps).rev() {
            let base = t * batch * u;
            let h_prev: &[F] = if t == 0 {
                &zero_state
            } else {
                &cache.hidden[(t - 1) * batch * u..base]
            };
            for b in 0..batch {
                for j in 0..u {
                    let k = b * u + j;
                    let g = base + k;
                    let dh = d_hidden[g] + carry[k];
                    let z = cache.update[g];
                    let r = cache.reset[g];
                    let cand = cache.candidate[g];
                    let rc = cache.rec_candidate[g];

                    let dz = dh * (h_prev[k] - cand);
                    let d_cand = dh * (F::one() - z);
                    let da_h = d_cand * (F::one() - cand * cand);
                    let da_z = dz * z * (F::one() - z);
                    let da_r = da_h * rc * r * (F::one() - r);

                    let row = b * 3 * u;
                    d_xw[row + j] = da_z;
                    d_xw[row + u + j] = da_r;
                    d_xw[row + 2 * u + j] = da_h;
                    d_hu[row + j] = da_z;
                    d_hu[row + u + j] = da_r;
                    d_hu[row + 2 * u + j] = da_h * r;
                    carry[k] = dh * z;
                }
            }
            let x_t = &cache.inputs[t * batch * d..(t + 1) * batch * d];
            gemm_tn_acc(x_t, batch, d, &d_xw, 3 * u, &mut grads.kernel);
            sum_rows_acc(&d_xw, 3 * u, &mut grads.bias_in);
            gemm_tn_acc(h_prev, batch, u, &d_hu, 3 * u, &mut grads.recurrent);
            sum_rows_acc(&d_hu, 3 * u, &mut grads.bias_rec);
            if let Some(dx) = d_inputs.as_mut() {
                let dx_t = &mut dx[t * batch * d..(t + 1) * batch * d];
                gemm_acc(&d_xw, batch, 3 * u, kernel_t.as_slice(), d, dx_t);
            }
            gemm_acc(&d_hu, batch, 3 * u, recurrent_t.as_slice(), u, &mut carry);
        }
        d_inputs
    }
}

impl<F: Real> GruCache<F> {
    /// Output state of the final step, `[B × units]`.
    pub fn last_hidden(&self) -> &[F] {
        let n = self.hidden.len() / self.steps.max(1);
        &self.hidden[self.hidden.len() - n..]
    }
}
