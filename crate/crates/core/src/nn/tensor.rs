use std::fmt::Debug;
use std::iter::Sum;

use num_traits::{Float, FromPrimitive, ToPrimitive};

/// Floating-point element type of the network. Training runs in `f32`; the
/// gradient checks instantiate the same code with `f64`.
pub trait Real: Float + FromPrimitive + ToPrimitive + Default + Debug + Sum + Send + Sync + 'static {
    #[inline]
    fn of(x: f64) -> Self {
        Self::from_f64(x).expect("finite constant")
    }

    #[inline]
    fn as_f64(self) -> f64 {
        self.to_f64().unwrap_or(f64::NAN)
    }
}

impl Real for f32 {}
impl Real for f64 {}

#[inline]
pub fn sigmoid<F: Real>(x: F) -> F {
    if x >= F::zero() {
        F::one() / (F::one() + (-x).exp())
    } else {
        let e = x.exp();
        e / (F::one() + e)
    }
}

/// Dense row-major matrix.
#[derive(Debug, Clone, PartialEq)]
pub struct Matrix<F> {
    rows: usize,
    cols: usize,
    data: Vec<F>,
}

impl<F: Real> Matrix<F> {
    pub fn zeros(rows: usize, cols: usize) -> Self {
        Self {
            rows,
            cols,
            data: vec![F::zero(); rows * cols],
        }
    }

    /// Panics if `data.len() != rows * cols`.
    pub fn from_vec(rows: usize, cols: usize, data: Vec<F>) -> Self {
        assert_eq!(data.len(), rows * cols, "matrix data length");
        Self { rows, cols, data }
    }

    pub fn from_fn(rows: usize, cols: usize, mut f: impl FnMut(usize, usize) -> F) -> Self {
        let mut data = Vec::with_capacity(rows * cols);
        for i in 0..rows {
            for j in 0..cols {
                data.push(f(i, j));
            }
        }
        Self { rows, cols, data }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    pub fn shape(&self) -> (usize, usize) {
        (self.rows, self.cols)
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> F {
        self.data[i * self.cols + j]
    }

    #[inline]
    pub fn set(&mut self, i: usize, j: usize, v: F) {
        self.data[i * self.cols + j] = v;
    }

    #[inline]
    pub fn row(&self, i: usize) -> &[F] {
        &self.data[i * self.cols..(i + 1) * self.cols]
    }

    #[inline]
    pub fn row_mut(&mut self, i: usize) -> &mut [F] {
        &mut self.data[i * self.cols..(i + 1) * self.cols]
    }

    pub fn as_slice(&self) -> &[F] {
        &self.data
    }

    pub fn as_mut_slice(&mut self) -> &mut [F] {
        &mut self.data
    }

    pub fn into_vec(self) -> Vec<F> {
        self.data
    }

    pub fn transpose(&self) -> Self {
        let mut out = Self::zeros(self.cols, self.rows);
        for i in 0..self.rows {
            for j in 0..self.cols {
                out.data[j * self.rows + i] = self.data[i * self.cols + j];
            }
        }
        out
    }

    pub fn map<G: Real>(&self, f: impl Fn(F) -> G) -> Matrix<G> {
        Matrix {
            rows: self.rows,
            cols: self.cols,
            data: self.data.iter().map(|&x| f(x)).collect(),
        }
    }

    pub fn matmul(&self, other: &Self) -> Self {
        assert_eq!(self.cols, other.rows, "matmul inner dimension");
        let mut out = Self::zeros(self.rows, other.cols);
        gemm_acc(
            &self.data,
            self.rows,
            self.cols,
            &other.data,
            other.cols,
            &mut out.data,
        );
        out
    }
}

/// `out[m×n] += a[m×k] · w[k×n]`
#[inline]
pub fn gemm_acc<F: Real>(a: &[F], m: usize, k: usize, w: &[F], n: usize, out: &mut [F]) {
    debug_assert_eq!(a.len(), m * k);
    debug_assert_eq!(w.len(), k * n);
    debug_assert_eq!(out.len(), m * n);
    for (a_row, out_row) in a.chunks_exact(k).zip(out.chunks_exact_mut(n)) {
        for (&av, w_row) in a_row.iter().zip(w.chunks_exact(n)) {
            if av == F::zero() {
                continue;
            }
            for (o, &wv) in out_row.iter_mut().zip(w_row) {
                *o = *o + av * wv;
            }
        }
    }
}

/// `out[k×n] += xᵀ · d` where `x` is `m×k` and `d` is `m×n`.
#[inline]
pub fn gemm_tn_acc<F: Real>(x: &[F], m: usize, k: usize, d: &[F], n: usize, out: &mut [F]) {
    debug_assert_eq!(x.len(), m * k);
    debug_assert_eq!(d.len(), m * n);
    debug_assert_eq!(out.len(), k * n);
    for (x_row, d_row) in x.chunks_exact(k).zip(d.chunks_exact(n)) {
        for (&xv, out_row) in x_row.iter().zip(out.chunks_exact_mut(n)) {
            if xv == F::zero() {
                continue;
            }
            for (o, &dv) in out_row.iter_mut().zip(d_row) {
                *o = *o + xv * dv;
            }
        }
    }
}

/// Adds each row of `d[m×n]` into `out[n]`.
#[inline]
pub fn sum_rows_acc<F: Real>(d: &[F], n: usize, out: &mut [F]) {
    for row in d.chunks_exact(n) {
        for (o, &v) in out.iter_mut().zip(row) {
            *o = *o + v;
        }
    }
}
