//! Seeded weight initializers.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use super::tensor::{Matrix, Real};

/// Mixes a base seed with a list of stream identifiers (splitmix64 finalizer).
pub fn derive_seed(base: u64, parts: &[u64]) -> u64 {
    let mut s = base;
    for &p in parts {
        s = splitmix(s ^ splitmix(p.wrapping_add(0x9e37_79b9_7f4a_7c15)));
    }
    splitmix(s)
}

fn splitmix(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9e37_79b9_7f4a_7c15);
    z = (z ^ (z >> 30)).wrapping_mul(0xbf58_476d_1ce4_e5b9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94d0_49bb_1331_11eb);
    z ^ (z >> 31)
}

pub fn rng_from(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform on `[-limit, limit]`.
pub fn uniform<F: Real>(rows: usize, cols: usize, limit: f64, seed: u64) -> Matrix<F> {
    let mut rng = rng_from(seed);
    Matrix::from_fn(rows, cols, |_, _| F::of(rng.random_range(-limit..=limit)))
}

/// Glorot/Xavier uniform: limit `sqrt(6 / (rows + cols))`.
pub fn glorot_uniform<F: Real>(rows: usize, cols: usize, seed: u64) -> Matrix<F> {
    let limit = (6.0 / (rows + cols) as f64).sqrt();
    uniform(rows, cols, limit, seed)
}

/// Orthogonal initializer.
///
/// A seeded standard-normal matrix in tall orientation is factored as `QR`
/// with modified Gram-Schmidt (two passes), which yields the unique `Q`
/// whose `R` has a positive diagonal. Wide shapes get the transpose, so
/// their rows are orthonormal instead of their columns.
pub fn orthogonal<F: Real>(rows: usize, cols: usize, seed: u64) -> Matrix<F> {
    let (m, n) = if rows >= cols { (rows, cols) } else { (cols, rows) };
    let mut rng = rng_from(seed);
    // column-major storage: column j is q[j*m..(j+1)*m]
    let mut q: Vec<f64> = (0..m * n).map(|_| rng.sample::<f64, _>(StandardNormal)).collect();
    for j in 0..n {
        for _pass in 0..2 {
            for i in 0..j {
                let (done, rest) = q.split_at_mut(j * m);
                let qi = &done[i * m..(i + 1) * m];
                let qj = &mut rest[..m];
                let proj: f64 = qi.iter().zip(qj.iter()).map(|(a, b)| a * b).sum();
                for (x, &y) in qj.iter_mut().zip(qi) {
                    *x -= proj * y;
                }
            }
        }
        let col = &mut q[j * m..(j + 1) * m];
        let norm = col.iter().map(|x| x * x).sum::<f64>().sqrt();
        // Gaussian columns are linearly dependent with probability zero.
        debug_assert!(norm > 0.0);
        for x in col.iter_mut() {
            *x /= norm;
        }
    }
    if rows >= cols {
        Matrix::from_fn(rows, cols, |i, j| F::of(q[j * m + i]))
    } else {
        Matrix::from_fn(rows, cols, |i, j| F::of(q[i * m + j]))
    }
}
