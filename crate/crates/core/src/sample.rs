//! Seeded random sampling of the matrices used across the crate.

use nalgebra::DMatrix;
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::linalg::{CMat, RMat};

pub type SeededRng = ChaCha8Rng;

pub fn rng(seed: u64) -> SeededRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// One draw from CN(0, 1).
pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> Complex64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    Complex64::new(re, im) * std::f64::consts::FRAC_1_SQRT_2
}

/// Matrix with i.i.d. CN(0, 1) entries, filled column by column.
pub fn gaussian_cmat<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    DMatrix::from_fn(rows, cols, |_, _| complex_gaussian(rng))
}

pub fn gaussian_rmat<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> RMat {
    DMatrix::from_fn(rows, cols, |_, _| rng.sample(StandardNormal))
}

/// Haar-distributed unitary: QR of a complex Gaussian matrix with the
/// diagonal of R normalized to positive reals.
pub fn haar_unitary<R: Rng + ?Sized>(n: usize, rng: &mut R) -> CMat {
    let qr = gaussian_cmat(n, n, rng).qr();
    let r = qr.r();
    let mut q = qr.q();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { Complex64::new(1.0, 0.0) };
        for z in q.column_mut(k).iter_mut() {
            *z *= phase;
        }
    }
    q
}

/// Random real symmetric matrix `(X + X^T) / 2` with Gaussian `X`.
pub fn symmetric_rmat<R: Rng + ?Sized>(n: usize, rng: &mut R) -> RMat {
    let x = gaussian_rmat(n, n, rng);
    (&x + x.transpose()) * 0.5
}
