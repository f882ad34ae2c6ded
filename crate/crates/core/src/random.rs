//! Seeded random matrices and group elements.

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use rand::SeedableRng;

use crate::cmatrix::{c, CMatrix, Complex};

pub fn rng(seed: u64) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Uniform sample from the closed unit disc.
pub fn unit_disc<R: Rng + ?Sized>(rng: &mut R) -> Complex {
    let r = rng.gen::<f64>().sqrt();
    let theta = rng.gen::<f64>() * std::f64::consts::TAU;
    Complex::from_polar(r, theta)
}

/// Entries i.i.d. uniform in the unit disc.
pub fn disc_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    CMatrix::from_fn(rows, cols, |_, _| unit_disc(rng))
}

pub fn symmetric_disc_matrix<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let m = disc_matrix(rng, n, n);
    (&m + &m.transpose()).scale_real(0.5)
}

/// Haar-ish unitary from the QR of a Gaussian-like matrix.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, n: usize) -> CMatrix {
    let m = disc_matrix(rng, n, n).into_nalgebra();
    let q = m.qr().q();
    CMatrix::from_nalgebra(q)
}

/// Invertible matrix `U·diag(e^{s_k})·V` with `s_k ∈ [-spread, spread]`.
pub fn well_conditioned<R: Rng + ?Sized>(rng: &mut R, n: usize, spread: f64) -> CMatrix {
    let u = unitary(rng, n);
    let v = unitary(rng, n);
    let d: Vec<f64> = (0..n).map(|_| (rng.gen::<f64>() * 2.0 - 1.0) * spread).map(f64::exp).collect();
    &(&u * &CMatrix::real_diag(&d)) * &v
}

pub fn unit_phase<R: Rng + ?Sized>(rng: &mut R) -> Complex {
    Complex::from_polar(1.0, rng.gen::<f64>() * std::f64::consts::TAU)
}

pub fn small_real<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    (rng.gen::<f64>() * 2.0 - 1.0) * scale
}

#[allow(dead_code)]
pub(crate) fn real(x: f64) -> Complex {
    c(x, 0.0)
}
