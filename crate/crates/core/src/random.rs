//! Seeded random instances.
//!
//! Every random draw in the crate comes from a ChaCha8 stream selected by a
//! 64-bit seed and a stream index, so independent jobs (restarts, trials)
//! can be run in any order and still reproduce.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;

use crate::operator::{CMatrix, CVector, HermitianOperator, StateVector, C64};

pub fn stream(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

pub fn complex_gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    C64::new(rng.sample(StandardNormal), rng.sample(StandardNormal))
}

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    CMatrix::from_fn(dim, dim, |_, _| complex_gaussian(rng))
}

/// Hermitian matrix from the Gaussian unitary ensemble, scaled to unit
/// Frobenius norm.
pub fn hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    let g = gaussian_matrix(rng, dim);
    let h = HermitianOperator::hermitian_part(&g);
    let n = h.frobenius_norm();
    h.scale(1.0 / n)
}

pub fn traceless_hermitian<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> HermitianOperator {
    let h = hermitian(rng, dim);
    let shift = HermitianOperator::identity(dim).scale(h.trace() / dim as f64);
    let t = &h - &shift;
    let n = t.frobenius_norm();
    t.scale(1.0 / n)
}

pub fn state<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> StateVector {
    let v = CVector::from_fn(dim, |_, _| complex_gaussian(rng));
    StateVector::normalized(v).expect("gaussian vector is nonzero")
}

/// Haar-random unitary via QR of a Ginibre matrix with phase correction.
pub fn unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> CMatrix {
    let qr = gaussian_matrix(rng, dim).qr();
    let (mut q, r) = (qr.q(), qr.r());
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { C64::new(1.0, 0.0) };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    q
}

/// Random density matrix of the given rank.
pub fn density<R: Rng + ?Sized>(rng: &mut R, dim: usize, rank: usize) -> HermitianOperator {
    let g = CMatrix::from_fn(dim, rank, |_, _| complex_gaussian(rng));
    let rho = &g * g.adjoint();
    let tr = rho.trace().re;
    HermitianOperator::hermitian_part(&(rho / C64::new(tr, 0.0)))
}
