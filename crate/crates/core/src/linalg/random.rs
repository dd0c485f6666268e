//! Seeded random matrices and states for tests and oracles.

use rand::Rng;
use rand_distr::StandardNormal;

use super::{CMat, CVec, DensityMatrix, StateVector, UnitaryMatrix, C64};

fn gaussian<R: Rng + ?Sized>(rng: &mut R) -> C64 {
    let re: f64 = rng.sample(StandardNormal);
    let im: f64 = rng.sample(StandardNormal);
    C64::new(re, im)
}

/// Matrix with i.i.d. complex Gaussian entries.
pub fn random_matrix<R: Rng + ?Sized>(rows: usize, cols: usize, rng: &mut R) -> CMat {
    CMat::from_fn(rows, cols, |_, _| gaussian(rng))
}

pub fn random_hermitian<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> CMat {
    let a = random_matrix(dim, dim, rng);
    (&a + a.adjoint()) * C64::new(0.5, 0.0)
}

/// Haar-random pure state.
pub fn random_state<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> StateVector {
    let v = CVec::from_fn(dim, |_, _| gaussian(rng));
    StateVector::normalized(v).expect("gaussian vector is nonzero")
}

/// Random density matrix of the given rank (induced measure).
pub fn random_density<R: Rng + ?Sized>(dim: usize, rank: usize, rng: &mut R) -> DensityMatrix {
    let a = random_matrix(dim, rank.max(1), rng);
    let m = &a * a.adjoint();
    let t = m.trace();
    DensityMatrix::from_unchecked(m / t)
}

/// Haar-random unitary from the QR decomposition of a Ginibre matrix with
/// the phases of R's diagonal divided out.
pub fn random_unitary<R: Rng + ?Sized>(dim: usize, rng: &mut R) -> UnitaryMatrix {
    let qr = random_matrix(dim, dim, rng).qr();
    let (mut q, r) = qr.unpack();
    for k in 0..dim {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 {
            d / C64::new(d.norm(), 0.0)
        } else {
            C64::new(1.0, 0.0)
        };
        let mut col = q.column_mut(k);
        col *= phase;
    }
    UnitaryMatrix::from_unchecked(q)
}
