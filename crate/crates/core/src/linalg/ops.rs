//! Tensor products, partial traces, Schmidt forms, fidelity and purification.

use super::{
    check_dim, eigh_unchecked, nuclear_norm, psd_function, re, svd_thin, CMat, CVec, DensityMatrix,
    SchmidtForm, StateVector, UnitaryMatrix,
};
use crate::error::{Error, Result};
use crate::layout::TensorLayout;

/// Eigenvalues below this are treated as exact zeros when taking square
/// roots inside `fidelity`; otherwise roundoff in a null space is amplified
/// to ~1e-8 by the square root.
const FIDELITY_FLOOR: f64 = 1e-14;

/// Kronecker product with the left operand's indices major.
pub trait Tensor: Sized {
    fn tensor(&self, other: &Self) -> Self;
}

impl Tensor for StateVector {
    fn tensor(&self, other: &Self) -> Self {
        StateVector::from_unchecked(self.amplitudes().kronecker(other.amplitudes()))
    }
}

impl Tensor for DensityMatrix {
    fn tensor(&self, other: &Self) -> Self {
        DensityMatrix::from_unchecked(self.matrix().kronecker(other.matrix()))
    }
}

impl Tensor for UnitaryMatrix {
    fn tensor(&self, other: &Self) -> Self {
        UnitaryMatrix::from_unchecked(self.matrix().kronecker(other.matrix()))
    }
}

pub fn tensor<T: Tensor>(a: &T, b: &T) -> T {
    a.tensor(b)
}

/// Reshape a vector on `layout` into a matrix whose rows index the `rows`
/// registers and whose columns index the remaining ones (both in layout
/// order).
pub fn bipartite_matrix(psi: &CVec, layout: &TensorLayout, rows: &[&str]) -> Result<CMat> {
    check_dim(layout.total_dim(), psi.len())?;
    let sel = layout.select(rows)?;
    let (row_off, col_off) = layout.split_offsets(&sel);
    Ok(CMat::from_fn(row_off.len(), col_off.len(), |a, t| {
        psi[row_off[a] + col_off[t]]
    }))
}

/// Reduced state of a pure state on the `keep` registers.
pub fn reduced_from_pure(
    psi: &StateVector,
    layout: &TensorLayout,
    keep: &[&str],
) -> Result<DensityMatrix> {
    let m = bipartite_matrix(psi.amplitudes(), layout, keep)?;
    Ok(DensityMatrix::from_unchecked(&m * m.adjoint()))
}

pub fn partial_trace(
    rho: &DensityMatrix,
    layout: &TensorLayout,
    keep: &[&str],
) -> Result<DensityMatrix> {
    check_dim(layout.total_dim(), rho.dim())?;
    let sel = layout.select(keep)?;
    let (kept, traced) = layout.split_offsets(&sel);
    let m = rho.matrix();
    let out = CMat::from_fn(kept.len(), kept.len(), |a, b| {
        traced.iter().map(|&t| m[(kept[a] + t, kept[b] + t)]).sum()
    });
    Ok(DensityMatrix::from_unchecked(out))
}

pub fn schmidt_decompose(
    psi: &StateVector,
    layout: &TensorLayout,
    cut: &[&str],
) -> Result<SchmidtForm> {
    let sel = layout.select(cut)?;
    if sel.len() == layout.len() {
        return Err(Error::InvalidSelection(
            "cut must leave at least one register".into(),
        ));
    }
    let m = bipartite_matrix(psi.amplitudes(), layout, cut)?;
    let (u, s, v) = svd_thin(&m)?;
    // m = u s v^dagger, so the right Schmidt vectors are conj(v).
    Ok(SchmidtForm {
        coefficients: s,
        left_vectors: u,
        right_vectors: v.map(|z| z.conj()),
    })
}

/// Uhlmann fidelity in the amplitude convention,
/// `F = Tr sqrt(sqrt(rho) sigma sqrt(rho))`, always in `[0, 1]`.
///
/// The trace is evaluated as the nuclear norm of `sqrt(sigma) sqrt(rho)`,
/// whose singular values are the square roots of the eigenvalues of
/// `sqrt(rho) sigma sqrt(rho)`.
pub fn fidelity(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dim(rho.dim(), sigma.dim())?;
    let a = psd_function(rho.matrix(), FIDELITY_FLOOR, f64::sqrt)?;
    let b = psd_function(sigma.matrix(), FIDELITY_FLOOR, f64::sqrt)?;
    finite_fidelity(nuclear_norm(&(b * a)))
}

/// Fidelity of `a a^dagger` and `b b^dagger` for factor matrices with equal
/// row counts: the nuclear norm of `a^dagger b`.
pub fn factor_fidelity(a: &CMat, b: &CMat) -> Result<f64> {
    check_dim(a.nrows(), b.nrows())?;
    finite_fidelity(nuclear_norm(&(a.adjoint() * b)))
}

fn finite_fidelity(f: f64) -> Result<f64> {
    if f.is_nan() {
        return Err(Error::Numerical("fidelity is not finite".into()));
    }
    Ok(f.clamp(0.0, 1.0))
}

/// Canonical purification `sum_k sqrt(lambda_k) |e_k> (x) |k>` with
/// eigenvalues in descending order. The appended register has the same
/// dimension as `rho`.
pub fn purify(rho: &DensityMatrix) -> Result<StateVector> {
    let d = rho.dim();
    let (vals, vecs) = eigh_unchecked(rho.matrix());
    if let Some(&min) = vals.last() {
        if min < -super::PSD_TOL {
            return Err(Error::NotPsd(min));
        }
    }
    let mut amps = CVec::zeros(d * d);
    for (k, &lam) in vals.iter().enumerate() {
        let w = lam.max(0.0).sqrt();
        for a in 0..d {
            amps[a * d + k] = vecs[(a, k)] * re(w);
        }
    }
    StateVector::normalized(amps)
}

/// Half the sum of absolute eigenvalues of `rho - sigma`.
pub fn trace_distance(rho: &DensityMatrix, sigma: &DensityMatrix) -> Result<f64> {
    check_dim(rho.dim(), sigma.dim())?;
    let (vals, _) = eigh_unchecked(&(rho.matrix() - sigma.matrix()));
    Ok((0.5 * vals.iter().map(|v| v.abs()).sum::<f64>()).clamp(0.0, 1.0))
}
