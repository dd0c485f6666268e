//! Dense complex linear algebra for small quantum systems.

mod decomp;
mod frame;
mod ops;
pub mod random;

use nalgebra::{DMatrix, DVector};

pub use decomp::{
    column_span, complete_columns, eigh, hermitian_deviation, nuclear_norm, row_factor,
    singular_values, sqrt_psd, svd, RowFactor, Svd,
};
pub(crate) use decomp::{eigh_unchecked, psd_function, real_diag, svd_thin};
pub use frame::FrameMap;
pub use ops::{
    bipartite_matrix, factor_fidelity, fidelity, partial_trace, purify, reduced_from_pure,
    schmidt_decompose, tensor, trace_distance, Tensor,
};

use crate::error::{Error, Result};

pub type C64 = nalgebra::Complex<f64>;
pub type CMat = DMatrix<C64>;
pub type CVec = DVector<C64>;

/// Tolerance for state normalization and density-matrix construction.
pub const CONSTRUCTION_TOL: f64 = 1e-10;
/// Tolerance for algebraic identities such as unitarity.
pub const IDENTITY_TOL: f64 = 1e-9;
/// Hermiticity tolerance accepted by `eigh`.
pub const HERMITIAN_TOL: f64 = 1e-9;
/// Eigenvalues above `-PSD_TOL` are clamped to zero; lower ones are rejected.
pub const PSD_TOL: f64 = 1e-10;

pub(crate) fn re(x: f64) -> C64 {
    C64::new(x, 0.0)
}

/// Normalized pure state.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    amplitudes: CVec,
}

impl StateVector {
    pub fn new(amplitudes: CVec) -> Result<Self> {
        if amplitudes.is_empty() {
            return Err(Error::DimensionMismatch {
                expected: 1,
                got: 0,
            });
        }
        let norm = amplitudes.norm();
        if (norm - 1.0).abs() > CONSTRUCTION_TOL {
            return Err(Error::NotNormalized(norm));
        }
        Ok(StateVector { amplitudes })
    }

    /// Rescale an arbitrary nonzero vector to unit norm.
    pub fn normalized(amplitudes: CVec) -> Result<Self> {
        let norm = amplitudes.norm();
        if !(norm > 0.0) || !norm.is_finite() {
            return Err(Error::NotNormalized(norm));
        }
        Ok(StateVector {
            amplitudes: amplitudes / re(norm),
        })
    }

    pub fn from_reals(values: &[f64]) -> Result<Self> {
        Self::new(CVec::from_iterator(
            values.len(),
            values.iter().map(|&v| re(v)),
        ))
    }

    pub fn basis(dim: usize, index: usize) -> Result<Self> {
        if index >= dim {
            return Err(Error::IndexOutOfRange {
                what: "basis index",
                index,
                size: dim,
            });
        }
        let mut v = CVec::zeros(dim);
        v[index] = re(1.0);
        Ok(StateVector { amplitudes: v })
    }

    pub(crate) fn from_unchecked(amplitudes: CVec) -> Self {
        StateVector { amplitudes }
    }

    pub fn dim(&self) -> usize {
        self.amplitudes.len()
    }

    pub fn amplitudes(&self) -> &CVec {
        &self.amplitudes
    }

    pub fn into_amplitudes(self) -> CVec {
        self.amplitudes
    }

    /// `<self|other>`
    pub fn inner(&self, other: &StateVector) -> C64 {
        self.amplitudes.dotc(&other.amplitudes)
    }

    pub fn to_density(&self) -> DensityMatrix {
        DensityMatrix {
            entries: &self.amplitudes * self.amplitudes.adjoint(),
        }
    }
}

/// Hermitian, positive semidefinite, unit-trace matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct DensityMatrix {
    entries: CMat,
}

impl DensityMatrix {
    pub fn new(entries: CMat) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        let dev = hermitian_deviation(&entries);
        if dev > CONSTRUCTION_TOL {
            return Err(Error::NotHermitian(dev));
        }
        let trace = entries.trace().re;
        if (trace - 1.0).abs() > CONSTRUCTION_TOL {
            return Err(Error::BadTrace(trace));
        }
        let (vals, _) = eigh_unchecked(&entries);
        let min = vals.last().copied().unwrap_or(0.0);
        if min < -PSD_TOL {
            return Err(Error::NotPsd(min));
        }
        Ok(DensityMatrix { entries })
    }

    pub fn from_reals_diag(diag: &[f64]) -> Result<Self> {
        Self::new(real_diag(diag))
    }

    pub fn maximally_mixed(dim: usize) -> Self {
        DensityMatrix {
            entries: CMat::identity(dim, dim) / re(dim as f64),
        }
    }

    /// Skips validation; callers construct the matrix as `A A^dagger` with
    /// unit-norm `A` or by another trace-preserving map.
    pub(crate) fn from_unchecked(entries: CMat) -> Self {
        DensityMatrix { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.entries
    }

    pub fn into_matrix(self) -> CMat {
        self.entries
    }

    pub fn trace(&self) -> f64 {
        self.entries.trace().re
    }

    /// `Tr(rho^2)`
    pub fn purity(&self) -> f64 {
        self.entries.iter().map(|z| z.norm_sqr()).sum()
    }

    pub fn eigenvalues(&self) -> Vec<f64> {
        eigh_unchecked(&self.entries).0
    }
}

/// Square unitary matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct UnitaryMatrix {
    entries: CMat,
}

impl UnitaryMatrix {
    pub fn new(entries: CMat) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::DimensionMismatch {
                expected: entries.nrows(),
                got: entries.ncols(),
            });
        }
        let d = entries.nrows();
        let dev = (entries.adjoint() * &entries - CMat::identity(d, d)).norm();
        if dev > IDENTITY_TOL {
            return Err(Error::NotUnitary(dev));
        }
        Ok(UnitaryMatrix { entries })
    }

    pub fn identity(dim: usize) -> Self {
        UnitaryMatrix {
            entries: CMat::identity(dim, dim),
        }
    }

    /// Permutation unitary sending basis state `k` to `perm[k]`.
    pub fn from_permutation(perm: &[usize]) -> Result<Self> {
        let d = perm.len();
        let mut seen = vec![false; d];
        for &p in perm {
            if p >= d || seen[p] {
                return Err(Error::InvalidParameter("not a permutation".into()));
            }
            seen[p] = true;
        }
        let mut m = CMat::zeros(d, d);
        for (k, &p) in perm.iter().enumerate() {
            m[(p, k)] = re(1.0);
        }
        Ok(UnitaryMatrix { entries: m })
    }

    pub(crate) fn from_unchecked(entries: CMat) -> Self {
        UnitaryMatrix { entries }
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn matrix(&self) -> &CMat {
        &self.entries
    }

    pub fn adjoint(&self) -> UnitaryMatrix {
        UnitaryMatrix {
            entries: self.entries.adjoint(),
        }
    }

    pub fn compose(&self, after: &UnitaryMatrix) -> Result<UnitaryMatrix> {
        check_dim(self.dim(), after.dim())?;
        Ok(UnitaryMatrix {
            entries: &after.entries * &self.entries,
        })
    }

    pub fn apply(&self, psi: &StateVector) -> Result<StateVector> {
        check_dim(self.dim(), psi.dim())?;
        Ok(StateVector {
            amplitudes: &self.entries * psi.amplitudes(),
        })
    }

    /// `U rho U^dagger`
    pub fn conjugate(&self, rho: &DensityMatrix) -> Result<DensityMatrix> {
        check_dim(self.dim(), rho.dim())?;
        Ok(DensityMatrix {
            entries: &self.entries * rho.matrix() * self.entries.adjoint(),
        })
    }
}

/// Schmidt decomposition across a bipartition. `left_vectors` and
/// `right_vectors` hold one column per coefficient.
#[derive(Clone, Debug)]
pub struct SchmidtForm {
    pub coefficients: Vec<f64>,
    pub left_vectors: CMat,
    pub right_vectors: CMat,
}

impl SchmidtForm {
    /// Number of coefficients above `1e-10`.
    pub fn rank(&self) -> usize {
        self.coefficients.iter().filter(|&&a| a > 1e-10).count()
    }

    /// `sum_k a_k |alpha_k> (x) |beta_k>`, cut side major.
    pub fn reconstruct(&self) -> CVec {
        let (dl, dr) = (self.left_vectors.nrows(), self.right_vectors.nrows());
        let mut out = CVec::zeros(dl * dr);
        for (k, &a) in self.coefficients.iter().enumerate() {
            let l = self.left_vectors.column(k);
            let r = self.right_vectors.column(k);
            for x in 0..dl {
                let lx = l[x] * re(a);
                for y in 0..dr {
                    out[x * dr + y] += lx * r[y];
                }
            }
        }
        out
    }
}

pub(crate) fn check_dim(expected: usize, got: usize) -> Result<()> {
    if expected != got {
        return Err(Error::DimensionMismatch { expected, got });
    }
    Ok(())
}
