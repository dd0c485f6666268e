//! Spectral and singular-value decompositions on dense complex matrices.

use nalgebra::{DMatrix, DVector};

use super::{CMat, C64, HERMITIAN_TOL, PSD_TOL};
use crate::error::{Error, Result};

/// Largest entrywise deviation of `h` from its conjugate transpose.
pub fn hermitian_deviation(h: &CMat) -> f64 {
    let n = h.nrows();
    let mut worst: f64 = 0.0;
    for r in 0..n {
        for c in r..n {
            worst = worst.max((h[(r, c)] - h[(c, r)].conj()).norm());
        }
    }
    worst
}

/// nalgebra loops forever when the iteration cap is 0.
const SVD_MAX_ITER: usize = 10_000;
/// Same as nalgebra's `svd()`.
const SVD_EPS: f64 = 5.0 * f64::EPSILON;

/// Eigendecomposition of a Hermitian matrix with eigenvalues sorted in
/// descending order. Columns of the returned matrix are the eigenvectors.
pub fn eigh(h: &CMat) -> Result<(Vec<f64>, CMat)> {
    if !h.is_square() {
        return Err(Error::DimensionMismatch {
            expected: h.nrows(),
            got: h.ncols(),
        });
    }
    let dev = hermitian_deviation(h);
    if dev > HERMITIAN_TOL * h.norm().max(1.0) {
        return Err(Error::NotHermitian(dev));
    }
    Ok(eigh_unchecked(h))
}

pub(crate) fn eigh_unchecked(h: &CMat) -> (Vec<f64>, CMat) {
    let n = h.nrows();
    if n == 0 {
        return (Vec::new(), CMat::zeros(0, 0));
    }
    // Symmetrize so the solver sees an exactly Hermitian input.
    let sym = (h + h.adjoint()) * C64::new(0.5, 0.0);
    let mut vals = Vec::with_capacity(n);
    let mut vecs = CMat::zeros(n, n);
    for block in coupled_blocks(&sym) {
        let k = block.len();
        let sub = CMat::from_fn(k, k, |r, c| sym[(block[r], block[c])]);
        let (bv, bw) = block_eigen(&sub);
        for c in 0..k {
            let col = vals.len();
            vals.push(bv[c]);
            for r in 0..k {
                vecs[(block[r], col)] = bw[(r, c)];
            }
        }
    }
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| vals[b].total_cmp(&vals[a]));
    let values = order.iter().map(|&k| vals[k]).collect();
    let vectors = CMat::from_fn(n, n, |r, c| vecs[(r, order[c])]);
    (values, vectors)
}

/// Index sets of the connected components of the nonzero pattern.
fn coupled_blocks(h: &CMat) -> Vec<Vec<usize>> {
    let n = h.nrows();
    let mut parent: Vec<usize> = (0..n).collect();
    fn root(parent: &mut [usize], mut x: usize) -> usize {
        while parent[x] != x {
            parent[x] = parent[parent[x]];
            x = parent[x];
        }
        x
    }
    for r in 0..n {
        for c in r + 1..n {
            if h[(r, c)] != C64::new(0.0, 0.0) {
                let (a, b) = (root(&mut parent, r), root(&mut parent, c));
                parent[a.max(b)] = a.min(b);
            }
        }
    }
    let mut blocks: Vec<Vec<usize>> = Vec::new();
    let mut slot = vec![usize::MAX; n];
    for x in 0..n {
        let r = root(&mut parent, x);
        if slot[r] == usize::MAX {
            slot[r] = blocks.len();
            blocks.push(Vec::new());
        }
        blocks[slot[r]].push(x);
    }
    blocks
}

fn is_finite(m: &CMat) -> bool {
    m.iter().all(|z| z.re.is_finite() && z.im.is_finite())
}

fn block_eigen(sub: &CMat) -> (Vec<f64>, CMat) {
    let k = sub.nrows();
    if k == 1 {
        return (vec![sub[(0, 0)].re], CMat::identity(1, 1));
    }
    let eig = sub.clone().symmetric_eigen();
    if is_finite(&eig.eigenvectors) {
        return (eig.eigenvalues.iter().copied().collect(), eig.eigenvectors);
    }
    // nalgebra's tridiagonal solver can return NaN on some sparse inputs;
    // a shift by a multiple of the identity avoids the degenerate path.
    let shift = sub.norm() + 1.0;
    let shifted = sub + CMat::identity(k, k) * C64::new(shift, 0.0);
    let eig = shifted.symmetric_eigen();
    (
        eig.eigenvalues.iter().map(|v| v - shift).collect(),
        eig.eigenvectors,
    )
}

/// Full singular value decomposition `m = u * diag(s) * v^dagger` with square
/// unitary `u` (rows x rows) and `v` (cols x cols), `s` descending with
/// length `min(rows, cols)`.
#[derive(Clone, Debug)]
pub struct Svd {
    pub u: CMat,
    pub singular_values: Vec<f64>,
    pub v: CMat,
}

impl Svd {
    pub fn reconstruct(&self) -> CMat {
        let (r, c) = (self.u.nrows(), self.v.nrows());
        let mut sigma = CMat::zeros(r, c);
        for (k, &s) in self.singular_values.iter().enumerate() {
            sigma[(k, k)] = C64::new(s, 0.0);
        }
        &self.u * sigma * self.v.adjoint()
    }
}

pub fn svd(m: &CMat) -> Result<Svd> {
    let (u, s, v) = svd_thin(m)?;
    Ok(Svd {
        u: complete_columns(&u, m.nrows()),
        singular_values: s,
        v: complete_columns(&v, m.ncols()),
    })
}

/// Thin SVD: `u` is rows x k, `v` is cols x k with k = min(rows, cols).
pub(crate) fn svd_thin(m: &CMat) -> Result<(CMat, Vec<f64>, CMat)> {
    let (r, c) = m.shape();
    let k = r.min(c);
    if k == 0 {
        return Ok((CMat::zeros(r, 0), Vec::new(), CMat::zeros(c, 0)));
    }
    if !is_finite(m) {
        return Err(Error::Numerical("non-finite matrix entry".into()));
    }
    let dec = m
        .clone()
        .try_svd(true, true, SVD_EPS, SVD_MAX_ITER)
        .ok_or_else(|| Error::Numerical("singular value decomposition did not converge".into()))?;
    let (Some(u), Some(vt)) = (dec.u, dec.v_t) else {
        return Err(Error::Numerical(
            "singular value decomposition failed".into(),
        ));
    };
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| dec.singular_values[b].total_cmp(&dec.singular_values[a]));
    let s = order
        .iter()
        .map(|&i| dec.singular_values[i].max(0.0))
        .collect();
    let u_sorted = CMat::from_fn(r, k, |row, col| u[(row, order[col])]);
    let v_sorted = CMat::from_fn(c, k, |row, col| vt[(order[col], row)].conj());
    Ok((u_sorted, s, v_sorted))
}

/// Singular values in descending order. All NaN if the input has a
/// non-finite entry or the iteration does not converge.
pub fn singular_values(m: &CMat) -> Vec<f64> {
    let k = m.nrows().min(m.ncols());
    if k == 0 {
        return Vec::new();
    }
    let dec = if is_finite(m) {
        m.clone().try_svd(false, false, SVD_EPS, SVD_MAX_ITER)
    } else {
        None
    };
    let Some(dec) = dec else {
        return vec![f64::NAN; k];
    };
    let mut s: Vec<f64> = dec.singular_values.iter().map(|x| x.max(0.0)).collect();
    s.sort_by(|a, b| b.total_cmp(a));
    s
}

/// Sum of singular values.
pub fn nuclear_norm(m: &CMat) -> f64 {
    singular_values(m).iter().sum()
}

/// Extend a set of orthonormal columns to a full unitary basis of dimension
/// `dim`. The given columns are kept unchanged as the leading columns.
pub fn complete_columns(cols: &CMat, dim: usize) -> CMat {
    let k = cols.ncols();
    let mut out = CMat::zeros(dim, dim);
    out.columns_mut(0, k).copy_from(cols);
    let mut filled = k;
    let mut candidate = 0;
    while filled < dim && candidate < dim {
        let mut v = DVector::<C64>::zeros(dim);
        v[candidate] = C64::new(1.0, 0.0);
        candidate += 1;
        // Two passes of Gram-Schmidt keep the result orthogonal to roundoff.
        for _ in 0..2 {
            for c in 0..filled {
                let col = out.column(c);
                let proj = col.dotc(&v);
                v -= col * proj;
            }
        }
        let norm = v.norm();
        if norm > 1e-6 {
            out.set_column(filled, &(v / C64::new(norm, 0.0)));
            filled += 1;
        }
    }
    debug_assert_eq!(filled, dim);
    out
}

/// Orthonormal basis for the column span of `m`, using singular values
/// above `tol` times the largest one.
pub fn column_span(m: &CMat, tol: f64) -> Result<CMat> {
    let (u, s, _) = svd_thin(m)?;
    let top = s.first().copied().unwrap_or(0.0);
    let rank = s
        .iter()
        .filter(|&&x| top > 0.0 && x > tol * top.max(1.0))
        .count();
    Ok(u.columns(0, rank).into_owned())
}

/// Apply a real function to the spectrum of a Hermitian positive
/// semidefinite matrix. Eigenvalues below `-PSD_TOL` are rejected; the rest
/// below `floor` are treated as exactly zero.
pub(crate) fn psd_function(h: &CMat, floor: f64, f: impl Fn(f64) -> f64) -> Result<CMat> {
    let (vals, vecs) = eigh_unchecked(h);
    if let Some(&min) = vals.last() {
        if min < -PSD_TOL {
            return Err(Error::NotPsd(min));
        }
    }
    let n = h.nrows();
    let mut scaled = vecs.clone();
    for (c, &lam) in vals.iter().enumerate() {
        let fv = if lam <= floor { 0.0 } else { f(lam) };
        scaled.column_mut(c).scale_mut(fv);
    }
    let out = scaled * vecs.adjoint();
    debug_assert_eq!(out.nrows(), n);
    Ok(out)
}

/// Positive square root of a PSD matrix, computed spectrally.
pub fn sqrt_psd(h: &CMat) -> Result<CMat> {
    psd_function(h, 0.0, f64::sqrt)
}

/// `m = r^dagger q^dagger` where `q` (cols x s) has orthonormal columns.
/// Gives a compact handle on the row space of a wide matrix.
#[derive(Clone, Debug)]
pub struct RowFactor {
    pub q: CMat,
    pub r: CMat,
}

pub fn row_factor(m: &CMat) -> RowFactor {
    let qr = m.adjoint().qr();
    RowFactor {
        q: qr.q(),
        r: qr.r(),
    }
}

pub(crate) fn real_diag(values: &[f64]) -> CMat {
    DMatrix::from_diagonal(&DVector::from_iterator(
        values.len(),
        values.iter().map(|&v| C64::new(v, 0.0)),
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::random::{random_hermitian, random_matrix};
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn c(re: f64) -> C64 {
        C64::new(re, 0.0)
    }

    #[test]
    fn eigh_identity_and_pauli_x() {
        let (vals, _) = eigh(&CMat::identity(2, 2)).unwrap();
        assert_eq!(vals, vec![1.0, 1.0]);
        let x = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(1.0), c(0.0)]);
        let (vals, vecs) = eigh(&x).unwrap();
        assert!((vals[0] - 1.0).abs() < 1e-12 && (vals[1] + 1.0).abs() < 1e-12);
        let h = std::f64::consts::FRAC_1_SQRT_2;
        // |+> up to phase
        let plus = DVector::from_vec(vec![c(h), c(h)]);
        assert!((vecs.column(0).dotc(&plus).norm() - 1.0).abs() < 1e-12);
        let minus = DVector::from_vec(vec![c(h), c(-h)]);
        assert!((vecs.column(1).dotc(&minus).norm() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn eigh_rejects_non_hermitian() {
        let m = CMat::from_row_slice(2, 2, &[c(0.0), c(1.0), c(0.0), c(0.0)]);
        assert!(matches!(eigh(&m), Err(Error::NotHermitian(_))));
    }

    #[test]
    fn eigh_reconstructs_random_hermitian() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let h = random_hermitian(6, &mut rng);
        let (vals, vecs) = eigh(&h).unwrap();
        assert!(vals.windows(2).all(|w| w[0] >= w[1]));
        let rec = &vecs * real_diag(&vals) * vecs.adjoint();
        assert!((rec - &h).norm() <= 1e-8 * h.norm());
    }

    #[test]
    fn svd_examples() {
        let s = svd(&CMat::identity(3, 3)).unwrap();
        assert!(s.singular_values.iter().all(|&x| (x - 1.0).abs() < 1e-12));
        let d = CMat::from_row_slice(2, 2, &[c(3.0), c(0.0), c(0.0), c(0.0)]);
        let s = svd(&d).unwrap();
        assert!((s.singular_values[0] - 3.0).abs() < 1e-12);
        assert!(s.singular_values[1].abs() < 1e-12);
    }

    #[test]
    fn svd_reconstructs_rectangular() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        for (r, cc) in [(4, 3), (3, 4), (5, 1), (1, 5)] {
            let m = random_matrix(r, cc, &mut rng);
            let s = svd(&m).unwrap();
            assert!((s.reconstruct() - &m).norm() <= 1e-8 * m.norm());
            let eye_u = s.u.adjoint() * &s.u;
            let eye_v = s.v.adjoint() * &s.v;
            assert!((eye_u - CMat::identity(r, r)).norm() < 1e-9);
            assert!((eye_v - CMat::identity(cc, cc)).norm() < 1e-9);
            assert!(s.singular_values.windows(2).all(|w| w[0] >= w[1]));
        }
    }

    #[test]
    fn sqrt_psd_squares_back() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let a = random_matrix(5, 5, &mut rng);
        let h = &a * a.adjoint();
        let s = sqrt_psd(&h).unwrap();
        assert!((&s * &s - &h).norm() < 1e-9 * h.norm());
    }

    #[test]
    fn sqrt_psd_rejects_negative() {
        let m = real_diag(&[1.0, -0.1]);
        assert!(matches!(sqrt_psd(&m), Err(Error::NotPsd(_))));
    }

    #[test]
    fn completion_keeps_leading_columns() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = random_matrix(6, 2, &mut rng);
        let span = column_span(&m, 1e-12).unwrap();
        let full = complete_columns(&span, 6);
        assert!((full.columns(0, 2) - &span).norm() < 1e-15);
        assert!((full.adjoint() * &full - CMat::identity(6, 6)).norm() < 1e-10);
    }

    #[test]
    fn eigh_survives_sparse_block_pattern() {
        // a reduced state on which nalgebra's solver alone returns NaN
        let (a, b) = (0.03948975289013426, 0.2938435804431991);
        let mut h = CMat::zeros(27, 27);
        for (r, col, v) in [(0, 24, a), (1, 25, b)] {
            for (x, y) in [(r, r), (r, col), (col, r), (col, col)] {
                h[(x, y)] = c(v);
            }
        }
        h[(12, 12)] = c(a);
        h[(14, 14)] = c(b);
        let (vals, vecs) = eigh(&h).unwrap();
        assert!(vecs.iter().all(|z| z.re.is_finite() && z.im.is_finite()));
        assert!((vals[0] - 2.0 * b).abs() < 1e-14 && (vals[1] - b).abs() < 1e-14);
        let diag = CMat::from_diagonal(&DVector::from_iterator(27, vals.iter().map(|&v| c(v))));
        assert!((&vecs * diag * vecs.adjoint() - &h).norm() < 1e-14);
        let root = sqrt_psd(&h).unwrap();
        assert!((&root * &root - &h).norm() < 1e-14);
        assert!(nuclear_norm(&root).is_finite());
    }

    #[test]
    fn singular_values_flag_non_finite_input() {
        let mut m = CMat::identity(3, 3);
        m[(1, 2)] = c(f64::NAN);
        assert!(singular_values(&m).iter().all(|s| s.is_nan()));
        assert!(svd(&m).is_err());
    }
}
