//! Bob-local unitaries that rotate the attack state for one input into the
//! attack state for another.

use super::AttackWeights;
use crate::error::{Error, Result};
use crate::layout::{Owner, Register, TensorLayout};
use crate::linalg::{
    nuclear_norm, row_factor, svd_thin, CMat, CVec, FrameMap, StateVector, UnitaryMatrix, C64,
};
use crate::protocol::{epr_matrix, Protocol};

/// The dice register used for Alice's EPR superposition.
pub const DICE: &str = "dice";

/// Rotation acting on Bob's space, kept in factored form.
#[derive(Clone, Debug)]
pub(crate) struct Rotation {
    pub map: FrameMap,
    pub achieved: f64,
}

/// Maximize `|<v2|(I (x) V)|v1>|` over unitaries `V` on Bob's space, where
/// `m1`, `m2` are the two states reshaped to (rest x Bob).
///
/// With `C = m2^dagger m1 = W S X^dagger` the optimum is `V = conj(W) X^T`,
/// i.e. `V conj(x_k) = conj(w_k)`, and the overlap is the trace of `S`.
/// Both factors are first compressed to their row spaces so the SVD is only
/// as large as the dice-and-Alice side.
pub(crate) fn synthesize_rotation(m1: &CMat, m2: &CMat) -> Result<Rotation> {
    let f1 = row_factor(m1);
    let f2 = row_factor(m2);
    let core = &f2.r * f1.r.adjoint();
    let (w, s, x) = svd_thin(&core)?;
    let w_full = &f2.q * w;
    let x_full = &f1.q * x;
    let map = FrameMap::new(&x_full.map(|z| z.conj()), &w_full.map(|z| z.conj()));
    Ok(Rotation {
        map,
        achieved: s.iter().sum(),
    })
}

/// Cheat unitary `U^{j_from, j_to}` on Bob's registers.
#[derive(Clone, Debug)]
pub struct CheatUnitary {
    pub matrix: UnitaryMatrix,
    pub j_from: usize,
    pub j_to: usize,
    pub achieved_overlap: f64,
}

impl CheatUnitary {
    /// `psi V^T`: the unitary applied to the Bob index of a (rest x Bob)
    /// matrix.
    pub fn apply_rows(&self, psi: &CMat) -> CMat {
        psi * self.matrix.matrix().transpose()
    }
}

fn attack_layout(p: &Protocol) -> Result<TensorLayout> {
    let mut regs = vec![Register::new(DICE, p.table().n(), Owner::Dice)];
    regs.extend(p.layout().registers().iter().cloned());
    TensorLayout::new(regs)
}

/// `|v_j> = sum_i sqrt(w_i) |i>_D (x) U(|i>_A |j, 0>_B)` on the layout
/// (dice, protocol registers...). Also returns that layout.
pub fn compute_vj(
    p: &Protocol,
    j: usize,
    w: &AttackWeights,
) -> Result<(StateVector, TensorLayout)> {
    let m = epr_matrix(p, j, w.weights())?;
    let (rows, cols) = m.shape();
    let v = CVec::from_fn(rows * cols, |k, _| m[(k / cols, k % cols)]);
    Ok((StateVector::normalized(v)?, attack_layout(p)?))
}

pub fn synthesize_cheat_unitary(
    p: &Protocol,
    j1: usize,
    j2: usize,
    w: &AttackWeights,
) -> Result<CheatUnitary> {
    if j1 == j2 {
        return Err(Error::InvalidParameter(
            "cheat unitary needs j1 != j2".into(),
        ));
    }
    let m1 = epr_matrix(p, j1, w.weights())?;
    let m2 = epr_matrix(p, j2, w.weights())?;
    let rot = synthesize_rotation(&m1, &m2)?;
    Ok(CheatUnitary {
        matrix: UnitaryMatrix::from_unchecked(rot.map.to_matrix()),
        j_from: j1,
        j_to: j2,
        achieved_overlap: rot.achieved,
    })
}

fn check_fits(u: &CheatUnitary, p: &Protocol) -> Result<()> {
    if u.matrix.dim() != p.bob_dim() {
        return Err(Error::DimensionMismatch {
            expected: p.bob_dim(),
            got: u.matrix.dim(),
        });
    }
    p.check_j(u.j_from)?;
    p.check_j(u.j_to)
}

/// Per-input fidelities `F(V rho^{i,j_from} V^dagger, rho^{i,j_to})` of Bob's
/// reduced states, for every input `i`.
pub fn verify_rotation(u: &CheatUnitary, p: &Protocol, _w: &AttackWeights) -> Result<Vec<f64>> {
    check_fits(u, p)?;
    let v_adj = u.matrix.matrix().adjoint();
    Ok((0..p.table().n())
        .map(|i| {
            let a = p.honest_matrix(i, u.j_from);
            let b = p.honest_matrix(i, u.j_to);
            // rho = A A^dagger with A = M^T; F = || (V A)^dagger B ||_*
            let core = a.map(|z| z.conj()) * (&v_adj * b.transpose());
            nuclear_norm(&core).min(1.0)
        })
        .collect())
}

/// `Re <v_{i,j_to}| (I (x) V) |v_{i,j_from}>` for every input `i`.
pub fn per_i_overlaps(u: &CheatUnitary, p: &Protocol) -> Result<Vec<f64>> {
    check_fits(u, p)?;
    Ok((0..p.table().n())
        .map(|i| {
            let a = u.apply_rows(&p.honest_matrix(i, u.j_from));
            let b = p.honest_matrix(i, u.j_to);
            b.iter()
                .zip(a.iter())
                .map(|(x, y)| x.conj() * y)
                .sum::<C64>()
                .re
        })
        .collect())
}
