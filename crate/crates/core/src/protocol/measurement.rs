//! Measurements on Bob's registers.

use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::linalg::{
    eigh_unchecked, hermitian_deviation, re, sqrt_psd, CMat, DensityMatrix, IDENTITY_TOL, PSD_TOL,
};

/// Outcome label: a value of `f` or the reject outcome.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Label {
    Value(u32),
    Reject,
}

impl Serialize for Label {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            Label::Value(v) => s.serialize_u32(*v),
            Label::Reject => s.serialize_str("reject"),
        }
    }
}

impl std::fmt::Display for Label {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            Label::Value(v) => write!(f, "{v}"),
            Label::Reject => f.write_str("reject"),
        }
    }
}

#[derive(Clone, Debug)]
pub struct Outcome {
    pub label: Label,
    pub operator: CMat,
    kraus: CMat,
    /// Orthonormal basis of the range for projective outcomes.
    basis: Option<CMat>,
}

impl Outcome {
    pub fn kraus(&self) -> &CMat {
        &self.kraus
    }

    pub fn is_projective(&self) -> bool {
        self.basis.is_some()
    }
}

/// A POVM with one Kraus operator (the positive square root) per outcome.
#[derive(Clone, Debug)]
pub struct Measurement {
    dim: usize,
    outcomes: Vec<Outcome>,
}

impl Measurement {
    /// Validates that each operator is PSD and that they sum to identity.
    pub fn new(outcomes: Vec<(Label, CMat)>) -> Result<Self> {
        let dim = outcomes
            .first()
            .map(|(_, m)| m.nrows())
            .ok_or_else(|| Error::InvalidMeasurement("no outcomes".into()))?;
        let mut total = CMat::zeros(dim, dim);
        let mut out = Vec::with_capacity(outcomes.len());
        for (label, op) in outcomes {
            if op.shape() != (dim, dim) {
                return Err(Error::DimensionMismatch {
                    expected: dim,
                    got: op.nrows(),
                });
            }
            let dev = hermitian_deviation(&op);
            if dev > PSD_TOL {
                return Err(Error::NotHermitian(dev));
            }
            let (vals, _) = eigh_unchecked(&op);
            if let Some(&min) = vals.last() {
                if min < -PSD_TOL {
                    return Err(Error::NotPsd(min));
                }
            }
            total += &op;
            let kraus = sqrt_psd(&op)?;
            out.push(Outcome {
                label,
                operator: op,
                kraus,
                basis: None,
            });
        }
        let dev = (total - CMat::identity(dim, dim)).norm();
        if dev > IDENTITY_TOL {
            return Err(Error::InvalidMeasurement(format!(
                "operators sum to identity only within {dev:e}"
            )));
        }
        Ok(Measurement { dim, outcomes: out })
    }

    /// Projective measurement from orthonormal bases of mutually orthogonal
    /// subspaces that together span the whole space.
    pub(crate) fn projective(dim: usize, parts: Vec<(Label, CMat)>) -> Self {
        let outcomes = parts
            .into_iter()
            .map(|(label, basis)| {
                let op = &basis * basis.adjoint();
                Outcome {
                    label,
                    kraus: op.clone(),
                    operator: op,
                    basis: Some(basis),
                }
            })
            .collect();
        Measurement { dim, outcomes }
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn outcomes(&self) -> &[Outcome] {
        &self.outcomes
    }

    pub fn labels(&self) -> Vec<Label> {
        self.outcomes.iter().map(|o| o.label).collect()
    }

    pub fn position(&self, label: Label) -> Option<usize> {
        self.outcomes.iter().position(|o| o.label == label)
    }

    /// `psi K^T` for the Kraus operator of outcome `k`, where the columns of
    /// `psi` index this measurement's space (a pure state reshaped as
    /// rest x measured).
    pub(crate) fn apply_rows(&self, k: usize, psi: &CMat) -> CMat {
        let o = &self.outcomes[k];
        match &o.basis {
            Some(q) => (psi * q.map(|z| z.conj())) * q.transpose(),
            None => psi * o.kraus.transpose(),
        }
    }
}

#[derive(Clone, Debug)]
pub struct MeasureResult {
    pub label: Label,
    pub probability: f64,
    /// `None` when the outcome has zero probability.
    pub post_state: Option<DensityMatrix>,
}

/// Outcome probabilities `Tr(E rho)` and post-states `K rho K^dagger / prob`.
pub fn measure(state: &DensityMatrix, meas: &Measurement) -> Result<Vec<MeasureResult>> {
    if state.dim() != meas.dim() {
        return Err(Error::DimensionMismatch {
            expected: meas.dim(),
            got: state.dim(),
        });
    }
    let rho = state.matrix();
    Ok(meas
        .outcomes
        .iter()
        .map(|o| {
            let probability = (&o.operator * rho).trace().re.max(0.0);
            let post_state = (probability > 1e-15).then(|| {
                let post = &o.kraus * rho * o.kraus.adjoint() / re(probability);
                DensityMatrix::from_unchecked((&post + post.adjoint()) * re(0.5))
            });
            MeasureResult {
                label: o.label,
                probability,
                post_state,
            }
        })
        .collect())
}

/// Pretty good measurement for the weighted ensemble: outcome `k` has
/// operator `S^{-1/2} w_k rho_k S^{-1/2}` with `S = sum_k w_k rho_k`; any
/// part of the space outside the support of `S` goes to a reject outcome.
pub fn build_pgm(states: &[(f64, DensityMatrix)]) -> Result<Measurement> {
    let dim = states
        .first()
        .map(|(_, r)| r.dim())
        .ok_or_else(|| Error::InvalidMeasurement("no states".into()))?;
    let total: f64 = states.iter().map(|(w, _)| w).sum();
    if states.iter().any(|(w, _)| !(*w >= 0.0)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidWeights(
            "weights must be nonnegative and sum to 1".into(),
        ));
    }
    let mut s = CMat::zeros(dim, dim);
    for (w, rho) in states {
        if rho.dim() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                got: rho.dim(),
            });
        }
        s += rho.matrix() * re(*w);
    }
    let (vals, vecs) = eigh_unchecked(&s);
    let top = vals.first().copied().unwrap_or(0.0);
    let mut inv_sqrt = CMat::zeros(dim, dim);
    let mut support = CMat::zeros(dim, dim);
    for (k, &lam) in vals.iter().enumerate() {
        if lam > 1e-12 * top.max(1e-300) {
            let v = vecs.column(k);
            inv_sqrt += v * v.adjoint() * re(1.0 / lam.sqrt());
            support += v * v.adjoint();
        }
    }
    let mut outcomes: Vec<(Label, CMat)> = states
        .iter()
        .enumerate()
        .map(|(k, (w, rho))| {
            let e = &inv_sqrt * rho.matrix() * &inv_sqrt * re(*w);
            (Label::Value(k as u32), (&e + e.adjoint()) * re(0.5))
        })
        .collect();
    let complement = CMat::identity(dim, dim) - support;
    if complement.trace().re > 0.5 {
        outcomes.push((Label::Reject, complement));
    }
    Measurement::new(outcomes)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::StateVector;
    use std::f64::consts::FRAC_1_SQRT_2 as H;

    fn computational() -> Measurement {
        let mut p0 = CMat::zeros(2, 2);
        p0[(0, 0)] = re(1.0);
        let mut p1 = CMat::zeros(2, 2);
        p1[(1, 1)] = re(1.0);
        Measurement::new(vec![(Label::Value(0), p0), (Label::Value(1), p1)]).unwrap()
    }

    #[test]
    fn plus_state_splits_evenly() {
        let plus = StateVector::from_reals(&[H, H]).unwrap().to_density();
        let r = measure(&plus, &computational()).unwrap();
        assert!((r[0].probability - 0.5).abs() < 1e-12 && (r[1].probability - 0.5).abs() < 1e-12);
    }

    #[test]
    fn eigenstate_is_undisturbed() {
        let one = StateVector::basis(2, 1).unwrap().to_density();
        let r = measure(&one, &computational()).unwrap();
        assert!(r[0].probability.abs() < 1e-15 && r[0].post_state.is_none());
        assert!((r[1].probability - 1.0).abs() < 1e-15);
        let post = r[1].post_state.as_ref().unwrap();
        assert!((post.matrix() - one.matrix()).norm() < 1e-15);
    }

    #[test]
    fn diagonal_state_probabilities() {
        let rho = DensityMatrix::from_reals_diag(&[0.7, 0.3]).unwrap();
        let r = measure(&rho, &computational()).unwrap();
        assert!((r[0].probability - 0.7).abs() < 1e-12);
        assert!((r[1].probability - 0.3).abs() < 1e-12);
    }

    #[test]
    fn incomplete_operators_rejected() {
        let mut p0 = CMat::zeros(2, 2);
        p0[(0, 0)] = re(1.0);
        assert!(Measurement::new(vec![(Label::Value(0), p0)]).is_err());
    }

    #[test]
    fn pgm_single_state_is_support_projector() {
        let psi = StateVector::from_reals(&[0.6, 0.8]).unwrap().to_density();
        let m = build_pgm(&[(1.0, psi.clone())]).unwrap();
        assert_eq!(m.labels(), vec![Label::Value(0), Label::Reject]);
        assert!((m.outcomes()[0].operator.clone() - psi.matrix()).norm() < 1e-10);
    }
}
