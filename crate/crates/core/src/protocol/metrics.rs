//! Honest runs, reduced states, Bob's measurement of `f`, and the leakage
//! figures delta and epsilon.

use super::measurement::{Label, Measurement};
use super::{GateRole, Protocol};
use crate::error::{Error, Result};
use crate::linalg::{
    column_span, complete_columns, nuclear_norm, re, row_factor, singular_values, CMat,
    DensityMatrix, StateVector,
};

pub fn honest_run(p: &Protocol, i: usize, j: usize) -> Result<StateVector> {
    p.honest_state(i, j)
}

/// Bob's reduced state after an honest run: `Tr_A |v_ij><v_ij|`.
pub fn bob_reduced_state(p: &Protocol, i: usize, j: usize) -> Result<DensityMatrix> {
    p.check_i(i)?;
    p.check_j(j)?;
    let m = p.honest_matrix(i, j);
    Ok(DensityMatrix::from_unchecked(
        m.transpose() * m.map(|z| z.conj()),
    ))
}

pub fn validate_weights(weights: &[f64], n: usize) -> Result<()> {
    if weights.len() != n {
        return Err(Error::InvalidWeights(format!(
            "expected {n} weights, got {}",
            weights.len()
        )));
    }
    if weights.iter().any(|w| !(*w >= 0.0) || !w.is_finite()) {
        return Err(Error::InvalidWeights(
            "weights must be finite and nonnegative".into(),
        ));
    }
    let total: f64 = weights.iter().sum();
    if (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidWeights(format!("weights sum to {total}")));
    }
    Ok(())
}

/// The EPR-attack output `sum_i sqrt(w_i) |i>_D (x) U(|i>_A prep(j)_B)`
/// reshaped to a ((dice, Alice) x Bob) matrix.
pub fn epr_matrix(p: &Protocol, j: usize, weights: &[f64]) -> Result<CMat> {
    p.check_j(j)?;
    let n = p.table().n();
    validate_weights(weights, n)?;
    let (da, db) = (p.alice_dim(), p.bob_dim());
    let mut out = CMat::zeros(n * da, db);
    for (i, &w) in weights.iter().enumerate() {
        if w > 0.0 {
            let block = p.honest_matrix(i, j) * re(w.sqrt());
            out.rows_mut(i * da, da).copy_from(&block);
        }
    }
    Ok(out)
}

/// Reduced state on dice and Alice's registers under the EPR attack.
pub fn alice_epr_reduced_state(p: &Protocol, j: usize, weights: &[f64]) -> Result<DensityMatrix> {
    let m = epr_matrix(p, j, weights)?;
    Ok(DensityMatrix::from_unchecked(&m * m.adjoint()))
}

/// Fidelity of the Alice-side EPR reduced states for `j1` and `j2`.
pub fn alice_overlap(p: &Protocol, j1: usize, j2: usize, weights: &[f64]) -> Result<f64> {
    let a = row_factor(&epr_matrix(p, j1, weights)?);
    let b = row_factor(&epr_matrix(p, j2, weights)?);
    Ok(nuclear_norm(&(&a.r * b.r.adjoint())).min(1.0))
}

/// `1 - min F(rho^Alice_j1, rho^Alice_j2)` over all pairs, uniform weights.
pub fn delta_of(p: &Protocol) -> Result<f64> {
    let (n, m) = (p.table().n(), p.table().m());
    if m < 2 {
        return Err(Error::InvalidParameter(
            "delta needs at least two bob inputs".into(),
        ));
    }
    let w = vec![1.0 / n as f64; n];
    let factors = (0..m)
        .map(|j| epr_matrix(p, j, &w).map(|e| row_factor(&e)))
        .collect::<Result<Vec<_>>>()?;
    let mut worst: f64 = 1.0;
    for a in 0..m {
        for b in a + 1..m {
            let f = nuclear_norm(&(&factors[a].r * factors[b].r.adjoint()));
            worst = worst.min(f);
        }
    }
    Ok((1.0 - worst).max(0.0))
}

/// Projective measurement of `f(., j)` on Bob's registers, built from the
/// supports of his honest states in the protocol with output blur removed.
/// Values appear in ascending order, followed by a reject outcome when the
/// supports do not span Bob's space.
pub fn build_f_measurement(p: &Protocol, j: usize) -> Result<Measurement> {
    p.check_j(j)?;
    let reference = if p.has_role(GateRole::Blur) {
        p.without_role(GateRole::Blur)
    } else {
        p.clone()
    };
    let t = p.table();
    let db = p.bob_dim();
    let mut values: Vec<u32> = (0..t.n()).map(|i| t.get(i, j)).collect();
    values.sort_unstable();
    values.dedup();
    let mut parts: Vec<(Label, CMat)> = Vec::with_capacity(values.len() + 1);
    for &c in &values {
        let cols: Vec<CMat> = (0..t.n())
            .filter(|&i| t.get(i, j) == c)
            .map(|i| reference.honest_matrix(i, j).transpose())
            .collect();
        let stacked = CMat::from_columns(
            &cols
                .iter()
                .flat_map(|m| m.column_iter().map(|c| c.into_owned()))
                .collect::<Vec<_>>(),
        );
        parts.push((Label::Value(c), column_span(&stacked, 1e-10)?));
    }
    for a in 0..parts.len() {
        for b in a + 1..parts.len() {
            let s = singular_values(&(parts[a].1.adjoint() * &parts[b].1));
            let top = s.first().copied().unwrap_or(0.0);
            if top > 1e-8 {
                return Err(Error::OverlappingSupports(top));
            }
        }
    }
    let used: usize = parts.iter().map(|(_, q)| q.ncols()).sum();
    if used < db {
        let all = CMat::from_columns(
            &parts
                .iter()
                .flat_map(|(_, q)| q.column_iter().map(|c| c.into_owned()))
                .collect::<Vec<_>>(),
        );
        let full = if used == 0 {
            CMat::identity(db, db)
        } else {
            complete_columns(&all, db)
        };
        parts.push((Label::Reject, full.columns(used, db - used).into_owned()));
    }
    Ok(Measurement::projective(db, parts))
}

/// `F(rho_B, E(rho_B))` where `rho_B` is Bob's reduced state of the pure
/// state `psi` (rest x Bob, unit Frobenius norm) and `E` is the
/// non-selective channel of `meas`.
pub fn channel_fidelity(meas: &Measurement, psi: &CMat) -> f64 {
    // With A = psi^T, rho = A A^dagger and E(rho) = B B^dagger for
    // B = [K_1 A | K_2 A | ...]; the fidelity is the nuclear norm of A^dagger B.
    let conj = psi.map(|z| z.conj());
    let blocks: Vec<CMat> = (0..meas.outcomes().len())
        .map(|k| &conj * meas.apply_rows(k, psi).transpose())
        .collect();
    let rows = psi.nrows();
    let mut joined = CMat::zeros(rows, rows * blocks.len());
    for (k, b) in blocks.iter().enumerate() {
        joined.columns_mut(k * rows, rows).copy_from(b);
    }
    nuclear_norm(&joined).min(1.0)
}

/// `1 - min_i F(rho^{i,j}, E(rho^{i,j}))` for Bob's measurement of `f(., j)`.
pub fn epsilon_of(p: &Protocol, j: usize) -> Result<f64> {
    let meas = build_f_measurement(p, j)?;
    let worst = (0..p.table().n())
        .map(|i| channel_fidelity(&meas, &p.honest_matrix(i, j)))
        .fold(1.0, f64::min);
    Ok((1.0 - worst).max(0.0))
}

/// Largest epsilon over all of Bob's inputs.
pub fn epsilon_max(p: &Protocol) -> Result<f64> {
    let mut worst: f64 = 0.0;
    for j in 0..p.table().m() {
        worst = worst.max(epsilon_of(p, j)?);
    }
    Ok(worst)
}

fn check_distribution(d: &[f64], what: &str) -> Result<()> {
    let total: f64 = d.iter().sum();
    if d.iter().any(|x| !(*x >= -1e-12)) || (total - 1.0).abs() > 1e-9 {
        return Err(Error::InvalidDistribution(format!(
            "{what} sums to {total}"
        )));
    }
    Ok(())
}

fn entropy(d: impl Iterator<Item = f64>) -> f64 {
    d.filter(|&x| x > 0.0).map(|x| -x * x.log2()).sum()
}

/// `I(I; O) = H(O) - sum_i p(i) H(O | i)` in bits.
pub fn mutual_information(prior: &[f64], conditional: &[Vec<f64>]) -> Result<f64> {
    check_distribution(prior, "prior")?;
    if conditional.len() != prior.len() {
        return Err(Error::InvalidDistribution(
            "one conditional distribution per input required".into(),
        ));
    }
    let width = conditional.first().map_or(0, |c| c.len());
    for c in conditional {
        if c.len() != width {
            return Err(Error::InvalidDistribution(
                "ragged conditional table".into(),
            ));
        }
        check_distribution(c, "conditional")?;
    }
    let marginal = (0..width).map(|o| {
        prior
            .iter()
            .zip(conditional)
            .map(|(p, c)| p * c[o])
            .sum::<f64>()
    });
    let h_out = entropy(marginal);
    let h_cond: f64 = prior
        .iter()
        .zip(conditional)
        .map(|(p, c)| p * entropy(c.iter().copied()))
        .sum();
    Ok((h_out - h_cond).max(0.0))
}
