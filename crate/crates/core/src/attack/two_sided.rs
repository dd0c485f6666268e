//! Bob's attack on the two-sided XOR construction: he entangles his pad with
//! a private dice, which turns the protocol into a one-sided computation of
//! `f` that Alice cannot tell apart from honest runs.

use serde::Serialize;

use super::{AttackReport, AttackSession, AttackWeights};
use crate::error::{Error, Result};
use crate::linalg::{re, CVec};
use crate::protocol::{alice_overlap, mutual_information, Protocol};
use crate::zoo::{with_entangled_pad, ALICE_OUT, PAD};

#[derive(Clone, Debug, Serialize)]
pub struct PairFidelity {
    pub j1: usize,
    pub j2: usize,
    pub fidelity: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct TwoSidedReport {
    /// Fidelity of Alice's EPR-attack reduced states across each pair of
    /// Bob inputs, with Bob's pad entangled.
    pub alice_fidelities: Vec<PairFidelity>,
    pub min_alice_fidelity: f64,
    /// One sequential attack over all `j` per Alice input.
    pub attacks: Vec<AttackReport>,
    pub success: bool,
    /// Largest, over Alice inputs, of the mutual information between Bob's
    /// input (uniform) and Alice's output when Bob is honest with a uniform
    /// pad.
    pub honest_alice_info_bits: f64,
}

pub fn two_sided_xor_attack(p2: &Protocol) -> Result<TwoSidedReport> {
    if p2.layout().position(PAD).is_err() || p2.layout().position(ALICE_OUT).is_err() {
        return Err(Error::InvalidProtocol(format!(
            "`{}` is not a two-sided XOR protocol",
            p2.name()
        )));
    }
    let view = with_entangled_pad(p2)?;
    let (n, m) = (p2.table().n(), p2.table().m());
    let uniform = vec![1.0 / n as f64; n];
    let mut alice_fidelities = Vec::new();
    for j1 in 0..m {
        for j2 in j1 + 1..m {
            alice_fidelities.push(PairFidelity {
                j1,
                j2,
                fidelity: alice_overlap(&view, j1, j2, &uniform)?,
            });
        }
    }
    let min_alice_fidelity = alice_fidelities
        .iter()
        .map(|f| f.fidelity)
        .fold(1.0, f64::min);

    let order: Vec<usize> = (0..m).collect();
    let all: Vec<usize> = (0..n).collect();
    let mut session = AttackSession::new(&view, &order, AttackWeights::uniform(n), true)?;
    let attacks = all
        .iter()
        .map(|&i| session.report(i, &all))
        .collect::<Result<Vec<_>>>()?;
    let success = attacks.iter().all(|a| a.success);

    let mut honest_alice_info_bits: f64 = 0.0;
    for i in 0..n {
        honest_alice_info_bits = honest_alice_info_bits.max(honest_alice_info(p2, i)?);
    }
    Ok(TwoSidedReport {
        alice_fidelities,
        min_alice_fidelity,
        attacks,
        success,
        honest_alice_info_bits,
    })
}

/// `I(J; alice_out)` for fixed `i`, with `J` uniform and an honest Bob who
/// draws his pad uniformly.
fn honest_alice_info(p2: &Protocol, i: usize) -> Result<f64> {
    let layout = p2.layout();
    let strides = layout.strides();
    let (pad_pos, out_pos) = (layout.position(PAD)?, layout.position(ALICE_OUT)?);
    let in_pos = layout.position(p2.bob_input_register())?;
    let pad_dim = layout.dim_of(PAD)?;
    let out_dim = layout.dim_of(ALICE_OUT)?;
    let m = p2.table().m();
    let alice = p2.alice_initial(i);
    let bob_dim = p2.bob_dim();
    let mut conditional = Vec::with_capacity(m);
    for j in 0..m {
        let mut dist = vec![0.0; out_dim];
        for r in 0..pad_dim {
            // Bob registers come last, so their global strides are also
            // their strides within Bob's space.
            let mut bob = CVec::zeros(bob_dim);
            bob[j * strides[in_pos] + r * strides[pad_pos]] = re(1.0);
            let mut v = alice.kronecker(&bob);
            p2.apply_circuit(&mut v);
            for (idx, amp) in v.iter().enumerate() {
                let prob = amp.norm_sqr();
                if prob > 0.0 {
                    dist[(idx / strides[out_pos]) % out_dim] += prob / pad_dim as f64;
                }
            }
        }
        conditional.push(dist);
    }
    mutual_information(&vec![1.0 / m as f64; m], &conditional)
}
