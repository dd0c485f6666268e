//! Bob's EPR attack: cheat-unitary synthesis, the sequential
//! measure-rotate-measure attack, the partition attack, and the attack on the
//! two-sided XOR reduction.

mod cheat;
mod partition;
mod sequential;
mod two_sided;

pub use cheat::{
    compute_vj, per_i_overlaps, synthesize_cheat_unitary, verify_rotation, CheatUnitary,
};
pub(crate) use cheat::{synthesize_rotation, Rotation};
pub use partition::{
    partition_attack, PartitionBranch, PartitionOutcome, PartitionReport, SubsetResult,
};
pub use sequential::{
    sequential_attack, AttackReport, AttackSession, AttackStep, RecoveredValue, Transcript,
};
pub use two_sided::{two_sided_xor_attack, PairFidelity, TwoSidedReport};

use serde::Serialize;

use crate::error::{Error, Result};
use crate::protocol::validate_weights;

/// Amplitude weights of the dice superposition, optionally derived from a
/// partition of Alice's inputs into sets of equal total weight.
#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct AttackWeights {
    weights: Vec<f64>,
    partition: Option<Vec<Vec<usize>>>,
}

impl AttackWeights {
    pub fn uniform(n: usize) -> Self {
        AttackWeights {
            weights: vec![1.0 / n as f64; n],
            partition: None,
        }
    }

    pub fn new(weights: Vec<f64>) -> Result<Self> {
        validate_weights(&weights, weights.len())?;
        Ok(AttackWeights {
            weights,
            partition: None,
        })
    }

    /// Each set gets total weight `1/K`, spread uniformly inside the set;
    /// inputs outside every set get weight zero.
    pub fn partitioned(n: usize, sets: Vec<Vec<usize>>) -> Result<Self> {
        if sets.is_empty() {
            return Err(Error::InvalidWeights("empty partition".into()));
        }
        let mut seen = vec![false; n];
        for s in &sets {
            if s.is_empty() {
                return Err(Error::InvalidWeights("partition set is empty".into()));
            }
            for &i in s {
                if i >= n || seen[i] {
                    return Err(Error::InvalidWeights(format!(
                        "index {i} is out of range or in two sets"
                    )));
                }
                seen[i] = true;
            }
        }
        let k = sets.len() as f64;
        let mut weights = vec![0.0; n];
        for s in &sets {
            for &i in s {
                weights[i] = 1.0 / (k * s.len() as f64);
            }
        }
        Ok(AttackWeights {
            weights,
            partition: Some(sets),
        })
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn partition(&self) -> Option<&[Vec<usize>]> {
        self.partition.as_deref()
    }

    pub fn support(&self) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&i| self.weights[i] > 0.0)
            .collect()
    }

    /// Weights conditioned on `set`; uniform over `set` when it carries no
    /// weight. `None` when `set` is empty.
    pub fn restricted(&self, set: &[usize]) -> Option<Vec<f64>> {
        if set.is_empty() {
            return None;
        }
        let mass: f64 = set.iter().map(|&i| self.weights[i]).sum();
        let mut w = vec![0.0; self.weights.len()];
        for &i in set {
            w[i] = if mass > 0.0 {
                self.weights[i] / mass
            } else {
                1.0 / set.len() as f64
            };
        }
        Some(w)
    }
}
