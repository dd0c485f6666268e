//! The partition attack for atypical functions: after learning `f(i, j1)`,
//! Bob splits the consistent inputs by their `f(i, j2)` value and rotates
//! with the attack state that weights each subset equally.

use std::collections::BTreeMap;

use serde::Serialize;

use super::{synthesize_rotation, AttackWeights};
use crate::error::{Error, Result};
use crate::linalg::{re, CMat};
use crate::protocol::{build_f_measurement, epr_matrix, Label, Protocol};

#[derive(Clone, Debug, Serialize)]
pub struct SubsetResult {
    /// `f(i, j2)` shared by the subset.
    pub value: u32,
    pub inputs: Vec<usize>,
    /// Probability, averaged over the subset, that the `j2` measurement
    /// names this subset given outcome `c` at `j1`.
    pub probability: f64,
}

#[derive(Clone, Debug, Serialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PartitionOutcome {
    /// `f(., j2)` is constant on the branch; the second value is already
    /// known.
    NoGain { value: u32 },
    Discrimination {
        subsets: Vec<SubsetResult>,
        /// Mean of the per-subset probabilities.
        probability: f64,
        /// Smallest per-input probability.
        worst_case: f64,
        achieved_overlap: f64,
    },
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionBranch {
    /// Observed `f(i, j1)`.
    pub value: u32,
    pub inputs: Vec<usize>,
    pub outcome: PartitionOutcome,
}

#[derive(Clone, Debug, Serialize)]
pub struct PartitionReport {
    pub j1: usize,
    pub j2: usize,
    pub branches: Vec<PartitionBranch>,
}

impl PartitionReport {
    /// Smallest mean discrimination probability over branches that have
    /// something to gain; `None` if there are none.
    pub fn min_probability(&self) -> Option<f64> {
        self.branches
            .iter()
            .filter_map(|b| match &b.outcome {
                PartitionOutcome::Discrimination { probability, .. } => Some(*probability),
                PartitionOutcome::NoGain { .. } => None,
            })
            .reduce(f64::min)
    }
}

pub fn partition_attack(p: &Protocol, j1: usize, j2: usize) -> Result<PartitionReport> {
    let t = p.table();
    if t.m() < 2 {
        return Err(Error::InvalidParameter(
            "partition attack needs m >= 2".into(),
        ));
    }
    p.check_j(j1)?;
    p.check_j(j2)?;
    if j1 == j2 {
        return Err(Error::InvalidParameter(
            "partition attack needs j1 != j2".into(),
        ));
    }
    let meas1 = build_f_measurement(p, j1)?;
    let meas2 = build_f_measurement(p, j2)?;
    let mut by_value: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
    for i in 0..t.n() {
        by_value.entry(t.get(i, j1)).or_default().push(i);
    }
    let mut branches = Vec::with_capacity(by_value.len());
    for (c, set) in by_value {
        let mut subsets: BTreeMap<u32, Vec<usize>> = BTreeMap::new();
        for &i in &set {
            subsets.entry(t.get(i, j2)).or_default().push(i);
        }
        if subsets.len() == 1 {
            let value = *subsets.keys().next().expect("nonempty branch");
            branches.push(PartitionBranch {
                value: c,
                inputs: set,
                outcome: PartitionOutcome::NoGain { value },
            });
            continue;
        }
        let w = AttackWeights::partitioned(t.n(), subsets.values().cloned().collect())?;
        let rot = synthesize_rotation(
            &epr_matrix(p, j1, w.weights())?,
            &epr_matrix(p, j2, w.weights())?,
        )?;
        let first = meas1.position(Label::Value(c));
        let mut worst: f64 = 1.0;
        let mut results = Vec::with_capacity(subsets.len());
        for (value, inputs) in subsets {
            let target = meas2.position(Label::Value(value));
            let mut total = 0.0;
            for &i in &inputs {
                let q = match (first, target) {
                    (Some(a), Some(b)) => {
                        let mut psi: CMat = meas1.apply_rows(a, &p.honest_matrix(i, j1));
                        let norm = psi.norm();
                        if norm <= 1e-12 {
                            0.0
                        } else {
                            psi /= re(norm);
                            rot.map.apply_rows(&mut psi);
                            meas2.apply_rows(b, &psi).norm_squared()
                        }
                    }
                    _ => 0.0,
                };
                worst = worst.min(q);
                total += q;
            }
            results.push(SubsetResult {
                value,
                probability: total / inputs.len() as f64,
                inputs,
            });
        }
        let probability = results.iter().map(|s| s.probability).sum::<f64>() / results.len() as f64;
        branches.push(PartitionBranch {
            value: c,
            inputs: set,
            outcome: PartitionOutcome::Discrimination {
                subsets: results,
                probability,
                worst_case: worst,
                achieved_overlap: rot.achieved,
            },
        });
    }
    Ok(PartitionReport { j1, j2, branches })
}
