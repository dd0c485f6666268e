//! The sequential attack: measure `f(i, j_1)`, rotate to `j_2`, measure
//! again, and so on, all on one copy of the protocol output.

use std::collections::{BTreeMap, HashMap};
use std::rc::Rc;

use serde::Serialize;

use super::{synthesize_rotation, AttackWeights, Rotation};
use crate::error::{Error, Result};
use crate::linalg::{nuclear_norm, re, row_factor, CMat};
use crate::protocol::{
    build_f_measurement, channel_fidelity, mutual_information, Label, Measurement, Protocol,
};

/// Branches whose probability falls below this are dropped.
const PRUNE: f64 = 1e-14;

/// Probabilities closer than this count as a tie when decoding.
const TIE: f64 = 1e-12;

#[derive(Clone, Debug, Serialize)]
pub struct AttackStep {
    pub depth: usize,
    pub j: usize,
    /// Labels observed at earlier steps on this branch.
    pub history: Vec<Label>,
    pub label: Label,
    /// Probability of `label` given `history`.
    pub probability: f64,
    pub path_probability: f64,
    /// `F(rho_B, E(rho_B))` for Bob's state just before this measurement.
    pub disturbance_fidelity: f64,
    /// Overlap achieved by the rotation applied after this outcome.
    pub rotation_overlap: Option<f64>,
}

#[derive(Clone, Debug, Serialize, PartialEq)]
pub struct Transcript {
    pub labels: Vec<Label>,
    pub probability: f64,
}

#[derive(Clone, Debug, Serialize)]
pub struct RecoveredValue {
    pub j: usize,
    pub label: Label,
    /// Marginal probability of `label` at this step.
    pub probability: f64,
    pub expected: u32,
}

#[derive(Clone, Debug, Serialize)]
pub struct AttackReport {
    pub i: usize,
    pub j_order: Vec<usize>,
    pub outcome_conditioned: bool,
    pub steps: Vec<AttackStep>,
    pub transcripts: Vec<Transcript>,
    pub recovered_row: Vec<RecoveredValue>,
    pub success: bool,
    /// Probability that every measured label equals `f(i, j)`.
    pub success_probability: f64,
    /// Largest `min(q, 1 - q)` over the conditional step probabilities `q`.
    pub max_step_uncertainty: f64,
    pub min_disturbance_fidelity: f64,
    /// Mutual information in bits between Alice's input (uniform prior) and
    /// Bob's full transcript.
    pub info_bits: f64,
    pub delta: f64,
    pub epsilon: f64,
    pub tie_break: &'static str,
}

#[derive(Clone, Debug)]
struct Simulation {
    steps: Vec<AttackStep>,
    transcripts: Vec<Transcript>,
}

struct Branch {
    psi: CMat,
    prob: f64,
    labels: Vec<Label>,
    set: Vec<usize>,
}

/// Caches the measurements, honest outputs and rotations shared by attack
/// runs on one protocol with one input order.
pub struct AttackSession<'a> {
    protocol: &'a Protocol,
    j_order: Vec<usize>,
    weights: AttackWeights,
    conditioned: bool,
    honest: Vec<Option<Rc<Vec<CMat>>>>,
    measurements: Vec<Measurement>,
    rotations: HashMap<(usize, Vec<usize>), Rc<Rotation>>,
    simulations: HashMap<usize, Rc<Simulation>>,
    delta: Option<f64>,
    epsilon: Option<f64>,
}

impl<'a> AttackSession<'a> {
    pub fn new(
        protocol: &'a Protocol,
        j_order: &[usize],
        weights: AttackWeights,
        conditioned: bool,
    ) -> Result<Self> {
        let m = protocol.table().m();
        if j_order.is_empty() {
            return Err(Error::InvalidParameter("empty j order".into()));
        }
        for (k, &j) in j_order.iter().enumerate() {
            protocol.check_j(j)?;
            if j_order[..k].contains(&j) {
                return Err(Error::InvalidParameter(format!(
                    "j = {j} repeated in j order"
                )));
            }
        }
        if weights.weights().len() != protocol.table().n() {
            return Err(Error::InvalidWeights("weights do not match n".into()));
        }
        let measurements = j_order
            .iter()
            .map(|&j| build_f_measurement(protocol, j))
            .collect::<Result<Vec<_>>>()?;
        Ok(AttackSession {
            protocol,
            j_order: j_order.to_vec(),
            weights,
            conditioned,
            honest: vec![None; m],
            measurements,
            rotations: HashMap::new(),
            simulations: HashMap::new(),
            delta: None,
            epsilon: None,
        })
    }

    pub fn protocol(&self) -> &Protocol {
        self.protocol
    }

    pub fn j_order(&self) -> &[usize] {
        &self.j_order
    }

    pub fn measurement(&self, step: usize) -> &Measurement {
        &self.measurements[step]
    }

    /// Honest outputs `(Alice x Bob)` for every `i` at Bob input `j`.
    pub fn honest(&mut self, j: usize) -> Rc<Vec<CMat>> {
        if let Some(h) = &self.honest[j] {
            return h.clone();
        }
        let h = Rc::new(
            (0..self.protocol.table().n())
                .map(|i| self.protocol.honest_matrix(i, j))
                .collect::<Vec<_>>(),
        );
        self.honest[j] = Some(h.clone());
        h
    }

    fn epr(&mut self, j: usize, w: &[f64]) -> CMat {
        let h = self.honest(j);
        let (da, db) = (self.protocol.alice_dim(), self.protocol.bob_dim());
        let mut out = CMat::zeros(w.len() * da, db);
        for (i, &wi) in w.iter().enumerate() {
            if wi > 0.0 {
                out.rows_mut(i * da, da).copy_from(&(&h[i] * re(wi.sqrt())));
            }
        }
        out
    }

    fn rotation(&mut self, step: usize, set: &[usize]) -> Result<Rc<Rotation>> {
        let key = (step, set.to_vec());
        if let Some(r) = self.rotations.get(&key) {
            return Ok(r.clone());
        }
        let w = self
            .weights
            .restricted(set)
            .unwrap_or_else(|| self.weights.weights().to_vec());
        let m1 = self.epr(self.j_order[step], &w);
        let m2 = self.epr(self.j_order[step + 1], &w);
        let rot = Rc::new(synthesize_rotation(&m1, &m2)?);
        self.rotations.insert(key, rot.clone());
        Ok(rot)
    }

    fn simulate(&mut self, i: usize) -> Result<Rc<Simulation>> {
        if let Some(s) = self.simulations.get(&i) {
            return Ok(s.clone());
        }
        self.protocol.check_i(i)?;
        let table = self.protocol.table().clone();
        let support = self.weights.support();
        let first = self.honest(self.j_order[0])[i].clone();
        let mut frontier = vec![Branch {
            psi: first,
            prob: 1.0,
            labels: Vec::new(),
            set: support.clone(),
        }];
        let mut steps = Vec::new();
        let last = self.j_order.len() - 1;
        for k in 0..=last {
            let j = self.j_order[k];
            let mut next = Vec::new();
            for b in frontier {
                let meas = &self.measurements[k];
                let dist = channel_fidelity(meas, &(&b.psi / re(b.prob.sqrt())));
                let children: Vec<(Label, CMat)> = (0..meas.outcomes().len())
                    .map(|o| (meas.outcomes()[o].label, meas.apply_rows(o, &b.psi)))
                    .collect();
                for (label, mut psi) in children {
                    let q = psi.norm_squared();
                    if q <= PRUNE {
                        continue;
                    }
                    let set: Vec<usize> = match label {
                        Label::Value(c) => b
                            .set
                            .iter()
                            .copied()
                            .filter(|&x| table.get(x, j) == c)
                            .collect(),
                        Label::Reject => b.set.clone(),
                    };
                    let mut rotation_overlap = None;
                    if k < last {
                        let key = if self.conditioned && !set.is_empty() {
                            &set
                        } else {
                            &support
                        };
                        let rot = self.rotation(k, key)?;
                        rot.map.apply_rows(&mut psi);
                        rotation_overlap = Some(rot.achieved);
                    }
                    steps.push(AttackStep {
                        depth: k,
                        j,
                        history: b.labels.clone(),
                        label,
                        probability: q / b.prob,
                        path_probability: q,
                        disturbance_fidelity: dist,
                        rotation_overlap,
                    });
                    let mut labels = b.labels.clone();
                    labels.push(label);
                    next.push(Branch {
                        psi,
                        prob: q,
                        labels,
                        set,
                    });
                }
            }
            frontier = next;
        }
        let transcripts = frontier
            .into_iter()
            .map(|b| Transcript {
                labels: b.labels,
                probability: b.prob,
            })
            .collect();
        let sim = Rc::new(Simulation { steps, transcripts });
        self.simulations.insert(i, sim.clone());
        Ok(sim)
    }

    /// Outcome sequences and their probabilities for Alice's input `i`.
    pub fn transcripts(&mut self, i: usize) -> Result<Vec<Transcript>> {
        Ok(self.simulate(i)?.transcripts.clone())
    }

    /// Mutual information between a uniformly chosen input from `inputs`
    /// and Bob's transcript.
    pub fn info_bits(&mut self, inputs: &[usize]) -> Result<f64> {
        if inputs.is_empty() {
            return Ok(0.0);
        }
        let mut index: BTreeMap<Vec<Label>, usize> = BTreeMap::new();
        let mut rows = Vec::with_capacity(inputs.len());
        for &i in inputs {
            let sim = self.simulate(i)?;
            for t in &sim.transcripts {
                let next = index.len();
                index.entry(t.labels.clone()).or_insert(next);
            }
            rows.push(sim);
        }
        let conditional: Vec<Vec<f64>> = rows
            .iter()
            .map(|sim| {
                let mut row = vec![0.0; index.len()];
                for t in &sim.transcripts {
                    row[index[&t.labels]] += t.probability;
                }
                let total: f64 = row.iter().sum();
                row.iter().map(|x| x / total).collect()
            })
            .collect();
        let prior = vec![1.0 / inputs.len() as f64; inputs.len()];
        mutual_information(&prior, &conditional)
    }

    /// Delta of the protocol (uniform EPR attack), zero when `m = 1`.
    pub fn delta(&mut self) -> Result<f64> {
        if let Some(d) = self.delta {
            return Ok(d);
        }
        let (n, m) = (self.protocol.table().n(), self.protocol.table().m());
        let mut worst: f64 = 1.0;
        if m >= 2 {
            let w = vec![1.0 / n as f64; n];
            let factors: Vec<_> = (0..m).map(|j| row_factor(&self.epr(j, &w))).collect();
            for a in 0..m {
                for b in a + 1..m {
                    worst = worst.min(nuclear_norm(&(&factors[a].r * factors[b].r.adjoint())));
                }
            }
        }
        let d = (1.0 - worst).max(0.0);
        self.delta = Some(d);
        Ok(d)
    }

    /// Largest epsilon over the measured inputs `j`.
    pub fn epsilon(&mut self) -> f64 {
        if let Some(e) = self.epsilon {
            return e;
        }
        let mut worst: f64 = 1.0;
        for k in 0..self.j_order.len() {
            let h = self.honest(self.j_order[k]);
            for psi in h.iter() {
                worst = worst.min(channel_fidelity(&self.measurements[k], psi));
            }
        }
        let e = (1.0 - worst).max(0.0);
        self.epsilon = Some(e);
        e
    }

    /// Full report for input `i`, with mutual information taken over
    /// `info_inputs`.
    pub fn report(&mut self, i: usize, info_inputs: &[usize]) -> Result<AttackReport> {
        let sim = self.simulate(i)?;
        let table = self.protocol.table();
        let mut recovered_row = Vec::with_capacity(self.j_order.len());
        for (k, &j) in self.j_order.iter().enumerate() {
            let mut marginal: BTreeMap<Label, f64> = BTreeMap::new();
            for s in sim.steps.iter().filter(|s| s.depth == k) {
                *marginal.entry(s.label).or_insert(0.0) += s.path_probability;
            }
            let mut best = (Label::Reject, -1.0);
            for (&label, &prob) in &marginal {
                if prob > best.1 + TIE {
                    best = (label, prob);
                }
            }
            recovered_row.push(RecoveredValue {
                j,
                label: best.0,
                probability: best.1.max(0.0),
                expected: table.get(i, j),
            });
        }
        let success = recovered_row
            .iter()
            .all(|r| r.label == Label::Value(r.expected));
        let expected: Vec<Label> = self
            .j_order
            .iter()
            .map(|&j| Label::Value(table.get(i, j)))
            .collect();
        let success_probability = sim
            .transcripts
            .iter()
            .filter(|t| t.labels == expected)
            .map(|t| t.probability)
            .sum();
        let max_step_uncertainty = sim
            .steps
            .iter()
            .map(|s| s.probability.min(1.0 - s.probability).max(0.0))
            .fold(0.0, f64::max);
        let min_disturbance_fidelity = sim
            .steps
            .iter()
            .map(|s| s.disturbance_fidelity)
            .fold(1.0, f64::min);
        let info_bits = self.info_bits(info_inputs)?;
        let delta = self.delta()?;
        let epsilon = self.epsilon();
        Ok(AttackReport {
            i,
            j_order: self.j_order.clone(),
            outcome_conditioned: self.conditioned,
            steps: sim.steps.clone(),
            transcripts: sim.transcripts.clone(),
            recovered_row,
            success,
            success_probability,
            max_step_uncertainty,
            min_disturbance_fidelity,
            info_bits,
            delta,
            epsilon,
            tie_break: "smaller-label",
        })
    }
}

/// Run the outcome-conditioned sequential attack against honest Alice with
/// input `i`. `info_bits` is computed over all of Alice's inputs.
pub fn sequential_attack(
    p: &Protocol,
    i: usize,
    j_order: &[usize],
    w: &AttackWeights,
) -> Result<AttackReport> {
    let mut session = AttackSession::new(p, j_order, w.clone(), true)?;
    let all: Vec<usize> = (0..p.table().n()).collect();
    session.report(i, &all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::protocol::FunctionTable;
    use crate::zoo::{make_ideal_one_sided, make_oblivious_id, make_one_out_of_two_ot};

    #[test]
    fn ot_attack_recovers_both_messages() {
        let p = make_ideal_one_sided(&make_one_out_of_two_ot(1).unwrap()).unwrap();
        let w = AttackWeights::uniform(4);
        let r = sequential_attack(&p, 1, &[0, 1], &w).unwrap();
        assert!(r.success);
        assert!((r.success_probability - 1.0).abs() < 1e-9);
        assert_eq!(r.recovered_row[0].label, Label::Value(0));
        assert_eq!(r.recovered_row[1].label, Label::Value(1));
        assert!(r.max_step_uncertainty < 1e-9);
        assert!((r.info_bits - 2.0).abs() < 1e-9);
    }

    #[test]
    fn constant_function_gives_no_information() {
        let t = FunctionTable::new(3, 2, 2, vec![1; 6]).unwrap();
        let p = make_ideal_one_sided(&t).unwrap();
        let r = sequential_attack(&p, 2, &[1, 0], &AttackWeights::uniform(3)).unwrap();
        assert!(r.success);
        assert!(r.info_bits.abs() < 1e-9);
    }

    #[test]
    fn oblivious_id_four_identifies_password() {
        let p = make_ideal_one_sided(&make_oblivious_id(4).unwrap()).unwrap();
        let mut s = AttackSession::new(&p, &[0, 1, 2, 3], AttackWeights::uniform(4), true).unwrap();
        let all = [0, 1, 2, 3];
        for i in 0..4 {
            let r = s.report(i, &all).unwrap();
            assert!(r.success, "i = {i}");
            assert!((r.info_bits - 2.0).abs() < 1e-6);
            assert!(r.min_disturbance_fidelity > 1.0 - 1e-9);
        }
    }

    #[test]
    fn rejects_bad_orders() {
        let p = make_ideal_one_sided(&make_oblivious_id(2).unwrap()).unwrap();
        let w = AttackWeights::uniform(2);
        assert!(sequential_attack(&p, 0, &[], &w).is_err());
        assert!(sequential_attack(&p, 0, &[0, 0], &w).is_err());
        assert!(sequential_attack(&p, 0, &[2], &w).is_err());
        assert!(sequential_attack(&p, 5, &[0], &w).is_err());
    }
}
