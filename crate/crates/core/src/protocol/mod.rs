//! Two-party computations described as one global unitary over named
//! registers.
//!
//! The unitary is stored as a register-level circuit and applied to state
//! vectors directly; `Protocol::unitary` materializes the dense matrix when
//! it is actually needed.

mod measurement;
mod metrics;

pub use measurement::{build_pgm, measure, Label, MeasureResult, Measurement, Outcome};
pub use metrics::{
    alice_epr_reduced_state, alice_overlap, bob_reduced_state, build_f_measurement,
    channel_fidelity, delta_of, epr_matrix, epsilon_max, epsilon_of, honest_run,
    mutual_information, validate_weights,
};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{Owner, TensorLayout};
use crate::linalg::{re, CMat, CVec, StateVector, UnitaryMatrix, IDENTITY_TOL};

/// The prescribed function `f(i, j)` as an `n x m` table over `{0..p}`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct FunctionTable {
    n: usize,
    m: usize,
    p: usize,
    values: Vec<u32>,
}

impl FunctionTable {
    /// `values` is row-major: `values[i * m + j] = f(i, j)`.
    pub fn new(n: usize, m: usize, p: usize, values: Vec<u32>) -> Result<Self> {
        if n == 0 || m == 0 || p == 0 {
            return Err(Error::InvalidTable("n, m and p must be at least 1".into()));
        }
        if values.len() != n * m {
            return Err(Error::InvalidTable(format!(
                "expected {} entries, got {}",
                n * m,
                values.len()
            )));
        }
        if let Some(v) = values.iter().find(|&&v| v as usize >= p) {
            return Err(Error::InvalidTable(format!(
                "entry {v} is not below p = {p}"
            )));
        }
        Ok(FunctionTable { n, m, p, values })
    }

    pub fn from_rows(p: usize, rows: &[Vec<u32>]) -> Result<Self> {
        let m = rows.first().map_or(0, |r| r.len());
        if rows.iter().any(|r| r.len() != m) {
            return Err(Error::InvalidTable("ragged rows".into()));
        }
        Self::new(rows.len(), m, p, rows.concat())
    }

    pub fn n(&self) -> usize {
        self.n
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn p(&self) -> usize {
        self.p
    }

    pub fn values(&self) -> &[u32] {
        &self.values
    }

    pub fn get(&self, i: usize, j: usize) -> u32 {
        self.values[i * self.m + j]
    }

    pub fn row(&self, i: usize) -> &[u32] {
        &self.values[i * self.m..(i + 1) * self.m]
    }

    /// Class index (in order of first appearance) of each row, and the
    /// number of distinct rows.
    pub fn row_classes(&self) -> (Vec<usize>, usize) {
        let mut reps: Vec<usize> = Vec::new();
        let mut class = Vec::with_capacity(self.n);
        for i in 0..self.n {
            match reps.iter().position(|&r| self.row(r) == self.row(i)) {
                Some(k) => class.push(k),
                None => {
                    class.push(reps.len());
                    reps.push(i);
                }
            }
        }
        let count = reps.len();
        (class, count)
    }

    /// True when some column groups together inputs whose rows differ.
    /// Bob's honest state must then carry the row class for his input to
    /// stay hidden from Alice.
    pub fn needs_row_register(&self) -> bool {
        for j in 0..self.m {
            for a in 0..self.n {
                for b in a + 1..self.n {
                    if self.get(a, j) == self.get(b, j) && self.row(a) != self.row(b) {
                        return true;
                    }
                }
            }
        }
        false
    }
}

/// Noise angles in radians.
#[derive(Clone, Copy, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NoiseParams {
    pub theta_leak: f64,
    pub theta_meas: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum GateRole {
    Computation,
    Leak,
    Blur,
}

#[derive(Clone, Debug, PartialEq)]
pub enum GateOp {
    /// `target += amounts[c] (mod dim)` where `c` is the joint value of the
    /// control registers (row-major in the listed order).
    Shift {
        target: String,
        controls: Vec<String>,
        amounts: Vec<usize>,
    },
    /// Applies `blocks[c]` to the joint space of `targets` (row-major in the
    /// listed order) when the controls hold `c`; `None` means identity.
    Controlled {
        targets: Vec<String>,
        controls: Vec<String>,
        blocks: Vec<Option<CMat>>,
    },
}

#[derive(Clone, Debug, PartialEq)]
pub struct Gate {
    pub role: GateRole,
    pub op: GateOp,
}

#[derive(Clone, Debug)]
enum Compiled {
    Permutation(Vec<usize>),
    Blocks {
        target_offsets: Vec<usize>,
        work: Vec<(usize, usize)>,
        blocks: Vec<CMat>,
    },
}

/// How Bob prepares his registers for input `j`.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum BobPreparation {
    /// `|j> (x) |0...0>`
    Basis,
    /// `|j> (x) p^{-1/2} sum_r |r>_pad |r>_dice`, with every other Bob
    /// register in `|0>`.
    PadEntangled { pad: String, dice: String },
}

#[derive(Clone, Debug)]
pub struct Protocol {
    name: String,
    layout: TensorLayout,
    table: FunctionTable,
    gates: Vec<Gate>,
    compiled: Vec<Compiled>,
    alice_input: String,
    bob_input: String,
    bob_output: String,
    preparation: BobPreparation,
    noise: NoiseParams,
}

impl Protocol {
    /// `layout` must list all Alice registers before all Bob registers and
    /// contain no dice.
    pub fn new(
        name: impl Into<String>,
        layout: TensorLayout,
        table: FunctionTable,
        gates: Vec<Gate>,
        alice_input: &str,
        bob_input: &str,
        bob_output: &str,
    ) -> Result<Self> {
        let regs = layout.registers();
        if regs.iter().any(|r| r.owner == Owner::Dice) {
            return Err(Error::InvalidProtocol(
                "protocol layout holds a dice register".into(),
            ));
        }
        let first_bob = regs.iter().position(|r| r.owner == Owner::Bob).unwrap_or(0);
        if regs[first_bob..].iter().any(|r| r.owner != Owner::Bob) {
            return Err(Error::InvalidProtocol(
                "alice registers must precede bob registers".into(),
            ));
        }
        let check = |name: &str, owner: Owner, min: usize, what: &str| -> Result<()> {
            let r = &regs[layout.position(name)?];
            if r.owner != owner {
                return Err(Error::InvalidProtocol(format!(
                    "{what} `{name}` has the wrong owner"
                )));
            }
            if r.dim < min {
                return Err(Error::InvalidProtocol(format!(
                    "{what} `{name}` has dim {} < {min}",
                    r.dim
                )));
            }
            Ok(())
        };
        check(alice_input, Owner::Alice, table.n(), "alice input")?;
        check(bob_input, Owner::Bob, table.m(), "bob input")?;
        check(bob_output, Owner::Bob, table.p(), "bob output")?;
        let compiled = gates
            .iter()
            .map(|g| compile(&layout, g))
            .collect::<Result<Vec<_>>>()?;
        Ok(Protocol {
            name: name.into(),
            layout,
            table,
            gates,
            compiled,
            alice_input: alice_input.to_string(),
            bob_input: bob_input.to_string(),
            bob_output: bob_output.to_string(),
            preparation: BobPreparation::Basis,
            noise: NoiseParams::default(),
        })
    }

    pub fn with_noise_params(mut self, noise: NoiseParams) -> Self {
        self.noise = noise;
        self
    }

    pub fn with_name(mut self, name: impl Into<String>) -> Self {
        self.name = name.into();
        self
    }

    pub fn with_preparation(mut self, preparation: BobPreparation) -> Result<Self> {
        if let BobPreparation::PadEntangled { pad, dice } = &preparation {
            let regs = self.layout.registers();
            let (rp, rd) = (
                &regs[self.layout.position(pad)?],
                &regs[self.layout.position(dice)?],
            );
            if rp.owner != Owner::Bob || rd.owner != Owner::Bob || rp.dim != rd.dim || pad == dice {
                return Err(Error::InvalidProtocol(
                    "pad and dice must be distinct bob registers of equal dim".into(),
                ));
            }
            if pad == &self.bob_input || dice == &self.bob_input {
                return Err(Error::InvalidProtocol(
                    "pad overlaps the input register".into(),
                ));
            }
        }
        self.preparation = preparation;
        Ok(self)
    }

    /// Same protocol with every gate of `role` removed.
    pub fn without_role(&self, role: GateRole) -> Protocol {
        let mut out = self.clone();
        let keep: Vec<bool> = self.gates.iter().map(|g| g.role != role).collect();
        out.gates = self
            .gates
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(g, _)| g.clone())
            .collect();
        out.compiled = self
            .compiled
            .iter()
            .zip(&keep)
            .filter(|(_, &k)| k)
            .map(|(c, _)| c.clone())
            .collect();
        out
    }

    pub fn has_role(&self, role: GateRole) -> bool {
        self.gates.iter().any(|g| g.role == role)
    }

    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn layout(&self) -> &TensorLayout {
        &self.layout
    }

    pub fn table(&self) -> &FunctionTable {
        &self.table
    }

    pub fn gates(&self) -> &[Gate] {
        &self.gates
    }

    pub fn noise(&self) -> NoiseParams {
        self.noise
    }

    pub fn preparation(&self) -> &BobPreparation {
        &self.preparation
    }

    pub fn alice_input_register(&self) -> &str {
        &self.alice_input
    }

    pub fn bob_input_register(&self) -> &str {
        &self.bob_input
    }

    pub fn bob_output_register(&self) -> &str {
        &self.bob_output
    }

    pub fn dim(&self) -> usize {
        self.layout.total_dim()
    }

    pub fn alice_dim(&self) -> usize {
        self.layout.dim_owned_by(Owner::Alice)
    }

    pub fn bob_dim(&self) -> usize {
        self.layout.dim_owned_by(Owner::Bob)
    }

    pub(crate) fn check_i(&self, i: usize) -> Result<()> {
        if i >= self.table.n() {
            return Err(Error::IndexOutOfRange {
                what: "alice input",
                index: i,
                size: self.table.n(),
            });
        }
        Ok(())
    }

    pub(crate) fn check_j(&self, j: usize) -> Result<()> {
        if j >= self.table.m() {
            return Err(Error::IndexOutOfRange {
                what: "bob input",
                index: j,
                size: self.table.m(),
            });
        }
        Ok(())
    }

    fn stride(&self, name: &str) -> usize {
        let pos = self.layout.position(name).expect("validated register");
        self.layout.strides()[pos]
    }

    /// Alice's honest start state `|i> (x) |0...0>` on her registers.
    pub fn alice_initial(&self, i: usize) -> CVec {
        let mut v = CVec::zeros(self.alice_dim());
        v[i * self.stride(&self.alice_input) / self.bob_dim()] = re(1.0);
        v
    }

    /// Bob's start state for input `j` on his registers.
    pub fn bob_initial(&self, j: usize) -> CVec {
        let mut v = CVec::zeros(self.bob_dim());
        let base = j * self.stride(&self.bob_input);
        match &self.preparation {
            BobPreparation::Basis => v[base] = re(1.0),
            BobPreparation::PadEntangled { pad, dice } => {
                let dim = self.layout.dim_of(pad).expect("validated register");
                let (sp, sd) = (self.stride(pad), self.stride(dice));
                let amp = re(1.0 / (dim as f64).sqrt());
                for r in 0..dim {
                    v[base + r * (sp + sd)] = amp;
                }
            }
        }
        v
    }

    /// Apply the protocol's unitary in place.
    pub fn apply_circuit(&self, v: &mut CVec) {
        for c in &self.compiled {
            match c {
                Compiled::Permutation(perm) => {
                    let old = v.clone();
                    for (k, &to) in perm.iter().enumerate() {
                        v[to] = old[k];
                    }
                }
                Compiled::Blocks {
                    target_offsets,
                    work,
                    blocks,
                } => {
                    let mut x = CVec::zeros(target_offsets.len());
                    for &(t, b) in work {
                        for (a, &o) in target_offsets.iter().enumerate() {
                            x[a] = v[o + t];
                        }
                        let y = &blocks[b] * &x;
                        for (a, &o) in target_offsets.iter().enumerate() {
                            v[o + t] = y[a];
                        }
                    }
                }
            }
        }
    }

    /// `U (|i>_A (x) prep(j)_B)` as a flat vector.
    pub fn honest_vector(&self, i: usize, j: usize) -> CVec {
        let mut v = self.alice_initial(i).kronecker(&self.bob_initial(j));
        self.apply_circuit(&mut v);
        v
    }

    /// The honest output reshaped to an (Alice x Bob) matrix.
    pub fn honest_matrix(&self, i: usize, j: usize) -> CMat {
        let v = self.honest_vector(i, j);
        let db = self.bob_dim();
        CMat::from_fn(self.alice_dim(), db, |a, b| v[a * db + b])
    }

    pub fn honest_state(&self, i: usize, j: usize) -> Result<StateVector> {
        self.check_i(i)?;
        self.check_j(j)?;
        StateVector::new(self.honest_vector(i, j))
    }

    /// Dense matrix of the global unitary.
    pub fn unitary(&self) -> Result<UnitaryMatrix> {
        let d = self.dim();
        let mut m = CMat::zeros(d, d);
        for k in 0..d {
            let mut e = CVec::zeros(d);
            e[k] = re(1.0);
            self.apply_circuit(&mut e);
            m.set_column(k, &e);
        }
        UnitaryMatrix::new(m)
    }
}

fn control_value(digits: &[usize], controls: &[usize], layout: &TensorLayout) -> usize {
    controls
        .iter()
        .fold(0, |acc, &c| acc * layout.registers()[c].dim + digits[c])
}

fn compile(layout: &TensorLayout, gate: &Gate) -> Result<Compiled> {
    let regs = layout.registers();
    let positions = |names: &[String]| -> Result<Vec<usize>> {
        names.iter().map(|n| layout.position(n)).collect()
    };
    let cdim = |pos: &[usize]| pos.iter().map(|&p| regs[p].dim).product::<usize>();
    match &gate.op {
        GateOp::Shift {
            target,
            controls,
            amounts,
        } => {
            let t = layout.position(target)?;
            let cs = positions(controls)?;
            if cs.contains(&t) {
                return Err(Error::InvalidProtocol(
                    "shift target is also a control".into(),
                ));
            }
            if amounts.len() != cdim(&cs) {
                return Err(Error::InvalidProtocol(format!(
                    "shift on `{target}` has {} amounts for {} control values",
                    amounts.len(),
                    cdim(&cs)
                )));
            }
            let dim = regs[t].dim;
            let stride = layout.strides()[t];
            let perm = (0..layout.total_dim())
                .map(|idx| {
                    let digits = layout.digits_of(idx);
                    let shift = amounts[control_value(&digits, &cs, layout)];
                    let new = (digits[t] + shift) % dim;
                    idx - digits[t] * stride + new * stride
                })
                .collect();
            Ok(Compiled::Permutation(perm))
        }
        GateOp::Controlled {
            targets,
            controls,
            blocks,
        } => {
            let ts = positions(targets)?;
            let cs = positions(controls)?;
            if ts.is_empty() || cs.iter().any(|c| ts.contains(c)) {
                return Err(Error::InvalidProtocol(
                    "bad controlled-gate registers".into(),
                ));
            }
            for (k, &t) in ts.iter().enumerate() {
                if ts[..k].contains(&t) {
                    return Err(Error::InvalidProtocol("repeated target register".into()));
                }
            }
            if blocks.len() != cdim(&cs) {
                return Err(Error::InvalidProtocol(
                    "block count does not match controls".into(),
                ));
            }
            let tdim = cdim(&ts);
            let mut stored = Vec::new();
            let mut index_of_block = Vec::with_capacity(blocks.len());
            for b in blocks {
                match b {
                    None => index_of_block.push(None),
                    Some(m) => {
                        if m.shape() != (tdim, tdim) {
                            return Err(Error::DimensionMismatch {
                                expected: tdim,
                                got: m.nrows(),
                            });
                        }
                        let dev = (m.adjoint() * m - CMat::identity(tdim, tdim)).norm();
                        if dev > IDENTITY_TOL {
                            return Err(Error::NotUnitary(dev));
                        }
                        index_of_block.push(Some(stored.len()));
                        stored.push(m.clone());
                    }
                }
            }
            let (target_offsets, rest) = {
                let rest_pos: Vec<usize> = (0..regs.len()).filter(|p| !ts.contains(p)).collect();
                (layout.offsets(&ts), layout.offsets(&rest_pos))
            };
            let work = rest
                .into_iter()
                .filter_map(|t| {
                    let digits = layout.digits_of(t);
                    index_of_block[control_value(&digits, &cs, layout)].map(|b| (t, b))
                })
                .collect();
            Ok(Compiled::Blocks {
                target_offsets,
                work,
                blocks: stored,
            })
        }
    }
}
