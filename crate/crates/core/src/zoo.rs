//! Concrete protocols: ideal one-sided computations, oblivious transfer,
//! oblivious identification, the two-sided XOR reduction, and a
//! two-parameter noisy family.

use std::f64::consts::FRAC_PI_2;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::layout::{Owner, Register, TensorLayout};
use crate::linalg::{re, CMat, C64};
use crate::protocol::{
    BobPreparation, FunctionTable, Gate, GateOp, GateRole, NoiseParams, Protocol,
};

/// Default bound on the protocol dimension (Alice x Bob registers).
pub const DEFAULT_DIM_CAP: usize = 4096;

pub const FAMILY_NAMES: [&str; 5] = ["ideal", "ot", "oblivious-id", "two-sided-xor", "noisy"];

pub const ALICE_IN: &str = "alice_in";
pub const ALICE_OUT: &str = "alice_out";
pub const LEAK: &str = "leak";
pub const BOB_IN: &str = "bob_in";
pub const PAD: &str = "pad";
pub const BOB_OUT: &str = "bob_out";
pub const ROW: &str = "row";
pub const BLUR: &str = "blur";
pub const BOB_DICE: &str = "bob_dice";

/// One-out-of-two oblivious transfer of `k`-bit messages. Input
/// `i = m0 * 2^k + m1`, `f(i, j) = m_j`.
pub fn make_one_out_of_two_ot(k: u32) -> Result<FunctionTable> {
    make_one_out_of_two_ot_capped(k, DEFAULT_DIM_CAP)
}

pub fn make_one_out_of_two_ot_capped(k: u32, cap: usize) -> Result<FunctionTable> {
    if k == 0 {
        return Err(Error::InvalidParameter(
            "message bits k must be at least 1".into(),
        ));
    }
    let dim = ot_dim(k).filter(|&d| d <= cap);
    let Some(_) = dim else {
        return Err(Error::DimensionCap {
            dim: ot_dim(k).unwrap_or(usize::MAX),
            cap,
        });
    };
    let p = 1usize << k;
    let n = p * p;
    let mut values = Vec::with_capacity(2 * n);
    for i in 0..n {
        values.push((i / p) as u32);
        values.push((i % p) as u32);
    }
    FunctionTable::new(n, 2, p, values)
}

/// Dimension of the ideal OT protocol: every row is distinct and column 0
/// merges rows, so a row register of dim n + 1 is present.
fn ot_dim(k: u32) -> Option<usize> {
    let p = 1usize.checked_shl(k)?;
    let n = p.checked_mul(p)?;
    n.checked_mul(2)?.checked_mul(p)?.checked_mul(n + 1)
}

/// Password equality: `f(i, j) = 1` iff `i = j`.
pub fn make_oblivious_id(n: usize) -> Result<FunctionTable> {
    if n < 2 {
        return Err(Error::InvalidParameter(
            "oblivious identification needs n >= 2".into(),
        ));
    }
    let values = (0..n * n).map(|k| u32::from(k / n == k % n)).collect();
    FunctionTable::new(n, n, 2, values)
}

fn row_write_gate(table: &FunctionTable) -> Gate {
    let (class, _) = table.row_classes();
    Gate {
        role: GateRole::Computation,
        op: GateOp::Shift {
            target: ROW.into(),
            controls: vec![ALICE_IN.into()],
            amounts: class.iter().map(|c| c + 1).collect(),
        },
    }
}

/// Dimension of the row register (classes 1..=r, 0 = blank).
fn row_dim(table: &FunctionTable) -> usize {
    table.row_classes().1 + 1
}

/// `|i>_A |j, 0>_B -> |i>_A |j, f(i,j)>_B`. When some column of `f` merges
/// inputs with different rows, Bob also receives the row class of `i` in a
/// `row` register; without it Alice's EPR-attack state would depend on `j`.
pub fn make_ideal_one_sided(table: &FunctionTable) -> Result<Protocol> {
    let (n, m, p) = (table.n(), table.m(), table.p());
    let mut regs = vec![
        Register::new(ALICE_IN, n, Owner::Alice),
        Register::new(BOB_IN, m, Owner::Bob),
        Register::new(BOB_OUT, p, Owner::Bob),
    ];
    let mut gates = vec![Gate {
        role: GateRole::Computation,
        op: GateOp::Shift {
            target: BOB_OUT.into(),
            controls: vec![ALICE_IN.into(), BOB_IN.into()],
            amounts: table.values().iter().map(|&v| v as usize).collect(),
        },
    }];
    if table.needs_row_register() {
        regs.push(Register::new(ROW, row_dim(table), Owner::Bob));
        gates.push(row_write_gate(table));
    }
    Protocol::new(
        "ideal",
        TensorLayout::new(regs)?,
        table.clone(),
        gates,
        ALICE_IN,
        BOB_IN,
        BOB_OUT,
    )
}

/// Both parties receive `F(i, j, r) = f(i, j) XOR r`, where Bob's pad `r`
/// is part of his input.
pub fn make_two_sided_xor(table: &FunctionTable) -> Result<Protocol> {
    let (n, m, p) = (table.n(), table.m(), table.p());
    if !p.is_power_of_two() {
        return Err(Error::InvalidTable(format!("p = {p} is not a power of 2")));
    }
    let mut regs = vec![
        Register::new(ALICE_IN, n, Owner::Alice),
        Register::new(ALICE_OUT, p, Owner::Alice),
        Register::new(BOB_IN, m, Owner::Bob),
        Register::new(PAD, p, Owner::Bob),
        Register::new(BOB_OUT, p, Owner::Bob),
    ];
    let mut amounts = Vec::with_capacity(n * m * p);
    for i in 0..n {
        for j in 0..m {
            for r in 0..p {
                amounts.push((table.get(i, j) as usize) ^ r);
            }
        }
    }
    let controls: Vec<String> = vec![ALICE_IN.into(), BOB_IN.into(), PAD.into()];
    let mut gates = vec![
        Gate {
            role: GateRole::Computation,
            op: GateOp::Shift {
                target: ALICE_OUT.into(),
                controls: controls.clone(),
                amounts: amounts.clone(),
            },
        },
        Gate {
            role: GateRole::Computation,
            op: GateOp::Shift {
                target: BOB_OUT.into(),
                controls,
                amounts,
            },
        },
    ];
    if table.needs_row_register() {
        regs.push(Register::new(ROW, row_dim(table), Owner::Bob));
        gates.push(row_write_gate(table));
    }
    Protocol::new(
        "two-sided-xor",
        TensorLayout::new(regs)?,
        table.clone(),
        gates,
        ALICE_IN,
        BOB_IN,
        BOB_OUT,
    )
}

/// Bob's cheating view of a two-sided XOR protocol: an extra Bob-held dice
/// register entangled with his pad, `p^{-1/2} sum_r |r>_pad |r>_dice`.
pub fn with_entangled_pad(p: &Protocol) -> Result<Protocol> {
    if p.layout().position(PAD).is_err() {
        return Err(Error::InvalidProtocol(format!(
            "`{}` has no pad register",
            p.name()
        )));
    }
    let pad_dim = p.layout().dim_of(PAD)?;
    let mut regs = p.layout().registers().to_vec();
    regs.push(Register::new(BOB_DICE, pad_dim, Owner::Bob));
    Protocol::new(
        p.name(),
        TensorLayout::new(regs)?,
        p.table().clone(),
        p.gates().to_vec(),
        p.alice_input_register(),
        p.bob_input_register(),
        p.bob_output_register(),
    )?
    .with_noise_params(p.noise())
    .with_preparation(BobPreparation::PadEntangled {
        pad: PAD.into(),
        dice: BOB_DICE.into(),
    })
}

fn check_angle(theta: f64) -> Result<()> {
    if !(0.0..=FRAC_PI_2 + 1e-12).contains(&theta) {
        return Err(Error::InvalidAngle(theta));
    }
    Ok(())
}

/// Appends two coherent noise sources to a zoo protocol.
///
/// Leak: Alice gains a `leak` register of the row register's dimension.
/// Controlled on Bob's input `j`, the pair (row, leak) undergoes
/// `exp(-i phi_j SWAP)` with `phi_j = theta_leak * j / (m - 1)`, so part of
/// the row class moves to Alice by an amount that depends on `j`.
///
/// Blur: Bob gains a `blur` qubit, and each output value `c` is rotated by
/// `theta_meas` within `span{|c, 0>, |c + 1 mod p, 1>}` of (bob_out, blur).
///
/// With both angles zero the protocol is returned unchanged.
pub fn add_noise(p: &Protocol, theta_leak: f64, theta_meas: f64) -> Result<Protocol> {
    check_angle(theta_leak)?;
    check_angle(theta_meas)?;
    if p.layout().position(LEAK).is_ok() || p.layout().position(BLUR).is_ok() {
        return Err(Error::InvalidProtocol(
            "protocol already carries noise".into(),
        ));
    }
    if theta_leak == 0.0 && theta_meas == 0.0 {
        return Ok(p.clone().with_noise_params(NoiseParams::default()));
    }
    let table = p.table();
    let rdim = row_dim(table);
    let mut alice = p.layout().registers_of(Owner::Alice);
    let mut bob = p.layout().registers_of(Owner::Bob);
    let mut gates = p.gates().to_vec();
    if p.layout().position(ROW).is_err() {
        bob.push(Register::new(ROW, rdim, Owner::Bob));
        gates.push(row_write_gate(table));
    }
    alice.push(Register::new(LEAK, rdim, Owner::Alice));
    let out_dim = p.layout().dim_of(p.bob_output_register())?;
    bob.push(Register::new(BLUR, 2, Owner::Bob));

    let m_dim = p.layout().dim_of(p.bob_input_register())?;
    let m = table.m();
    let leak_blocks = (0..m_dim)
        .map(|j| {
            let phi = if m > 1 {
                theta_leak * j as f64 / (m - 1) as f64
            } else {
                0.0
            };
            (phi != 0.0).then(|| partial_swap(rdim, phi))
        })
        .collect();
    gates.push(Gate {
        role: GateRole::Leak,
        op: GateOp::Controlled {
            targets: vec![ROW.into(), LEAK.into()],
            controls: vec![p.bob_input_register().into()],
            blocks: leak_blocks,
        },
    });
    gates.push(Gate {
        role: GateRole::Blur,
        op: GateOp::Controlled {
            targets: vec![p.bob_output_register().into(), BLUR.into()],
            controls: vec![],
            blocks: vec![Some(blur_rotation(out_dim, theta_meas))],
        },
    });

    alice.extend(bob);
    let out = Protocol::new(
        "noisy",
        TensorLayout::new(alice)?,
        table.clone(),
        gates,
        p.alice_input_register(),
        p.bob_input_register(),
        p.bob_output_register(),
    )?
    .with_noise_params(NoiseParams {
        theta_leak,
        theta_meas,
    });
    out.with_preparation(p.preparation().clone())
}

/// `cos(phi) I - i sin(phi) SWAP` on two registers of dimension `d`.
fn partial_swap(d: usize, phi: f64) -> CMat {
    let mut m = CMat::identity(d * d, d * d) * re(phi.cos());
    let s = C64::new(0.0, -phi.sin());
    for x in 0..d {
        for y in 0..d {
            m[(y * d + x, x * d + y)] += s;
        }
    }
    m
}

/// Rotation by `theta` in each plane `{|c, 0>, |c + 1 mod p, 1>}` of
/// (output, blur qubit). The planes partition the basis, so this is unitary.
fn blur_rotation(p: usize, theta: f64) -> CMat {
    let (c, s) = (theta.cos(), theta.sin());
    let mut m = CMat::zeros(2 * p, 2 * p);
    for v in 0..p {
        let a = 2 * v;
        let b = 2 * ((v + 1) % p) + 1;
        m[(a, a)] = re(c);
        m[(b, b)] = re(c);
        m[(b, a)] = re(s);
        m[(a, b)] = re(-s);
    }
    m
}

/// Function table source for the composite families.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case", deny_unknown_fields)]
pub enum BaseTable {
    Table {
        n: usize,
        m: usize,
        p: usize,
        table: Vec<u32>,
    },
    Ot {
        k: u32,
    },
    ObliviousId {
        n: usize,
    },
}

impl BaseTable {
    pub fn build(&self, cap: usize) -> Result<FunctionTable> {
        match self {
            BaseTable::Table { n, m, p, table } => {
                let cells = n.checked_mul(*m).unwrap_or(usize::MAX);
                if cells > cap {
                    return Err(Error::DimensionCap { dim: cells, cap });
                }
                FunctionTable::new(*n, *m, *p, table.clone())
            }
            BaseTable::Ot { k } => make_one_out_of_two_ot_capped(*k, cap),
            BaseTable::ObliviousId { n } => {
                let dim = n
                    .checked_mul(*n)
                    .and_then(|d| d.checked_mul(2))
                    .unwrap_or(usize::MAX);
                if dim > cap {
                    return Err(Error::DimensionCap { dim, cap });
                }
                make_oblivious_id(*n)
            }
        }
    }
}

/// A zoo protocol addressable by family name.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "kebab-case", deny_unknown_fields)]
pub enum ZooFamily {
    Ideal {
        n: usize,
        m: usize,
        p: usize,
        table: Vec<u32>,
    },
    Ot {
        k: u32,
    },
    ObliviousId {
        n: usize,
    },
    TwoSidedXor {
        base: BaseTable,
    },
    Noisy {
        base: BaseTable,
        theta_leak: f64,
        theta_meas: f64,
    },
}

impl ZooFamily {
    pub fn name(&self) -> &'static str {
        match self {
            ZooFamily::Ideal { .. } => "ideal",
            ZooFamily::Ot { .. } => "ot",
            ZooFamily::ObliviousId { .. } => "oblivious-id",
            ZooFamily::TwoSidedXor { .. } => "two-sided-xor",
            ZooFamily::Noisy { .. } => "noisy",
        }
    }

    pub fn is_two_sided(&self) -> bool {
        matches!(self, ZooFamily::TwoSidedXor { .. })
    }

    /// The noisy family over this family's table. Two-sided protocols have
    /// no noisy variant.
    pub fn with_noise(&self, theta_leak: f64, theta_meas: f64) -> Result<ZooFamily> {
        let base = match self {
            ZooFamily::Ideal { n, m, p, table } => BaseTable::Table {
                n: *n,
                m: *m,
                p: *p,
                table: table.clone(),
            },
            ZooFamily::Ot { k } => BaseTable::Ot { k: *k },
            ZooFamily::ObliviousId { n } => BaseTable::ObliviousId { n: *n },
            ZooFamily::Noisy { base, .. } => base.clone(),
            ZooFamily::TwoSidedXor { .. } => {
                return Err(Error::InvalidParameter(
                    "two-sided protocols have no noisy variant".into(),
                ))
            }
        };
        Ok(ZooFamily::Noisy {
            base,
            theta_leak,
            theta_meas,
        })
    }

    pub fn table(&self, cap: usize) -> Result<FunctionTable> {
        match self {
            ZooFamily::Ideal { n, m, p, table } => BaseTable::Table {
                n: *n,
                m: *m,
                p: *p,
                table: table.clone(),
            }
            .build(cap),
            ZooFamily::Ot { k } => make_one_out_of_two_ot_capped(*k, cap),
            ZooFamily::ObliviousId { n } => BaseTable::ObliviousId { n: *n }.build(cap),
            ZooFamily::TwoSidedXor { base } | ZooFamily::Noisy { base, .. } => base.build(cap),
        }
    }

    /// Dimension of the protocol (Alice x Bob registers) this family builds.
    pub fn protocol_dim(&self, cap: usize) -> Result<usize> {
        let table = self.table(cap)?;
        let (n, m, p) = (table.n(), table.m(), table.p());
        let row = if table.needs_row_register() {
            row_dim(&table)
        } else {
            1
        };
        let dims: Vec<usize> = match self {
            ZooFamily::TwoSidedXor { .. } => vec![n, p, m, p, p, row],
            ZooFamily::Noisy {
                theta_leak,
                theta_meas,
                ..
            } if *theta_leak != 0.0 || *theta_meas != 0.0 => {
                let rd = row_dim(&table);
                vec![n, rd, m, p, rd, 2]
            }
            _ => vec![n, m, p, row],
        };
        Ok(dims
            .iter()
            .try_fold(1usize, |acc, &d| acc.checked_mul(d))
            .unwrap_or(usize::MAX))
    }

    /// Build the protocol after checking the dimension cap.
    pub fn build(&self, cap: usize) -> Result<Protocol> {
        if let ZooFamily::Noisy {
            theta_leak,
            theta_meas,
            ..
        } = self
        {
            check_angle(*theta_leak)?;
            check_angle(*theta_meas)?;
        }
        let dim = self.protocol_dim(cap)?;
        if dim > cap {
            return Err(Error::DimensionCap { dim, cap });
        }
        let table = self.table(cap)?;
        let p = match self {
            ZooFamily::TwoSidedXor { .. } => make_two_sided_xor(&table)?,
            ZooFamily::Noisy {
                theta_leak,
                theta_meas,
                ..
            } => add_noise(&make_ideal_one_sided(&table)?, *theta_leak, *theta_meas)?,
            _ => make_ideal_one_sided(&table)?,
        };
        Ok(p.with_name(self.name()))
    }
}
