//! Invariant suite for one zoo family, as run by `qsc verify`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use super::task_seed;
use crate::attack::{
    synthesize_cheat_unitary, two_sided_xor_attack, verify_rotation, AttackSession, AttackWeights,
};
use crate::error::{Error, Result};
use crate::linalg::{fidelity, re, CVec};
use crate::protocol::{
    alice_epr_reduced_state, bob_reduced_state, build_f_measurement, delta_of, epsilon_max,
    measure, FunctionTable, Label, Protocol,
};
use crate::zoo::{
    add_noise, make_ideal_one_sided, make_oblivious_id, make_one_out_of_two_ot, make_two_sided_xor,
    ALICE_OUT, FAMILY_NAMES, PAD,
};

const TOL: f64 = 1e-9;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub name: String,
    pub passed: bool,
    pub detail: String,
}

fn check(name: &str, passed: bool, detail: impl Into<String>) -> Check {
    Check {
        name: name.into(),
        passed,
        detail: detail.into(),
    }
}

fn random_table(n: usize, m: usize, p: usize, seed: u64) -> Result<FunctionTable> {
    let mut rng = ChaCha8Rng::seed_from_u64(task_seed(seed, "verify-table"));
    let values = (0..n * m).map(|_| rng.random_range(0..p as u32)).collect();
    FunctionTable::new(n, m, p, values)
}

/// Run the invariant suite of `family` at size `(n, m)`.
///
/// `ot` takes `n = 4^k` and `m = 2`; `oblivious-id` needs `n = m`; the
/// other families use a seeded random table with binary outputs.
pub fn verify_family(family: &str, n: usize, m: usize, seed: u64) -> Result<Vec<Check>> {
    if n == 0 || m == 0 {
        return Err(Error::InvalidParameter("n and m must be positive".into()));
    }
    let table = match family {
        "ideal" | "two-sided-xor" | "noisy" => random_table(n, m, 2, seed)?,
        "ot" => {
            let k = (1..=4u32).find(|&k| 4usize.pow(k) == n);
            match k {
                Some(k) if m == 2 => make_one_out_of_two_ot(k)?,
                _ => return Err(Error::InvalidParameter("ot needs n = 4^k and m = 2".into())),
            }
        }
        "oblivious-id" if n == m => make_oblivious_id(n)?,
        "oblivious-id" => return Err(Error::InvalidParameter("oblivious-id needs n = m".into())),
        other => {
            return Err(Error::InvalidParameter(format!(
                "unknown family `{other}` (expected one of {})",
                FAMILY_NAMES.join(", ")
            )))
        }
    };
    let mut out = Vec::new();
    match family {
        "two-sided-xor" => two_sided_checks(&table, &mut out)?,
        "noisy" => noisy_checks(&table, &mut out)?,
        _ => ideal_checks(&make_ideal_one_sided(&table)?, &mut out)?,
    }
    Ok(out)
}

fn unitary_check(p: &Protocol) -> Check {
    match p.unitary() {
        Ok(_) => check("unitary", true, format!("dim {}", p.dim())),
        Err(e) => check("unitary", false, e.to_string()),
    }
}

fn ideal_checks(p: &Protocol, out: &mut Vec<Check>) -> Result<()> {
    let t = p.table().clone();
    let (n, m) = (t.n(), t.m());
    out.push(unitary_check(p));

    let mut worst_norm: f64 = 0.0;
    for i in 0..n {
        for j in 0..m {
            worst_norm = worst_norm.max((p.honest_vector(i, j).norm() - 1.0).abs());
        }
    }
    out.push(check(
        "honest_norm",
        worst_norm <= 1e-10,
        format!("max deviation {worst_norm:e}"),
    ));

    let mut worst_a: f64 = 1.0;
    for j in 0..m {
        let meas = build_f_measurement(p, j)?;
        for i in 0..n {
            let res = measure(&bob_reduced_state(p, i, j)?, &meas)?;
            let q = res
                .iter()
                .find(|r| r.label == Label::Value(t.get(i, j)))
                .map_or(0.0, |r| r.probability);
            worst_a = worst_a.min(q);
        }
    }
    out.push(check(
        "requirement_a",
        worst_a >= 1.0 - TOL,
        format!("min probability of f(i,j) {worst_a}"),
    ));

    if m >= 2 {
        let d = delta_of(p)?;
        out.push(check("alice_blind", d <= TOL, format!("delta {d:e}")));
        let w = AttackWeights::uniform(n);
        let mut worst: f64 = 1.0;
        for j1 in 0..m {
            for j2 in 0..m {
                if j1 != j2 {
                    let u = synthesize_cheat_unitary(p, j1, j2, &w)?;
                    worst = verify_rotation(&u, p, &w)?
                        .into_iter()
                        .fold(worst, f64::min);
                }
            }
        }
        out.push(check(
            "rotation_identity",
            worst >= 1.0 - TOL,
            format!("min per-input fidelity {worst}"),
        ));
    }

    let e = epsilon_max(p)?;
    out.push(check("non_disturbance", e <= TOL, format!("epsilon {e:e}")));

    let order: Vec<usize> = (0..m).collect();
    let all: Vec<usize> = (0..n).collect();
    let mut session = AttackSession::new(p, &order, AttackWeights::uniform(n), true)?;
    let (mut ok, mut worst_u) = (true, 0.0f64);
    for &i in &all {
        let r = session.report(i, &all)?;
        ok &= r.success;
        worst_u = worst_u.max(r.max_step_uncertainty);
    }
    out.push(check(
        "attack_completeness",
        ok && worst_u <= TOL,
        format!("all rows recovered: {ok}, max step uncertainty {worst_u:e}"),
    ));
    Ok(())
}

fn two_sided_checks(table: &FunctionTable, out: &mut Vec<Check>) -> Result<()> {
    let p = make_two_sided_xor(table)?;
    out.push(unitary_check(&p));
    let layout = p.layout();
    let strides = layout.strides();
    let out_pos = layout.position(ALICE_OUT)?;
    let bob_pos = layout.position(p.bob_output_register())?;
    let pad_pos = layout.position(PAD)?;
    let in_pos = layout.position(p.bob_input_register())?;
    let pd = table.p();
    let mut agree = true;
    let mut pad_uniform = true;
    for i in 0..table.n() {
        let alice = p.alice_initial(i);
        for j in 0..table.m() {
            let mut counts = vec![0usize; pd];
            for r in 0..pd {
                let mut bob = CVec::zeros(p.bob_dim());
                bob[j * strides[in_pos] + r * strides[pad_pos]] = re(1.0);
                let mut v = alice.kronecker(&bob);
                p.apply_circuit(&mut v);
                let (idx, _) = v
                    .iter()
                    .enumerate()
                    .max_by(|a, b| a.1.norm().total_cmp(&b.1.norm()))
                    .expect("nonempty state");
                let a_out = (idx / strides[out_pos]) % pd;
                let b_out = (idx / strides[bob_pos]) % pd;
                agree &= a_out == b_out && a_out == (table.get(i, j) as usize ^ r);
                counts[a_out] += 1;
            }
            pad_uniform &= counts.iter().all(|&c| c == 1);
        }
    }
    out.push(check(
        "outputs_agree",
        agree,
        "alice_out = bob_out = f XOR r",
    ));
    out.push(check(
        "one_time_pad",
        pad_uniform,
        "alice_out uniform over r for every (i, j)",
    ));
    let r = two_sided_xor_attack(&p)?;
    out.push(check(
        "alice_blind_entangled_pad",
        r.min_alice_fidelity >= 1.0 - TOL,
        format!("min fidelity {}", r.min_alice_fidelity),
    ));
    out.push(check(
        "attack_completeness",
        r.success,
        "sequential attack over all j",
    ));
    out.push(check(
        "honest_alice_learns_nothing",
        r.honest_alice_info_bits <= TOL,
        format!("{:e} bits", r.honest_alice_info_bits),
    ));
    Ok(())
}

fn noisy_checks(table: &FunctionTable, out: &mut Vec<Check>) -> Result<()> {
    let base = make_ideal_one_sided(table)?;
    let grid = [0.0, 0.1, 0.2, 0.3, 0.4];
    let zero = add_noise(&base, 0.0, 0.0)?;
    let d0 = if table.m() >= 2 {
        delta_of(&zero)?
    } else {
        0.0
    };
    let e0 = epsilon_max(&zero)?;
    out.push(check(
        "zero_noise",
        d0 <= TOL && e0 <= TOL,
        format!("delta {d0:e}, epsilon {e0:e}"),
    ));
    if table.m() >= 2 {
        let mut deltas = Vec::new();
        for &t in &grid {
            deltas.push(delta_of(&add_noise(&base, t, 0.0)?)?);
        }
        out.push(check(
            "delta_monotone",
            deltas.windows(2).all(|w| w[1] >= w[0] - TOL),
            format!("{deltas:?}"),
        ));
    }
    let mut epsilons = Vec::new();
    for &t in &grid {
        epsilons.push(epsilon_max(&add_noise(&base, 0.0, t)?)?);
    }
    out.push(check(
        "epsilon_monotone",
        epsilons.windows(2).all(|w| w[1] >= w[0] - TOL),
        format!("{epsilons:?}"),
    ));
    let p = add_noise(&base, 0.3, 0.2)?;
    out.push(unitary_check(&p));
    if table.m() >= 2 {
        let w = AttackWeights::uniform(table.n());
        let u = synthesize_cheat_unitary(&p, 0, 1, &w)?;
        let f = fidelity(
            &alice_epr_reduced_state(&p, 0, w.weights())?,
            &alice_epr_reduced_state(&p, 1, w.weights())?,
        )?;
        out.push(check(
            "uhlmann_optimal",
            (u.achieved_overlap - f).abs() <= 1e-8,
            format!("overlap {} vs fidelity {f}", u.achieved_overlap),
        ));
    }
    Ok(())
}
