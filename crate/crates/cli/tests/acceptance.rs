//! Acceptance run: one PASS/FAIL line per criterion.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::Instant;

use qsc_core::attack::{
    partition_attack, synthesize_cheat_unitary, two_sided_xor_attack, verify_rotation,
    AttackSession, AttackWeights, PartitionOutcome,
};
use qsc_core::harness::{run_experiment, task_seed, ExperimentConfig, StepTwo};
use qsc_core::layout::{Owner, Register, TensorLayout};
use qsc_core::linalg::random::{random_density, random_state, random_unitary};
use qsc_core::linalg::{
    fidelity, partial_trace, purify, reduced_from_pure, schmidt_decompose, DensityMatrix, C64,
};
use qsc_core::protocol::{
    alice_epr_reduced_state, alice_overlap, epr_matrix, FunctionTable, Label, Protocol,
};
use qsc_core::zoo::{
    add_noise, make_ideal_one_sided, make_oblivious_id, make_one_out_of_two_ot, make_two_sided_xor,
};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;

const SEED: u64 = 2024;
const TOL: f64 = 1e-9;

struct Outcome {
    passed: bool,
    detail: String,
}

fn outcome(passed: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        passed,
        detail: detail.into(),
    }
}

fn rng_for(label: &str) -> ChaCha8Rng {
    ChaCha8Rng::seed_from_u64(task_seed(SEED, label))
}

/// Tables with sorted rows: relabeling Alice's inputs is a local unitary
/// on her side and leaves every attack figure unchanged, so one table per
/// row multiset suffices. Exhaustive when there are at most 4096 such
/// multisets, otherwise 512 seeded draws.
fn tables(n: usize, m: usize, p: usize) -> Vec<FunctionTable> {
    let rows = (p as u64).pow(m as u32);
    let row = |mut code: u64| -> Vec<u32> {
        (0..m)
            .map(|_| {
                let d = (code % p as u64) as u32;
                code /= p as u64;
                d
            })
            .collect()
    };
    let build = |codes: &[u64]| {
        let values = codes.iter().flat_map(|&c| row(c)).collect();
        FunctionTable::new(n, m, p, values).unwrap()
    };
    let multisets = (0..n as u64).fold(1u64, |acc, k| acc * (rows + k) / (k + 1));
    if multisets <= 4096 {
        let mut out = Vec::new();
        let mut codes = vec![0u64; n];
        loop {
            out.push(build(&codes));
            // next nondecreasing sequence
            let Some(pos) = (0..n).rev().find(|&k| codes[k] + 1 < rows) else {
                break;
            };
            let v = codes[pos] + 1;
            for c in &mut codes[pos..] {
                *c = v;
            }
        }
        out
    } else {
        let mut rng = rng_for(&format!("criterion-1/{n}/{m}/{p}"));
        let mut seen = std::collections::BTreeSet::new();
        while seen.len() < 512 {
            let mut codes: Vec<u64> = (0..n).map(|_| rng.random_range(0..rows)).collect();
            codes.sort_unstable();
            seen.insert(codes);
        }
        seen.iter().map(|c| build(c)).collect()
    }
}

fn ideal_protocols() -> Vec<Protocol> {
    let mut out = Vec::new();
    for n in 1..=4 {
        for m in 1..=4 {
            for p in 1..=3 {
                for t in tables(n, m, p) {
                    out.push(make_ideal_one_sided(&t).unwrap());
                }
            }
        }
    }
    for n in 2..=8 {
        out.push(make_ideal_one_sided(&make_oblivious_id(n).unwrap()).unwrap());
    }
    for k in 1..=2 {
        out.push(make_ideal_one_sided(&make_one_out_of_two_ot(k).unwrap()).unwrap());
    }
    out
}

/// Criteria 1 and 3: full sequential attack on every ideal protocol.
fn ideal_attacks(protocols: &[Protocol]) -> (Outcome, Outcome) {
    let (mut failed, mut worst_u, mut worst_dist) = (0usize, 0.0f64, 1.0f64);
    for p in protocols {
        let (n, m) = (p.table().n(), p.table().m());
        let order: Vec<usize> = (0..m).collect();
        let inputs: Vec<usize> = (0..n).collect();
        let mut session = AttackSession::new(p, &order, AttackWeights::uniform(n), true).unwrap();
        for &i in &inputs {
            let r = session.report(i, &inputs).unwrap();
            let recovered = r
                .recovered_row
                .iter()
                .all(|v| v.label == Label::Value(p.table().get(i, v.j)));
            if !(r.success && recovered && r.max_step_uncertainty <= TOL) {
                failed += 1;
            }
            worst_u = worst_u.max(r.max_step_uncertainty);
            worst_dist = worst_dist.min(r.min_disturbance_fidelity);
        }
    }
    (
        outcome(
            failed == 0,
            format!(
                "{} protocols, {failed} failed (i, protocol) runs, max step uncertainty {worst_u:.1e}",
                protocols.len()
            ),
        ),
        outcome(
            worst_dist >= 1.0 - TOL,
            format!("min pre/post step fidelity {worst_dist:.12}"),
        ),
    )
}

/// Criteria 2 and 4: rotation identity and Alice-blindness on every
/// ordered pair of inputs.
fn ideal_pairs(protocols: &[Protocol]) -> (Outcome, Outcome) {
    let (mut worst_rot, mut worst_factor, mut worst_sqrt) = (1.0f64, 1.0f64, 1.0f64);
    let mut pairs = 0usize;
    for p in protocols {
        let (n, m) = (p.table().n(), p.table().m());
        let w = AttackWeights::uniform(n);
        // keep the big zoo entries to adjacent pairs
        let all_pairs = n * m <= 16;
        let reduced: Vec<DensityMatrix> = (0..m)
            .map(|j| alice_epr_reduced_state(p, j, w.weights()).unwrap())
            .collect();
        for j1 in 0..m {
            for j2 in 0..m {
                if j1 == j2 || (!all_pairs && j2 != (j1 + 1) % m) {
                    continue;
                }
                pairs += 1;
                let u = synthesize_cheat_unitary(p, j1, j2, &w).unwrap();
                for f in verify_rotation(&u, p, &w).unwrap() {
                    worst_rot = worst_rot.min(f);
                }
                if j1 < j2 {
                    worst_factor = worst_factor.min(alice_overlap(p, j1, j2, w.weights()).unwrap());
                    worst_sqrt = worst_sqrt.min(fidelity(&reduced[j1], &reduced[j2]).unwrap());
                }
            }
        }
    }
    (
        outcome(
            worst_rot >= 1.0 - TOL,
            format!("{pairs} ordered pairs, min per-i fidelity {worst_rot:.12}"),
        ),
        outcome(
            worst_factor >= 1.0 - TOL && worst_sqrt >= 1.0 - TOL,
            format!("min fidelity {worst_factor:.12} (factor route), {worst_sqrt:.12} (square-root route)"),
        ),
    )
}

fn uhlmann() -> Outcome {
    let mut rng = rng_for("criterion-5");
    let (mut worst_gap, mut worst_excess) = (0.0f64, f64::NEG_INFINITY);
    for _ in 0..50 {
        let n = rng.random_range(2..=3);
        let values = (0..n * 2).map(|_| rng.random_range(0..2)).collect();
        let t = FunctionTable::new(n, 2, 2, values).unwrap();
        let leak = rng.random_range(0.05..std::f64::consts::FRAC_PI_2);
        let blur = rng.random_range(0.0..std::f64::consts::FRAC_PI_4);
        let p = add_noise(&make_ideal_one_sided(&t).unwrap(), leak, blur).unwrap();
        let w = AttackWeights::uniform(n);
        let u = synthesize_cheat_unitary(&p, 0, 1, &w).unwrap();
        let f = fidelity(
            &alice_epr_reduced_state(&p, 0, w.weights()).unwrap(),
            &alice_epr_reduced_state(&p, 1, w.weights()).unwrap(),
        )
        .unwrap();
        worst_gap = worst_gap.max((u.achieved_overlap - f).abs());
        // |<v1| (I x V) |v0>| = |sum_ab V_ab c_ab| with c = m1^dagger-weighted
        // products of the two (rest x Bob) matrices
        let m0 = epr_matrix(&p, 0, w.weights()).unwrap();
        let m1 = epr_matrix(&p, 1, w.weights()).unwrap();
        let c = m0.transpose() * m1.map(|z| z.conj());
        for _ in 0..1000 {
            let r = random_unitary(p.bob_dim(), &mut rng);
            let ov: C64 = r.matrix().iter().zip(c.iter()).map(|(v, x)| v * x).sum();
            worst_excess = worst_excess.max(ov.norm() - u.achieved_overlap);
        }
    }
    outcome(
        worst_gap <= 1e-8 && worst_excess <= 1e-9,
        format!("max |overlap - fidelity| {worst_gap:.1e}, max random-unitary excess {worst_excess:.3e}"),
    )
}

fn sweep_config() -> ExperimentConfig {
    ExperimentConfig::from_json(
        r#"{
            "protocol": {"family": "noisy", "base": {"kind": "oblivious-id", "n": 4},
                         "theta_leak": 0.0, "theta_meas": 0.0},
            "sweep": {"theta_leak": [0.05, 0.1, 0.15, 0.2, 0.25],
                      "theta_meas": [0.05, 0.1, 0.15, 0.2, 0.25]}
        }"#,
    )
    .unwrap()
}

/// Markov check recomputed from the raw per-input overlaps.
fn nine_of_ten_holds(rows: &[StepTwo], n: usize, m: usize, delta: f64) -> (bool, usize) {
    let mut checked = 0;
    let mut ok = true;
    for j1 in 0..m {
        for j2 in (0..m).filter(|&j2| j2 != j1) {
            let o: Vec<f64> = rows
                .iter()
                .filter(|r| r.j1 == j1 && r.j2 == j2)
                .map(|r| r.overlap)
                .collect();
            assert_eq!(o.len(), n);
            if o.iter().sum::<f64>() / n as f64 > 1.0 - delta {
                checked += 1;
                let typical = o.iter().filter(|&&x| x > 1.0 - 10.0 * delta).count();
                ok &= 10 * typical >= 9 * n;
            }
        }
    }
    (ok, checked)
}

fn noise_grid() -> (Outcome, Outcome) {
    let report = run_experiment(&sweep_config()).unwrap();
    let six = match &report.aggregates.fit {
        Some(fit) => {
            let first = &report.sweep[0];
            outcome(
                fit.c1 > 0.0
                    && fit.c2 > 0.0
                    && fit.max_residual < 0.05
                    && first.step2_fidelity > 0.99,
                format!(
                    "c1 {:.4}, c2 {:.4}, max residual {:.2e}, step-2 fidelity at ({}, {}) {:.6}",
                    fit.c1,
                    fit.c2,
                    fit.max_residual,
                    first.theta_leak,
                    first.theta_meas,
                    first.step2_fidelity
                ),
            )
        }
        None => outcome(
            false,
            format!("fit failed: {:?}", report.aggregates.fit_error),
        ),
    };
    let (mut ok, mut checked) = (true, 0);
    for pt in &report.sweep {
        let (holds, c) = nine_of_ten_holds(&pt.step_two, pt.n, 4, pt.delta);
        ok &= holds && pt.nine_of_ten.holds;
        checked += c;
    }
    let seven = outcome(
        ok,
        format!(
            "{} grid points, {checked} (point, pair) premises checked",
            report.sweep.len()
        ),
    );
    (six, seven)
}

fn partition() -> Outcome {
    let mut worst: f64 = 1.0;
    let mut branches = 0;
    for n in 3..=8 {
        let p = make_ideal_one_sided(&make_oblivious_id(n).unwrap()).unwrap();
        for (j1, j2) in [(0, 1), (n - 1, 0)] {
            for b in partition_attack(&p, j1, j2).unwrap().branches {
                if let PartitionOutcome::Discrimination { worst_case, .. } = b.outcome {
                    branches += 1;
                    worst = worst.min(worst_case);
                }
            }
        }
    }
    let base = make_ideal_one_sided(&make_oblivious_id(3).unwrap()).unwrap();
    let mut curve = Vec::new();
    let mut overlaps = Vec::new();
    for leak in [0.0, 0.1, 0.2, 0.3] {
        let p = add_noise(&base, leak, 0.0).unwrap();
        let r = partition_attack(&p, 0, 1).unwrap();
        curve.push(r.min_probability().unwrap());
        for b in &r.branches {
            if let PartitionOutcome::Discrimination {
                achieved_overlap, ..
            } = b.outcome
            {
                overlaps.push(achieved_overlap);
                break;
            }
        }
    }
    let monotone = curve.windows(2).all(|w| w[1] <= w[0] + TOL);
    outcome(
        branches > 0 && worst >= 0.99 && monotone,
        format!(
            "{branches} branches, min probability {worst:.9}; theta_leak 0..0.3: probability {curve:.6?}, rotation overlap {overlaps:.6?}"
        ),
    )
}

fn two_sided() -> Outcome {
    let mut details = Vec::new();
    let mut ok = true;
    for (name, t) in [
        ("oblivious-id n=2", make_oblivious_id(2).unwrap()),
        ("1-bit OT", make_one_out_of_two_ot(1).unwrap()),
    ] {
        let r = two_sided_xor_attack(&make_two_sided_xor(&t).unwrap()).unwrap();
        ok &= (r.min_alice_fidelity - 1.0).abs() <= TOL
            && r.success
            && r.honest_alice_info_bits.abs() <= TOL;
        details.push(format!(
            "{name}: fidelity {:.12}, recovered {}, honest info {:.1e} bits",
            r.min_alice_fidelity, r.success, r.honest_alice_info_bits
        ));
    }
    outcome(ok, details.join("; "))
}

fn corollaries() -> Outcome {
    let ot = make_ideal_one_sided(&make_one_out_of_two_ot(1).unwrap()).unwrap();
    let mut session = AttackSession::new(&ot, &[0, 1], AttackWeights::uniform(4), true).unwrap();
    let mut ot_ok = true;
    for i in 0..4 {
        let r = session.report(i, &[0, 1, 2, 3]).unwrap();
        let (m0, m1) = (ot.table().get(i, 0), ot.table().get(i, 1));
        let got: Vec<Label> = r.recovered_row.iter().map(|v| v.label).collect();
        ot_ok &= got == [Label::Value(m0), Label::Value(m1)]
            && (r.success_probability - 1.0).abs() <= TOL;
    }
    let id = make_ideal_one_sided(&make_oblivious_id(8).unwrap()).unwrap();
    let order: Vec<usize> = (0..8).collect();
    let mut session = AttackSession::new(&id, &order, AttackWeights::uniform(8), true).unwrap();
    let bits = session.info_bits(&order).unwrap();
    outcome(
        ot_ok && (bits - 3.0).abs() <= 1e-6,
        format!(
            "OT k=1 both messages for all 4 pairs: {ot_ok}; oblivious-id n=8 info {bits:.9} bits"
        ),
    )
}

fn pair_layout(da: usize, db: usize) -> TensorLayout {
    TensorLayout::new(vec![
        Register::new("a", da, Owner::Alice),
        Register::new("b", db, Owner::Bob),
    ])
    .unwrap()
}

fn linear_algebra() -> Outcome {
    let mut rng = rng_for("criterion-11");
    let mut failures = Vec::new();
    let dims = |rng: &mut ChaCha8Rng| {
        let da = rng.random_range(1..=8);
        let db = rng.random_range(1..=64 / da);
        (da, db)
    };
    for _ in 0..200 {
        // Schmidt: reconstruction and reduced spectrum
        let (da, db) = dims(&mut rng);
        let layout = pair_layout(da, db);
        let psi = random_state(da * db, &mut rng);
        let form = schmidt_decompose(&psi, &layout, &["a"]).unwrap();
        let mut spec = reduced_from_pure(&psi, &layout, &["a"])
            .unwrap()
            .eigenvalues();
        spec.sort_by(|x, y| y.total_cmp(x));
        let spec_ok = spec
            .iter()
            .enumerate()
            .all(|(k, l)| (l - form.coefficients.get(k).map_or(0.0, |c| c * c)).abs() < 1e-9);
        if (form.reconstruct() - psi.amplitudes()).norm() > 1e-9 || !spec_ok {
            failures.push("schmidt");
        }

        // partial trace of a product state
        let (da, db) = dims(&mut rng);
        let a = random_density(da, da, &mut rng);
        let b = random_density(db, db, &mut rng);
        let ab = DensityMatrix::new(a.matrix().kronecker(b.matrix())).unwrap();
        let back = partial_trace(&ab, &pair_layout(da, db), &["a"]).unwrap();
        if (back.matrix() - a.matrix()).norm() > 1e-10 || (back.trace() - 1.0).abs() > 1e-10 {
            failures.push("partial trace");
        }

        // fidelity: symmetry, bounds, unitary invariance, pure overlap
        let d = rng.random_range(1..=64);
        let rho = random_density(d, rng.random_range(1..=d), &mut rng);
        let sigma = random_density(d, rng.random_range(1..=d), &mut rng);
        let f = fidelity(&rho, &sigma).unwrap();
        let u = random_unitary(d, &mut rng);
        let f_rot = fidelity(&u.conjugate(&rho).unwrap(), &u.conjugate(&sigma).unwrap()).unwrap();
        let (x, y) = (random_state(d, &mut rng), random_state(d, &mut rng));
        let f_pure = fidelity(&x.to_density(), &y.to_density()).unwrap();
        if !(0.0..=1.0).contains(&f)
            || (f - fidelity(&sigma, &rho).unwrap()).abs() > 1e-8
            || (f - f_rot).abs() > 1e-8
            || (f_pure - x.inner(&y).norm()).abs() > 1e-7
        {
            failures.push("fidelity");
        }

        // purification round trip
        let d = rng.random_range(1..=8);
        let rho = random_density(d, rng.random_range(1..=d), &mut rng);
        let back = reduced_from_pure(&purify(&rho).unwrap(), &pair_layout(d, d), &["a"]).unwrap();
        if (back.matrix() - rho.matrix()).norm() > 1e-9 {
            failures.push("purification");
        }
    }
    failures.dedup();
    outcome(
        failures.is_empty(),
        format!("200 instances per property, dims <= 64; failing: {failures:?}"),
    )
}

fn determinism() -> Outcome {
    let bin = env!("CARGO_BIN_EXE_qsc");
    let dir = tempfile::tempdir().unwrap();
    let configs = [
        (
            "sampled",
            r#"{"protocol": {"family": "ot", "k": 2}, "tolerances": {"max_inputs": 6}}"#,
        ),
        (
            "sweep",
            r#"{"protocol": {"family": "noisy", "base": {"kind": "oblivious-id", "n": 3},
                             "theta_leak": 0.0, "theta_meas": 0.0},
                "sweep": {"theta_leak": [0.0, 0.1], "theta_meas": [0.05]}}"#,
        ),
    ];
    let mut same = true;
    let mut sizes = Vec::new();
    for (name, text) in configs {
        let cfg = dir.path().join(format!("{name}.json"));
        std::fs::write(&cfg, text).unwrap();
        let mut outputs = Vec::new();
        for k in 0..2 {
            let out = dir.path().join(format!("{name}-{k}.json"));
            let status = Command::new(bin)
                .args(["run", "--seed", "11", "--config"])
                .arg(&cfg)
                .arg("--out")
                .arg(&out)
                .status()
                .unwrap();
            same &= status.success();
            outputs.push(read(&out));
        }
        same &= !outputs[0].is_empty() && outputs[0] == outputs[1];
        sizes.push(outputs[0].len());
    }
    outcome(
        same,
        format!("two configs, two processes each; report bytes {sizes:?}"),
    )
}

fn read(path: &Path) -> Vec<u8> {
    std::fs::read(path).unwrap_or_default()
}

fn main() -> ExitCode {
    let mut all_ok = true;
    let mut report = |id: u32, name: &str, start: Instant, o: Outcome| {
        all_ok &= o.passed;
        let tag = if o.passed { "PASS" } else { "FAIL" };
        println!(
            "{tag} criterion {id:>2} {name} [{:.1} s]: {}",
            start.elapsed().as_secs_f64(),
            o.detail
        );
    };

    let t = Instant::now();
    let protocols = ideal_protocols();
    let (one, three) = ideal_attacks(&protocols);
    report(1, "ideal impossibility", t, one);
    report(3, "non-disturbance", t, three);
    let t = Instant::now();
    let (two, four) = ideal_pairs(&protocols);
    report(2, "rotation identity", t, two);
    report(4, "alice-blindness", t, four);
    let t = Instant::now();
    report(5, "uhlmann optimality", t, uhlmann());
    let t = Instant::now();
    let (six, seven) = noise_grid();
    report(6, "non-ideal bound shape", t, six);
    report(7, "nine-out-of-ten", t, seven);
    let t = Instant::now();
    report(8, "partition attack", t, partition());
    let t = Instant::now();
    report(9, "two-sided xor", t, two_sided());
    let t = Instant::now();
    report(10, "corollaries", t, corollaries());
    let t = Instant::now();
    report(11, "linear-algebra suite", t, linear_algebra());
    let t = Instant::now();
    report(12, "determinism", t, determinism());

    if all_ok {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
