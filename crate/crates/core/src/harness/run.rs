//! Running a configured experiment and writing its report.

use std::io::Write;
use std::path::Path;

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;
use serde_json::Value;

use super::config::{Assertions, AttackConfig, ExperimentConfig, OutputFormat};
use super::fit::{fit_bound, BoundFit, FitPoint};
use super::sweep::{analyze_point, delta_from, epsilon_from, ChannelFidelity, LeakagePoint};
use super::task_seed;
use crate::attack::{
    partition_attack, two_sided_xor_attack, AttackReport, AttackSession, PairFidelity,
    PartitionReport, TwoSidedReport,
};
use crate::error::{Error, Result};
use crate::protocol::{alice_overlap, channel_fidelity, mutual_information, Measurement, Protocol};

pub const SCHEMA_VERSION: u32 = 1;
pub const TOOL_NAME: &str = "qsc";
pub const TOOL_VERSION: &str = env!("CARGO_PKG_VERSION");

#[derive(Clone, Debug, Serialize)]
pub struct ToolInfo {
    pub name: &'static str,
    pub version: &'static str,
}

#[derive(Clone, Debug, Serialize)]
pub struct ProtocolSummary {
    pub family: &'static str,
    pub n: usize,
    pub m: usize,
    pub p: usize,
    pub dim: usize,
    pub alice_dim: usize,
    pub bob_dim: usize,
    pub theta_leak: f64,
    pub theta_meas: f64,
}

/// Raw fidelities from which `delta` and `epsilon` are recomputed.
#[derive(Clone, Debug, Serialize)]
pub struct Leakage {
    pub pair_fidelities: Vec<PairFidelity>,
    pub channel_fidelities: Vec<ChannelFidelity>,
}

#[derive(Clone, Debug, Default, Serialize)]
pub struct Aggregates {
    pub success_rate: Option<f64>,
    pub mean_success_probability: Option<f64>,
    pub info_bits: Option<f64>,
    pub delta: Option<f64>,
    pub epsilon: Option<f64>,
    pub max_step_uncertainty: Option<f64>,
    pub min_partition_probability: Option<f64>,
    pub min_alice_fidelity: Option<f64>,
    pub fit: Option<BoundFit>,
    /// Set when the fit was attempted and rejected.
    pub fit_error: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct AssertionResult {
    pub name: &'static str,
    pub expected: String,
    pub actual: String,
    pub passed: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct ExperimentReport {
    pub schema: u32,
    pub tool: ToolInfo,
    pub config: ExperimentConfig,
    pub protocol: ProtocolSummary,
    pub inputs: Vec<usize>,
    pub sampled: bool,
    pub runs: Vec<AttackReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub partition: Option<PartitionReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub two_sided: Option<TwoSidedReport>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub leakage: Option<Leakage>,
    pub sweep: Vec<LeakagePoint>,
    pub aggregates: Aggregates,
    pub assertions: Vec<AssertionResult>,
    pub passed: bool,
}

fn summarize(cfg: &ExperimentConfig, p: &Protocol) -> ProtocolSummary {
    let t = p.table();
    ProtocolSummary {
        family: cfg.protocol.name(),
        n: t.n(),
        m: t.m(),
        p: t.p(),
        dim: p.dim(),
        alice_dim: p.alice_dim(),
        bob_dim: p.bob_dim(),
        theta_leak: p.noise().theta_leak,
        theta_meas: p.noise().theta_meas,
    }
}

/// Alice inputs to attack: all of them, or a seeded sample of
/// `max_inputs` when there are more.
pub fn select_inputs(n: usize, max_inputs: usize, seed: u64) -> (Vec<usize>, bool) {
    if n <= max_inputs {
        return ((0..n).collect(), false);
    }
    let mut rng = ChaCha8Rng::seed_from_u64(task_seed(seed, "inputs"));
    let mut picked = rand::seq::index::sample(&mut rng, n, max_inputs).into_vec();
    picked.sort_unstable();
    (picked, true)
}

pub fn run_experiment(cfg: &ExperimentConfig) -> Result<ExperimentReport> {
    cfg.validate()?;
    let cap = cfg.dim_cap;
    let dim = cfg.protocol.protocol_dim(cap)?;
    if dim > cap {
        return Err(Error::DimensionCap { dim, cap });
    }
    if let Some(grid) = &cfg.sweep {
        let worst = cfg.protocol.with_noise(1.0, 1.0)?.protocol_dim(cap)?;
        if worst > cap && grid.points().iter().any(|&(l, m)| l != 0.0 || m != 0.0) {
            return Err(Error::DimensionCap { dim: worst, cap });
        }
    }
    let p = cfg.protocol.build(cap)?;
    let n = p.table().n();
    let (inputs, sampled) = select_inputs(n, cfg.tolerances.max_inputs, cfg.seed);
    let mut report = ExperimentReport {
        schema: SCHEMA_VERSION,
        tool: ToolInfo {
            name: TOOL_NAME,
            version: TOOL_VERSION,
        },
        config: cfg.clone(),
        protocol: summarize(cfg, &p),
        inputs: inputs.clone(),
        sampled,
        runs: Vec::new(),
        partition: None,
        two_sided: None,
        leakage: None,
        sweep: Vec::new(),
        aggregates: Aggregates::default(),
        assertions: Vec::new(),
        passed: true,
    };

    match &cfg.attack {
        AttackConfig::Sequential {
            j_order,
            weights,
            outcome_conditioned,
        } => {
            let order = j_order.resolve(p.table().m());
            let w = weights.resolve(n)?;
            let mut session = AttackSession::new(&p, &order, w, *outcome_conditioned)?;
            for &i in &inputs {
                report.runs.push(session.report(i, &inputs)?);
            }
            let measurements = (0..order.len()).map(|k| session.measurement(k)).collect();
            let leakage = leakage_data(&p, &order, measurements)?;
            let agg = &mut report.aggregates;
            agg.delta = Some(delta_from(&leakage.pair_fidelities));
            agg.epsilon = Some(epsilon_from(&leakage.channel_fidelities));
            summarize_runs(agg, &report.runs);
            report.leakage = Some(leakage);
        }
        AttackConfig::Partition { j1, j2 } => {
            let r = partition_attack(&p, *j1, *j2)?;
            report.aggregates.min_partition_probability = r.min_probability();
            report.partition = Some(r);
        }
        AttackConfig::TwoSided => {
            let r = two_sided_xor_attack(&p)?;
            summarize_runs(&mut report.aggregates, &r.attacks);
            report.aggregates.min_alice_fidelity = Some(r.min_alice_fidelity);
            report.two_sided = Some(r);
        }
    }

    if let Some(grid) = &cfg.sweep {
        for (leak, meas) in grid.points() {
            let noisy = cfg.protocol.with_noise(leak, meas)?.build(cap)?;
            report
                .sweep
                .push(analyze_point(&noisy, cfg.tolerances.typical_fraction)?);
        }
        let points: Vec<FitPoint> = report
            .sweep
            .iter()
            .map(|r| FitPoint {
                n: r.n,
                delta: r.delta,
                epsilon: r.epsilon,
                fidelity: r.step2_fidelity,
            })
            .collect();
        match fit_bound(&points) {
            Ok(fit) => report.aggregates.fit = Some(fit),
            Err(e) => report.aggregates.fit_error = Some(e.to_string()),
        }
    }

    report.assertions = evaluate(&cfg.assertions, &report);
    report.passed = report.assertions.iter().all(|a| a.passed);
    Ok(report)
}

fn summarize_runs(agg: &mut Aggregates, runs: &[AttackReport]) {
    if runs.is_empty() {
        return;
    }
    let count = runs.len() as f64;
    agg.success_rate = Some(runs.iter().filter(|r| r.success).count() as f64 / count);
    agg.mean_success_probability =
        Some(runs.iter().map(|r| r.success_probability).sum::<f64>() / count);
    agg.info_bits = runs.first().map(|r| r.info_bits);
    agg.max_step_uncertainty = Some(
        runs.iter()
            .map(|r| r.max_step_uncertainty)
            .fold(0.0, f64::max),
    );
    if agg.delta.is_none() {
        agg.delta = runs.first().map(|r| r.delta);
        agg.epsilon = runs.first().map(|r| r.epsilon);
    }
}

fn leakage_data(p: &Protocol, order: &[usize], measurements: Vec<&Measurement>) -> Result<Leakage> {
    let (n, m) = (p.table().n(), p.table().m());
    let w = vec![1.0 / n as f64; n];
    let mut pair_fidelities = Vec::new();
    for j1 in 0..m {
        for j2 in j1 + 1..m {
            pair_fidelities.push(PairFidelity {
                j1,
                j2,
                fidelity: alice_overlap(p, j1, j2, &w)?,
            });
        }
    }
    let mut channel_fidelities = Vec::new();
    for (&j, meas) in order.iter().zip(measurements) {
        for i in 0..n {
            channel_fidelities.push(ChannelFidelity {
                i,
                j,
                fidelity: channel_fidelity(meas, &p.honest_matrix(i, j)),
            });
        }
    }
    Ok(Leakage {
        pair_fidelities,
        channel_fidelities,
    })
}

fn evaluate(a: &Assertions, r: &ExperimentReport) -> Vec<AssertionResult> {
    let mut out = Vec::new();
    let agg = &r.aggregates;
    let mut at_least = |name: &'static str, want: Option<f64>, got: Option<f64>| {
        if let Some(want) = want {
            out.push(AssertionResult {
                name,
                expected: format!(">= {want}"),
                actual: got.map_or("missing".into(), |g| g.to_string()),
                passed: got.is_some_and(|g| g >= want),
            });
        }
    };
    at_least("min_success_rate", a.min_success_rate, agg.success_rate);
    at_least("min_info_bits", a.min_info_bits, agg.info_bits);
    let mut at_most = |name: &'static str, want: Option<f64>, got: Option<f64>| {
        if let Some(want) = want {
            out.push(AssertionResult {
                name,
                expected: format!("<= {want}"),
                actual: got.map_or("missing".into(), |g| g.to_string()),
                passed: got.is_some_and(|g| g <= want),
            });
        }
    };
    at_most("max_delta", a.max_delta, agg.delta);
    at_most("max_epsilon", a.max_epsilon, agg.epsilon);
    at_most(
        "max_fit_residual",
        a.max_fit_residual,
        agg.fit.map(|f| f.max_residual),
    );
    if a.deterministic_steps == Some(true) {
        let tol = r.config.tolerances.deterministic;
        let worst = agg.max_step_uncertainty;
        out.push(AssertionResult {
            name: "deterministic_steps",
            expected: format!("<= {tol}"),
            actual: worst.map_or("missing".into(), |w| w.to_string()),
            passed: worst.is_some_and(|w| w <= tol),
        });
    }
    if a.nine_of_ten == Some(true) {
        let bad = r.sweep.iter().filter(|p| !p.nine_of_ten.holds).count();
        out.push(AssertionResult {
            name: "nine_of_ten",
            expected: "holds at every grid point".into(),
            actual: format!("{bad} failing points of {}", r.sweep.len()),
            passed: bad == 0 && !r.sweep.is_empty(),
        });
    }
    out
}

impl ExperimentReport {
    pub fn to_json(&self) -> Result<String> {
        let mut s =
            serde_json::to_string_pretty(self).map_err(|e| Error::Numerical(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }

    /// Flat projection: sweep rows when a sweep ran, otherwise one row per
    /// attack run or partition branch.
    pub fn to_csv(&self) -> String {
        let mut out = String::new();
        if !self.sweep.is_empty() {
            out.push_str("theta_leak,theta_meas,delta,epsilon,step2_fidelity,nine_of_ten\n");
            for r in &self.sweep {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.theta_leak,
                    r.theta_meas,
                    r.delta,
                    r.epsilon,
                    r.step2_fidelity,
                    r.nine_of_ten.holds
                ));
            }
        } else if let Some(part) = &self.partition {
            out.push_str("value,inputs,probability,worst_case,achieved_overlap\n");
            for b in &part.branches {
                let inputs = b
                    .inputs
                    .iter()
                    .map(|i| i.to_string())
                    .collect::<Vec<_>>()
                    .join(" ");
                match &b.outcome {
                    crate::attack::PartitionOutcome::NoGain { .. } => {
                        out.push_str(&format!("{},{inputs},,,\n", b.value));
                    }
                    crate::attack::PartitionOutcome::Discrimination {
                        probability,
                        worst_case,
                        achieved_overlap,
                        ..
                    } => out.push_str(&format!(
                        "{},{inputs},{probability},{worst_case},{achieved_overlap}\n",
                        b.value
                    )),
                }
            }
        } else {
            out.push_str("i,success,success_probability,info_bits,delta,epsilon\n");
            let runs = self.two_sided.as_ref().map_or(&self.runs, |t| &t.attacks);
            for r in runs {
                out.push_str(&format!(
                    "{},{},{},{},{},{}\n",
                    r.i, r.success, r.success_probability, r.info_bits, r.delta, r.epsilon
                ));
            }
        }
        out
    }

    pub fn render(&self, format: OutputFormat) -> Result<String> {
        match format {
            OutputFormat::Json => self.to_json(),
            OutputFormat::Csv => Ok(self.to_csv()),
        }
    }
}

/// Write through a temporary file in the target directory and rename.
pub fn write_atomic(path: &Path, contents: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(d) if !d.as_os_str().is_empty() => d,
        _ => Path::new("."),
    };
    let io = |e: std::io::Error| Error::Io(format!("{}: {e}", path.display()));
    let mut tmp = tempfile::NamedTempFile::new_in(dir).map_err(io)?;
    tmp.write_all(contents.as_bytes()).map_err(io)?;
    tmp.as_file().sync_all().map_err(io)?;
    tmp.persist(path).map_err(|e| io(e.error))?;
    Ok(())
}

fn close(a: f64, b: f64) -> bool {
    (a - b).abs() <= 1e-9
}

fn num(v: &Value) -> Option<f64> {
    v.as_f64()
}

fn list_min(v: &Value, field: &str) -> Option<f64> {
    v.as_array()?
        .iter()
        .map(|x| x[field].as_f64())
        .try_fold(1.0f64, |acc, x| x.map(|x| acc.min(x)))
}

/// Recompute the derived figures of a serialized report from the raw data
/// stored alongside them. Returns a description of every mismatch.
pub fn recheck_report(report: &Value) -> Vec<String> {
    let mut bad = Vec::new();
    let agg = &report["aggregates"];
    let leak = &report["leakage"];
    if !leak.is_null() {
        if let (Some(d), Some(f)) = (
            num(&agg["delta"]),
            list_min(&leak["pair_fidelities"], "fidelity"),
        ) {
            if !close(d, (1.0 - f).max(0.0)) {
                bad.push(format!("delta {d} vs {}", 1.0 - f));
            }
        }
        if let (Some(e), Some(f)) = (
            num(&agg["epsilon"]),
            list_min(&leak["channel_fidelities"], "fidelity"),
        ) {
            if !close(e, (1.0 - f).max(0.0)) {
                bad.push(format!("epsilon {e} vs {}", 1.0 - f));
            }
        }
    }
    let runs = match report["two_sided"]["attacks"].as_array() {
        Some(a) => a.clone(),
        None => report["runs"].as_array().cloned().unwrap_or_default(),
    };
    if !runs.is_empty() {
        let mut keys: Vec<String> = Vec::new();
        let mut rows: Vec<Vec<(usize, f64)>> = Vec::new();
        for run in &runs {
            let mut row = Vec::new();
            let expected: Vec<Value> = run["recovered_row"]
                .as_array()
                .map(|r| r.iter().map(|x| x["expected"].clone()).collect())
                .unwrap_or_default();
            let mut success = 0.0;
            for t in run["transcripts"].as_array().into_iter().flatten() {
                let key = t["labels"].to_string();
                let prob = t["probability"].as_f64().unwrap_or(f64::NAN);
                if t["labels"].as_array().is_some_and(|l| *l == expected) {
                    success += prob;
                }
                let idx = keys.iter().position(|k| *k == key).unwrap_or_else(|| {
                    keys.push(key);
                    keys.len() - 1
                });
                row.push((idx, prob));
            }
            if let Some(s) = num(&run["success_probability"]) {
                if !close(s, success) {
                    bad.push(format!(
                        "run {}: success probability {s} vs {success}",
                        run["i"]
                    ));
                }
            }
            rows.push(row);
        }
        let conditional: Vec<Vec<f64>> = rows
            .iter()
            .map(|row| {
                let total: f64 = row.iter().map(|x| x.1).sum();
                let mut d = vec![0.0; keys.len()];
                for &(k, p) in row {
                    d[k] += p / total;
                }
                d
            })
            .collect();
        let prior = vec![1.0 / runs.len() as f64; runs.len()];
        match (
            mutual_information(&prior, &conditional),
            num(&agg["info_bits"]),
        ) {
            (Ok(mi), Some(stored)) if !close(mi, stored) => {
                bad.push(format!("info_bits {stored} vs {mi}"))
            }
            (Err(e), _) => bad.push(format!("info_bits: {e}")),
            _ => {}
        }
    }
    for (k, row) in report["sweep"].as_array().into_iter().flatten().enumerate() {
        let checks = [
            (
                "delta",
                list_min(&row["pair_fidelities"], "fidelity").map(|f| (1.0 - f).max(0.0)),
            ),
            (
                "epsilon",
                list_min(&row["channel_fidelities"], "fidelity").map(|f| (1.0 - f).max(0.0)),
            ),
            ("step2_fidelity", list_min(&row["step_two"], "fidelity")),
        ];
        for (field, want) in checks {
            match (num(&row[field]), want) {
                (Some(got), Some(want)) if close(got, want) => {}
                (got, want) => bad.push(format!("sweep row {k}: {field} {got:?} vs {want:?}")),
            }
        }
    }
    bad
}
