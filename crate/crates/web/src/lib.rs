//! wasm-bindgen entry points for the static demo page in `www/`.
//!
//! Each export takes plain numbers or a JSON config and returns a JSON
//! string. The `*_json` functions hold the logic so they can be tested
//! natively.

use serde::Serialize;
use wasm_bindgen::prelude::*;

use qsc_core::attack::{partition_attack, PartitionOutcome};
use qsc_core::harness::{analyze_point, run_experiment, ExperimentConfig};
use qsc_core::zoo::{add_noise, make_ideal_one_sided, make_oblivious_id};
use qsc_core::{Error, Result};

/// Largest oblivious-id size the demo accepts; keeps the page responsive.
pub const MAX_N: usize = 5;
pub const MAX_STEPS: usize = 8;

#[derive(Debug, Serialize)]
pub struct Heatmap {
    pub n: usize,
    pub leak: Vec<f64>,
    pub meas: Vec<f64>,
    /// Indexed `[leak][meas]`.
    pub delta: Vec<Vec<f64>>,
    pub epsilon: Vec<Vec<f64>>,
    pub step2: Vec<Vec<f64>>,
    pub nine_of_ten: Vec<Vec<bool>>,
}

#[derive(Debug, Serialize)]
pub struct CurvePoint {
    pub leak: f64,
    /// Smallest per-input success probability over branches, 1 when
    /// no branch needs discrimination.
    pub worst_case: f64,
    pub mean: f64,
}

fn check_n(n: usize) -> Result<()> {
    if !(2..=MAX_N).contains(&n) {
        return Err(Error::InvalidParameter(format!("n must be in 2..={MAX_N}")));
    }
    Ok(())
}

fn to_json<T: Serialize>(value: &T) -> Result<String> {
    serde_json::to_string(value).map_err(|e| Error::Numerical(e.to_string()))
}

fn axis(steps: usize, max_angle: f64) -> Vec<f64> {
    (0..steps)
        .map(|k| max_angle * k as f64 / (steps - 1).max(1) as f64)
        .collect()
}

pub fn noise_heatmap_json(n: usize, steps: usize, max_angle: f64) -> Result<String> {
    check_n(n)?;
    if !(2..=MAX_STEPS).contains(&steps) {
        return Err(Error::InvalidParameter(format!(
            "steps must be in 2..={MAX_STEPS}"
        )));
    }
    if !(max_angle > 0.0 && max_angle <= std::f64::consts::FRAC_PI_2) {
        return Err(Error::InvalidAngle(max_angle));
    }
    let base = make_ideal_one_sided(&make_oblivious_id(n)?)?;
    let angles = axis(steps, max_angle);
    let mut map = Heatmap {
        n,
        leak: angles.clone(),
        meas: angles.clone(),
        delta: Vec::new(),
        epsilon: Vec::new(),
        step2: Vec::new(),
        nine_of_ten: Vec::new(),
    };
    for &leak in &angles {
        let (mut d, mut e, mut s, mut nine) = (Vec::new(), Vec::new(), Vec::new(), Vec::new());
        for &meas in &angles {
            let pt = analyze_point(&add_noise(&base, leak, meas)?, 0.1)?;
            d.push(pt.delta);
            e.push(pt.epsilon);
            s.push(pt.step2_fidelity);
            nine.push(pt.nine_of_ten.holds);
        }
        map.delta.push(d);
        map.epsilon.push(e);
        map.step2.push(s);
        map.nine_of_ten.push(nine);
    }
    to_json(&map)
}

pub fn partition_curve_json(n: usize, j1: usize, j2: usize, leaks: &[f64]) -> Result<String> {
    check_n(n)?;
    let base = make_ideal_one_sided(&make_oblivious_id(n)?)?;
    let mut out = Vec::new();
    for &leak in leaks {
        let report = partition_attack(&add_noise(&base, leak, 0.0)?, j1, j2)?;
        let (mut worst, mut mean) = (1.0f64, 1.0f64);
        for b in &report.branches {
            if let PartitionOutcome::Discrimination {
                probability,
                worst_case,
                ..
            } = &b.outcome
            {
                worst = worst.min(*worst_case);
                mean = mean.min(*probability);
            }
        }
        out.push(CurvePoint {
            leak,
            worst_case: worst,
            mean,
        });
    }
    to_json(&out)
}

pub fn run_config_json(config: &str) -> Result<String> {
    let mut cfg = ExperimentConfig::from_json(config)?;
    // nothing is written from the browser
    cfg.output = None;
    run_experiment(&cfg)?.to_json()
}

fn js(r: Result<String>) -> std::result::Result<String, JsValue> {
    r.map_err(|e| JsValue::from_str(&e.to_string()))
}

/// Delta, epsilon and step-2 fidelity over a square grid of noise angles
/// on oblivious identification of size `n`.
#[wasm_bindgen]
pub fn noise_heatmap(
    n: usize,
    steps: usize,
    max_angle: f64,
) -> std::result::Result<String, JsValue> {
    js(noise_heatmap_json(n, steps, max_angle))
}

/// Partition-attack success against the leak angle.
#[wasm_bindgen]
pub fn partition_curve(
    n: usize,
    j1: usize,
    j2: usize,
    leaks: &[f64],
) -> std::result::Result<String, JsValue> {
    js(partition_curve_json(n, j1, j2, leaks))
}

/// Run an experiment config and return the full report.
#[wasm_bindgen]
pub fn run_config(config: &str) -> std::result::Result<String, JsValue> {
    js(run_config_json(config))
}
