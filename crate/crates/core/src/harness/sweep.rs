//! Leakage figures of one noisy protocol: delta, epsilon, the step-2
//! fidelity of the unconditioned attack, and the nine-out-of-ten check.

use serde::Serialize;

use crate::attack::{synthesize_rotation, PairFidelity};
use crate::error::Result;
use crate::linalg::{nuclear_norm, CMat, C64};
use crate::protocol::{alice_overlap, build_f_measurement, channel_fidelity, epr_matrix, Protocol};

#[derive(Clone, Debug, Serialize)]
pub struct ChannelFidelity {
    pub i: usize,
    pub j: usize,
    pub fidelity: f64,
}

/// Per-input data for one ordered pair `(j1, j2)` of the uniform attack.
#[derive(Clone, Debug, Serialize)]
pub struct StepTwo {
    pub j1: usize,
    pub j2: usize,
    pub i: usize,
    /// `F(V E(rho^{i,j1}) V^dagger, rho^{i,j2})`
    pub fidelity: f64,
    /// `Re <v_{i,j2}| V |v_{i,j1}>`, capped at 1.
    pub overlap: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize)]
pub struct NineOfTen {
    /// Ordered pairs whose mean overlap exceeds `1 - delta`.
    pub pairs_checked: usize,
    /// Smallest fraction of inputs with overlap above `1 - 10 delta` over
    /// the checked pairs.
    pub min_fraction: Option<f64>,
    pub holds: bool,
}

#[derive(Clone, Debug, Serialize)]
pub struct LeakagePoint {
    pub theta_leak: f64,
    pub theta_meas: f64,
    pub n: usize,
    pub delta: f64,
    pub epsilon: f64,
    /// Smallest step-2 fidelity over ordered pairs and inputs.
    pub step2_fidelity: f64,
    pub nine_of_ten: NineOfTen,
    pub pair_fidelities: Vec<PairFidelity>,
    pub channel_fidelities: Vec<ChannelFidelity>,
    pub step_two: Vec<StepTwo>,
}

/// Evaluate every figure on `p` with uniform attack weights.
pub fn analyze_point(p: &Protocol, typical_fraction: f64) -> Result<LeakagePoint> {
    let t = p.table();
    let (n, m) = (t.n(), t.m());
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
    let delta = delta_from(&pair_fidelities);

    let honest: Vec<Vec<CMat>> = (0..m)
        .map(|j| (0..n).map(|i| p.honest_matrix(i, j)).collect())
        .collect();
    let measurements = (0..m)
        .map(|j| build_f_measurement(p, j))
        .collect::<Result<Vec<_>>>()?;
    let mut channel_fidelities = Vec::with_capacity(n * m);
    for j in 0..m {
        for i in 0..n {
            channel_fidelities.push(ChannelFidelity {
                i,
                j,
                fidelity: channel_fidelity(&measurements[j], &honest[j][i]),
            });
        }
    }
    let epsilon = epsilon_from(&channel_fidelities);

    let mut step_two = Vec::new();
    for j1 in 0..m {
        let epr1 = epr_matrix(p, j1, &w)?;
        let meas = &measurements[j1];
        // Rows of the non-selective post-measurement state, one block per
        // Kraus operator.
        let stacked: Vec<CMat> = honest[j1]
            .iter()
            .map(|m1| {
                let (k, da) = (meas.outcomes().len(), m1.nrows());
                let mut s = CMat::zeros(k * da, m1.ncols());
                for o in 0..k {
                    s.rows_mut(o * da, da).copy_from(&meas.apply_rows(o, m1));
                }
                s
            })
            .collect();
        for j2 in 0..m {
            if j1 == j2 {
                continue;
            }
            let rot = synthesize_rotation(&epr1, &epr_matrix(p, j2, &w)?)?;
            // dense V^T: one product per input beats applying the reflectors
            let vt = rot.map.to_matrix().transpose();
            for i in 0..n {
                let m2 = &honest[j2][i];
                let rotated = &honest[j1][i] * &vt;
                let overlap = m2
                    .iter()
                    .zip(rotated.iter())
                    .map(|(a, b)| a.conj() * b)
                    .sum::<C64>()
                    .re
                    .min(1.0);
                let core = (&stacked[i] * &vt).map(|z| z.conj()) * m2.transpose();
                step_two.push(StepTwo {
                    j1,
                    j2,
                    i,
                    fidelity: nuclear_norm(&core).min(1.0),
                    overlap,
                });
            }
        }
    }
    let step2_fidelity = step_two.iter().map(|s| s.fidelity).fold(1.0, f64::min);
    let nine_of_ten = nine_of_ten(&step_two, n, m, delta, typical_fraction);
    let noise = p.noise();
    Ok(LeakagePoint {
        theta_leak: noise.theta_leak,
        theta_meas: noise.theta_meas,
        n,
        delta,
        epsilon,
        step2_fidelity,
        nine_of_ten,
        pair_fidelities,
        channel_fidelities,
        step_two,
    })
}

pub fn delta_from(pairs: &[PairFidelity]) -> f64 {
    (1.0 - pairs.iter().map(|f| f.fidelity).fold(1.0, f64::min)).max(0.0)
}

pub fn epsilon_from(channels: &[ChannelFidelity]) -> f64 {
    (1.0 - channels.iter().map(|c| c.fidelity).fold(1.0, f64::min)).max(0.0)
}

/// Whenever the mean overlap of a pair exceeds `1 - delta`, at least a
/// `1 - typical_fraction` share of inputs must have overlap above
/// `1 - 10 delta`.
pub fn nine_of_ten(
    step_two: &[StepTwo],
    n: usize,
    m: usize,
    delta: f64,
    typical_fraction: f64,
) -> NineOfTen {
    let mut pairs_checked = 0;
    let mut min_fraction: Option<f64> = None;
    for j1 in 0..m {
        for j2 in 0..m {
            if j1 == j2 {
                continue;
            }
            let overlaps: Vec<f64> = step_two
                .iter()
                .filter(|s| s.j1 == j1 && s.j2 == j2)
                .map(|s| s.overlap)
                .collect();
            let mean = overlaps.iter().sum::<f64>() / n as f64;
            if mean > 1.0 - delta {
                pairs_checked += 1;
                let typical = overlaps.iter().filter(|&&o| o > 1.0 - 10.0 * delta).count();
                let frac = typical as f64 / n as f64;
                min_fraction = Some(min_fraction.map_or(frac, |f| f.min(frac)));
            }
        }
    }
    NineOfTen {
        pairs_checked,
        min_fraction,
        holds: min_fraction.is_none_or(|f| f >= 1.0 - typical_fraction),
    }
}
