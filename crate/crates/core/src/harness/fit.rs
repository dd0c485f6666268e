//! Least-squares fit of the non-ideal fidelity loss `1 - F ~ c1 n delta +
//! c2 eps`.

use serde::Serialize;

use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct FitPoint {
    pub n: usize,
    pub delta: f64,
    pub epsilon: f64,
    pub fidelity: f64,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct BoundFit {
    pub c1: f64,
    pub c2: f64,
    /// Largest absolute residual of `1 - F` over the points.
    pub max_residual: f64,
    pub points: usize,
}

/// Fit without intercept. Needs at least four points with distinct
/// `(delta, eps)` and a nonsingular design.
pub fn fit_bound(points: &[FitPoint]) -> Result<BoundFit> {
    let mut distinct: Vec<(f64, f64)> = Vec::new();
    for p in points {
        if !distinct
            .iter()
            .any(|&(d, e)| (d - p.delta).abs() <= 1e-15 && (e - p.epsilon).abs() <= 1e-15)
        {
            distinct.push((p.delta, p.epsilon));
        }
    }
    if distinct.len() < 4 {
        return Err(Error::DegenerateFit);
    }
    let rows: Vec<(f64, f64, f64)> = points
        .iter()
        .map(|p| (p.n as f64 * p.delta, p.epsilon, 1.0 - p.fidelity))
        .collect();
    let (mut a11, mut a12, mut a22, mut b1, mut b2) = (0.0, 0.0, 0.0, 0.0, 0.0);
    for &(x1, x2, y) in &rows {
        a11 += x1 * x1;
        a12 += x1 * x2;
        a22 += x2 * x2;
        b1 += x1 * y;
        b2 += x2 * y;
    }
    let det = a11 * a22 - a12 * a12;
    if !(det > 1e-12 * a11 * a22) || a11 == 0.0 || a22 == 0.0 {
        return Err(Error::DegenerateFit);
    }
    let c1 = (b1 * a22 - b2 * a12) / det;
    let c2 = (a11 * b2 - a12 * b1) / det;
    let max_residual = rows
        .iter()
        .map(|&(x1, x2, y)| (y - c1 * x1 - c2 * x2).abs())
        .fold(0.0, f64::max);
    Ok(BoundFit {
        c1,
        c2,
        max_residual,
        points: rows.len(),
    })
}
