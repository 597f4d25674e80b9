//! Refinement ladders: changes, ratios of changes, errors and order fits.

use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceRow {
    pub spacesteps: usize,
    pub timesteps: usize,
    pub value: f64,
    /// Difference to the previous level; absent on the first row.
    pub change: Option<f64>,
    /// Ratio of the previous change to this one; from the third row on.
    pub ratio: Option<f64>,
    /// `value - reference` when a reference is known.
    pub error: Option<f64>,
    pub time_s: f64,
}

/// One finished ladder level before the derived columns are filled in.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct LevelResult {
    pub spacesteps: usize,
    pub timesteps: usize,
    pub value: f64,
    pub time_s: f64,
}

pub fn ladder_rows(levels: &[LevelResult], reference: Option<f64>) -> Vec<ConvergenceRow> {
    let mut rows: Vec<ConvergenceRow> = Vec::with_capacity(levels.len());
    for (i, l) in levels.iter().enumerate() {
        let change = (i > 0).then(|| l.value - levels[i - 1].value);
        let ratio = match (i >= 2, change) {
            (true, Some(c)) => rows[i - 1].change.map(|p| p / c),
            _ => None,
        };
        rows.push(ConvergenceRow {
            spacesteps: l.spacesteps,
            timesteps: l.timesteps,
            value: l.value,
            change,
            ratio,
            error: reference.map(|r| l.value - r),
            time_s: l.time_s,
        });
    }
    rows
}

/// Least-squares slope of `log(err)` against `log(n)`, sign flipped so that
/// an error decaying like `n^-p` gives `p`.
pub fn loglog_order(n: &[f64], err: &[f64]) -> Option<f64> {
    let pts: Vec<(f64, f64)> = n
        .iter()
        .zip(err)
        .filter(|(a, b)| **a > 0.0 && b.abs() > 0.0)
        .map(|(a, b)| (a.ln(), b.abs().ln()))
        .collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    (sxx > 0.0).then(|| -sxy / sxx)
}

/// Euclidean norm of the pointwise difference.
pub fn l2_error(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y).powi(2)).sum::<f64>().sqrt()
}

/// Ratios of consecutive entries, `e[i] / e[i+1]`.
pub fn successive_ratios(e: &[f64]) -> Vec<f64> {
    e.windows(2).map(|w| w[0] / w[1]).collect()
}
