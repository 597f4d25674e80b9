//! Black-Scholes / local-volatility operator on a nonuniform 1D mesh.
//!
//! The operator `M` is the right-hand side of `df/dtau = M f` (tau = time to
//! maturity), stored as three bands without the time-step factor. Interior
//! rows use central differences; the boundary rows assume a vanishing second
//! derivative and use one-sided first differences for the drift.

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use crate::rkl::LinearOperator;
use serde::{Deserialize, Serialize};

/// A model coefficient: constant, or tabulated in the asset dimension
/// (piecewise linear, flat beyond the table).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum Coefficient {
    Constant(f64),
    Table { spots: Vec<f64>, values: Vec<f64> },
}

impl Coefficient {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Coefficient::Constant(c) => *c,
            Coefficient::Table { spots, values } => {
                if x <= spots[0] {
                    return values[0];
                }
                let last = spots.len() - 1;
                if x >= spots[last] {
                    return values[last];
                }
                let i = spots.partition_point(|&s| s <= x);
                let t = (x - spots[i - 1]) / (spots[i] - spots[i - 1]);
                values[i - 1] * (1.0 - t) + values[i] * t
            }
        }
    }

    fn validate(&self, name: &str) -> Result<()> {
        match self {
            Coefficient::Constant(c) if c.is_finite() => Ok(()),
            Coefficient::Table { spots, values }
                if !spots.is_empty()
                    && spots.len() == values.len()
                    && spots.windows(2).all(|w| w[0] < w[1]) =>
            {
                Ok(())
            }
            _ => Err(Error::InvalidArgument(format!("invalid coefficient {name}"))),
        }
    }
}

impl From<f64> for Coefficient {
    fn from(c: f64) -> Self {
        Coefficient::Constant(c)
    }
}

/// Volatility, drift and discount rate of the one-factor model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BSModel {
    pub sigma: Coefficient,
    pub mu: Coefficient,
    pub r: Coefficient,
}

impl BSModel {
    /// Constant coefficients with drift `r - q`.
    pub fn constant(sigma: f64, r: f64, q: f64) -> Self {
        Self {
            sigma: sigma.into(),
            mu: (r - q).into(),
            r: r.into(),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.sigma.validate("sigma")?;
        self.mu.validate("mu")?;
        self.r.validate("r")?;
        let negative = match &self.sigma {
            Coefficient::Constant(s) => *s < 0.0,
            Coefficient::Table { values, .. } => values.iter().any(|s| *s < 0.0),
        };
        if negative {
            return Err(Error::InvalidArgument("volatility must be non-negative".into()));
        }
        Ok(())
    }
}

/// Tridiagonal operator: `(M f)_i = lower_i f_{i-1} + diag_i f_i + upper_i f_{i+1}`.
///
/// `lower[0]` and `upper[m]` are zero. `bhat` is the per-row diagonal
/// magnitude entering the explicit step bound.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalOperator {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
    pub bhat: Vec<f64>,
}

impl TridiagonalOperator {
    pub fn zeros(n: usize) -> Self {
        Self {
            lower: vec![0.0; n],
            diag: vec![0.0; n],
            upper: vec![0.0; n],
            bhat: vec![0.0; n],
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    /// Row sums `lower_i + diag_i + upper_i`.
    pub fn row_sums(&self) -> Vec<f64> {
        (0..self.len())
            .map(|i| self.lower[i] + self.diag[i] + self.upper[i])
            .collect()
    }
}

impl LinearOperator for TridiagonalOperator {
    fn dim(&self) -> usize {
        self.diag.len()
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        let n = self.diag.len();
        if n == 1 {
            out[0] = self.diag[0] * v[0];
            return;
        }
        out[0] = self.diag[0] * v[0] + self.upper[0] * v[1];
        for i in 1..n - 1 {
            out[i] = self.lower[i] * v[i - 1] + self.diag[i] * v[i] + self.upper[i] * v[i + 1];
        }
        out[n - 1] = self.lower[n - 1] * v[n - 2] + self.diag[n - 1] * v[n - 1];
    }
}

/// Assembles the operator with coefficients frozen at time label `t`.
///
/// The tabulated coefficients are time-homogeneous, so `t` only documents the
/// interval the operator belongs to.
pub fn assemble_bs(model: &BSModel, grid: &Grid1D, _t: f64) -> TridiagonalOperator {
    assemble_with(grid, |_, x| (model.sigma.eval(x), model.mu.eval(x), model.r.eval(x)))
}

/// Assembles the operator from per-node `(sigma, mu, r)` given by `coef(i, x_i)`.
pub fn assemble_with<F>(grid: &Grid1D, coef: F) -> TridiagonalOperator
where
    F: Fn(usize, f64) -> (f64, f64, f64),
{
    let x = grid.nodes();
    let m = grid.steps();
    let mut op = TridiagonalOperator::zeros(m + 1);

    for i in 1..m {
        let xi = x[i];
        let (hi, hn) = (grid.spacing(i), grid.spacing(i + 1));
        let (sig, mu, r) = coef(i, xi);
        let diff = sig * sig * xi * xi;
        op.lower[i] = -(mu * hn * xi - diff) / (hi * (hn + hi));
        op.bhat[i] = r + (mu * (hi - hn) * xi + diff) / (hi * hn);
        op.diag[i] = -op.bhat[i];
        op.upper[i] = (mu * hi * xi + diff) / (hn * (hn + hi));
    }

    let (x0, h1) = (x[0], grid.spacing(1));
    let (_, mu0, r0) = coef(0, x0);
    let drift0 = mu0 * x0 / h1;
    op.bhat[0] = r0 + drift0;
    op.diag[0] = -op.bhat[0];
    op.upper[0] = drift0;

    let (xm, hm) = (x[m], grid.spacing(m));
    let (_, mum, rm) = coef(m, xm);
    let driftm = mum * xm / hm;
    op.lower[m] = -driftm;
    op.bhat[m] = rm - driftm;
    op.diag[m] = -op.bhat[m];

    op
}

/// Largest explicit-Euler step, `1 / max_i bhat_i`.
pub fn explicit_max_step(op: &TridiagonalOperator) -> Result<f64> {
    let max = op.bhat.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max > 0.0 {
        Ok(1.0 / max)
    } else {
        Err(Error::UnboundedStep)
    }
}

/// Central first difference at interior node `i`.
#[inline]
pub fn first_difference(grid: &Grid1D, f: &[f64], i: usize) -> f64 {
    let (hi, hn) = (grid.spacing(i), grid.spacing(i + 1));
    (hi * hi * f[i + 1] + (hn * hn - hi * hi) * f[i] - hn * hn * f[i - 1]) / (hi * hn * (hn + hi))
}

/// Central second difference at interior node `i`.
#[inline]
pub fn second_difference(grid: &Grid1D, f: &[f64], i: usize) -> f64 {
    let (hi, hn) = (grid.spacing(i), grid.spacing(i + 1));
    2.0 * (hi * f[i + 1] - (hn + hi) * f[i] + hn * f[i - 1]) / (hi * hn * (hn + hi))
}

/// Delta and gamma at every node; boundary nodes take one-sided first
/// differences and zero gamma.
pub fn greeks(grid: &Grid1D, f: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let m = grid.steps();
    let mut delta = vec![0.0; m + 1];
    let mut gamma = vec![0.0; m + 1];
    for i in 1..m {
        delta[i] = first_difference(grid, f, i);
        gamma[i] = second_difference(grid, f, i);
    }
    delta[0] = (f[1] - f[0]) / grid.spacing(1);
    delta[m] = (f[m] - f[m - 1]) / grid.spacing(m);
    (delta, gamma)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rkl::{rkl_coefficients, stages_for_step};
    use approx::assert_relative_eq;

    #[test]
    fn pure_discounting() {
        let g = Grid1D::uniform(50.0, 150.0, 20).unwrap();
        let model = BSModel {
            sigma: 0.0.into(),
            mu: 0.0.into(),
            r: 0.1.into(),
        };
        let op = assemble_bs(&model, &g, 0.0);
        for i in 0..=20 {
            assert_eq!(op.lower[i], 0.0);
            assert_eq!(op.upper[i], 0.0);
            assert_relative_eq!(op.diag[i], -0.1, epsilon = 1e-15);
        }
        assert_relative_eq!(explicit_max_step(&op).unwrap(), 10.0, epsilon = 1e-12);
    }

    #[test]
    fn unbounded_step_reported() {
        let g = Grid1D::uniform(0.0, 1.0, 4).unwrap();
        let op = assemble_bs(&BSModel::constant(0.0, 0.0, 0.0), &g, 0.0);
        assert_eq!(explicit_max_step(&op), Err(Error::UnboundedStep));
    }

    #[test]
    fn uniform_diffusion_bound() {
        let h = 0.5;
        let g = Grid1D::uniform(0.0, 100.0, 200).unwrap();
        let op = assemble_bs(&BSModel::constant(0.3, 0.0, 0.0), &g, 0.0);
        let xmax = 100.0 - h; // last interior node
        let expected = h * h / (0.09 * xmax * xmax);
        assert_relative_eq!(explicit_max_step(&op).unwrap(), expected, max_relative = 1e-12);
    }

    #[test]
    fn linear_function_is_exact() {
        let g = Grid1D::new(vec![1.0, 1.4, 2.5, 2.7, 3.9, 5.0, 5.1]).unwrap();
        let model = BSModel::constant(0.35, 0.07, 0.02);
        let op = assemble_bs(&model, &g, 0.0);
        let f: Vec<f64> = g.nodes().to_vec();
        let mut out = vec![0.0; f.len()];
        op.apply(&f, &mut out);
        for i in 1..g.steps() {
            let x = g.nodes()[i];
            assert_relative_eq!(out[i], 0.05 * x - 0.07 * x, epsilon = 1e-12);
        }
    }

    #[test]
    fn digital_experiment_stage_count() {
        let g = Grid1D::uniform(68.71, 145.58, 800).unwrap();
        let op = assemble_bs(&BSModel::constant(0.25, 0.10, 0.0), &g, 0.0);
        let dt = explicit_max_step(&op).unwrap();
        let s = stages_for_step(0.01, dt, 0.0);
        let c = rkl_coefficients(s, 0.0).unwrap();
        assert!(c.step_ratio_bound() * dt >= 0.01);
    }
}
