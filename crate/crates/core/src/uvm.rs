//! Uncertain volatility model: the volatility at each node is picked from
//! `{sigma_min, sigma_max}` by the sign of the discrete gamma, then the
//! frozen linear problem is stepped with RKL or backward Euler.

use crate::engine1d::CoefficientCache;
use crate::error::{Error, Result};
use crate::grid::{Grid1D, TimeAxis};
use crate::lcp::{thomas_solve, TridiagonalSystem};
use crate::pde1d::{assemble_with, explicit_max_step, second_difference, TridiagonalOperator};
use crate::poly::Family;
use crate::rkl::{rkl_step, stages_for_step, Obstacle, SchemeCoefficients};
use serde::{Deserialize, Serialize};

pub const RKL_MAX_ITERATIONS: usize = 5;
pub const EULER_MAX_ITERATIONS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Objective {
    /// Best case for a long position (supremum).
    Best,
    /// Worst case for a long position (infimum).
    Worst,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct UvmModel {
    pub sigma_min: f64,
    pub sigma_max: f64,
    pub r: f64,
    pub mu: f64,
    pub objective: Objective,
}

impl UvmModel {
    pub fn validate(&self) -> Result<()> {
        if self.sigma_min > 0.0 && self.sigma_min <= self.sigma_max {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!(
                "need 0 < sigma_min <= sigma_max, got [{}, {}]",
                self.sigma_min, self.sigma_max
            )))
        }
    }
}

/// Volatility per node from the sign of the second difference of `f`.
/// Boundary nodes and zero gamma take the supremum branch.
pub fn select_control(f: &[f64], grid: &Grid1D, model: &UvmModel) -> Vec<f64> {
    let m = grid.steps();
    let mut sigma = vec![model.sigma_max; m + 1];
    for (i, s) in sigma.iter_mut().enumerate().take(m).skip(1) {
        let g = second_difference(grid, f, i);
        let convex = g >= 0.0;
        let take_max = match model.objective {
            Objective::Best => convex,
            Objective::Worst => !convex || g == 0.0,
        };
        *s = if take_max { model.sigma_max } else { model.sigma_min };
    }
    sigma
}

pub fn assemble_uvm(grid: &Grid1D, model: &UvmModel, sigma: &[f64]) -> TridiagonalOperator {
    assemble_with(grid, |i, _| (sigma[i], model.mu, model.r))
}

/// Outcome of one nonlinear step.
#[derive(Debug, Clone, PartialEq)]
pub struct UvmStep {
    pub values: Vec<f64>,
    pub iterations: usize,
    pub converged: bool,
}

/// Explicit step: controls are chosen from the latest iterate and held for
/// all stages, the step is redone from `f`, until the controls repeat.
pub fn uvm_rkl_step(
    coeffs: &SchemeCoefficients,
    grid: &Grid1D,
    model: &UvmModel,
    k: f64,
    f: &[f64],
) -> Result<UvmStep> {
    check_len(grid, f)?;
    let mut sigma = select_control(f, grid, model);
    let mut values = f.to_vec();
    for it in 1..=RKL_MAX_ITERATIONS {
        let op = assemble_uvm(grid, model, &sigma);
        values = rkl_step(coeffs, &op, k, f, Obstacle::Unconstrained)?;
        let next = select_control(&values, grid, model);
        if next == sigma {
            return Ok(UvmStep {
                values,
                iterations: it,
                converged: true,
            });
        }
        sigma = next;
    }
    Ok(UvmStep {
        values,
        iterations: RKL_MAX_ITERATIONS,
        converged: false,
    })
}

/// Backward-Euler step solved by policy iteration.
pub fn uvm_euler_step(grid: &Grid1D, model: &UvmModel, k: f64, f: &[f64]) -> Result<UvmStep> {
    check_len(grid, f)?;
    let mut sigma = select_control(f, grid, model);
    let mut values = f.to_vec();
    for it in 1..=EULER_MAX_ITERATIONS {
        let op = assemble_uvm(grid, model, &sigma);
        values = thomas_solve(&TridiagonalSystem::implicit(&op, k), f)?;
        let next = select_control(&values, grid, model);
        if next == sigma {
            return Ok(UvmStep {
                values,
                iterations: it,
                converged: true,
            });
        }
        sigma = next;
    }
    Ok(UvmStep {
        values,
        iterations: EULER_MAX_ITERATIONS,
        converged: false,
    })
}

fn check_len(grid: &Grid1D, f: &[f64]) -> Result<()> {
    if f.len() == grid.len() {
        Ok(())
    } else {
        Err(Error::DimensionMismatch {
            expected: grid.len(),
            actual: f.len(),
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase")]
pub enum UvmScheme {
    Rkl { shift: f64 },
    Euler,
}

#[derive(Debug, Clone, PartialEq)]
pub struct UvmSolution {
    pub values: Vec<f64>,
    /// Stage counts per step (explicit scheme only).
    pub stages: Vec<usize>,
    /// Control iterations per step.
    pub iterations: Vec<usize>,
    /// Steps whose control iteration hit the cap.
    pub unconverged_steps: usize,
}

/// Marches `terminal` back to time zero.
pub fn uvm_march(
    grid: &Grid1D,
    time: &TimeAxis,
    model: &UvmModel,
    terminal: Vec<f64>,
    scheme: UvmScheme,
) -> Result<UvmSolution> {
    model.validate()?;
    check_len(grid, &terminal)?;
    let worst = assemble_uvm(grid, model, &vec![model.sigma_max; grid.len()]);
    let dt = explicit_max_step(&worst)?;
    let mut cache = CoefficientCache::default();
    let mut f = terminal;
    let mut sol = UvmSolution {
        values: Vec::new(),
        stages: Vec::new(),
        iterations: Vec::new(),
        unconverged_steps: 0,
    };
    for j in (1..=time.steps()).rev() {
        let k = time.step(j);
        let step = match scheme {
            UvmScheme::Rkl { shift } => {
                let s = stages_for_step(k, dt, shift);
                sol.stages.push(s);
                let c = cache.get(Family::Legendre, s, shift)?;
                uvm_rkl_step(c, grid, model, k, &f)?
            }
            UvmScheme::Euler => uvm_euler_step(grid, model, k, &f)?,
        };
        sol.iterations.push(step.iterations);
        if !step.converged {
            sol.unconverged_steps += 1;
        }
        f = step.values;
    }
    sol.values = f;
    Ok(sol)
}
