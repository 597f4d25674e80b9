//! Tridiagonal solvers and linear complementarity strategies for the
//! implicit baselines.
//!
//! The LCP solved at each implicit step is
//!
//! ```text
//! x >= F,   A x >= rhs,   (x - F) . (A x - rhs) = 0
//! ```
//!
//! with `A` tridiagonal and diagonally dominant.

use crate::error::{Error, Result};
use crate::pde1d::TridiagonalOperator;
use crate::rkl::Obstacle;
use serde::{Deserialize, Serialize};

/// Banded matrix `A` of a tridiagonal linear system.
#[derive(Debug, Clone, PartialEq)]
pub struct TridiagonalSystem {
    pub lower: Vec<f64>,
    pub diag: Vec<f64>,
    pub upper: Vec<f64>,
}

impl TridiagonalSystem {
    /// `I - theta k M`.
    pub fn implicit(op: &TridiagonalOperator, theta_k: f64) -> Self {
        Self {
            lower: op.lower.iter().map(|a| -theta_k * a).collect(),
            diag: op.diag.iter().map(|b| 1.0 - theta_k * b).collect(),
            upper: op.upper.iter().map(|c| -theta_k * c).collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.diag.len()
    }

    pub fn is_empty(&self) -> bool {
        self.diag.is_empty()
    }

    pub fn mul(&self, x: &[f64]) -> Vec<f64> {
        let n = self.len();
        (0..n)
            .map(|i| {
                let mut v = self.diag[i] * x[i];
                if i > 0 {
                    v += self.lower[i] * x[i - 1];
                }
                if i + 1 < n {
                    v += self.upper[i] * x[i + 1];
                }
                v
            })
            .collect()
    }

    fn check(&self, rhs: &[f64]) -> Result<()> {
        let n = self.len();
        for len in [self.lower.len(), self.upper.len(), rhs.len()] {
            if len != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: len,
                });
            }
        }
        if n == 0 {
            return Err(Error::InvalidArgument("empty system".into()));
        }
        Ok(())
    }
}

/// Thomas elimination.
pub fn thomas_solve(sys: &TridiagonalSystem, rhs: &[f64]) -> Result<Vec<f64>> {
    sys.check(rhs)?;
    let n = sys.len();
    let mut c = vec![0.0; n];
    let mut d = vec![0.0; n];
    let mut piv = sys.diag[0];
    if piv == 0.0 {
        return Err(Error::ZeroPivot { row: 0 });
    }
    c[0] = sys.upper[0] / piv;
    d[0] = rhs[0] / piv;
    for i in 1..n {
        piv = sys.diag[i] - sys.lower[i] * c[i - 1];
        if piv == 0.0 {
            return Err(Error::ZeroPivot { row: i });
        }
        c[i] = if i + 1 < n { sys.upper[i] / piv } else { 0.0 };
        d[i] = (rhs[i] - sys.lower[i] * d[i - 1]) / piv;
    }
    for i in (0..n - 1).rev() {
        d[i] -= c[i] * d[i + 1];
    }
    Ok(d)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum Monotone {
    Increasing,
    Decreasing,
}

fn obstacle_direction(f: &[f64]) -> Option<Monotone> {
    if f.windows(2).all(|w| w[1] <= w[0]) {
        Some(Monotone::Decreasing)
    } else if f.windows(2).all(|w| w[1] >= w[0]) {
        Some(Monotone::Increasing)
    } else {
        None
    }
}

/// Brennan-Schwartz: a single elimination sweep followed by a projected
/// substitution that starts inside the exercise region.
///
/// For a non-increasing obstacle (put) the upper band is eliminated from the
/// top row downwards and the projected substitution runs upwards from
/// `x_0`; a non-decreasing obstacle (call) uses the mirrored order.
///
/// The substitution ends at the far boundary. If the projection binds there
/// (the one-sided boundary row can push that node below the obstacle), the
/// node is pinned to the obstacle and the remaining rows are solved again.
pub fn brennan_schwartz_solve(
    sys: &TridiagonalSystem,
    rhs: &[f64],
    obstacle: Obstacle<'_>,
) -> Result<Vec<f64>> {
    let bound = match obstacle {
        Obstacle::Unconstrained => return thomas_solve(sys, rhs),
        Obstacle::Lower(b) => b,
    };
    sys.check(rhs)?;
    let n = sys.len();
    if bound.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: bound.len(),
        });
    }
    let dir = obstacle_direction(bound).ok_or(Error::NonMonotoneObstacle)?;
    let mut x = bound.to_vec();
    let (mut lo, mut hi) = (0, n);
    while lo < hi {
        let pinned = match dir {
            Monotone::Decreasing => {
                let mut r = rhs[lo..hi].to_vec();
                if hi < n {
                    r[hi - lo - 1] -= sys.upper[hi - 1] * bound[hi];
                }
                let (pinned, part) = sweep_put(&sys.lower[lo..hi], &sys.diag[lo..hi], &sys.upper[lo..hi], &r, &bound[lo..hi])?;
                x[lo..hi].copy_from_slice(&part);
                pinned
            }
            Monotone::Increasing => {
                let mut r = rhs[lo..hi].to_vec();
                if lo > 0 {
                    r[0] -= sys.lower[lo] * bound[lo - 1];
                }
                let (pinned, part) = sweep_call(&sys.lower[lo..hi], &sys.diag[lo..hi], &sys.upper[lo..hi], &r, &bound[lo..hi])?;
                x[lo..hi].copy_from_slice(&part);
                pinned
            }
        };
        if !pinned {
            break;
        }
        match dir {
            Monotone::Decreasing => hi -= 1,
            Monotone::Increasing => lo += 1,
        }
    }
    Ok(x)
}

/// Put-ordered sweep on a contiguous block. Returns whether the projection
/// bound at the last row, along with the solution.
fn sweep_put(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64], bound: &[f64]) -> Result<(bool, Vec<f64>)> {
    let n = diag.len();
    let mut dd = diag.to_vec();
    let mut rr = rhs.to_vec();
    for i in (0..n - 1).rev() {
        if dd[i + 1] == 0.0 {
            return Err(Error::ZeroPivot { row: i + 1 });
        }
        let f = upper[i] / dd[i + 1];
        dd[i] -= f * lower[i + 1];
        rr[i] -= f * rr[i + 1];
    }
    if dd[0] == 0.0 {
        return Err(Error::ZeroPivot { row: 0 });
    }
    let mut x = vec![0.0; n];
    let mut free = rr[0] / dd[0];
    x[0] = free.max(bound[0]);
    for i in 1..n {
        free = (rr[i] - lower[i] * x[i - 1]) / dd[i];
        x[i] = free.max(bound[i]);
    }
    Ok((n > 1 && free < bound[n - 1], x))
}

/// Mirror image of [`sweep_put`]; the far row is the first one.
fn sweep_call(lower: &[f64], diag: &[f64], upper: &[f64], rhs: &[f64], bound: &[f64]) -> Result<(bool, Vec<f64>)> {
    let n = diag.len();
    let mut dd = diag.to_vec();
    let mut rr = rhs.to_vec();
    for i in 1..n {
        if dd[i - 1] == 0.0 {
            return Err(Error::ZeroPivot { row: i - 1 });
        }
        let f = lower[i] / dd[i - 1];
        dd[i] -= f * upper[i - 1];
        rr[i] -= f * rr[i - 1];
    }
    if dd[n - 1] == 0.0 {
        return Err(Error::ZeroPivot { row: n - 1 });
    }
    let mut x = vec![0.0; n];
    let mut free = rr[n - 1] / dd[n - 1];
    x[n - 1] = free.max(bound[n - 1]);
    for i in (0..n - 1).rev() {
        free = (rr[i] - upper[i] * x[i + 1]) / dd[i];
        x[i] = free.max(bound[i]);
    }
    Ok((n > 1 && free < bound[0], x))
}

/// Projected successive over-relaxation settings.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct PsorConfig {
    pub omega: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for PsorConfig {
    fn default() -> Self {
        Self {
            omega: 1.3,
            tolerance: 1e-10,
            max_iterations: 10_000,
        }
    }
}

/// Projected SOR, iterated until the estimated distance to the fixed point,
/// `d rho / (1 - rho)` with `d` the largest componentwise update and `rho`
/// the observed contraction of successive updates, falls below
/// `cfg.tolerance`. `guess` seeds the iteration (defaults to `rhs`).
pub fn psor_solve(
    sys: &TridiagonalSystem,
    rhs: &[f64],
    obstacle: Obstacle<'_>,
    cfg: &PsorConfig,
    guess: Option<&[f64]>,
) -> Result<Vec<f64>> {
    sys.check(rhs)?;
    if !(cfg.omega > 0.0 && cfg.omega < 2.0) {
        return Err(Error::InvalidArgument(format!(
            "relaxation factor must lie in (0, 2), got {}",
            cfg.omega
        )));
    }
    let n = sys.len();
    let bound = match obstacle {
        Obstacle::Lower(b) => {
            if b.len() != n {
                return Err(Error::DimensionMismatch {
                    expected: n,
                    actual: b.len(),
                });
            }
            Some(b)
        }
        Obstacle::Unconstrained => None,
    };
    let mut x = guess.unwrap_or(rhs).to_vec();
    if let Some(b) = bound {
        for (xi, bi) in x.iter_mut().zip(b) {
            *xi = xi.max(*bi);
        }
    }
    let mut update = f64::INFINITY;
    for _ in 0..cfg.max_iterations {
        let prev = update;
        update = 0.0;
        for i in 0..n {
            let mut r = rhs[i];
            if i > 0 {
                r -= sys.lower[i] * x[i - 1];
            }
            if i + 1 < n {
                r -= sys.upper[i] * x[i + 1];
            }
            let gs = r / sys.diag[i];
            let mut xn = x[i] + cfg.omega * (gs - x[i]);
            if let Some(b) = bound {
                xn = xn.max(b[i]);
            }
            update = update.max((xn - x[i]).abs());
            x[i] = xn;
        }
        if update < cfg.tolerance {
            let rho = update / prev;
            let noise = 64.0 * f64::EPSILON * x.iter().fold(0.0f64, |m, v| m.max(v.abs()));
            if update <= 0.1 * cfg.tolerance || update <= noise || (rho < 1.0 && update * rho / (1.0 - rho) < cfg.tolerance) {
                return Ok(x);
            }
        }
    }
    Err(Error::PsorNotConverged {
        iterations: cfg.max_iterations,
        residual: update,
    })
}

/// How the implicit schemes resolve the early-exercise constraint.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize, Default)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum LcpStrategy {
    #[default]
    BrennanSchwartz,
    Psor(PsorConfig),
}

impl LcpStrategy {
    pub fn solve(
        &self,
        sys: &TridiagonalSystem,
        rhs: &[f64],
        obstacle: Obstacle<'_>,
        guess: Option<&[f64]>,
    ) -> Result<Vec<f64>> {
        match (self, obstacle) {
            (_, Obstacle::Unconstrained) => thomas_solve(sys, rhs),
            (LcpStrategy::BrennanSchwartz, _) => brennan_schwartz_solve(sys, rhs, obstacle),
            (LcpStrategy::Psor(cfg), _) => psor_solve(sys, rhs, obstacle, cfg, guess),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ImplicitScheme {
    Euler,
    CrankNicolson,
}

/// One implicit step of size `k` for `df/dtau = M f`.
///
/// Euler solves `(I - k M) f' = f`; Crank-Nicolson solves
/// `(I - k/2 M) f' = (I + k/2 M) f`.
pub fn implicit_step(
    scheme: ImplicitScheme,
    op: &TridiagonalOperator,
    k: f64,
    f: &[f64],
    obstacle: Obstacle<'_>,
    strategy: &LcpStrategy,
) -> Result<Vec<f64>> {
    if k == 0.0 {
        return Ok(f.to_vec());
    }
    match scheme {
        ImplicitScheme::Euler => {
            let sys = TridiagonalSystem::implicit(op, k);
            strategy.solve(&sys, f, obstacle, Some(f))
        }
        ImplicitScheme::CrankNicolson => {
            let sys = TridiagonalSystem::implicit(op, 0.5 * k);
            let explicit = TridiagonalSystem::implicit(op, -0.5 * k);
            let rhs = explicit.mul(f);
            strategy.solve(&sys, &rhs, obstacle, Some(f))
        }
    }
}
