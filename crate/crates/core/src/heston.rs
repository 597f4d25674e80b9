//! Heston PDE on a truncated `[0, x_max] x [0, v_max]` domain: nine-point
//! stencil with exponential fitting where a cell Peclet number reaches 2,
//! one-sided boundary rows, and RKL marching with optional early exercise.

use crate::engine1d::{CoefficientCache, Exercise};
use crate::error::{Error, Result};
use crate::grid::{Grid1D, TimeAxis};
use crate::ncchi2::ncchi2_quantile;
use crate::payoff::{kreiss_smooth, payoff_values, Payoff};
use crate::poly::Family;
use crate::rkl::{rkl_step, stages_for_step, LinearOperator, Obstacle};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonModel {
    pub kappa: f64,
    pub theta: f64,
    /// Volatility of variance.
    pub sigma: f64,
    pub rho: f64,
    pub r: f64,
    #[serde(default)]
    pub q: f64,
    pub v0: f64,
}

impl HestonModel {
    pub fn validate(&self) -> Result<()> {
        let ok = self.kappa > 0.0
            && self.theta > 0.0
            && self.sigma > 0.0
            && self.rho.abs() <= 1.0
            && self.v0 >= 0.0
            && self.r.is_finite()
            && self.q.is_finite();
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid Heston parameters {self:?}")))
        }
    }

    pub fn feller_satisfied(&self) -> bool {
        2.0 * self.kappa * self.theta >= self.sigma * self.sigma
    }
}

/// Upper truncation bounds `(x_max, v_max)`.
///
/// `x_max = K exp(n_sd sqrt(theta T))`; `v_max` is the `1 - eps_v` quantile
/// of the variance at `T` given `v0`.
pub fn domain_bounds_sd(model: &HestonModel, strike: f64, maturity: f64, n_sd: f64, eps_v: f64) -> Result<(f64, f64)> {
    model.validate()?;
    if !(eps_v > 0.0 && eps_v < 0.5) {
        return Err(Error::InvalidArgument(format!("eps_v must lie in (0, 0.5), got {eps_v}")));
    }
    let x_max = strike * (n_sd * (model.theta * maturity).sqrt()).exp();
    let ekt = (-model.kappa * maturity).exp();
    let s2 = model.sigma * model.sigma;
    let d = 4.0 * model.kappa * model.theta / s2;
    let n = 4.0 * model.kappa * ekt / (s2 * (1.0 - ekt));
    let v_max = ncchi2_quantile(1.0 - eps_v, d, model.v0 * n)? * ekt / n;
    Ok((x_max, v_max))
}

/// [`domain_bounds_sd`] with four standard deviations in the asset.
pub fn domain_bounds(model: &HestonModel, strike: f64, maturity: f64, eps_v: f64) -> Result<(f64, f64)> {
    domain_bounds_sd(model, strike, maturity, 4.0, eps_v)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Grid2D {
    pub x: Grid1D,
    pub v: Grid1D,
}

impl Grid2D {
    pub fn uniform(x_max: f64, v_max: f64, m: usize, n: usize) -> Result<Self> {
        Ok(Self {
            x: Grid1D::uniform(0.0, x_max, m)?,
            v: Grid1D::uniform(0.0, v_max, n)?,
        })
    }

    /// Uniform grid widened so that every multiple of `x_pitch` is an asset
    /// node and `v_anchor` is a variance node. The spacings are the largest
    /// ones that keep the domain at least `[0, x_max] x [0, v_max]`.
    pub fn aligned(x_max: f64, v_max: f64, m: usize, n: usize, x_pitch: f64, v_anchor: f64) -> Result<Self> {
        let h = match (x_pitch * m as f64 / x_max).floor() {
            c if x_pitch > 0.0 && c >= 1.0 => x_pitch / c,
            _ => x_max / m as f64,
        };
        let w = match (v_anchor * n as f64 / v_max).floor() {
            c if v_anchor > 0.0 && c >= 1.0 => v_anchor / c,
            _ => v_max / n as f64,
        };
        Self::uniform(h * m as f64, w * n as f64, m, n)
    }

    pub fn len(&self) -> usize {
        self.x.len() * self.v.len()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Flat index of node `(i, j)`; asset index runs fastest.
    #[inline]
    pub fn index(&self, i: usize, j: usize) -> usize {
        j * self.x.len() + i
    }

    /// Bilinear interpolation of a flattened surface.
    pub fn interpolate(&self, values: &[f64], x: f64, v: f64) -> f64 {
        let (i, tx) = self.x.locate(x);
        let (j, tv) = self.v.locate(v);
        let f = |i, j| values[self.index(i, j)];
        (1.0 - tv) * ((1.0 - tx) * f(i, j) + tx * f(i + 1, j)) + tv * ((1.0 - tx) * f(i, j + 1) + tx * f(i + 1, j + 1))
    }
}

/// Fitting factor `P / (2 tanh(P / 2))`.
pub fn fitting_factor(p: f64) -> f64 {
    let p = p.abs();
    if p < 1e-6 {
        1.0 + p * p / 12.0
    } else {
        p / (2.0 * (0.5 * p).tanh())
    }
}

/// Returns `(beta * diff, beta)` for advection `adv`, diffusion `diff` (the
/// full second-derivative coefficient times two) and cell size `h`.
/// Fitting applies where the cell Peclet number `2 h adv / diff` is at least 2.
fn fitted(adv: f64, diff: f64, h: f64) -> (f64, f64) {
    if diff <= 0.0 {
        if adv == 0.0 {
            return (0.0, 1.0);
        }
        // limit of beta * diff as diff -> 0
        return (h * adv.abs(), f64::INFINITY);
    }
    let p = 2.0 * h * adv / diff;
    if p.abs() < 2.0 {
        (diff, 1.0)
    } else {
        let beta = fitting_factor(p);
        (beta * diff, beta)
    }
}

/// Nine-point operator, unscaled by the time-step.
///
/// `(M f)_{ij} = a f_{i-1,j} + b f_{ij} + c f_{i+1,j} + d f_{i,j-1} + e f_{i,j+1}
///   + omega (f_{i+1,j+1} - f_{i+1,j-1} - f_{i-1,j+1} + f_{i-1,j-1})`.
#[derive(Debug, Clone, PartialEq)]
pub struct StencilOperator2D {
    pub nx: usize,
    pub nv: usize,
    pub a: Vec<f64>,
    pub b: Vec<f64>,
    pub c: Vec<f64>,
    pub d: Vec<f64>,
    pub e: Vec<f64>,
    pub omega: Vec<f64>,
    pub beta_x: Vec<f64>,
    pub beta_v: Vec<f64>,
    pub peclet_x: Vec<f64>,
    pub peclet_v: Vec<f64>,
}

impl StencilOperator2D {
    fn zeros(nx: usize, nv: usize) -> Self {
        let z = vec![0.0; nx * nv];
        Self {
            nx,
            nv,
            a: z.clone(),
            b: z.clone(),
            c: z.clone(),
            d: z.clone(),
            e: z.clone(),
            omega: z.clone(),
            beta_x: vec![1.0; nx * nv],
            beta_v: vec![1.0; nx * nv],
            peclet_x: z.clone(),
            peclet_v: z,
        }
    }

    /// Largest explicit-Euler step, `1 / max(-b)`.
    pub fn explicit_max_step(&self) -> Result<f64> {
        let max = self.b.iter().map(|b| -b).fold(f64::NEG_INFINITY, f64::max);
        if max > 0.0 {
            Ok(1.0 / max)
        } else {
            Err(Error::UnboundedStep)
        }
    }

    /// Sum of all stencil weights of each row (corner weights cancel).
    pub fn row_sum(&self, idx: usize) -> f64 {
        self.a[idx] + self.b[idx] + self.c[idx] + self.d[idx] + self.e[idx]
    }

    fn apply_row(&self, j: usize, f: &[f64], out: &mut [f64]) {
        let nx = self.nx;
        let row = j * nx;
        let has_down = j > 0;
        let has_up = j + 1 < self.nv;
        for (i, o) in out.iter_mut().enumerate() {
            let k = row + i;
            let mut s = self.b[k] * f[k];
            if i > 0 {
                s += self.a[k] * f[k - 1];
            }
            if i + 1 < nx {
                s += self.c[k] * f[k + 1];
            }
            if has_down {
                s += self.d[k] * f[k - nx];
            }
            if has_up {
                s += self.e[k] * f[k + nx];
            }
            let w = self.omega[k];
            if w != 0.0 {
                s += w * (f[k + nx + 1] - f[k - nx + 1] - f[k + nx - 1] + f[k - nx - 1]);
            }
            *o = s;
        }
    }
}

impl LinearOperator for StencilOperator2D {
    fn dim(&self) -> usize {
        self.nx * self.nv
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        if self.nx * self.nv < 4096 {
            for (j, chunk) in out.chunks_mut(self.nx).enumerate() {
                self.apply_row(j, v, chunk);
            }
        } else {
            out.par_chunks_mut(self.nx)
                .enumerate()
                .for_each(|(j, chunk)| self.apply_row(j, v, chunk));
        }
    }
}

/// Assembles the stencil for time-homogeneous parameters.
pub fn assemble_heston(model: &HestonModel, grid: &Grid2D) -> StencilOperator2D {
    let x = grid.x.nodes();
    let v = grid.v.nodes();
    let (m, n) = (grid.x.steps(), grid.v.steps());
    let mut op = StencilOperator2D::zeros(m + 1, n + 1);
    let mu = model.r - model.q;
    let r = model.r;
    let (kappa, theta, sig) = (model.kappa, model.theta, model.sigma);

    for j in 0..=n {
        let vj = v[j];
        for i in 0..=m {
            let k = grid.index(i, j);
            let xi = x[i];
            if i == 0 || i == m {
                // linear in x, flat in v
                let h = if i == 0 { grid.x.spacing(1) } else { grid.x.spacing(m) };
                let drift = mu * xi / h;
                if i == 0 {
                    op.b[k] = -(r + drift);
                    op.c[k] = drift;
                } else {
                    op.a[k] = -drift;
                    op.b[k] = -(r - drift);
                }
                continue;
            }
            let (hi, hn) = (grid.x.spacing(i), grid.x.spacing(i + 1));
            let (dx, bx) = fitted(mu * xi, vj * xi * xi, hi);
            op.beta_x[k] = bx;
            op.peclet_x[k] = if vj > 0.0 { 2.0 * hi * mu / (vj * xi) } else { f64::INFINITY };
            op.a[k] = -(mu * hn * xi - dx) / (hi * (hn + hi));
            op.c[k] = (mu * hi * xi + dx) / (hn * (hn + hi));
            let bx_part = (mu * (hi - hn) * xi + dx) / (hi * hn);

            let adv = kappa * (theta - vj);
            if j == 0 {
                let w1 = grid.v.spacing(1);
                op.b[k] = -(r + bx_part + adv / w1);
                op.e[k] = adv / w1;
            } else if j == n {
                let wn = grid.v.spacing(n);
                op.b[k] = -(r + bx_part - adv / wn);
                op.d[k] = -adv / wn;
            } else {
                let (wj, wn) = (grid.v.spacing(j), grid.v.spacing(j + 1));
                let (dv, bv) = fitted(adv, sig * sig * vj, wj);
                op.beta_v[k] = bv;
                op.peclet_v[k] = 2.0 * wj * adv / (sig * sig * vj);
                op.b[k] = -(r + bx_part + (adv * (wj - wn) + dv) / (wj * wn));
                op.d[k] = -(adv * wn - dv) / (wj * (wn + wj));
                op.e[k] = (adv * wj + dv) / (wn * (wn + wj));
                op.omega[k] = model.rho * sig * xi * vj / ((hi + hn) * (wj + wn));
            }
        }
    }
    op
}

/// Result of a Heston march.
#[derive(Debug, Clone, PartialEq)]
pub struct HestonSolution {
    pub grid: Grid2D,
    pub values: Vec<f64>,
    pub stages: usize,
    pub dt_explicit: f64,
}

impl HestonSolution {
    pub fn price(&self, spot: f64, variance: f64) -> f64 {
        self.grid.interpolate(&self.values, spot, variance)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HestonRun {
    pub exercise: Exercise,
    pub shift: f64,
    /// Cell-average the payoff along the asset axis.
    pub smooth: bool,
}

impl Default for HestonRun {
    fn default() -> Self {
        Self {
            exercise: Exercise::American,
            shift: 0.0,
            smooth: true,
        }
    }
}

/// Prices `payoff` with the RKL scheme on `grid` over `time`.
pub fn heston_rkl_price(
    model: &HestonModel,
    grid: &Grid2D,
    payoff: &Payoff,
    time: &TimeAxis,
    run: &HestonRun,
) -> Result<HestonSolution> {
    model.validate()?;
    payoff.validate()?;
    let op = assemble_heston(model, grid);
    let dt = op.explicit_max_step()?;

    let row = if run.smooth {
        kreiss_smooth(payoff, &grid.x)
    } else {
        payoff_values(payoff, &grid.x)
    };
    let exercise_row = payoff_values(payoff, &grid.x);
    let nv = grid.v.len();
    let mut f: Vec<f64> = row.iter().copied().cycle().take(row.len() * nv).collect();
    let obstacle: Vec<f64> = exercise_row.iter().copied().cycle().take(row.len() * nv).collect();
    let obs = match run.exercise {
        Exercise::American => Obstacle::Lower(&obstacle),
        Exercise::European => Obstacle::Unconstrained,
    };

    let mut cache = CoefficientCache::default();
    let mut stages = 0;
    for j in (1..=time.steps()).rev() {
        let k = time.step(j);
        let s = stages_for_step(k, dt, run.shift);
        stages = stages.max(s);
        let c = cache.get(Family::Legendre, s, run.shift)?;
        f = rkl_step(c, &op, k, &f, obs)?;
    }
    Ok(HestonSolution {
        grid: grid.clone(),
        values: f,
        stages,
        dt_explicit: dt,
    })
}
