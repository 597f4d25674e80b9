//! JSON pricing problems and the runs built on them: single prices,
//! refinement ladders and Gamma profiles.

use crate::convergence::{ladder_rows, ConvergenceRow, LevelResult};
use crate::engine1d::{march_1d, Exercise, SchemeKind, SchemeSelector};
use crate::error::{Error, Result};
use crate::grid::{Grid1D, TimeAxis};
use crate::heston::{domain_bounds_sd, heston_rkl_price, Grid2D, HestonModel, HestonRun};
use crate::lcp::LcpStrategy;
use crate::payoff::{kreiss_smooth, payoff_values, Payoff};
use crate::pde1d::{greeks, BSModel};
use crate::uvm::{uvm_march, Objective, UvmModel, UvmScheme};
use serde::{Deserialize, Serialize};
use std::time::Instant;

pub const SCHEMA_VERSION: u32 = 1;

fn schema_version() -> u32 {
    SCHEMA_VERSION
}

fn default_eps_v() -> f64 {
    1e-4
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PricingProblem {
    #[serde(default = "schema_version")]
    pub version: u32,
    pub model: ModelSpec,
    pub payoff: Payoff,
    pub exercise: Exercise,
    pub grid: GridSpec,
    pub time: TimeSpec,
    pub scheme: SchemeSpec,
    /// Spots to report; defaults to the payoff strike.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub spots: Vec<f64>,
    /// Known value at the first spot, used for the error column of ladders.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub reference: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum ModelSpec {
    Bs {
        sigma: f64,
        r: f64,
        #[serde(default)]
        q: f64,
    },
    Uvm {
        sigma_min: f64,
        sigma_max: f64,
        r: f64,
        #[serde(default)]
        q: f64,
        objective: Objective,
    },
    Heston {
        kappa: f64,
        theta: f64,
        sigma_v: f64,
        rho: f64,
        r: f64,
        #[serde(default)]
        q: f64,
        v0: f64,
        #[serde(default = "default_eps_v")]
        eps_v: f64,
    },
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    #[serde(default)]
    pub x_min: f64,
    /// Required for one-factor models; Heston falls back to `std_devs`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_max: Option<f64>,
    /// Asset steps (before any strike insertion).
    pub m: usize,
    /// Variance steps, Heston only.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub n: Option<usize>,
    /// Heston only; defaults to the variance quantile at `1 - eps_v`.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub v_max: Option<f64>,
    /// One-factor: insert each payoff strike as a node. Heston: widen the
    /// grid so multiples of `x_pitch` (default: the strike) and `v0` are nodes.
    #[serde(default)]
    pub strike_on_grid: bool,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub std_devs: Option<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub x_pitch: Option<f64>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TimeSpec {
    pub maturity: f64,
    pub steps: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SchemeSpec {
    pub scheme: SchemeKind,
    #[serde(default)]
    pub lcp: LcpStrategy,
    #[serde(default)]
    pub shift: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<usize>,
    /// Cell-average the terminal payoff.
    #[serde(default)]
    pub smoothing: bool,
}

impl SchemeSpec {
    pub fn selector(&self) -> SchemeSelector {
        SchemeSelector {
            scheme: self.scheme,
            lcp: self.lcp,
            shift: self.shift,
            stages: self.stages,
        }
    }
}

fn config_err(path: impl Into<String>, message: impl Into<String>) -> Error {
    Error::Config {
        path: path.into(),
        message: message.into(),
    }
}

fn check(ok: bool, path: &str, message: &str) -> Result<()> {
    if ok {
        Ok(())
    } else {
        Err(config_err(path, message))
    }
}

impl PricingProblem {
    pub fn from_json(text: &str) -> Result<Self> {
        let p: Self = serde_json::from_str(text).map_err(|e| config_err("<json>", e.to_string()))?;
        p.validate()?;
        Ok(p)
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("plain data serializes")
    }

    pub fn validate(&self) -> Result<()> {
        check(
            self.version == SCHEMA_VERSION,
            "version",
            &format!("unsupported schema version (expected {SCHEMA_VERSION})"),
        )?;
        match self.model {
            ModelSpec::Bs { sigma, r, q } => {
                check(sigma >= 0.0 && sigma.is_finite(), "model.sigma", "must be finite and >= 0")?;
                check(r.is_finite(), "model.r", "must be finite")?;
                check(q.is_finite(), "model.q", "must be finite")?;
            }
            ModelSpec::Uvm {
                sigma_min,
                sigma_max,
                r,
                q,
                ..
            } => {
                check(sigma_min > 0.0 && sigma_min.is_finite(), "model.sigma_min", "must be finite and > 0")?;
                check(sigma_max >= sigma_min && sigma_max.is_finite(), "model.sigma_max", "must be finite and >= sigma_min")?;
                check(r.is_finite(), "model.r", "must be finite")?;
                check(q.is_finite(), "model.q", "must be finite")?;
                check(self.exercise == Exercise::European, "exercise", "uncertain volatility runs are European only")?;
                check(
                    matches!(self.scheme.scheme, SchemeKind::Rkl | SchemeKind::Euler),
                    "scheme.scheme",
                    "uncertain volatility supports RKL and EULER",
                )?;
            }
            ModelSpec::Heston {
                kappa,
                theta,
                sigma_v,
                rho,
                r,
                q,
                v0,
                eps_v,
            } => {
                check(kappa > 0.0, "model.kappa", "must be > 0")?;
                check(theta > 0.0, "model.theta", "must be > 0")?;
                check(sigma_v > 0.0, "model.sigma_v", "must be > 0")?;
                check(rho.abs() <= 1.0, "model.rho", "must lie in [-1, 1]")?;
                check(r.is_finite(), "model.r", "must be finite")?;
                check(q.is_finite(), "model.q", "must be finite")?;
                check(v0 >= 0.0 && v0.is_finite(), "model.v0", "must be finite and >= 0")?;
                check(eps_v > 0.0 && eps_v < 0.5, "model.eps_v", "must lie in (0, 0.5)")?;
                check(self.scheme.scheme == SchemeKind::Rkl, "scheme.scheme", "Heston supports RKL only")?;
                check(self.grid.n.is_some_and(|n| n >= 2), "grid.n", "Heston needs at least 2 variance steps")?;
                check(self.grid.x_min == 0.0, "grid.x_min", "Heston grids start at 0")?;
                if let Some(v) = self.grid.v_max {
                    check(v > 0.0, "grid.v_max", "must be > 0")?;
                }
                if let Some(p) = self.grid.x_pitch {
                    check(p > 0.0, "grid.x_pitch", "must be > 0")?;
                }
            }
        }
        self.payoff.validate().map_err(|e| config_err("payoff", e.to_string()))?;

        let g = &self.grid;
        check(g.m >= 2, "grid.m", "need at least 2 steps")?;
        check(g.x_min >= 0.0 && g.x_min.is_finite(), "grid.x_min", "must be finite and >= 0")?;
        match (self.is_heston(), g.x_max) {
            (false, None) => return Err(config_err("grid.x_max", "required for one-factor models")),
            (_, Some(x)) => check(x > g.x_min && x.is_finite(), "grid.x_max", "must exceed x_min")?,
            (true, None) => {}
        }
        if let Some(sd) = g.std_devs {
            check(sd > 0.0, "grid.std_devs", "must be > 0")?;
        }
        if g.strike_on_grid && !self.is_heston() {
            let hi = g.x_max.unwrap_or(f64::INFINITY);
            for k in self.payoff.strikes() {
                check(k > g.x_min && k < hi, "grid.strike_on_grid", "strike lies outside the grid")?;
            }
        }

        check(self.time.maturity > 0.0 && self.time.maturity.is_finite(), "time.maturity", "must be finite and > 0")?;
        check(self.time.steps >= 1, "time.steps", "need at least one step")?;

        self.scheme.selector().validate().map_err(|e| config_err("scheme", e.to_string()))?;
        if let LcpStrategy::Psor(c) = self.scheme.lcp {
            check(c.omega > 0.0 && c.omega < 2.0, "scheme.lcp.omega", "must lie in (0, 2)")?;
        }

        for (i, s) in self.spots.iter().enumerate() {
            check(s.is_finite() && *s >= g.x_min, &format!("spots[{i}]"), "must be finite and inside the grid")?;
            if let Some(hi) = g.x_max {
                check(*s <= hi, &format!("spots[{i}]"), "must be finite and inside the grid")?;
            }
        }
        Ok(())
    }

    fn is_heston(&self) -> bool {
        matches!(self.model, ModelSpec::Heston { .. })
    }

    pub fn spot_list(&self) -> Vec<f64> {
        if self.spots.is_empty() {
            vec![self.payoff.strike()]
        } else {
            self.spots.clone()
        }
    }

    /// Uniform asset grid refined `2^level` times, with strikes inserted on request.
    pub fn grid_1d(&self, level: u32) -> Result<Grid1D> {
        let hi = self
            .grid
            .x_max
            .ok_or_else(|| config_err("grid.x_max", "required for one-factor models"))?;
        let mut g = Grid1D::uniform(self.grid.x_min, hi, self.grid.m << level)?;
        if self.grid.strike_on_grid {
            for k in self.payoff.strikes() {
                g = g.place_strike(k)?;
            }
        }
        Ok(g)
    }

    pub fn heston_model(&self) -> Option<(HestonModel, f64)> {
        match self.model {
            ModelSpec::Heston {
                kappa,
                theta,
                sigma_v,
                rho,
                r,
                q,
                v0,
                eps_v,
            } => Some((
                HestonModel {
                    kappa,
                    theta,
                    sigma: sigma_v,
                    rho,
                    r,
                    q,
                    v0,
                },
                eps_v,
            )),
            _ => None,
        }
    }

    /// Heston grid refined `2^level` times. The domain is fixed by the
    /// unrefined grid, so alignment carries over to every level.
    pub fn grid_2d(&self, level: u32) -> Result<Grid2D> {
        let (model, eps_v) = self
            .heston_model()
            .ok_or_else(|| config_err("model.kind", "not a Heston model"))?;
        let g = &self.grid;
        let n = g.n.ok_or_else(|| config_err("grid.n", "Heston needs variance steps"))?;
        let strike = self.payoff.strike();
        let (x_auto, v_auto) = domain_bounds_sd(&model, strike, self.time.maturity, g.std_devs.unwrap_or(4.0), eps_v)?;
        let x_max = g.x_max.unwrap_or(x_auto);
        let v_max = g.v_max.unwrap_or(v_auto);
        let base = if g.strike_on_grid {
            Grid2D::aligned(x_max, v_max, g.m, n, g.x_pitch.unwrap_or(strike), model.v0)?
        } else {
            Grid2D::uniform(x_max, v_max, g.m, n)?
        };
        if level == 0 {
            return Ok(base);
        }
        Grid2D::uniform(base.x.upper(), base.v.upper(), g.m << level, n << level)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SpotPrice {
    pub spot: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub variance: Option<f64>,
    pub price: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PriceReport {
    pub prices: Vec<SpotPrice>,
    /// Explicit stage count of each step, in marching order.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub stages_used: Vec<usize>,
    /// `None` when the operator has no diffusion or decay.
    pub dt_explicit: Option<f64>,
    pub spacesteps: usize,
    pub timesteps: usize,
    pub time_s: f64,
}

/// Solution on the whole mesh; `v` is present for two-factor runs, with the
/// values flattened asset-fastest.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct Surface {
    pub x: Vec<f64>,
    pub v: Option<Vec<f64>>,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PriceOutcome {
    pub report: PriceReport,
    pub surface: Surface,
}

pub fn price(problem: &PricingProblem) -> Result<PriceOutcome> {
    price_level(problem, 0)
}

fn price_level(problem: &PricingProblem, level: u32) -> Result<PriceOutcome> {
    problem.validate()?;
    let steps = problem.time.steps << level;
    let time = TimeAxis::uniform(steps, problem.time.maturity)?;
    let spots = problem.spot_list();
    let started = Instant::now();

    if let Some((model, _)) = problem.heston_model() {
        let grid = problem.grid_2d(level)?;
        let run = HestonRun {
            exercise: problem.exercise,
            shift: problem.scheme.shift,
            smooth: problem.scheme.smoothing,
        };
        let sol = heston_rkl_price(&model, &grid, &problem.payoff, &time, &run)?;
        let prices = spots
            .iter()
            .map(|&s| SpotPrice {
                spot: s,
                variance: Some(model.v0),
                price: sol.price(s, model.v0),
            })
            .collect();
        return Ok(PriceOutcome {
            report: PriceReport {
                prices,
                stages_used: vec![sol.stages; steps],
                dt_explicit: Some(sol.dt_explicit),
                spacesteps: grid.x.steps(),
                timesteps: steps,
                time_s: started.elapsed().as_secs_f64(),
            },
            surface: Surface {
                x: grid.x.nodes().to_vec(),
                v: Some(grid.v.nodes().to_vec()),
                values: sol.values,
            },
        });
    }

    let grid = problem.grid_1d(level)?;
    let terminal = if problem.scheme.smoothing {
        kreiss_smooth(&problem.payoff, &grid)
    } else {
        payoff_values(&problem.payoff, &grid)
    };
    let (values, stages_used, dt) = match problem.model {
        ModelSpec::Bs { sigma, r, q } => {
            let exercise = payoff_values(&problem.payoff, &grid);
            let obstacle = (problem.exercise == Exercise::American).then_some(exercise.as_slice());
            let sol = march_1d(
                &BSModel::constant(sigma, r, q),
                &grid,
                &time,
                terminal,
                obstacle,
                &problem.scheme.selector(),
            )?;
            (sol.values, sol.stages, sol.dt_explicit)
        }
        ModelSpec::Uvm {
            sigma_min,
            sigma_max,
            r,
            q,
            objective,
        } => {
            let model = UvmModel {
                sigma_min,
                sigma_max,
                r,
                mu: r - q,
                objective,
            };
            let scheme = match problem.scheme.scheme {
                SchemeKind::Euler => UvmScheme::Euler,
                _ => UvmScheme::Rkl {
                    shift: problem.scheme.shift,
                },
            };
            let sol = uvm_march(&grid, &time, &model, terminal, scheme)?;
            let dt = crate::pde1d::explicit_max_step(&crate::uvm::assemble_uvm(
                &grid,
                &model,
                &vec![sigma_max; grid.len()],
            ))
            .unwrap_or(f64::INFINITY);
            (sol.values, sol.stages, dt)
        }
        ModelSpec::Heston { .. } => unreachable!("handled above"),
    };
    let prices = spots
        .iter()
        .map(|&s| SpotPrice {
            spot: s,
            variance: None,
            price: match grid.node_index(s) {
                Some(i) => values[i],
                None => grid.interpolate(&values, s),
            },
        })
        .collect();
    Ok(PriceOutcome {
        report: PriceReport {
            prices,
            stages_used,
            dt_explicit: dt.is_finite().then_some(dt),
            spacesteps: grid.steps(),
            timesteps: steps,
            time_s: started.elapsed().as_secs_f64(),
        },
        surface: Surface {
            x: grid.nodes().to_vec(),
            v: None,
            values,
        },
    })
}

/// Prices the problem on `levels` grids, doubling space and time steps each
/// level, and reports the first spot.
pub fn converge(problem: &PricingProblem, levels: u32, reference: Option<f64>) -> Result<Vec<ConvergenceRow>> {
    if levels == 0 {
        return Err(config_err("levels", "need at least one level"));
    }
    let mut results = Vec::with_capacity(levels as usize);
    for level in 0..levels {
        let out = price_level(problem, level)?;
        results.push(LevelResult {
            spacesteps: out.report.spacesteps,
            timesteps: out.report.timesteps,
            value: out.report.prices[0].price,
            time_s: out.report.time_s,
        });
    }
    Ok(ladder_rows(&results, reference.or(problem.reference)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GammaRow {
    pub x: f64,
    pub value: f64,
    pub delta: f64,
    pub gamma: f64,
}

/// Value, Delta and Gamma along the asset grid at valuation time.
pub fn gamma_profile(problem: &PricingProblem) -> Result<Vec<GammaRow>> {
    if problem.is_heston() {
        return Err(config_err("model.kind", "Gamma profiles need a one-factor model"));
    }
    let out = price(problem)?;
    let grid = Grid1D::new(out.surface.x.clone())?;
    let (delta, gamma) = greeks(&grid, &out.surface.values);
    Ok(out
        .surface
        .x
        .iter()
        .zip(&out.surface.values)
        .zip(delta.iter().zip(&gamma))
        .map(|((&x, &value), (&delta, &gamma))| GammaRow { x, value, delta, gamma })
        .collect())
}
