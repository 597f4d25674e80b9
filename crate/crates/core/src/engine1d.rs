//! Backward time marching for one-factor problems with any of the schemes:
//! RKL/RKC super-time-stepping with stage projection, Crank-Nicolson,
//! Rannacher start-up, and backward Euler.

use crate::error::{Error, Result};
use crate::grid::{Grid1D, TimeAxis};
use crate::lcp::{implicit_step, ImplicitScheme, LcpStrategy};
use crate::pde1d::{assemble_bs, explicit_max_step, BSModel, TridiagonalOperator};
use crate::poly::Family;
use crate::rkl::{rkl_step, stages_for_step, Obstacle, SchemeCoefficients, STABILITY_MARGIN};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Exercise {
    European,
    American,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "UPPERCASE")]
pub enum SchemeKind {
    /// Runge-Kutta-Legendre super-time-stepping.
    Rkl,
    /// Runge-Kutta-Chebyshev super-time-stepping.
    Rkc,
    /// Crank-Nicolson.
    Cn,
    /// Crank-Nicolson with four backward-Euler half-steps at maturity.
    Ran,
    /// Backward Euler.
    Euler,
}

impl SchemeKind {
    pub fn is_explicit(self) -> bool {
        matches!(self, SchemeKind::Rkl | SchemeKind::Rkc)
    }

    pub fn family(self) -> Option<Family> {
        match self {
            SchemeKind::Rkl => Some(Family::Legendre),
            SchemeKind::Rkc => Some(Family::Chebyshev),
            _ => None,
        }
    }
}

/// Scheme tag together with its constraint strategy and shift.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SchemeSelector {
    pub scheme: SchemeKind,
    /// Only used by the implicit schemes; the explicit ones project each stage.
    #[serde(default)]
    pub lcp: LcpStrategy,
    /// Polynomial shift `eps` of the explicit schemes.
    #[serde(default)]
    pub shift: f64,
    /// Fixed stage count overriding the stability-based choice.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub stages: Option<usize>,
}

impl SchemeSelector {
    pub fn rkl(shift: f64) -> Self {
        Self {
            scheme: SchemeKind::Rkl,
            lcp: LcpStrategy::default(),
            shift,
            stages: None,
        }
    }

    pub fn rkc(shift: f64, stages: usize) -> Self {
        Self {
            scheme: SchemeKind::Rkc,
            lcp: LcpStrategy::default(),
            shift,
            stages: Some(stages),
        }
    }

    pub fn implicit(scheme: SchemeKind, lcp: LcpStrategy) -> Self {
        Self {
            scheme,
            lcp,
            shift: 0.0,
            stages: None,
        }
    }

    pub fn with_stages(mut self, stages: usize) -> Self {
        self.stages = Some(stages);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.shift >= 0.0 && self.shift.is_finite()) {
            return Err(Error::InvalidArgument(format!(
                "shift must be non-negative, got {}",
                self.shift
            )));
        }
        if let Some(s) = self.stages {
            if s < 2 {
                return Err(Error::InvalidArgument(format!("stage override must be >= 2, got {s}")));
            }
        }
        if self.scheme == SchemeKind::Rkc && self.shift == 0.0 && self.stages.is_none() {
            return Err(Error::InvalidArgument(
                "RKC needs a positive shift or a fixed stage count".into(),
            ));
        }
        Ok(())
    }

    /// Stage count for a step `k` under explicit bound `dt_explicit`.
    pub fn stage_count(&self, k: f64, dt_explicit: f64) -> usize {
        if let Some(s) = self.stages {
            return s;
        }
        match self.scheme {
            SchemeKind::Rkl => stages_for_step(k, dt_explicit, self.shift),
            SchemeKind::Rkc => {
                let ratio = k / dt_explicit;
                let mut s = 2;
                while SchemeCoefficients::new(Family::Chebyshev, s, self.shift)
                    .map(|c| STABILITY_MARGIN * c.step_ratio_bound() < ratio)
                    .unwrap_or(true)
                {
                    s += 1;
                }
                if s % 2 == 0 {
                    s + 1
                } else {
                    s
                }
            }
            _ => 0,
        }
    }
}

/// Result of a backward march: values at valuation time plus per-step stats.
#[derive(Debug, Clone, PartialEq)]
pub struct Solution1D {
    pub grid: Grid1D,
    pub values: Vec<f64>,
    /// Stage counts per step, in marching order (empty for implicit schemes).
    pub stages: Vec<usize>,
    /// Explicit-Euler bound of the first assembled operator.
    pub dt_explicit: f64,
}

impl Solution1D {
    pub fn price_at(&self, spot: f64) -> f64 {
        match self.grid.node_index(spot) {
            Some(i) => self.values[i],
            None => self.grid.interpolate(&self.values, spot),
        }
    }
}

/// Caches coefficient tables keyed by stage count.
#[derive(Default)]
pub(crate) struct CoefficientCache {
    entries: Vec<SchemeCoefficients>,
}

impl CoefficientCache {
    pub(crate) fn get(&mut self, family: Family, s: usize, eps: f64) -> Result<&SchemeCoefficients> {
        let pos = self
            .entries
            .iter()
            .position(|c| c.stages == s && c.family == family && c.shift == eps);
        let idx = match pos {
            Some(i) => i,
            None => {
                self.entries.push(SchemeCoefficients::new(family, s, eps)?);
                self.entries.len() - 1
            }
        };
        Ok(&self.entries[idx])
    }
}

/// Marches `terminal` from maturity back to time zero under `model`.
///
/// `obstacle` is the exercise value for American contracts. The operator is
/// reassembled once per step at the start label of the step.
pub fn march_1d(
    model: &BSModel,
    grid: &Grid1D,
    time: &TimeAxis,
    terminal: Vec<f64>,
    obstacle: Option<&[f64]>,
    scheme: &SchemeSelector,
) -> Result<Solution1D> {
    march_1d_with(grid, time, terminal, obstacle, scheme, |t| {
        Ok(assemble_bs(model, grid, t))
    })
}

/// Same as [`march_1d`] with a caller-provided operator factory, called with
/// the time-to-maturity at the start of each step.
pub fn march_1d_with<F>(
    grid: &Grid1D,
    time: &TimeAxis,
    terminal: Vec<f64>,
    obstacle: Option<&[f64]>,
    scheme: &SchemeSelector,
    mut operator_at: F,
) -> Result<Solution1D>
where
    F: FnMut(f64) -> Result<TridiagonalOperator>,
{
    scheme.validate()?;
    let n = grid.len();
    if terminal.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: terminal.len(),
        });
    }
    let obs = match obstacle {
        Some(b) if b.len() != n => {
            return Err(Error::DimensionMismatch {
                expected: n,
                actual: b.len(),
            })
        }
        Some(b) => Obstacle::Lower(b),
        None => Obstacle::Unconstrained,
    };

    let steps = time.steps();
    let times = time.times();
    let maturity = time.maturity();
    let mut f = terminal;
    let mut stages = Vec::new();
    let mut dt_first = f64::NAN;
    let mut cache = CoefficientCache::default();

    // j counts steps from maturity: j = 1 is the step adjacent to expiry
    for j in 1..=steps {
        let idx = steps - j + 1;
        let k = times[idx] - times[idx - 1];
        let tau = maturity - times[idx];
        let op = operator_at(tau)?;
        if j == 1 {
            dt_first = explicit_max_step(&op).unwrap_or(f64::INFINITY);
        }
        f = match scheme.scheme {
            SchemeKind::Rkl | SchemeKind::Rkc => {
                let dt = explicit_max_step(&op).unwrap_or(f64::INFINITY);
                let s = if dt.is_finite() {
                    scheme.stage_count(k, dt)
                } else {
                    scheme.stages.unwrap_or(3)
                };
                stages.push(s);
                let family = scheme.scheme.family().expect("explicit scheme");
                let coeffs = cache.get(family, s, scheme.shift)?;
                rkl_step(coeffs, &op, k, &f, obs)?
            }
            SchemeKind::Cn => implicit_step(ImplicitScheme::CrankNicolson, &op, k, &f, obs, &scheme.lcp)?,
            SchemeKind::Euler => implicit_step(ImplicitScheme::Euler, &op, k, &f, obs, &scheme.lcp)?,
            SchemeKind::Ran => {
                if j <= 2 {
                    let half = 0.5 * k;
                    let g = implicit_step(ImplicitScheme::Euler, &op, half, &f, obs, &scheme.lcp)?;
                    implicit_step(ImplicitScheme::Euler, &op, half, &g, obs, &scheme.lcp)?
                } else {
                    implicit_step(ImplicitScheme::CrankNicolson, &op, k, &f, obs, &scheme.lcp)?
                }
            }
        };
    }

    Ok(Solution1D {
        grid: grid.clone(),
        values: f,
        stages,
        dt_explicit: dt_first,
    })
}

/// Rannacher run: the two steps nearest maturity become four backward-Euler
/// half-steps; the rest are Crank-Nicolson.
pub fn rannacher_run<F>(
    grid: &Grid1D,
    time: &TimeAxis,
    terminal: Vec<f64>,
    obstacle: Option<&[f64]>,
    strategy: LcpStrategy,
    operator_at: F,
) -> Result<Solution1D>
where
    F: FnMut(f64) -> Result<TridiagonalOperator>,
{
    if time.steps() < 2 {
        return Err(Error::InvalidArgument("Rannacher start-up needs at least two steps".into()));
    }
    let scheme = SchemeSelector::implicit(SchemeKind::Ran, strategy);
    march_1d_with(grid, time, terminal, obstacle, &scheme, operator_at)
}
