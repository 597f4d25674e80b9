//! Terminal payoffs and their cell-averaged (Kreiss) smoothing.

use crate::error::{Error, Result};
use crate::grid::Grid1D;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Payoff {
    Put { strike: f64 },
    Call { strike: f64 },
    DigitalCall { strike: f64, rebate: f64 },
    /// Long one call at each wing, short two at the midpoint.
    Butterfly { low: f64, high: f64 },
}

impl Payoff {
    pub fn validate(&self) -> Result<()> {
        let ok = match *self {
            Payoff::Put { strike } | Payoff::Call { strike } => strike > 0.0,
            Payoff::DigitalCall { strike, rebate } => strike > 0.0 && rebate.is_finite(),
            Payoff::Butterfly { low, high } => low > 0.0 && low < high,
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidArgument(format!("invalid payoff {self:?}")))
        }
    }

    /// Reference strike used for strike-on-grid placement.
    pub fn strike(&self) -> f64 {
        match *self {
            Payoff::Put { strike } | Payoff::Call { strike } => strike,
            Payoff::DigitalCall { strike, .. } => strike,
            Payoff::Butterfly { low, high } => 0.5 * (low + high),
        }
    }

    /// All kinks and jumps of the payoff.
    pub fn strikes(&self) -> Vec<f64> {
        match *self {
            Payoff::Butterfly { low, high } => vec![low, 0.5 * (low + high), high],
            _ => vec![self.strike()],
        }
    }

    pub fn value(&self, x: f64) -> f64 {
        match *self {
            Payoff::Put { strike } => (strike - x).max(0.0),
            Payoff::Call { strike } => (x - strike).max(0.0),
            Payoff::DigitalCall { strike, rebate } => {
                if x >= strike {
                    rebate
                } else {
                    0.0
                }
            }
            Payoff::Butterfly { low, high } => {
                let mid = 0.5 * (low + high);
                (x - low).max(0.0) - 2.0 * (x - mid).max(0.0) + (x - high).max(0.0)
            }
        }
    }

    /// An antiderivative of [`Payoff::value`].
    fn primitive(&self, x: f64) -> f64 {
        let call = |k: f64| {
            let d = (x - k).max(0.0);
            0.5 * d * d
        };
        match *self {
            Payoff::Put { strike } => {
                let d = (strike - x).max(0.0);
                -0.5 * d * d
            }
            Payoff::Call { strike } => call(strike),
            Payoff::DigitalCall { strike, rebate } => rebate * (x - strike).max(0.0),
            Payoff::Butterfly { low, high } => {
                let mid = 0.5 * (low + high);
                call(low) - 2.0 * call(mid) + call(high)
            }
        }
    }

    /// Exact average of the payoff over `[lo, hi]`.
    pub fn average(&self, lo: f64, hi: f64) -> f64 {
        (self.primitive(hi) - self.primitive(lo)) / (hi - lo)
    }

    /// Whether the payoff is non-increasing (`Some(false)`), non-decreasing
    /// (`Some(true)`), or neither (`None`).
    pub fn monotone_increasing(&self) -> Option<bool> {
        match self {
            Payoff::Put { .. } => Some(false),
            Payoff::Call { .. } => Some(true),
            Payoff::DigitalCall { rebate, .. } => Some(*rebate >= 0.0),
            Payoff::Butterfly { .. } => None,
        }
    }
}

/// Nodal payoff values.
pub fn payoff_values(p: &Payoff, grid: &Grid1D) -> Vec<f64> {
    grid.nodes().iter().map(|&x| p.value(x)).collect()
}

/// Replaces every interior nodal value by the exact payoff average over the
/// cell `[x_i - h_i / 2, x_i + h_{i+1} / 2]`. Boundary nodes keep the nodal value.
pub fn kreiss_smooth(p: &Payoff, grid: &Grid1D) -> Vec<f64> {
    let x = grid.nodes();
    let m = grid.steps();
    let mut out = payoff_values(p, grid);
    for i in 1..m {
        let lo = x[i] - 0.5 * grid.spacing(i);
        let hi = x[i] + 0.5 * grid.spacing(i + 1);
        out[i] = p.average(lo, hi);
    }
    out
}
