//! One-step digital option experiment: values after a single large explicit
//! step for RKL and RKC with various shifts, against the analytic price.

use crate::analytic;
use crate::error::Result;
use crate::grid::Grid1D;
use crate::payoff::{kreiss_smooth, payoff_values, Payoff};
use crate::pde1d::{assemble_bs, BSModel};
use crate::poly::Family;
use crate::rkl::{rkl_step, Obstacle, SchemeCoefficients};
use crate::stability::scheme_name;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct DigitalSetup {
    pub strike: f64,
    pub rebate: f64,
    pub sigma: f64,
    pub r: f64,
    pub x_min: f64,
    pub x_max: f64,
    pub space_steps: usize,
    pub k: f64,
    pub stages: usize,
    pub smooth: bool,
    /// `(family, shift)` pairs, one output column each.
    pub schemes: Vec<(Family, f64)>,
}

impl Default for DigitalSetup {
    fn default() -> Self {
        Self {
            strike: 100.0,
            rebate: 1.0,
            sigma: 0.25,
            r: 0.10,
            x_min: 68.71,
            x_max: 145.58,
            space_steps: 800,
            k: 0.01,
            stages: 111,
            smooth: true,
            schemes: vec![
                (Family::Legendre, 0.0),
                (Family::Legendre, 20.0),
                (Family::Chebyshev, 0.1),
                (Family::Chebyshev, 2.0),
            ],
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CmpColumn {
    pub label: String,
    pub values: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CmpTable {
    pub x: Vec<f64>,
    pub columns: Vec<CmpColumn>,
    pub analytic: Vec<f64>,
}

pub fn cmp_digital(setup: &DigitalSetup) -> Result<CmpTable> {
    let grid = Grid1D::uniform(setup.x_min, setup.x_max, setup.space_steps)?;
    let payoff = Payoff::DigitalCall {
        strike: setup.strike,
        rebate: setup.rebate,
    };
    payoff.validate()?;
    let f0 = if setup.smooth {
        kreiss_smooth(&payoff, &grid)
    } else {
        payoff_values(&payoff, &grid)
    };
    let model = BSModel::constant(setup.sigma, setup.r, 0.0);
    let op = assemble_bs(&model, &grid, 0.0);

    let mut columns = Vec::new();
    for &(family, shift) in &setup.schemes {
        let c = SchemeCoefficients::new(family, setup.stages, shift)?;
        let values = rkl_step(&c, &op, setup.k, &f0, Obstacle::Unconstrained)?;
        columns.push(CmpColumn {
            label: format!("{}-{}", scheme_name(family), shift),
            values,
        });
    }
    let analytic = grid
        .nodes()
        .iter()
        .map(|&x| analytic::digital_call(x, setup.strike, setup.rebate, setup.k, setup.sigma, setup.r, 0.0))
        .collect();
    Ok(CmpTable {
        x: grid.nodes().to_vec(),
        columns,
        analytic,
    })
}

/// Number of nodes where a nondecreasing profile drops by more than `tol`.
pub fn monotonicity_violations(v: &[f64], tol: f64) -> usize {
    v.windows(2).filter(|w| w[1] < w[0] - tol).count()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn zero_step_returns_terminal_values() {
        let setup = DigitalSetup {
            k: 0.0,
            smooth: true,
            space_steps: 80,
            ..Default::default()
        };
        let t = cmp_digital(&setup).unwrap();
        let grid = Grid1D::uniform(setup.x_min, setup.x_max, 80).unwrap();
        let smoothed = kreiss_smooth(
            &Payoff::DigitalCall {
                strike: 100.0,
                rebate: 1.0,
            },
            &grid,
        );
        for col in &t.columns {
            for (a, b) in col.values.iter().zip(&smoothed) {
                assert!((a - b).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn violation_count() {
        assert_eq!(monotonicity_violations(&[0.0, 0.1, 0.05, 0.2, 0.2, 0.19], 1e-12), 2);
        assert_eq!(monotonicity_violations(&[1.0, 1.0, 1.0], 0.0), 0);
    }
}
