//! Finite-difference option pricing with second-order Runge-Kutta-Legendre
//! super-time-stepping, implicit baselines, and stability analysis.

// `!(x > 0.0)` rejects NaN on purpose; stencil loops index several arrays at once.
#![allow(clippy::neg_cmp_op_on_partial_ord, clippy::needless_range_loop)]

pub mod analytic;
pub mod cmp;
pub mod convergence;
pub mod engine1d;
pub mod error;
pub mod grid;
pub mod heston;
pub mod lcp;
pub mod ncchi2;
pub mod payoff;
pub mod pde1d;
pub mod poly;
pub mod problem;
pub mod rkl;
pub mod stability;
pub mod uvm;

pub use engine1d::{march_1d, Exercise, SchemeKind, SchemeSelector, Solution1D};
pub use error::{Error, Result};
pub use grid::{Grid1D, TimeAxis};
pub use lcp::{LcpStrategy, PsorConfig};
pub use payoff::Payoff;
pub use pde1d::{BSModel, TridiagonalOperator};
pub use problem::{PricingProblem, SCHEMA_VERSION};
pub use rkl::{rkl_coefficients, rkl_step, stages_for_step, LinearOperator, Obstacle, SchemeCoefficients};
