//! Spatial meshes and time axes.

use crate::error::{Error, Result};
use serde::{Deserialize, Serialize};

/// Strictly increasing one-dimensional mesh `x_0 < ... < x_m`, `m >= 2`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct Grid1D {
    nodes: Vec<f64>,
}

impl TryFrom<Vec<f64>> for Grid1D {
    type Error = Error;

    fn try_from(nodes: Vec<f64>) -> Result<Self> {
        Grid1D::new(nodes)
    }
}

impl From<Grid1D> for Vec<f64> {
    fn from(g: Grid1D) -> Self {
        g.nodes
    }
}

impl Grid1D {
    pub fn new(nodes: Vec<f64>) -> Result<Self> {
        if nodes.len() < 3 {
            return Err(Error::InvalidArgument(format!(
                "a grid needs at least 3 nodes, got {}",
                nodes.len()
            )));
        }
        if nodes.iter().any(|x| !x.is_finite()) {
            return Err(Error::InvalidArgument("grid nodes must be finite".into()));
        }
        if nodes.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument("grid nodes must be strictly increasing".into()));
        }
        Ok(Self { nodes })
    }

    /// `steps` equal intervals on `[lo, hi]`.
    pub fn uniform(lo: f64, hi: f64, steps: usize) -> Result<Self> {
        if steps < 2 || !(hi > lo) {
            return Err(Error::InvalidArgument(format!(
                "uniform grid needs lo < hi and at least 2 steps (got [{lo}, {hi}], {steps})"
            )));
        }
        let h = (hi - lo) / steps as f64;
        let mut nodes: Vec<f64> = (0..=steps).map(|i| lo + h * i as f64).collect();
        nodes[steps] = hi;
        Self::new(nodes)
    }

    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    /// Number of nodes, `m + 1`.
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    /// Number of intervals `m`.
    pub fn steps(&self) -> usize {
        self.nodes.len() - 1
    }

    /// `h_i = x_i - x_{i-1}` for `1 <= i <= m`.
    #[inline]
    pub fn spacing(&self, i: usize) -> f64 {
        self.nodes[i] - self.nodes[i - 1]
    }

    pub fn lower(&self) -> f64 {
        self.nodes[0]
    }

    pub fn upper(&self) -> f64 {
        self.nodes[self.nodes.len() - 1]
    }

    /// Index of the node equal to `x` within a relative tolerance of 1e-12.
    pub fn node_index(&self, x: f64) -> Option<usize> {
        let tol = 1e-12 * x.abs().max(1.0);
        let pos = self.nodes.partition_point(|&n| n < x - tol);
        (pos < self.nodes.len() && (self.nodes[pos] - x).abs() <= tol).then_some(pos)
    }

    /// Returns a grid containing `strike` as a node; unchanged when it already is one.
    pub fn place_strike(&self, strike: f64) -> Result<Self> {
        if strike < self.lower() || strike > self.upper() {
            return Err(Error::InvalidArgument(format!(
                "strike {strike} lies outside the grid [{}, {}]",
                self.lower(),
                self.upper()
            )));
        }
        if self.node_index(strike).is_some() {
            return Ok(self.clone());
        }
        let pos = self.nodes.partition_point(|&n| n < strike);
        let mut nodes = self.nodes.clone();
        nodes.insert(pos, strike);
        Self::new(nodes)
    }

    /// Piecewise-linear interpolation of nodal `values` at `x` (flat outside).
    pub fn interpolate(&self, values: &[f64], x: f64) -> f64 {
        debug_assert_eq!(values.len(), self.nodes.len());
        if x <= self.lower() {
            return values[0];
        }
        if x >= self.upper() {
            return values[values.len() - 1];
        }
        let i = self.nodes.partition_point(|&n| n <= x).max(1);
        let (x0, x1) = (self.nodes[i - 1], self.nodes[i]);
        let t = (x - x0) / (x1 - x0);
        values[i - 1] * (1.0 - t) + values[i] * t
    }

    /// Bracketing interval `(i, t)` with `x = (1 - t) x_i + t x_{i+1}`.
    pub fn locate(&self, x: f64) -> (usize, f64) {
        let last = self.nodes.len() - 2;
        let i = self.nodes.partition_point(|&n| n <= x).clamp(1, last + 1) - 1;
        let t = (x - self.nodes[i]) / (self.nodes[i + 1] - self.nodes[i]);
        (i, t.clamp(0.0, 1.0))
    }
}

/// Strictly increasing time labels `t_0 < ... < t_n`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TimeAxis {
    times: Vec<f64>,
}

impl TimeAxis {
    pub fn new(times: Vec<f64>) -> Result<Self> {
        if times.len() < 2 || times.windows(2).any(|w| w[1] <= w[0]) {
            return Err(Error::InvalidArgument(
                "time axis needs at least two strictly increasing labels".into(),
            ));
        }
        Ok(Self { times })
    }

    /// `steps` constant steps on `[0, maturity]`.
    pub fn uniform(steps: usize, maturity: f64) -> Result<Self> {
        if steps == 0 || !(maturity > 0.0) {
            return Err(Error::InvalidArgument(format!(
                "uniform time axis needs steps > 0 and maturity > 0 (got {steps}, {maturity})"
            )));
        }
        let k = maturity / steps as f64;
        let mut times: Vec<f64> = (0..=steps).map(|j| k * j as f64).collect();
        times[steps] = maturity;
        Self::new(times)
    }

    pub fn times(&self) -> &[f64] {
        &self.times
    }

    pub fn steps(&self) -> usize {
        self.times.len() - 1
    }

    /// `k_j = t_j - t_{j-1}`.
    pub fn step(&self, j: usize) -> f64 {
        self.times[j] - self.times[j - 1]
    }

    pub fn maturity(&self) -> f64 {
        self.times[self.times.len() - 1]
    }
}
