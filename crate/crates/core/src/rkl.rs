//! Runge-Kutta-Legendre (and Runge-Kutta-Chebyshev) second-order
//! super-time-stepping: coefficients, stage-count selection and the
//! multi-stage stepper with optional obstacle projection.
//!
//! A step of size `k` for `df/dt = M f` runs `s` explicit stages:
//!
//! ```text
//! f1 = f0 + lt_1 k M f0
//! fj = l_j f(j-1) + n_j f(j-2) + (1 - l_j - n_j) f0 + lt_j k M f(j-1) + gt_j k M f0
//! ```
//!
//! Operators are assembled without the time-step factor; the stepper applies
//! `k` itself. Under an obstacle every stage is projected with `max(F, .)`.

use crate::error::{Error, Result};
use crate::poly::Family;
use serde::{Deserialize, Serialize};

/// A linear map `v -> M v` over flat state vectors.
pub trait LinearOperator {
    fn dim(&self) -> usize;

    /// Writes `M v` into `out`. Both slices have length `dim()`.
    fn apply(&self, v: &[f64], out: &mut [f64]);
}

/// Scalar multiple of the identity. Mostly useful for the scalar test problem.
#[derive(Debug, Clone, Copy)]
pub struct ScaledIdentity {
    pub dim: usize,
    pub scale: f64,
}

impl LinearOperator for ScaledIdentity {
    fn dim(&self) -> usize {
        self.dim
    }

    fn apply(&self, v: &[f64], out: &mut [f64]) {
        for (o, x) in out.iter_mut().zip(v) {
            *o = self.scale * x;
        }
    }
}

/// Lower bound applied after every stage.
#[derive(Debug, Clone, Copy, Default)]
pub enum Obstacle<'a> {
    #[default]
    Unconstrained,
    Lower(&'a [f64]),
}

impl<'a> Obstacle<'a> {
    pub fn lower(values: &'a [f64]) -> Self {
        Obstacle::Lower(values)
    }

    #[inline]
    fn project(&self, f: &mut [f64]) {
        if let Obstacle::Lower(bound) = self {
            for (x, &lo) in f.iter_mut().zip(bound.iter()) {
                if *x < lo {
                    *x = lo;
                }
            }
        }
    }

    fn check_dim(&self, n: usize) -> Result<()> {
        match self {
            Obstacle::Lower(b) if b.len() != n => Err(Error::DimensionMismatch {
                expected: n,
                actual: b.len(),
            }),
            _ => Ok(()),
        }
    }
}

/// All per-stage constants of an `s`-stage scheme.
///
/// `b` and `a` are indexed by `stage - 1` (so `b[0]` belongs to stage 1).
/// The per-stage vectors `lambda`, `lambda_tilde`, `nu` and `gamma_tilde` are
/// indexed by stage number and have length `s + 1`; entry 0 is unused. Only
/// `lambda_tilde[1]` is meaningful at stage 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SchemeCoefficients {
    pub family: Family,
    pub stages: usize,
    pub shift: f64,
    pub w0: f64,
    pub w1: f64,
    pub b: Vec<f64>,
    pub a: Vec<f64>,
    pub lambda: Vec<f64>,
    pub lambda_tilde: Vec<f64>,
    pub nu: Vec<f64>,
    pub gamma_tilde: Vec<f64>,
}

impl SchemeCoefficients {
    /// Builds the coefficients for `family` with `stages` stages and shift `eps`
    /// (polynomial argument `w0 = 1 + eps / s^2`).
    pub fn new(family: Family, stages: usize, eps: f64) -> Result<Self> {
        if stages < 2 {
            return Err(Error::InvalidArgument(format!(
                "at least two stages are required, got {stages}"
            )));
        }
        if !(eps >= 0.0 && eps.is_finite()) {
            return Err(Error::InvalidArgument(format!("shift must be >= 0, got {eps}")));
        }
        let s = stages;
        let sf = s as f64;
        let w0 = 1.0 + eps / (sf * sf);
        let closed_form = eps == 0.0 && family == Family::Legendre;

        let w1 = if closed_form {
            4.0 / (sf * sf + sf - 2.0)
        } else {
            let p = family.eval(s, w0);
            p.d1 / p.d2
        };

        // b[j] and a[j] belong to the polynomial of degree j + 1.
        let mut b = vec![0.0; s];
        let mut a = vec![0.0; s];
        for j in 1..s {
            let deg = j + 1;
            if closed_form {
                let d = deg as f64;
                b[j] = (d * d + d - 2.0) / (2.0 * d * (d + 1.0));
                a[j] = 1.0 - b[j];
            } else {
                let p = family.eval(deg, w0);
                b[j] = p.d2 / (p.d1 * p.d1);
                a[j] = 1.0 - b[j] * p.value;
            }
        }
        b[0] = b[1];
        a[0] = 1.0 - b[0] * w0;

        let mut lambda = vec![0.0; s + 1];
        let mut lambda_tilde = vec![0.0; s + 1];
        let mut nu = vec![0.0; s + 1];
        let mut gamma_tilde = vec![0.0; s + 1];
        lambda_tilde[1] = b[0] * w1;
        for eta in 2..=s {
            let (alpha, beta) = family.recurrence(eta);
            let ratio = alpha * b[eta - 1] / b[eta - 2];
            lambda[eta] = ratio * w0;
            lambda_tilde[eta] = ratio * w1;
            // the stage-0 polynomial shares b with stage 1
            let b_before = if eta >= 3 { b[eta - 3] } else { b[0] };
            nu[eta] = -beta * b[eta - 1] / b_before;
            gamma_tilde[eta] = -a[eta - 2] * lambda_tilde[eta];
        }

        Ok(Self {
            family,
            stages: s,
            shift: eps,
            w0,
            w1,
            b,
            a,
            lambda,
            lambda_tilde,
            nu,
            gamma_tilde,
        })
    }

    /// Length of the real stability interval, `(1 + w0) / w1`, in units of `k * |lambda|`.
    pub fn real_stability_bound(&self) -> f64 {
        (1.0 + self.w0) / self.w1
    }

    /// Ratio `k / dt_explicit` up to which a step remains stable.
    pub fn step_ratio_bound(&self) -> f64 {
        (1.0 + self.w0) / (2.0 * self.w1)
    }
}

/// RKL2 coefficients for `s >= 2` stages and shift `eps`.
pub fn rkl_coefficients(s: usize, eps: f64) -> Result<SchemeCoefficients> {
    SchemeCoefficients::new(Family::Legendre, s, eps)
}

/// RKC2 coefficients for `s >= 2` stages and shift `eps`.
pub fn rkc_coefficients(s: usize, eps: f64) -> Result<SchemeCoefficients> {
    SchemeCoefficients::new(Family::Chebyshev, s, eps)
}

fn round_up_odd(s: usize) -> usize {
    if s.is_multiple_of(2) {
        s + 1
    } else {
        s
    }
}

/// Fraction of the stability bound a step is allowed to use.
pub const STABILITY_MARGIN: f64 = 0.95;

/// Smallest stage count keeping a step of size `k` within
/// [`STABILITY_MARGIN`] of the stability bound
/// `k <= (1 + w0) / (2 w1) * dt_explicit`, rounded up to the next odd integer.
///
/// Without shift the quadratic `s^2 + s - 2 >= 4 k / dt_explicit` is solved
/// directly; with a shift, `s` is increased from that value until the bound
/// holds.
pub fn stages_for_step(k: f64, dt_explicit: f64, eps: f64) -> usize {
    assert!(k > 0.0 && dt_explicit > 0.0, "step sizes must be positive");
    let ratio = k / (STABILITY_MARGIN * dt_explicit);
    let root = 0.5 * ((9.0 + 16.0 * ratio).sqrt() - 1.0);
    let mut s = (root.ceil() as usize).max(2);
    // guard against the square root landing a hair above an integer
    while s > 2 && {
        let t = (s - 1) as f64;
        t * t + t - 2.0 >= 4.0 * ratio
    } {
        s -= 1;
    }
    if eps > 0.0 {
        loop {
            let c = rkl_coefficients(s, eps).expect("s >= 2");
            if ratio <= c.step_ratio_bound() {
                break;
            }
            s += 1;
        }
    }
    round_up_odd(s)
}

/// Advances `f0` by one step of size `k` through the `s`-stage recursion.
///
/// Under [`Obstacle::Lower`] every stage output is clamped from below; the
/// product `M f0` is computed once and reused by every stage.
pub fn rkl_step<O: LinearOperator + ?Sized>(
    coeffs: &SchemeCoefficients,
    op: &O,
    k: f64,
    f0: &[f64],
    obstacle: Obstacle<'_>,
) -> Result<Vec<f64>> {
    let n = op.dim();
    if f0.len() != n {
        return Err(Error::DimensionMismatch {
            expected: n,
            actual: f0.len(),
        });
    }
    obstacle.check_dim(n)?;

    let mut m0 = vec![0.0; n];
    op.apply(f0, &mut m0);

    let l1 = k * coeffs.lambda_tilde[1];
    let mut prev: Vec<f64> = f0.iter().zip(&m0).map(|(f, m)| f + l1 * m).collect();
    obstacle.project(&mut prev);

    let mut prev2 = f0.to_vec();
    let mut cur = vec![0.0; n];
    let mut mv = vec![0.0; n];
    for eta in 2..=coeffs.stages {
        let lam = coeffs.lambda[eta];
        let nu = coeffs.nu[eta];
        let c0 = 1.0 - lam - nu;
        let lt = k * coeffs.lambda_tilde[eta];
        let gt = k * coeffs.gamma_tilde[eta];
        op.apply(&prev, &mut mv);
        for i in 0..n {
            cur[i] = lam * prev[i] + nu * prev2[i] + c0 * f0[i] + lt * mv[i] + gt * m0[i];
        }
        obstacle.project(&mut cur);
        // prev2 <- prev, prev <- cur
        std::mem::swap(&mut prev2, &mut prev);
        std::mem::swap(&mut prev, &mut cur);
    }
    Ok(prev)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn scalar_amplification(c: &SchemeCoefficients, z: f64) -> f64 {
        let op = ScaledIdentity { dim: 1, scale: z };
        rkl_step(c, &op, 1.0, &[1.0], Obstacle::Unconstrained).unwrap()[0]
    }

    #[test]
    fn two_stage_hand_values() {
        let c = rkl_coefficients(2, 0.0).unwrap();
        assert_eq!(c.w0, 1.0);
        assert_relative_eq!(c.w1, 1.0, epsilon = 1e-15);
        assert_relative_eq!(c.b[1], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(c.b[0], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(c.lambda_tilde[1], 1.0 / 3.0, epsilon = 1e-15);
        assert_relative_eq!(c.lambda[2], 1.5, epsilon = 1e-15);
        assert_relative_eq!(c.nu[2], -0.5, epsilon = 1e-15);
        assert_relative_eq!(c.lambda_tilde[2], 1.5, epsilon = 1e-15);
        assert_relative_eq!(c.gamma_tilde[2], -1.0, epsilon = 1e-15);
    }

    #[test]
    fn unshifted_closed_forms() {
        let c = rkl_coefficients(21, 0.0).unwrap();
        assert_eq!(c.w1, 4.0 / 460.0);
        for eta in 2..=21usize {
            let e = eta as f64;
            assert_eq!(c.b[eta - 1], (e * e + e - 2.0) / (2.0 * e * (e + 1.0)));
            assert_eq!(c.a[eta - 1], 1.0 - c.b[eta - 1]);
        }
        // closed forms agree with the polynomial route
        for eta in 2..=21usize {
            let p = crate::poly::legendre_eval(eta, 1.0);
            assert_relative_eq!(c.b[eta - 1], p.d2 / (p.d1 * p.d1), max_relative = 1e-13);
        }
    }

    #[test]
    fn rejects_single_stage() {
        assert!(rkl_coefficients(1, 0.0).is_err());
        assert!(rkl_coefficients(0, 0.0).is_err());
    }

    #[test]
    fn two_stage_amplification_is_taylor() {
        let c = rkl_coefficients(2, 0.0).unwrap();
        for &z in &[-2.0, -0.7, -0.01, 0.3] {
            assert_relative_eq!(scalar_amplification(&c, z), 1.0 + z + 0.5 * z * z, epsilon = 1e-14);
        }
    }

    #[test]
    fn second_order_consistency() {
        for s in [2usize, 3, 5, 9, 21, 47] {
            for eps in [0.0, 20.0] {
                let c = rkl_coefficients(s, eps).unwrap();
                assert_relative_eq!(scalar_amplification(&c, 0.0), 1.0, epsilon = 1e-14);
                for i in 1..=20 {
                    let z = -0.1 * i as f64 / 20.0;
                    let r = scalar_amplification(&c, z);
                    let taylor = 1.0 + z + 0.5 * z * z;
                    assert!(
                        (r - taylor).abs() <= 1.0 * z.abs().powi(3) + 1e-13,
                        "s={s} eps={eps} z={z} r={r}"
                    );
                }
            }
        }
    }

    #[test]
    fn stable_on_real_interval() {
        for s in [3usize, 5, 7, 11, 21] {
            for eps in [0.0, 20.0] {
                let c = rkl_coefficients(s, eps).unwrap();
                let zmin = -c.real_stability_bound();
                for i in 0..=4000 {
                    let z = zmin * i as f64 / 4000.0;
                    let r = scalar_amplification(&c, z);
                    assert!(r.abs() <= 1.0 + 1e-12, "s={s} eps={eps} z={z} |R|={}", r.abs());
                }
            }
        }
    }

    #[test]
    fn stage_count_minimum_is_three() {
        assert_eq!(stages_for_step(1.0, 1.0, 0.0), 3);
        assert_eq!(stages_for_step(0.1, 1.0, 0.0), 3);
    }

    #[test]
    fn stage_count_satisfies_bound() {
        for &ratio in &[1.5, 10.0, 77.7, 498.0, 1432.0] {
            for &eps in &[0.0, 20.0] {
                let s = stages_for_step(ratio, 1.0, eps);
                assert_eq!(s % 2, 1);
                let c = rkl_coefficients(s, eps).unwrap();
                assert!(STABILITY_MARGIN * c.step_ratio_bound() >= ratio);
                if s >= 5 {
                    let c2 = rkl_coefficients(s - 2, eps).unwrap();
                    assert!(STABILITY_MARGIN * c2.step_ratio_bound() < ratio);
                }
            }
        }
    }

    #[test]
    fn zero_operator_is_identity_under_obstacle() {
        let c = rkl_coefficients(7, 0.0).unwrap();
        let f0 = vec![1.0, 2.0, 3.0];
        let lo = vec![0.5, 2.0, -1.0];
        let op = ScaledIdentity { dim: 3, scale: 0.0 };
        let out = rkl_step(&c, &op, 0.3, &f0, Obstacle::lower(&lo)).unwrap();
        for (a, b) in out.iter().zip(&f0) {
            assert_relative_eq!(a, b, epsilon = 1e-14);
        }
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let c = rkl_coefficients(3, 0.0).unwrap();
        let op = ScaledIdentity { dim: 3, scale: -1.0 };
        assert!(rkl_step(&c, &op, 0.1, &[1.0, 2.0], Obstacle::Unconstrained).is_err());
        assert!(rkl_step(&c, &op, 0.1, &[1.0, 2.0, 3.0], Obstacle::lower(&[0.0])).is_err());
    }
}
