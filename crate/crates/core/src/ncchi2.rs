//! Noncentral chi-square distribution function and its inverse.
//!
//! The CDF is the Poisson mixture of central chi-square CDFs, summed outward
//! from the Poisson mode so that large noncentralities stay accurate.

use crate::error::{Error, Result};
use statrs::function::gamma::{gamma_lr, ln_gamma};

const MAX_TERMS: usize = 100_000;
const TERM_TOL: f64 = 1e-17;

/// `P(X <= y)` for `X` noncentral chi-square with `d` degrees of freedom and
/// noncentrality `lambda`.
pub fn ncchi2_cdf(y: f64, d: f64, lambda: f64) -> Result<f64> {
    if !(d > 0.0) || !(lambda >= 0.0) {
        return Err(Error::InvalidArgument(format!(
            "need d > 0 and lambda >= 0, got d={d}, lambda={lambda}"
        )));
    }
    if y <= 0.0 {
        return Ok(0.0);
    }
    if y.is_infinite() {
        return Ok(1.0);
    }
    let half = 0.5 * lambda;
    let x = 0.5 * y;
    if half == 0.0 {
        return Ok(gamma_lr(0.5 * d, x));
    }
    let poisson = |j: usize| (-half + j as f64 * half.ln() - ln_gamma(j as f64 + 1.0)).exp();
    let mode = half.floor() as usize;

    let mut sum = 0.0;
    let mut weight_seen = 0.0;
    // upward from the mode
    let mut j = mode;
    let mut n = 0;
    loop {
        let w = poisson(j);
        sum += w * gamma_lr(0.5 * d + j as f64, x);
        weight_seen += w;
        n += 1;
        if (j > mode && w < TERM_TOL) || n > MAX_TERMS {
            break;
        }
        j += 1;
    }
    if n > MAX_TERMS {
        return Err(Error::SeriesNotConverged);
    }
    // downward from the mode
    let mut j = mode;
    while j > 0 {
        j -= 1;
        let w = poisson(j);
        sum += w * gamma_lr(0.5 * d + j as f64, x);
        weight_seen += w;
        if w < TERM_TOL {
            break;
        }
    }
    if (weight_seen - 1.0).abs() > 1e-9 {
        return Err(Error::SeriesNotConverged);
    }
    Ok(sum.clamp(0.0, 1.0))
}

/// Inverse of [`ncchi2_cdf`] in `y`, by bracketing and bisection.
pub fn ncchi2_quantile(p: f64, d: f64, lambda: f64) -> Result<f64> {
    if !(p > 0.0 && p < 1.0) {
        return Err(Error::InvalidArgument(format!("probability must lie in (0, 1), got {p}")));
    }
    let mean = d + lambda;
    let sd = (2.0 * (d + 2.0 * lambda)).sqrt();
    let mut hi = mean + 4.0 * sd;
    let mut lo = 0.0;
    let mut expand = 0;
    while ncchi2_cdf(hi, d, lambda)? < p {
        lo = hi;
        hi *= 2.0;
        expand += 1;
        if expand > 200 {
            return Err(Error::QuantileInversion { p });
        }
    }
    for _ in 0..300 {
        let mid = 0.5 * (lo + hi);
        let c = ncchi2_cdf(mid, d, lambda)?;
        if (c - p).abs() <= 1e-13 || hi - lo <= 1e-15 * hi {
            return Ok(mid);
        }
        if c < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let mid = 0.5 * (lo + hi);
    if (ncchi2_cdf(mid, d, lambda)? - p).abs() <= 1e-10 {
        Ok(mid)
    } else {
        Err(Error::QuantileInversion { p })
    }
}
