//! Closed-form Black-Scholes prices for European contracts, used as oracles.

use crate::payoff::Payoff;
use statrs::distribution::{ContinuousCDF, Normal};

fn norm_cdf(x: f64) -> f64 {
    Normal::standard().cdf(x)
}

fn d1_d2(spot: f64, strike: f64, tau: f64, sigma: f64, r: f64, q: f64) -> (f64, f64) {
    let sd = sigma * tau.sqrt();
    let d1 = ((spot / strike).ln() + (r - q + 0.5 * sigma * sigma) * tau) / sd;
    (d1, d1 - sd)
}

pub fn call(spot: f64, strike: f64, tau: f64, sigma: f64, r: f64, q: f64) -> f64 {
    if tau <= 0.0 || sigma <= 0.0 {
        let fwd = spot * (-q * tau).exp() - strike * (-r * tau).exp();
        return fwd.max(0.0);
    }
    let (d1, d2) = d1_d2(spot, strike, tau, sigma, r, q);
    spot * (-q * tau).exp() * norm_cdf(d1) - strike * (-r * tau).exp() * norm_cdf(d2)
}

pub fn put(spot: f64, strike: f64, tau: f64, sigma: f64, r: f64, q: f64) -> f64 {
    if tau <= 0.0 || sigma <= 0.0 {
        let fwd = strike * (-r * tau).exp() - spot * (-q * tau).exp();
        return fwd.max(0.0);
    }
    let (d1, d2) = d1_d2(spot, strike, tau, sigma, r, q);
    strike * (-r * tau).exp() * norm_cdf(-d2) - spot * (-q * tau).exp() * norm_cdf(-d1)
}

/// Cash-or-nothing call paying `rebate` when the spot ends at or above the strike.
pub fn digital_call(spot: f64, strike: f64, rebate: f64, tau: f64, sigma: f64, r: f64, q: f64) -> f64 {
    if tau <= 0.0 || sigma <= 0.0 {
        let fwd = spot * ((r - q) * tau).exp();
        return if fwd >= strike { rebate * (-r * tau).exp() } else { 0.0 };
    }
    let (_, d2) = d1_d2(spot, strike, tau, sigma, r, q);
    rebate * (-r * tau).exp() * norm_cdf(d2)
}

/// European value of `payoff` under constant coefficients.
pub fn european(payoff: &Payoff, spot: f64, tau: f64, sigma: f64, r: f64, q: f64) -> f64 {
    match *payoff {
        Payoff::Put { strike } => put(spot, strike, tau, sigma, r, q),
        Payoff::Call { strike } => call(spot, strike, tau, sigma, r, q),
        Payoff::DigitalCall { strike, rebate } => digital_call(spot, strike, rebate, tau, sigma, r, q),
        Payoff::Butterfly { low, high } => {
            let mid = 0.5 * (low + high);
            call(spot, low, tau, sigma, r, q) - 2.0 * call(spot, mid, tau, sigma, r, q)
                + call(spot, high, tau, sigma, r, q)
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn put_call_parity() {
        let (s, k, t, v, r, q) = (105.0, 100.0, 0.7, 0.3, 0.04, 0.01);
        let lhs = call(s, k, t, v, r, q) - put(s, k, t, v, r, q);
        let rhs = s * (-q * t).exp() - k * (-r * t).exp();
        assert_relative_eq!(lhs, rhs, epsilon = 1e-12);
    }

    #[test]
    fn textbook_value() {
        // S=K=100, T=1, sigma=0.2, r=0.05: call 10.4506, put 5.5735
        assert_relative_eq!(call(100.0, 100.0, 1.0, 0.2, 0.05, 0.0), 10.450583572185565, epsilon = 1e-9);
        assert_relative_eq!(put(100.0, 100.0, 1.0, 0.2, 0.05, 0.0), 5.573526022256971, epsilon = 1e-9);
    }

    #[test]
    fn digital_is_strike_derivative() {
        let (s, k, t, v, r) = (97.0, 100.0, 0.25, 0.25, 0.1);
        let h = 1e-4;
        let fd = (call(s, k - h, t, v, r, 0.0) - call(s, k + h, t, v, r, 0.0)) / (2.0 * h);
        assert_relative_eq!(digital_call(s, k, 1.0, t, v, r, 0.0), fd, epsilon = 1e-7);
    }

    #[test]
    fn expiry_limit() {
        assert_eq!(put(90.0, 100.0, 0.0, 0.2, 0.05, 0.0), 10.0);
        assert_eq!(digital_call(100.0, 100.0, 2.0, 0.0, 0.2, 0.05, 0.0), 2.0);
    }
}
