//! Three-term recurrences for the orthogonal polynomial families behind the
//! super-time-stepping schemes.
//!
//! Both families satisfy
//!
//! ```text
//! P_n(w) = alpha_n * w * P_{n-1}(w) - beta_n * P_{n-2}(w),   P_0 = 1, P_1 = w
//! ```
//!
//! and the first two derivatives are carried through the same loop by the
//! product rule.

use serde::{Deserialize, Serialize};

/// Polynomial family driving the stage recursion.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Family {
    /// Legendre polynomials (RKL schemes).
    Legendre,
    /// Chebyshev polynomials of the first kind (RKC schemes).
    Chebyshev,
}

/// Value and first two derivatives of a polynomial at a point.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct PolyValue {
    pub value: f64,
    pub d1: f64,
    pub d2: f64,
}

impl Family {
    /// Recurrence multipliers `(alpha_n, beta_n)` for degree `n >= 2`.
    #[inline]
    pub fn recurrence(self, n: usize) -> (f64, f64) {
        debug_assert!(n >= 2);
        match self {
            Family::Legendre => {
                let n = n as f64;
                ((2.0 * n - 1.0) / n, (n - 1.0) / n)
            }
            Family::Chebyshev => (2.0, 1.0),
        }
    }

    /// Evaluates the polynomial of degree `n` and its derivatives at `w`.
    pub fn eval(self, n: usize, w: f64) -> PolyValue {
        let mut prev = PolyValue {
            value: 1.0,
            d1: 0.0,
            d2: 0.0,
        };
        if n == 0 {
            return prev;
        }
        let mut cur = PolyValue {
            value: w,
            d1: 1.0,
            d2: 0.0,
        };
        for k in 2..=n {
            let (alpha, beta) = self.recurrence(k);
            let next = PolyValue {
                value: alpha * w * cur.value - beta * prev.value,
                d1: alpha * (cur.value + w * cur.d1) - beta * prev.d1,
                d2: alpha * (2.0 * cur.d1 + w * cur.d2) - beta * prev.d2,
            };
            prev = cur;
            cur = next;
        }
        cur
    }
}

/// Legendre polynomial of degree `n` with derivatives, by recurrence.
pub fn legendre_eval(n: usize, w: f64) -> PolyValue {
    Family::Legendre.eval(n, w)
}

/// Chebyshev polynomial of the first kind of degree `n` with derivatives.
pub fn chebyshev_eval(n: usize, w: f64) -> PolyValue {
    Family::Chebyshev.eval(n, w)
}
