//! Nonnegative magnitudes stored as natural logarithms.
//!
//! Ground-state amplitudes scale like `t^{O(n^2)}`, far outside the range of
//! an `f64`, so every weight in the crate lives in the log domain. `+` adds
//! magnitudes (log-sum-exp) and `*` multiplies them.

use std::iter::Sum;
use std::ops::{Add, Mul};

#[derive(Debug, Clone, Copy, PartialEq, PartialOrd)]
pub struct LogWeight(f64);

impl LogWeight {
    /// Magnitude zero.
    pub const ZERO: LogWeight = LogWeight(f64::NEG_INFINITY);
    pub const ONE: LogWeight = LogWeight(0.0);

    pub fn from_ln(ln: f64) -> Self {
        debug_assert!(!ln.is_nan());
        LogWeight(ln)
    }

    /// `None` for negative or NaN magnitudes.
    pub fn from_value(value: f64) -> Option<Self> {
        (value >= 0.0).then(|| LogWeight(value.ln()))
    }

    pub fn ln(self) -> f64 {
        self.0
    }

    pub fn value(self) -> f64 {
        self.0.exp()
    }

    pub fn is_zero(self) -> bool {
        self.0 == f64::NEG_INFINITY
    }

    pub fn powf(self, exponent: f64) -> Self {
        if self.is_zero() {
            self
        } else {
            LogWeight(self.0 * exponent)
        }
    }
}

/// `ln(exp(a) + exp(b))` without overflow.
#[inline]
pub fn log_add(a: f64, b: f64) -> f64 {
    if a == f64::NEG_INFINITY {
        return b;
    }
    if b == f64::NEG_INFINITY {
        return a;
    }
    if a >= b {
        a + (b - a).exp().ln_1p()
    } else {
        b + (a - b).exp().ln_1p()
    }
}

/// `ln(sum exp(x_i))`, anchored at the maximum term.
pub fn log_sum_exp(terms: &[f64]) -> f64 {
    let max = terms.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max.is_infinite() {
        return max;
    }
    let sum: f64 = terms.iter().map(|&x| (x - max).exp()).sum();
    max + sum.ln()
}

impl Add for LogWeight {
    type Output = LogWeight;

    fn add(self, rhs: LogWeight) -> LogWeight {
        LogWeight(log_add(self.0, rhs.0))
    }
}

impl Mul for LogWeight {
    type Output = LogWeight;

    fn mul(self, rhs: LogWeight) -> LogWeight {
        if self.is_zero() || rhs.is_zero() {
            LogWeight::ZERO
        } else {
            LogWeight(self.0 + rhs.0)
        }
    }
}

impl Sum for LogWeight {
    fn sum<I: Iterator<Item = LogWeight>>(iter: I) -> LogWeight {
        let logs: Vec<f64> = iter.map(|w| w.0).collect();
        LogWeight(log_sum_exp(&logs))
    }
}
