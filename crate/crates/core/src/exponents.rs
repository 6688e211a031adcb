//! Exact exponent bookkeeping for the critical norms.
//!
//! `p_* = 2(n-1)/(n-3) + delta`, `p_** = 2n/(n-2) - delta`, `1/p_*** = (1/2 + 1/p_**)/2`,
//! and the truncation window `(n+1)/((n-1)(n-3)) < sigma < 1/2`.

use num_rational::Rational64;
use num_traits::ToPrimitive;
use serde::Serialize;

use crate::error::{param, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub struct Exponents {
    pub n: usize,
    pub delta: Rational64,
    pub p_star: Rational64,
    pub p_2star: Rational64,
    pub p_3star: Rational64,
}

/// Floating-point view for norm evaluation and reports.
#[derive(Clone, Copy, Debug, PartialEq, Serialize)]
pub struct ExponentValues {
    pub p_star: f64,
    pub p_2star: f64,
    pub p_3star: f64,
}

fn r(a: i64, b: i64) -> Rational64 {
    Rational64::new(a, b)
}

impl Exponents {
    /// Exact exponents; `delta = 0` gives the limiting values.
    pub fn new(n: usize, delta: Rational64) -> Result<Self> {
        if n <= 3 {
            return param(format!("p_* = 2(n-1)/(n-3) is undefined for n = {n}"));
        }
        if delta < r(0, 1) {
            return param("delta must be nonnegative");
        }
        let n_i = n as i64;
        let p_star = r(2 * (n_i - 1), n_i - 3) + delta;
        let p_2star = r(2 * n_i, n_i - 2) - delta;
        if p_2star <= r(0, 1) {
            return param(format!("delta = {delta} leaves p_** nonpositive"));
        }
        let p_3star = (r(1, 2) * (r(1, 2) + p_2star.recip())).recip();
        Ok(Self { n, delta, p_star, p_2star, p_3star })
    }

    /// As [`Exponents::new`] with `delta` approximated by a rational (denominator ≤ 10^9).
    pub fn from_f64(n: usize, delta: f64) -> Result<Self> {
        let Some(d) = Rational64::approximate_float(delta) else {
            return param(format!("delta = {delta} is not representable"));
        };
        Self::new(n, d)
    }

    pub fn values(&self) -> ExponentValues {
        let f = |x: Rational64| x.to_f64().unwrap_or(f64::NAN);
        ExponentValues { p_star: f(self.p_star), p_2star: f(self.p_2star), p_3star: f(self.p_3star) }
    }
}

/// Open interval of admissible `sigma`; empty windows are a parameter error.
pub fn sigma_window(n: usize) -> Result<(Rational64, Rational64)> {
    if n <= 3 {
        return param(format!("sigma window undefined for n = {n}"));
    }
    let n_i = n as i64;
    let lo = r(n_i + 1, (n_i - 1) * (n_i - 3));
    let hi = r(1, 2);
    if lo >= hi {
        return param(format!("sigma window ({lo}, {hi}) is empty for n = {n}"));
    }
    Ok((lo, hi))
}

pub fn sigma_admissible(n: usize, sigma: f64) -> Result<()> {
    let (lo, hi) = sigma_window(n)?;
    let (lo, hi) = (lo.to_f64().unwrap_or(f64::NAN), hi.to_f64().unwrap_or(f64::NAN));
    if !(sigma > lo && sigma < hi) {
        return param(format!("sigma = {sigma} outside ({lo}, {hi})"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn limiting_values_in_six_dimensions() {
        let e = Exponents::new(6, r(0, 1)).unwrap();
        assert_eq!(e.p_star, r(10, 3));
        assert_eq!(e.p_2star, r(3, 1));
        assert_eq!(e.p_3star, r(12, 5));
        assert_eq!(sigma_window(6).unwrap(), (r(7, 15), r(1, 2)));
    }

    #[test]
    fn delta_shifts() {
        let e = Exponents::new(6, r(1, 100)).unwrap();
        assert_eq!(e.p_star, r(10, 3) + r(1, 100));
        assert_eq!(e.p_2star, r(3, 1) - r(1, 100));
        assert!(e.p_3star < r(12, 5));
        assert!(e.p_3star < r(12, 5) && e.p_3star > r(2, 1));
    }

    #[test]
    fn low_dimensions_rejected() {
        assert!(Exponents::new(3, r(0, 1)).is_err());
        assert!(sigma_window(5).is_err());
        assert!(sigma_admissible(6, 0.4).is_err());
        assert!(sigma_admissible(6, 0.48).is_ok());
        assert_eq!(sigma_window(7).unwrap().0, r(1, 3));
    }
}
