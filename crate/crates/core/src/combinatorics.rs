//! Exact binomial and falling-factorial coefficients in 64-bit integers.

use crate::error::{Error, Result};

/// `C(n, k)`, exact. Zero when `k > n`.
pub fn binomial(n: u64, k: u64) -> Result<u64> {
    if k > n {
        return Ok(0);
    }
    let k = k.min(n - k);
    let mut acc: u128 = 1;
    for i in 0..k {
        // acc * (n - i) is always divisible by (i + 1)
        acc = acc * u128::from(n - i) / u128::from(i + 1);
        if acc > u128::from(u64::MAX) {
            return Err(Error::CoefficientOverflow(format!("C({n}, {k})")));
        }
    }
    Ok(acc as u64)
}

/// Falling factorial `n (n-1) ... (n-m+1)`, with `n_(0) = 1`.
pub fn falling(n: u64, m: u64) -> Result<u64> {
    if m > n {
        return Ok(0);
    }
    let mut acc: u64 = 1;
    for i in 0..m {
        acc = acc
            .checked_mul(n - i)
            .ok_or_else(|| Error::CoefficientOverflow(format!("({n})_({m})")))?;
    }
    Ok(acc)
}

pub fn factorial(n: u64) -> Result<u64> {
    falling(n, n)
}

/// Binomial coefficient as `f64`, by way of the exact integer value.
pub fn binomial_f64(n: u64, k: u64) -> Result<f64> {
    binomial(n, k).map(|c| c as f64)
}

pub fn falling_f64(n: u64, m: u64) -> Result<f64> {
    falling(n, m).map(|c| c as f64)
}

pub fn factorial_f64(n: u64) -> Result<f64> {
    factorial(n).map(|c| c as f64)
}
