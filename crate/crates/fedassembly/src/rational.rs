//! Exact rational arithmetic helpers.
//!
//! Quotas, weighted populations, and rounding marginals are all carried as
//! exact rationals; floating point only appears where a loss or a report is
//! consumed by humans or by the optimizer's gradient descent.

use num_bigint::BigInt;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub type Rational = num_rational::BigRational;

/// Rational from an unsigned integer.
pub fn rat_u64(x: u64) -> Rational {
    Rational::from_integer(BigInt::from(x))
}

/// Rational `num/den`, mostly for tests and fixtures.
pub fn rat(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn is_integer(r: &Rational) -> bool {
    r.denom().is_one()
}

/// Floor of a nonnegative rational as u64. Panics on negative input.
pub fn floor_u64(r: &Rational) -> u64 {
    assert!(!r.is_negative(), "floor_u64 on negative rational");
    r.floor().to_integer().to_u64().expect("floor fits u64")
}

/// Ceiling of a nonnegative rational as u64.
pub fn ceil_u64(r: &Rational) -> u64 {
    assert!(!r.is_negative(), "ceil_u64 on negative rational");
    r.ceil().to_integer().to_u64().expect("ceil fits u64")
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or_else(|| {
        // Extremely large numerator/denominator: fall back to a quotient of
        // lossy conversions rather than returning NaN.
        let n = r.numer().to_f64().unwrap_or(f64::MAX);
        let d = r.denom().to_f64().unwrap_or(f64::MAX);
        n / d
    })
}

pub fn zero() -> Rational {
    Rational::zero()
}
