//! Exact rational probabilities.
//!
//! Every probability in the toolkit is a [`Rational`]; model files give
//! decimals or `p/q` strings and both are converted exactly, so traces and
//! threshold comparisons never suffer float drift.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn zero() -> Rational {
    Rational::zero()
}

pub fn one() -> Rational {
    Rational::one()
}

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

/// Parses `"0.475"`, `"19/40"` or `"1"` into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let text = text.trim();
    let err = || Error::Model(format!("cannot parse `{text}` as a rational number"));
    if let Some((num, den)) = text.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| err())?;
        let den: BigInt = den.trim().parse().map_err(|_| err())?;
        if den <= BigInt::zero() {
            return Err(err());
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((int, frac)) = text.split_once('.') {
        let int = if int.is_empty() { "0" } else { int };
        let int: BigInt = int.parse().map_err(|_| err())?;
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(err());
        }
        let digits: BigInt = frac.parse().map_err(|_| err())?;
        let scale = BigInt::from(10u32).pow(frac.len() as u32);
        return Ok(Rational::new(int * &scale + digits, scale));
    }
    let int: BigInt = text.parse().map_err(|_| err())?;
    Ok(Rational::from_integer(int))
}

/// `p/q` rendering, `0` and `1` without a denominator.
pub fn frac_string(r: &Rational) -> String {
    if r.denom().is_one() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

/// Approximate decimal rendering for human-readable reports.
pub fn decimal_string(r: &Rational) -> String {
    let value = r.numer().to_f64().unwrap_or(f64::NAN) / r.denom().to_f64().unwrap_or(f64::NAN);
    format!("{value}")
}

pub fn in_unit_interval(r: &Rational) -> bool {
    *r >= zero() && *r <= one()
}
