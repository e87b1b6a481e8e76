//! Small helpers around exact rationals: parsing, decimal rendering and
//! string-based serde adapters used by the JSON reports.

use num_bigint::{BigInt, BigUint};
use num_rational::BigRational;
use num_traits::{One, Signed, Zero};

use crate::error::{Error, Result};

/// Significant digits used by every decimal rendering.
pub const DECIMAL_DIGITS: usize = 30;

/// Parses `p/q`, `p` or a terminating decimal such as `0.25`.
pub fn parse_rational(text: &str) -> Result<BigRational> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::parse(0, "empty rational"));
    }
    if let Some((num, den)) = s.split_once('/') {
        let n: BigInt = num
            .trim()
            .parse()
            .map_err(|_| Error::parse(0, format!("bad numerator in '{s}'")))?;
        let d: BigInt = den
            .trim()
            .parse()
            .map_err(|_| Error::parse(num.len() + 1, format!("bad denominator in '{s}'")))?;
        if d.is_zero() {
            return Err(Error::parse(num.len() + 1, "zero denominator"));
        }
        return Ok(BigRational::new(n, d));
    }
    if let Some((int, frac)) = s.split_once('.') {
        let negative = int.starts_with('-');
        let int_digits = int.trim_start_matches(['-', '+']);
        if !frac.chars().all(|c| c.is_ascii_digit()) || !int_digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(Error::parse(0, format!("bad decimal '{s}'")));
        }
        let digits = format!("{int_digits}{frac}");
        let digits = if digits.is_empty() { "0".to_string() } else { digits };
        let mut n: BigInt = digits.parse().map_err(|_| Error::parse(0, format!("bad decimal '{s}'")))?;
        if negative {
            n = -n;
        }
        let d = num_traits::pow(BigInt::from(10u32), frac.len());
        return Ok(BigRational::new(n, d));
    }
    let n: BigInt = s.parse().map_err(|_| Error::parse(0, format!("bad rational '{s}'")))?;
    Ok(BigRational::from_integer(n))
}

/// Canonical `p/q` rendering (`p` when the denominator is one).
pub fn format_rational(q: &BigRational) -> String {
    if q.denom().is_one() {
        q.numer().to_string()
    } else {
        format!("{}/{}", q.numer(), q.denom())
    }
}

pub fn pow2(exp: u32) -> BigUint {
    BigUint::one() << exp as usize
}

/// `2^exp` as a rational, negative exponents allowed.
pub fn pow2_rational(exp: i64) -> BigRational {
    if exp >= 0 {
        BigRational::from_integer(BigInt::one() << exp as usize)
    } else {
        BigRational::new(BigInt::one(), BigInt::one() << (-exp) as usize)
    }
}

/// `2^n - 1`, the numerator of a distance whose first `n` bits all differ.
pub fn all_ones(n: u32) -> BigUint {
    pow2(n) - BigUint::one()
}

/// Round-to-nearest rendering with [`DECIMAL_DIGITS`] significant digits.
/// Display only; never feed the result back into a computation.
pub fn to_decimal(q: &BigRational) -> String {
    to_decimal_digits(q, DECIMAL_DIGITS)
}

pub fn to_decimal_digits(q: &BigRational, digits: usize) -> String {
    if q.is_zero() {
        return "0".to_string();
    }
    let negative = q.is_negative();
    let a = q.abs();
    let ten = BigInt::from(10u32);

    // exponent e with 10^e <= a < 10^(e+1)
    let mut e = a.numer().to_string().len() as i64 - a.denom().to_string().len() as i64;
    let scale = |k: i64| -> BigRational {
        if k >= 0 {
            BigRational::from_integer(num_traits::pow(ten.clone(), k as usize))
        } else {
            BigRational::new(BigInt::one(), num_traits::pow(ten.clone(), (-k) as usize))
        }
    };
    while a < scale(e) {
        e -= 1;
    }
    while a >= scale(e + 1) {
        e += 1;
    }

    let shift = digits as i64 - 1 - e;
    let scaled = &a * scale(shift);
    let half = BigRational::new(BigInt::one(), BigInt::from(2u32));
    let mut rounded = (scaled + half).floor().to_integer();
    let limit = num_traits::pow(ten.clone(), digits);
    if rounded >= limit {
        rounded /= &ten;
        e += 1;
    }

    let mut body = rounded.to_string();
    let out = if e >= 0 {
        let int_len = (e + 1) as usize;
        if body.len() <= int_len {
            body.push_str(&"0".repeat(int_len - body.len()));
            body
        } else {
            let (int_part, frac) = body.split_at(int_len);
            let frac = frac.trim_end_matches('0');
            if frac.is_empty() {
                int_part.to_string()
            } else {
                format!("{int_part}.{frac}")
            }
        }
    } else {
        let zeros = "0".repeat((-e - 1) as usize);
        format!("0.{zeros}{}", body.trim_end_matches('0'))
    };
    if negative {
        format!("-{out}")
    } else {
        out
    }
}

/// Serde adapter storing a [`BigRational`] as its `p/q` string.
pub mod serde_ratio {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(q: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(q))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

/// Serde adapter storing a [`BigUint`] as a decimal string.
pub mod serde_biguint {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(n: &BigUint, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&n.to_string())
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<BigUint, D::Error> {
        let text = String::deserialize(d)?;
        text.parse().map_err(serde::de::Error::custom)
    }
}
