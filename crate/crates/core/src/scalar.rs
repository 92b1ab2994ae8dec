//! Numeric abstraction shared by the payoff rules and the game solvers.
//!
//! Everything that compares a deviation against a band, or checks whether a
//! deviation is profitable, goes through [`Scalar`]. Exact rationals compare
//! with zero slack; binary floats use a small absolute tolerance so that
//! boundary cases such as a deviation of exactly 10% stay deterministic.

use std::fmt::{Debug, Display};

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Num, Signed, ToPrimitive, Zero};
use serde_json::Value;

/// Exact rational used for story points, bands and game payoffs.
pub type Rational = Ratio<i64>;

pub trait Scalar:
    Num + Signed + PartialOrd + Clone + Debug + Display + Send + Sync + 'static
{
    /// Absolute slack used by [`approx_eq`] and [`approx_le`]. Zero for exact types.
    fn tolerance() -> Self;

    fn from_rational(r: &Rational) -> Self;

    fn to_f64(&self) -> f64;

    fn to_json(&self) -> Value;

    fn from_json(v: &Value) -> Result<Self, ScalarParseError>;

    fn from_i64(v: i64) -> Self {
        Self::from_rational(&Rational::from_integer(v))
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("cannot read `{0}` as a number")]
pub struct ScalarParseError(pub String);

pub fn approx_eq<S: Scalar>(a: &S, b: &S) -> bool {
    (a.clone() - b.clone()).abs() <= S::tolerance()
}

pub fn approx_le<S: Scalar>(a: &S, b: &S) -> bool {
    *a <= b.clone() + S::tolerance()
}

/// `a` exceeds `b` by more than the tolerance.
pub fn definitely_gt<S: Scalar>(a: &S, b: &S) -> bool {
    *a > b.clone() + S::tolerance()
}

impl Scalar for f64 {
    fn tolerance() -> Self {
        1e-9
    }

    fn from_rational(r: &Rational) -> Self {
        *r.numer() as f64 / *r.denom() as f64
    }

    fn to_f64(&self) -> f64 {
        *self
    }

    fn to_json(&self) -> Value {
        serde_json::Number::from_f64(*self)
            .map(Value::Number)
            .unwrap_or(Value::Null)
    }

    fn from_json(v: &Value) -> Result<Self, ScalarParseError> {
        match v {
            Value::Number(n) => n.as_f64().ok_or_else(|| ScalarParseError(n.to_string())),
            Value::String(s) => parse_rational(s).map(|r| f64::from_rational(&r)),
            other => Err(ScalarParseError(other.to_string())),
        }
    }
}

impl Scalar for f32 {
    // f32 carries ~7 significant digits; 1e-9 would be below its resolution.
    fn tolerance() -> Self {
        1e-6
    }

    fn from_rational(r: &Rational) -> Self {
        (*r.numer() as f64 / *r.denom() as f64) as f32
    }

    fn to_f64(&self) -> f64 {
        f64::from(*self)
    }

    fn to_json(&self) -> Value {
        f64::from(*self).to_json()
    }

    fn from_json(v: &Value) -> Result<Self, ScalarParseError> {
        f64::from_json(v).map(|x| x as f32)
    }
}

impl Scalar for Rational {
    fn tolerance() -> Self {
        Rational::zero()
    }

    fn from_rational(r: &Rational) -> Self {
        *r
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_json(&self) -> Value {
        rational_to_json(self)
    }

    fn from_json(v: &Value) -> Result<Self, ScalarParseError> {
        rational_from_json(v)
    }
}

impl Scalar for BigRational {
    fn tolerance() -> Self {
        BigRational::zero()
    }

    fn from_rational(r: &Rational) -> Self {
        BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn to_json(&self) -> Value {
        if self.is_integer() {
            if let Some(i) = self.numer().to_i64() {
                return Value::from(i);
            }
        }
        Value::String(format!("{}/{}", self.numer(), self.denom()))
    }

    fn from_json(v: &Value) -> Result<Self, ScalarParseError> {
        match v {
            Value::String(s) if s.contains('/') => {
                let (n, d) = s.split_once('/').unwrap();
                let n: BigInt = n.trim().parse().map_err(|_| ScalarParseError(s.clone()))?;
                let d: BigInt = d.trim().parse().map_err(|_| ScalarParseError(s.clone()))?;
                if d.is_zero() {
                    return Err(ScalarParseError(s.clone()));
                }
                Ok(BigRational::new(n, d))
            }
            other => rational_from_json(other).map(|r| BigRational::from_rational(&r)),
        }
    }
}

/// Parses `"p/q"`, an integer, or a finite decimal such as `"8.5"` / `"1e-1"`
/// into an exact rational.
pub fn parse_rational(text: &str) -> Result<Rational, ScalarParseError> {
    let err = || ScalarParseError(text.to_string());
    let s = text.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().map_err(|_| err())?;
        let d: i64 = d.trim().parse().map_err(|_| err())?;
        if d == 0 {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(i) => (&s[..i], s[i + 1..].parse::<i32>().map_err(|_| err())?),
        None => (s, 0),
    };
    let (negative, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (int_part, frac_part) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(err());
    }
    if !int_part.chars().chain(frac_part.chars()).all(|c| c.is_ascii_digit()) {
        return Err(err());
    }
    let digits = format!("{int_part}{frac_part}");
    let digits = digits.trim_start_matches('0');
    let numer: i64 = if digits.is_empty() {
        0
    } else {
        digits.parse().map_err(|_| err())?
    };
    let scale = exponent - frac_part.len() as i32;
    let pow = |e: u32| 10i64.checked_pow(e).ok_or_else(err);
    let value = if scale >= 0 {
        Rational::from_integer(numer.checked_mul(pow(scale as u32)?).ok_or_else(err)?)
    } else {
        Rational::new(numer, pow(scale.unsigned_abs())?)
    };
    Ok(if negative { -value } else { value })
}

fn is_terminating_decimal(r: &Rational) -> bool {
    let mut d = *r.denom();
    for p in [2, 5] {
        while d % p == 0 {
            d /= p;
        }
    }
    d == 1
}

/// Integers become JSON integers; short terminating decimals become JSON
/// numbers (they survive an f64 round trip textually); anything else is
/// written as the string `"p/q"`.
pub fn rational_to_json(r: &Rational) -> Value {
    if r.is_integer() {
        return Value::from(*r.numer());
    }
    if is_terminating_decimal(r) {
        let f = Scalar::to_f64(r);
        if let Ok(back) = parse_rational(&format!("{f}")) {
            if back == *r {
                if let Some(n) = serde_json::Number::from_f64(f) {
                    return Value::Number(n);
                }
            }
        }
    }
    Value::String(format!("{}/{}", r.numer(), r.denom()))
}

pub fn rational_from_json(v: &Value) -> Result<Rational, ScalarParseError> {
    match v {
        Value::Number(n) => {
            if let Some(i) = n.as_i64() {
                Ok(Rational::from_integer(i))
            } else {
                parse_rational(&n.to_string())
            }
        }
        Value::String(s) => parse_rational(s),
        other => Err(ScalarParseError(other.to_string())),
    }
}

/// `#[serde(with = "…")]` adaptor for plain [`Rational`] fields.
pub mod serde_rational {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<Ser: Serializer>(r: &Rational, s: Ser) -> Result<Ser::Ok, Ser::Error> {
        rational_to_json(r).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        let v = Value::deserialize(d)?;
        rational_from_json(&v).map_err(serde::de::Error::custom)
    }
}

/// `#[serde(with = "…")]` adaptor for any [`Scalar`] field.
pub mod serde_scalar {
    use super::*;
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    pub fn serialize<S: Scalar, Ser: Serializer>(x: &S, s: Ser) -> Result<Ser::Ok, Ser::Error> {
        x.to_json().serialize(s)
    }

    pub fn deserialize<'de, S: Scalar, D: Deserializer<'de>>(d: D) -> Result<S, D::Error> {
        let v = Value::deserialize(d)?;
        S::from_json(&v).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimal_forms() {
        assert_eq!(parse_rational("8.5").unwrap(), Rational::new(17, 2));
        assert_eq!(parse_rational("0.1").unwrap(), Rational::new(1, 10));
        assert_eq!(parse_rational("-2").unwrap(), Rational::from_integer(-2));
        assert_eq!(parse_rational("1e-1").unwrap(), Rational::new(1, 10));
        assert_eq!(parse_rational("2.5E1").unwrap(), Rational::from_integer(25));
        assert_eq!(parse_rational("16/3").unwrap(), Rational::new(16, 3));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational(".").is_err());
    }

    #[test]
    fn json_forms() {
        assert_eq!(rational_to_json(&Rational::from_integer(8)), serde_json::json!(8));
        assert_eq!(rational_to_json(&Rational::new(17, 2)), serde_json::json!(8.5));
        assert_eq!(rational_to_json(&Rational::new(16, 3)), serde_json::json!("16/3"));
        for r in [Rational::new(1, 10), Rational::new(-7, 8), Rational::new(16, 3)] {
            assert_eq!(rational_from_json(&rational_to_json(&r)).unwrap(), r);
        }
    }

    #[test]
    fn float_tolerance_is_absolute() {
        assert!(approx_le(&(0.1 + 1e-12), &0.1f64));
        assert!(!approx_le(&(0.1 + 1e-6), &0.1f64));
        assert!(!approx_le(&Rational::new(10_000_001, 100_000_000), &Rational::new(1, 10)));
    }
}
