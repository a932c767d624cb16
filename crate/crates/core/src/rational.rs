//! Exact rational helpers: parsing `p/q` and decimal strings, decimal
//! rendering, and serde adapters that store rationals as strings.

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

pub type Rational = BigRational;

#[derive(Debug, Error, PartialEq, Eq)]
#[error("cannot parse {input:?} as an exact rational")]
pub struct ParseRationalError {
    pub input: String,
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

pub fn ratio(numer: i64, denom: i64) -> Rational {
    Rational::new(BigInt::from(numer), BigInt::from(denom))
}

pub fn from_u128(value: u128) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Parses `"3"`, `"-1/3"`, `"0.25"` or `"1e-3"`-free decimals exactly.
pub fn parse(input: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError {
        input: input.to_string(),
    };
    let s = input.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| err())?;
        let d: BigInt = d.trim().parse().map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    let (negative, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let (whole, frac) = body.split_once('.').unwrap_or((body, ""));
    if whole.is_empty() && frac.is_empty() {
        return Err(err());
    }
    if !whole
        .chars()
        .chain(frac.chars())
        .all(|c| c.is_ascii_digit())
    {
        return Err(err());
    }
    let digits = format!("{whole}{frac}");
    let numer: BigInt = digits.parse().map_err(|_| err())?;
    let denom = num::pow(BigInt::from(10), frac.len());
    let value = Rational::new(numer, denom);
    Ok(if negative { -value } else { value })
}

/// `p/q`, or just `p` for integers.
pub fn to_fraction_string(value: &Rational) -> String {
    if value.denom().is_one() {
        value.numer().to_string()
    } else {
        format!("{}/{}", value.numer(), value.denom())
    }
}

/// Decimal rendering rounded half away from zero to `places` digits.
pub fn to_decimal_string(value: &Rational, places: usize) -> String {
    let scale = num::pow(BigInt::from(10), places);
    let scaled = value * Rational::from_integer(scale);
    let half = Rational::new(BigInt::from(1), BigInt::from(2));
    let rounded = if scaled.is_negative() {
        -((-scaled) + half).floor()
    } else {
        (scaled + half).floor()
    };
    let digits = rounded.to_integer().abs().to_string();
    let sign = if rounded.is_negative() { "-" } else { "" };
    if places == 0 {
        return format!("{sign}{digits}");
    }
    let padded = format!("{digits:0>width$}", width = places + 1);
    let (whole, frac) = padded.split_at(padded.len() - places);
    format!("{sign}{whole}.{frac}")
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

pub fn floor_to_usize(value: &Rational) -> usize {
    value
        .floor()
        .to_integer()
        .to_usize()
        .expect("non-negative value fits in usize")
}

pub fn ceil_to_usize(value: &Rational) -> usize {
    value
        .ceil()
        .to_integer()
        .to_usize()
        .expect("non-negative value fits in usize")
}

/// Serde adapter: a rational stored as a `"p/q"` string. Deserialization
/// also accepts plain JSON numbers and decimal strings.
pub mod as_string {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&to_fraction_string(value))
    }

    #[derive(Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Text(String),
        Int(i64),
        Float(f64),
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(deserializer: D) -> Result<Rational, D::Error> {
        match Repr::deserialize(deserializer)? {
            Repr::Text(s) => parse(&s).map_err(serde::de::Error::custom),
            Repr::Int(i) => Ok(int(i)),
            Repr::Float(f) => {
                Rational::from_float(f).ok_or_else(|| serde::de::Error::custom("non-finite number"))
            }
        }
    }
}

/// Same as [`as_string`] for optional values.
pub mod as_opt_string {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(
        value: &Option<Rational>,
        serializer: S,
    ) -> Result<S::Ok, S::Error> {
        match value {
            Some(v) => serializer.serialize_some(&to_fraction_string(v)),
            None => serializer.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        deserializer: D,
    ) -> Result<Option<Rational>, D::Error> {
        Option::<String>::deserialize(deserializer)?
            .map(|s| parse(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}
