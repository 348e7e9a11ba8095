//! Exact rational helpers shared by every module.
//!
//! Geometry uses `Ratio<i64>`; density integrals use arbitrary precision
//! because their denominators multiply quickly.

use num_bigint::BigInt;
use num_rational::{BigRational, Ratio};
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{Deserialize, Deserializer, Serializer};

use crate::error::{Error, Result};

pub type Rational = Ratio<i64>;

pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(n, d)
}

pub fn int(n: i64) -> Rational {
    Rational::from_integer(n)
}

/// Parses `"p/q"`, `"p"` or a finite decimal such as `"0.25"`.
pub fn parse_rational(s: &str) -> Result<Rational> {
    let big = parse_big_rational(s)?;
    let n = big.numer().to_i64();
    let d = big.denom().to_i64();
    match (n, d) {
        (Some(n), Some(d)) => Ok(Rational::new(n, d)),
        _ => Err(Error::Config(format!("rational `{s}` does not fit in 64 bits"))),
    }
}

pub fn parse_big_rational(s: &str) -> Result<BigRational> {
    let s = s.trim();
    let bad = || Error::Config(format!("malformed rational `{s}`"));
    if let Some((p, q)) = s.split_once('/') {
        let p: BigInt = p.trim().parse().map_err(|_| bad())?;
        let q: BigInt = q.trim().parse().map_err(|_| bad())?;
        if q.is_zero() {
            return Err(bad());
        }
        return Ok(BigRational::new(p, q));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let neg = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        if digits.is_empty() || !digits.chars().all(|c| c.is_ascii_digit()) {
            return Err(bad());
        }
        let mut n: BigInt = digits.parse().map_err(|_| bad())?;
        if neg {
            n = -n;
        }
        let d = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(BigRational::new(n, d));
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(BigRational::from_integer(n))
}

/// Canonical text form, always `p/q` (integers print as `n/1`).
pub fn fmt_rational(r: &Rational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn fmt_big(r: &BigRational) -> String {
    format!("{}/{}", r.numer(), r.denom())
}

pub fn to_big(r: &Rational) -> BigRational {
    BigRational::new(BigInt::from(*r.numer()), BigInt::from(*r.denom()))
}

pub fn to_f64(r: &Rational) -> f64 {
    *r.numer() as f64 / *r.denom() as f64
}

pub fn big_to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

pub fn abs(r: Rational) -> Rational {
    r.abs()
}

/// `n/d` as an arbitrary-precision rational.
pub fn big(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

pub mod serde_rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &Rational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_rational(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> std::result::Result<Rational, D::Error> {
        let raw = RawNumber::deserialize(d)?;
        raw.to_rational().map_err(serde::de::Error::custom)
    }
}

pub mod serde_big_rational {
    use super::*;

    pub fn serialize<S: Serializer>(r: &BigRational, s: S) -> std::result::Result<S::Ok, S::Error> {
        s.serialize_str(&fmt_big(r))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<BigRational, D::Error> {
        let raw = RawNumber::deserialize(d)?;
        raw.to_big().map_err(serde::de::Error::custom)
    }
}

pub mod serde_big_rational_vec {
    use super::*;
    use serde::ser::SerializeSeq;

    pub fn serialize<S: Serializer>(v: &[BigRational], s: S) -> std::result::Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(v.len()))?;
        for r in v {
            seq.serialize_element(&fmt_big(r))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<Vec<BigRational>, D::Error> {
        let raw = Vec::<RawNumber>::deserialize(d)?;
        raw.iter()
            .map(|r| r.to_big().map_err(serde::de::Error::custom))
            .collect()
    }
}

pub mod serde_rational_pair {
    use super::*;

    pub fn serialize<S: Serializer>(
        p: &(Rational, Rational),
        s: S,
    ) -> std::result::Result<S::Ok, S::Error> {
        use serde::ser::SerializeTuple;
        let mut t = s.serialize_tuple(2)?;
        t.serialize_element(&fmt_rational(&p.0))?;
        t.serialize_element(&fmt_rational(&p.1))?;
        t.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> std::result::Result<(Rational, Rational), D::Error> {
        let (a, b) = <(RawNumber, RawNumber)>::deserialize(d)?;
        Ok((
            a.to_rational().map_err(serde::de::Error::custom)?,
            b.to_rational().map_err(serde::de::Error::custom)?,
        ))
    }
}

/// Rationals in JSON may be written as strings (`"1/9"`) or plain integers.
#[derive(Deserialize)]
#[serde(untagged)]
enum RawNumber {
    Int(i64),
    Text(String),
}

impl RawNumber {
    fn to_big(&self) -> Result<BigRational> {
        match self {
            RawNumber::Int(n) => Ok(BigRational::from_integer(BigInt::from(*n))),
            RawNumber::Text(s) => parse_big_rational(s),
        }
    }

    fn to_rational(&self) -> Result<Rational> {
        match self {
            RawNumber::Int(n) => Ok(int(*n)),
            RawNumber::Text(s) => parse_rational(s),
        }
    }
}
