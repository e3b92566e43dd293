//! Exact rational helpers: construction shortcuts, parsing of `p/q` and
//! decimal literals, lossless string formatting and serde adapters.

use std::fmt;
use std::str::FromStr;

use num::bigint::BigInt;
use num::rational::BigRational;
use num::{One, ToPrimitive, Zero};

/// Arbitrary-precision rational number used for every exact quantity.
pub type Rational = BigRational;

/// `n/d` as a [`Rational`]. Panics if `d == 0`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// The integer `n` as a [`Rational`].
pub fn int(n: i64) -> Rational {
    Rational::from_integer(BigInt::from(n))
}

/// Fractional part `x - floor(x)`, always in `[0, 1)`.
pub fn frac(x: &Rational) -> Rational {
    if x.is_integer() {
        return Rational::zero();
    }
    x - x.floor()
}

/// Floor of `x` as a big integer.
pub fn floor_int(x: &Rational) -> BigInt {
    x.floor().to_integer()
}

/// Best-effort conversion to `f64`.
pub fn to_f64(x: &Rational) -> f64 {
    x.to_f64().unwrap_or_else(|| {
        // Huge numerators/denominators: scale down through the integer parts.
        let n = x.numer().to_f64().unwrap_or(f64::NAN);
        let d = x.denom().to_f64().unwrap_or(f64::NAN);
        n / d
    })
}

/// Lowest-terms string: `"p/q"`, or `"p"` when the denominator is one.
pub fn format_rational(x: &Rational) -> String {
    if x.denom().is_one() {
        x.numer().to_string()
    } else {
        format!("{}/{}", x.numer(), x.denom())
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("invalid rational literal {literal:?}")]
pub struct ParseRationalError {
    pub literal: String,
}

/// Parses `"p/q"`, `"p"`, or a finite decimal such as `"-0.6180339887"`.
///
/// Decimals are read exactly: `"0.1"` is `1/10`.
pub fn parse_rational(s: &str) -> Result<Rational, ParseRationalError> {
    let err = || ParseRationalError { literal: s.to_string() };
    let t = s.trim();
    if t.is_empty() {
        return Err(err());
    }
    if let Some((n, d)) = t.split_once('/') {
        let n = BigInt::from_str(n.trim()).map_err(|_| err())?;
        let d = BigInt::from_str(d.trim()).map_err(|_| err())?;
        if d.is_zero() {
            return Err(err());
        }
        return Ok(Rational::new(n, d));
    }
    if let Some((ip, fp)) = t.split_once('.') {
        let negative = ip.starts_with('-');
        let ip_digits = ip.trim_start_matches(['-', '+']);
        if !ip_digits.chars().all(|c| c.is_ascii_digit())
            || !fp.chars().all(|c| c.is_ascii_digit())
            || (ip_digits.is_empty() && fp.is_empty())
        {
            return Err(err());
        }
        let whole =
            if ip_digits.is_empty() { BigInt::zero() } else { BigInt::from_str(ip_digits).map_err(|_| err())? };
        let scale = num::pow(BigInt::from(10), fp.len());
        let frac_part = if fp.is_empty() { BigInt::zero() } else { BigInt::from_str(fp).map_err(|_| err())? };
        let mag = Rational::new(whole * &scale + frac_part, scale);
        return Ok(if negative { -mag } else { mag });
    }
    BigInt::from_str(t).map(Rational::from_integer).map_err(|_| err())
}

/// Number of decimal digits after the point in a literal, if it is a decimal.
pub fn decimal_places(s: &str) -> Option<usize> {
    s.trim().split_once('.').map(|(_, f)| f.len())
}

/// Wrapper that displays a rational in its lossless string form.
pub struct Display<'a>(pub &'a Rational);

impl fmt::Display for Display<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&format_rational(self.0))
    }
}

struct RationalVisitor;

impl serde::de::Visitor<'_> for RationalVisitor {
    type Value = Rational;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a rational literal string like \"3/8\" or an integer")
    }

    fn visit_str<E: serde::de::Error>(self, v: &str) -> Result<Rational, E> {
        parse_rational(v).map_err(E::custom)
    }

    fn visit_i64<E: serde::de::Error>(self, v: i64) -> Result<Rational, E> {
        Ok(int(v))
    }

    fn visit_u64<E: serde::de::Error>(self, v: u64) -> Result<Rational, E> {
        Ok(Rational::from_integer(BigInt::from(v)))
    }

    fn visit_f64<E: serde::de::Error>(self, v: f64) -> Result<Rational, E> {
        Err(E::custom(format!("floating-point literal {v} is not exact; quote it as a string")))
    }
}

/// `#[serde(with = "serde_str")]` for a single [`Rational`].
pub mod serde_str {
    use super::*;

    pub fn serialize<S: serde::Serializer>(x: &Rational, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&format_rational(x))
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        d.deserialize_any(RationalVisitor)
    }
}

/// `#[serde(with = "serde_str_vec")]` for a `Vec<Rational>`.
pub mod serde_str_vec {
    use super::*;
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize)]
    struct Q(#[serde(with = "serde_str")] Rational);

    pub fn serialize<S: serde::Serializer>(xs: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        s.collect_seq(xs.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let v: Vec<Q> = Vec::deserialize(d)?;
        Ok(v.into_iter().map(|q| q.0).collect())
    }
}

/// `#[serde(with = "serde_str_opt")]` for an `Option<Rational>`.
pub mod serde_str_opt {
    use super::*;
    use serde::{Deserialize, Serialize};

    #[derive(Serialize, Deserialize)]
    struct Q(#[serde(with = "serde_str")] Rational);

    pub fn serialize<S: serde::Serializer>(x: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match x {
            Some(x) => s.serialize_some(&format_rational(x)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        let v: Option<Q> = Option::deserialize(d)?;
        Ok(v.map(|q| q.0))
    }
}

/// `#[serde(with = "serde_bigint")]`: big integers as decimal strings.
pub mod serde_bigint {
    use super::*;

    pub fn serialize<S: serde::Serializer>(x: &BigInt, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&x.to_string())
    }

    pub fn deserialize<'de, D: serde::Deserializer<'de>>(d: D) -> Result<BigInt, D::Error> {
        let q = super::serde_str::deserialize(d)?;
        if !q.is_integer() {
            return Err(serde::de::Error::custom("expected an integer"));
        }
        Ok(q.to_integer())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fractions_integers_and_decimals() {
        assert_eq!(parse_rational("3/8").unwrap(), rat(3, 8));
        assert_eq!(parse_rational("-6/8").unwrap(), rat(-3, 4));
        assert_eq!(parse_rational("7").unwrap(), int(7));
        assert_eq!(parse_rational("0.125").unwrap(), rat(1, 8));
        assert_eq!(parse_rational("-1.5").unwrap(), rat(-3, 2));
        assert_eq!(parse_rational(".5").unwrap(), rat(1, 2));
        assert!(parse_rational("1/0").is_err());
        assert!(parse_rational("abc").is_err());
        assert!(parse_rational("").is_err());
        assert!(parse_rational("1.2.3").is_err());
    }

    #[test]
    fn frac_is_in_unit_interval() {
        assert_eq!(frac(&rat(7, 3)), rat(1, 3));
        assert_eq!(frac(&rat(-1, 3)), rat(2, 3));
        assert_eq!(frac(&int(-2)), int(0));
    }

    #[test]
    fn formatting_is_lowest_terms() {
        assert_eq!(format_rational(&rat(2, 4)), "1/2");
        assert_eq!(format_rational(&int(0)), "0");
        assert_eq!(format_rational(&rat(-3, 1)), "-3");
    }

    #[test]
    fn json_accepts_strings_and_integers_but_not_floats() {
        #[derive(serde::Deserialize)]
        struct W(#[serde(with = "serde_str")] Rational);
        let w: W = serde_json::from_str("\"5/10\"").unwrap();
        assert_eq!(w.0, rat(1, 2));
        let w: W = serde_json::from_str("3").unwrap();
        assert_eq!(w.0, int(3));
        assert!(serde_json::from_str::<W>("0.5").is_err());
    }
}
