//! Exact rational helpers: parsing of fraction/decimal strings and rendering.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Rational = BigRational;

pub fn ratio(num: i64, den: i64) -> Rational {
    Rational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(value: i64) -> Rational {
    Rational::from_integer(BigInt::from(value))
}

/// Parses `"7/10"`, `"3"` or `"0.25"` into an exact rational.
///
/// Decimals are read digit by digit, so `"0.1"` is exactly 1/10.
pub fn parse_rational(text: &str) -> Result<Rational> {
    let s = text.trim();
    let bad = || Error::Malformed(format!("not a rational number: {text:?}"));
    if s.is_empty() {
        return Err(bad());
    }
    if let Some((num, den)) = s.split_once('/') {
        let num: BigInt = num.trim().parse().map_err(|_| bad())?;
        let den: BigInt = den.trim().parse().map_err(|_| bad())?;
        if den.is_zero() {
            return Err(bad());
        }
        return Ok(Rational::new(num, den));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        let negative = whole.starts_with('-');
        let digits = whole.trim_start_matches(['-', '+']);
        if !digits.chars().all(|c| c.is_ascii_digit())
            || !frac.chars().all(|c| c.is_ascii_digit())
            || (digits.is_empty() && frac.is_empty())
        {
            return Err(bad());
        }
        let joined = format!("{digits}{frac}");
        let mantissa: BigInt = if joined.is_empty() {
            BigInt::zero()
        } else {
            joined.parse().map_err(|_| bad())?
        };
        let scale = num_traits::pow(BigInt::from(10u8), frac.len());
        let value = Rational::new(mantissa, scale);
        return Ok(if negative { -value } else { value });
    }
    let value: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Rational::from_integer(value))
}

/// Renders as `p/q`, or `p` for integers.
pub fn format_rational(value: &Rational) -> String {
    value.to_string()
}

/// Approximate decimal rendering with `digits` fractional digits.
pub fn format_decimal(value: &Rational, digits: usize) -> String {
    let scale = num_traits::pow(BigInt::from(10u8), digits);
    let scaled = (value.abs() * Rational::from_integer(scale.clone())).round();
    let scaled = scaled.to_integer();
    let whole = &scaled / &scale;
    let frac = &scaled % &scale;
    let sign = if value.is_negative() && !scaled.is_zero() { "-" } else { "" };
    if digits == 0 {
        format!("{sign}{whole}")
    } else {
        format!("{sign}{whole}.{:0>width$}", frac.to_string(), width = digits)
    }
}

pub fn to_f64(value: &Rational) -> f64 {
    value.to_f64().unwrap_or(f64::NAN)
}

pub fn is_unit(value: &Rational) -> bool {
    value.is_one()
}

/// Serde adapter for `Vec<Rational>` as fraction strings.
pub mod serde_vec {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[Rational], ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.collect_seq(values.iter().map(format_rational))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Vec<Rational>, D::Error> {
        let raw = Vec::<FractionText>::deserialize(de)?;
        raw.into_iter()
            .map(|t| parse_rational(&t.0).map_err(serde::de::Error::custom))
            .collect()
    }

    /// Accepts either a string or a bare JSON number.
    struct FractionText(String);

    impl<'de> Deserialize<'de> for FractionText {
        fn deserialize<D: Deserializer<'de>>(de: D) -> std::result::Result<Self, D::Error> {
            let value = serde_json::Value::deserialize(de)?;
            match value {
                serde_json::Value::String(s) => Ok(FractionText(s)),
                serde_json::Value::Number(n) => Ok(FractionText(n.to_string())),
                other => Err(serde::de::Error::custom(format!("expected fraction, got {other}"))),
            }
        }
    }
}

/// Serde adapter for a single rational as a fraction string.
pub mod serde_one {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &Rational, ser: S) -> std::result::Result<S::Ok, S::Error> {
        ser.serialize_str(&format_rational(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(de: D) -> std::result::Result<Rational, D::Error> {
        let text = String::deserialize(de)?;
        parse_rational(&text).map_err(serde::de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn decimals_are_exact() {
        assert_eq!(parse_rational("0.5").unwrap(), ratio(1, 2));
        assert_eq!(parse_rational("0.1").unwrap(), ratio(1, 10));
        assert_eq!(parse_rational(".25").unwrap(), ratio(1, 4));
        assert_eq!(parse_rational("-1.5").unwrap(), ratio(-3, 2));
        assert_eq!(parse_rational("7/10").unwrap(), ratio(7, 10));
        assert_eq!(parse_rational(" 2 ").unwrap(), int(2));
    }

    #[test]
    fn rejects_garbage() {
        for bad in ["", "1/0", "abc", "1.2.3", ".", "1/x"] {
            assert!(parse_rational(bad).is_err(), "{bad}");
        }
    }

    #[test]
    fn formatting() {
        assert_eq!(format_rational(&ratio(14, 20)), "7/10");
        assert_eq!(format_rational(&int(0)), "0");
        assert_eq!(format_decimal(&ratio(1, 3), 4), "0.3333");
        assert_eq!(format_decimal(&ratio(2, 3), 2), "0.67");
        assert_eq!(format_decimal(&int(1), 3), "1.000");
    }
}
