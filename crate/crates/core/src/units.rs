//! Engineering-notation values ("1k", "120f", "2.8m", "1meg").
//!
//! Suffixes follow SPICE conventions and are case-insensitive, so `M` is
//! milli and mega is spelled `meg`. Any alphabetic characters after a
//! recognized scale are treated as a unit and ignored (`120fF`, `1kohm`).

use std::fmt;
use std::str::FromStr;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

use crate::error::{Error, Result};

/// Parse an engineering-notation string into an SI value.
pub fn parse_eng(text: &str) -> Result<f64> {
    let s = text.trim();
    if s.is_empty() {
        return Err(Error::Parse(format!("empty numeric value")));
    }
    // Longest numeric prefix accepted by f64::from_str.
    let bytes = s.as_bytes();
    let mut end = 0;
    let mut seen_digit = false;
    let mut i = 0;
    if i < bytes.len() && (bytes[i] == b'+' || bytes[i] == b'-') {
        i += 1;
    }
    while i < bytes.len() && (bytes[i].is_ascii_digit() || bytes[i] == b'.') {
        seen_digit |= bytes[i].is_ascii_digit();
        i += 1;
        end = i;
    }
    if !seen_digit {
        return Err(Error::Parse(format!("invalid numeric value {text:?}")));
    }
    // Exponent part, only if followed by digits.
    if i < bytes.len() && (bytes[i] == b'e' || bytes[i] == b'E') {
        let mut j = i + 1;
        if j < bytes.len() && (bytes[j] == b'+' || bytes[j] == b'-') {
            j += 1;
        }
        let digits_start = j;
        while j < bytes.len() && bytes[j].is_ascii_digit() {
            j += 1;
        }
        if j > digits_start {
            end = j;
        }
    }
    let mantissa: f64 = s[..end]
        .parse()
        .map_err(|_| Error::Parse(format!("invalid numeric value {text:?}")))?;
    let rest = &s[end..];
    let lower = rest.to_ascii_lowercase();
    let (scale, consumed) = if lower.starts_with("meg") {
        (1e6, 3)
    } else if lower.starts_with("mil") {
        (25.4e-6, 3)
    } else {
        match lower.chars().next() {
            None => (1.0, 0),
            Some('t') => (1e12, 1),
            Some('g') => (1e9, 1),
            Some('k') => (1e3, 1),
            Some('m') => (1e-3, 1),
            Some('u') => (1e-6, 1),
            Some('µ') => (1e-6, 'µ'.len_utf8()),
            Some('n') => (1e-9, 1),
            Some('p') => (1e-12, 1),
            Some('f') => (1e-15, 1),
            Some('a') => (1e-18, 1),
            Some(_) => (1.0, 0),
        }
    };
    let unit = &lower[consumed..];
    if !unit
        .chars()
        .all(|c| c.is_alphabetic() || c == '/' || c == '²')
    {
        return Err(Error::Parse(format!("invalid numeric value {text:?}")));
    }
    let value = mantissa * scale;
    if !value.is_finite() {
        return Err(Error::Parse(format!("non-finite value {text:?}")));
    }
    Ok(value)
}

/// A float that deserializes from either a JSON number or an
/// engineering-notation string, and serializes as a plain number.
#[derive(Debug, Clone, Copy, PartialEq, PartialOrd, Default)]
pub struct Eng(pub f64);

impl Eng {
    pub fn get(self) -> f64 {
        self.0
    }
}

impl From<f64> for Eng {
    fn from(v: f64) -> Self {
        Eng(v)
    }
}

impl From<Eng> for f64 {
    fn from(v: Eng) -> Self {
        v.0
    }
}

impl fmt::Display for Eng {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

impl FromStr for Eng {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        parse_eng(s).map(Eng)
    }
}

impl Serialize for Eng {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.serialize_f64(self.0)
    }
}

impl<'de> Deserialize<'de> for Eng {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        struct EngVisitor;

        impl Visitor<'_> for EngVisitor {
            type Value = Eng;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a number or an engineering-notation string")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<Eng, E> {
                Ok(Eng(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<Eng, E> {
                Ok(Eng(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<Eng, E> {
                Ok(Eng(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<Eng, E> {
                parse_eng(v).map(Eng).map_err(E::custom)
            }
        }

        deserializer.deserialize_any(EngVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn close(a: f64, b: f64) -> bool {
        (a - b).abs() <= 1e-12 * b.abs().max(1e-300)
    }

    #[test]
    fn suffixes() {
        assert!(close(parse_eng("1k").unwrap(), 1e3));
        assert!(close(parse_eng("120f").unwrap(), 120e-15));
        assert!(close(parse_eng("120fF").unwrap(), 120e-15));
        assert!(close(parse_eng("2.8m").unwrap(), 2.8e-3));
        assert!(close(parse_eng("2.8M").unwrap(), 2.8e-3));
        assert!(close(parse_eng("1meg").unwrap(), 1e6));
        assert!(close(parse_eng("10u").unwrap(), 10e-6));
        assert!(close(parse_eng("10µm").unwrap(), 10e-6));
        assert!(close(parse_eng("2n").unwrap(), 2e-9));
        assert!(close(parse_eng("1.5e-3").unwrap(), 1.5e-3));
        assert!(close(parse_eng("-3.3").unwrap(), -3.3));
        assert!(close(parse_eng("1e3k").unwrap(), 1e6));
        assert!(close(parse_eng("100ohm").unwrap(), 100.0));
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_eng("").is_err());
        assert!(parse_eng("k").is_err());
        assert!(parse_eng("1k2").is_err());
        assert!(parse_eng("abc").is_err());
    }

    #[test]
    fn serde_accepts_numbers_and_strings() {
        let v: Vec<Eng> = serde_json::from_str(r#"[1, 2.5, "3k", "120f"]"#).unwrap();
        assert_eq!(v[0].0, 1.0);
        assert_eq!(v[1].0, 2.5);
        assert!(close(v[2].0, 3e3));
        assert!(close(v[3].0, 120e-15));
        assert!(serde_json::from_str::<Eng>(r#""nope""#).is_err());
    }
}
