use std::fmt;
use std::str::FromStr;

use serde::de::{self, Visitor};
use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// An amount of money in integer cents.
///
/// Deserializes from a JSON integer (taken as cents) or from a decimal
/// string in currency units with at most two fractional digits, such as
/// `"212175"` or `"8720.50"`. Thousands separators are rejected.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Cents(pub i64);

#[derive(Debug, Error, Clone, PartialEq, Eq)]
pub enum MoneyError {
    #[error("empty amount")]
    Empty,
    #[error("'{0}' contains a separator; write amounts without thousands separators")]
    Separator(String),
    #[error("'{0}' has more than two decimal places")]
    TooPrecise(String),
    #[error("'{0}' is not a decimal amount")]
    Malformed(String),
    #[error("'{0}' is out of range")]
    Overflow(String),
}

impl Cents {
    pub const ZERO: Cents = Cents(0);

    pub fn from_units(units: i64) -> Cents {
        Cents(units * 100)
    }

    pub fn as_units_f64(self) -> f64 {
        self.0 as f64 / 100.0
    }
}

impl FromStr for Cents {
    type Err = MoneyError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let t = s.trim();
        if t.is_empty() {
            return Err(MoneyError::Empty);
        }
        if t.contains(',') || t.contains('_') || t.contains(' ') || t.contains('\'') {
            return Err(MoneyError::Separator(s.to_string()));
        }
        let (negative, body) = match t.strip_prefix('-') {
            Some(rest) => (true, rest),
            None => (false, t),
        };
        let (whole, frac) = match body.split_once('.') {
            Some((w, f)) => (w, f),
            None => (body, ""),
        };
        if whole.is_empty() || !whole.bytes().all(|b| b.is_ascii_digit()) {
            return Err(MoneyError::Malformed(s.to_string()));
        }
        if !frac.bytes().all(|b| b.is_ascii_digit()) || (body.contains('.') && frac.is_empty()) {
            return Err(MoneyError::Malformed(s.to_string()));
        }
        if frac.len() > 2 {
            return Err(MoneyError::TooPrecise(s.to_string()));
        }
        let overflow = || MoneyError::Overflow(s.to_string());
        let units: i64 = whole.parse().map_err(|_| overflow())?;
        let mut cents: i64 = match frac.len() {
            0 => 0,
            1 => frac.parse::<i64>().unwrap() * 10,
            _ => frac.parse().unwrap(),
        };
        cents = units
            .checked_mul(100)
            .and_then(|u| u.checked_add(cents))
            .ok_or_else(overflow)?;
        Ok(Cents(if negative { -cents } else { cents }))
    }
}

impl fmt::Display for Cents {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let sign = if self.0 < 0 { "-" } else { "" };
        let abs = self.0.unsigned_abs();
        write!(f, "{sign}{}.{:02}", abs / 100, abs % 100)
    }
}

impl Serialize for Cents {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.to_string())
    }
}

impl<'de> Deserialize<'de> for Cents {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct CentsVisitor;

        impl Visitor<'_> for CentsVisitor {
            type Value = Cents;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("an integer number of cents or a decimal string")
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Cents, E> {
                Ok(Cents(v))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Cents, E> {
                i64::try_from(v)
                    .map(Cents)
                    .map_err(|_| E::custom("amount out of range"))
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> Result<Cents, E> {
                Err(E::custom(format!(
                    "fractional number {v} is ambiguous; use integer cents or a decimal string"
                )))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Cents, E> {
                v.parse().map_err(E::custom)
            }
        }

        deserializer.deserialize_any(CentsVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_decimal_strings() {
        assert_eq!("212175".parse::<Cents>(), Ok(Cents(21_217_500)));
        assert_eq!("8720.5".parse::<Cents>(), Ok(Cents(872_050)));
        assert_eq!("0.07".parse::<Cents>(), Ok(Cents(7)));
        assert_eq!("-3.10".parse::<Cents>(), Ok(Cents(-310)));
    }

    #[test]
    fn rejects_separators_and_junk() {
        assert!(matches!("212,175".parse::<Cents>(), Err(MoneyError::Separator(_))));
        assert!(matches!("1.234".parse::<Cents>(), Err(MoneyError::TooPrecise(_))));
        assert!(matches!("12.".parse::<Cents>(), Err(MoneyError::Malformed(_))));
        assert!(matches!("€5".parse::<Cents>(), Err(MoneyError::Malformed(_))));
        assert!(matches!("".parse::<Cents>(), Err(MoneyError::Empty)));
    }

    #[test]
    fn json_forms() {
        let a: Cents = serde_json::from_str("1500").unwrap();
        let b: Cents = serde_json::from_str("\"15.00\"").unwrap();
        assert_eq!(a, b);
        assert!(serde_json::from_str::<Cents>("15.5").is_err());
        assert_eq!(serde_json::to_string(&Cents(872_050)).unwrap(), "\"8720.50\"");
    }
}
