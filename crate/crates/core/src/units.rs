//! Engineering-notation parsing for numeric config fields.
//!
//! Values may be given either as JSON numbers in SI base units or as strings
//! with a single-letter metric suffix, e.g. `"300p"` for 300 pH or `"146.6f"`
//! for 146.6 fF. Output is always written as plain SI numbers.

use serde::de::{self, Deserializer, Visitor};
use std::fmt;

/// Multiplier for a metric suffix letter.
fn suffix_scale(c: char) -> Option<f64> {
    Some(match c {
        'f' => 1e-15,
        'p' => 1e-12,
        'n' => 1e-9,
        'u' | 'µ' => 1e-6,
        'm' => 1e-3,
        'k' => 1e3,
        'M' => 1e6,
        'G' => 1e9,
        _ => return None,
    })
}

/// Parse a number with an optional metric suffix.
///
/// ```
/// use xfmr_tank::units::parse_eng;
/// assert_eq!(parse_eng("300p").unwrap(), 300e-12);
/// assert_eq!(parse_eng("24G").unwrap(), 24e9);
/// assert_eq!(parse_eng("1.5e-3").unwrap(), 1.5e-3);
/// ```
pub fn parse_eng(s: &str) -> Result<f64, String> {
    let t = s.trim();
    if t.is_empty() {
        return Err("empty numeric value".into());
    }
    if let Ok(v) = t.parse::<f64>() {
        return finite(v, s);
    }
    let mut chars = t.chars();
    let last = chars.next_back().unwrap();
    let head = chars.as_str();
    match (suffix_scale(last), head.parse::<f64>()) {
        (Some(scale), Ok(v)) => finite(v * scale, s),
        _ => Err(format!("invalid engineering value {s:?}")),
    }
}

fn finite(v: f64, s: &str) -> Result<f64, String> {
    if v.is_finite() {
        Ok(v)
    } else {
        Err(format!("non-finite value {s:?}"))
    }
}

struct EngVisitor;

impl<'de> Visitor<'de> for EngVisitor {
    type Value = f64;

    fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
        f.write_str("a number or an engineering-notation string such as \"300p\"")
    }

    fn visit_f64<E: de::Error>(self, v: f64) -> Result<f64, E> {
        Ok(v)
    }

    fn visit_i64<E: de::Error>(self, v: i64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_u64<E: de::Error>(self, v: u64) -> Result<f64, E> {
        Ok(v as f64)
    }

    fn visit_str<E: de::Error>(self, v: &str) -> Result<f64, E> {
        parse_eng(v).map_err(E::custom)
    }
}

/// `deserialize_with` helper for a single engineering value.
pub fn de_eng<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
    d.deserialize_any(EngVisitor)
}

/// `deserialize_with` helper for a list of engineering values.
pub fn de_eng_vec<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<f64>, D::Error> {
    #[derive(serde::Deserialize)]
    struct Wrap(#[serde(deserialize_with = "de_eng")] f64);
    let v: Vec<Wrap> = serde::Deserialize::deserialize(d)?;
    Ok(v.into_iter().map(|w| w.0).collect())
}

/// `deserialize_with` helper for an optional engineering value.
pub fn de_eng_opt<'de, D: Deserializer<'de>>(d: D) -> Result<Option<f64>, D::Error> {
    #[derive(serde::Deserialize)]
    struct Wrap(#[serde(deserialize_with = "de_eng")] f64);
    let v: Option<Wrap> = serde::Deserialize::deserialize(d)?;
    Ok(v.map(|w| w.0))
}

/// `deserialize_with` helper for an optional triple of engineering values.
pub fn de_eng_opt3<'de, D: Deserializer<'de>>(d: D) -> Result<Option<[f64; 3]>, D::Error> {
    #[derive(serde::Deserialize)]
    struct Wrap(#[serde(deserialize_with = "de_eng")] f64);
    let v: Option<[Wrap; 3]> = serde::Deserialize::deserialize(d)?;
    Ok(v.map(|[a, b, c]| [a.0, b.0, c.0]))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn suffixes() {
        assert_eq!(parse_eng("300p").unwrap(), 3.0e-10);
        assert_eq!(parse_eng("146.6f").unwrap(), 146.6e-15);
        assert_eq!(parse_eng("2n").unwrap(), 2e-9);
        assert_eq!(parse_eng("5m").unwrap(), 5e-3);
        assert_eq!(parse_eng("5M").unwrap(), 5e6);
        assert_eq!(parse_eng("1k").unwrap(), 1e3);
        assert_eq!(parse_eng(" 0.25 ").unwrap(), 0.25);
    }

    #[test]
    fn rejects_garbage() {
        assert!(parse_eng("").is_err());
        assert!(parse_eng("p").is_err());
        assert!(parse_eng("12x").is_err());
        assert!(parse_eng("inf").is_err());
        assert!(parse_eng("NaN").is_err());
    }
}
