//! Matrix text formats.
//!
//! Two spellings are accepted wherever a matrix is read:
//! `"2 1; 1 1"` (rows split by `;`, entries by whitespace or `,`) and a JSON
//! array of integer arrays such as `[[2,1],[1,1]]`. JSON entries may also be
//! decimal strings so that values beyond 64 bits survive.

use std::str::FromStr;

use num_bigint::BigInt;
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

use super::{IntMatrix, LinalgError};

/// Parses an integer token, accepting a typographic minus sign.
pub(crate) fn parse_int(token: &str) -> Result<BigInt, LinalgError> {
    let t = token.trim().trim_matches('"').replace('\u{2212}', "-");
    let t = t.strip_prefix('+').unwrap_or(&t);
    BigInt::from_str(t).map_err(|_| LinalgError::Parse(format!("not an integer: {token:?}")))
}

fn parse_text(s: &str) -> Result<Vec<Vec<BigInt>>, LinalgError> {
    s.split(';')
        .map(|row| {
            row.split(|c: char| c.is_whitespace() || c == ',')
                .filter(|t| !t.is_empty())
                .map(parse_int)
                .collect::<Result<Vec<_>, _>>()
        })
        .filter(|r| !matches!(r, Ok(v) if v.is_empty()))
        .collect()
}

fn parse_json(s: &str) -> Result<Vec<Vec<BigInt>>, LinalgError> {
    let value: serde_json::Value =
        serde_json::from_str(s).map_err(|e| LinalgError::Parse(e.to_string()))?;
    rows_from_json(&value)
}

pub(crate) fn rows_from_json(value: &serde_json::Value) -> Result<Vec<Vec<BigInt>>, LinalgError> {
    let bad = || LinalgError::Parse("expected a JSON array of integer arrays".into());
    let rows = value.as_array().ok_or_else(bad)?;
    rows.iter()
        .map(|row| {
            row.as_array()
                .ok_or_else(bad)?
                .iter()
                .map(json_int)
                .collect::<Result<Vec<_>, _>>()
        })
        .collect()
}

pub(crate) fn json_int(v: &serde_json::Value) -> Result<BigInt, LinalgError> {
    match v {
        serde_json::Value::Number(num) => {
            if let Some(i) = num.as_i64() {
                Ok(BigInt::from(i))
            } else if let Some(u) = num.as_u64() {
                Ok(BigInt::from(u))
            } else {
                Err(LinalgError::Parse(format!(
                    "{num} is not an exact integer; pass large values as strings"
                )))
            }
        }
        serde_json::Value::String(s) => parse_int(s),
        other => Err(LinalgError::Parse(format!("not an integer: {other}"))),
    }
}

impl FromStr for IntMatrix {
    type Err = LinalgError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let s = s.trim();
        let rows = if s.starts_with('[') {
            parse_json(s)?
        } else {
            parse_text(s)?
        };
        IntMatrix::from_rows(&rows)
    }
}

/// Serialized as the text form, e.g. `"2 1; 1 1"`.
impl Serialize for IntMatrix {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

/// Accepts either the text form as a string or a JSON array of arrays.
impl<'de> Deserialize<'de> for IntMatrix {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let value = serde_json::Value::deserialize(deserializer)?;
        let parsed = match &value {
            serde_json::Value::String(s) => s.parse(),
            other => rows_from_json(other).and_then(|rows| IntMatrix::from_rows(&rows)),
        };
        parsed.map_err(de::Error::custom)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn text_and_json_agree() {
        let a: IntMatrix = "2 1; 1 1".parse().unwrap();
        let b: IntMatrix = "[[2,1],[1,1]]".parse().unwrap();
        let c: IntMatrix = "2,1;1,1".parse().unwrap();
        let d: IntMatrix = "[[\"2\", 1], [1, \"1\"]]".parse().unwrap();
        assert_eq!(a, b);
        assert_eq!(a, c);
        assert_eq!(a, d);
        assert_eq!(a, IntMatrix::from_i64(&[&[2, 1], &[1, 1]]));
    }

    #[test]
    fn single_entry_and_unicode_minus() {
        let a: IntMatrix = "2".parse().unwrap();
        assert_eq!(a, IntMatrix::from_i64(&[&[2]]));
        let b: IntMatrix = "\u{2212}1 0; 0 1".parse().unwrap();
        assert_eq!(b, IntMatrix::from_i64(&[&[-1, 0], &[0, 1]]));
    }

    #[test]
    fn big_entries_via_strings() {
        let a: IntMatrix = "[[\"123456789012345678901234567890\"]]".parse().unwrap();
        assert_eq!(a.get(0, 0).to_string(), "123456789012345678901234567890");
        let b: IntMatrix = "123456789012345678901234567890".parse().unwrap();
        assert_eq!(a, b);
    }

    #[test]
    fn rejects_malformed() {
        assert!(matches!(
            "1 2; 3".parse::<IntMatrix>(),
            Err(LinalgError::DimensionMismatch { .. })
        ));
        assert!(matches!(
            "1 x; 3 4".parse::<IntMatrix>(),
            Err(LinalgError::Parse(_))
        ));
        assert!(matches!("".parse::<IntMatrix>(), Err(LinalgError::Empty)));
        assert!(matches!(
            "[[1.5]]".parse::<IntMatrix>(),
            Err(LinalgError::Parse(_))
        ));
        assert!(matches!(
            "[1, 2]".parse::<IntMatrix>(),
            Err(LinalgError::Parse(_))
        ));
    }

    #[test]
    fn serde_round_trip() {
        let a = IntMatrix::from_i64(&[&[2, -1], &[0, 3]]);
        let s = serde_json::to_string(&a).unwrap();
        assert_eq!(s, "\"2 -1; 0 3\"");
        let back: IntMatrix = serde_json::from_str(&s).unwrap();
        assert_eq!(back, a);
        let from_arr: IntMatrix = serde_json::from_str("[[2,-1],[0,3]]").unwrap();
        assert_eq!(from_arr, a);
    }
}
