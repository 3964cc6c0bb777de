//! Compact identifiers of the form `PREFIX:ddddddd`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};
use thiserror::Error;

/// Number of digits in the local part of every identifier we handle.
pub const DIGITS_LEN: usize = 7;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum CurieError {
    #[error("identifier `{0}` has no `:` separator")]
    MissingColon(String),
    #[error("identifier `{0}` has an invalid prefix (expected uppercase ASCII letters)")]
    BadPrefix(String),
    #[error("identifier `{0}` must have exactly 7 decimal digits after the colon")]
    BadDigits(String),
}

/// An ontology identifier such as `HP:0001251` or `GO:0005737`.
///
/// Ordering is lexicographic on the canonical text form.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Curie {
    // canonical text; prefix length is recoverable from the colon position
    text: String,
}

impl Curie {
    pub fn new(prefix: &str, digits: &str) -> Result<Self, CurieError> {
        format!("{prefix}:{digits}").parse()
    }

    pub fn prefix(&self) -> &str {
        &self.text[..self.colon()]
    }

    pub fn digits(&self) -> &str {
        &self.text[self.colon() + 1..]
    }

    pub fn as_str(&self) -> &str {
        &self.text
    }

    fn colon(&self) -> usize {
        self.text.len() - DIGITS_LEN - 1
    }
}

fn valid_prefix(p: &str) -> bool {
    !p.is_empty() && p.bytes().all(|b| b.is_ascii_uppercase())
}

fn valid_digits(d: &str) -> bool {
    d.len() == DIGITS_LEN && d.bytes().all(|b| b.is_ascii_digit())
}

impl FromStr for Curie {
    type Err = CurieError;

    fn from_str(s: &str) -> Result<Self, Self::Err> {
        let (prefix, digits) = s
            .split_once(':')
            .ok_or_else(|| CurieError::MissingColon(s.to_string()))?;
        if !valid_prefix(prefix) {
            return Err(CurieError::BadPrefix(s.to_string()));
        }
        if !valid_digits(digits) {
            return Err(CurieError::BadDigits(s.to_string()));
        }
        Ok(Curie {
            text: s.to_string(),
        })
    }
}

impl fmt::Display for Curie {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

impl AsRef<str> for Curie {
    fn as_ref(&self) -> &str {
        &self.text
    }
}

impl Serialize for Curie {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        serializer.serialize_str(&self.text)
    }
}

impl<'de> Deserialize<'de> for Curie {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
