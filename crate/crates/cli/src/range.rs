//! Integer lists for sweep flags: `4`, `1..8` (inclusive), `1..=8`, and
//! comma-separated mixes such as `1,3,5..7`.

use std::fmt;
use std::str::FromStr;

use serde::{Serialize, Serializer};
use thiserror::Error;

/// Longest list a single flag may expand to.
pub const MAX_POINTS: usize = 4096;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
pub enum RangeError {
    #[error("empty range")]
    Empty,
    #[error("invalid integer {0:?}")]
    Integer(String),
    #[error("range {start}..{end} runs backwards")]
    Backwards { start: usize, end: usize },
    #[error("range expands to more than {MAX_POINTS} values")]
    TooLong,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Range(pub Vec<usize>);

fn integer(s: &str) -> Result<usize, RangeError> {
    s.trim().parse().map_err(|_| RangeError::Integer(s.to_string()))
}

pub fn parse_range(text: &str) -> Result<Vec<usize>, RangeError> {
    let mut out = Vec::new();
    for part in text.split(',') {
        let part = part.trim();
        if part.is_empty() {
            return Err(RangeError::Empty);
        }
        match part.split_once("..") {
            Some((a, b)) => {
                let b = b.strip_prefix('=').unwrap_or(b);
                let (start, end) = (integer(a)?, integer(b)?);
                if start > end {
                    return Err(RangeError::Backwards { start, end });
                }
                if end - start >= MAX_POINTS || out.len() + (end - start + 1) > MAX_POINTS {
                    return Err(RangeError::TooLong);
                }
                out.extend(start..=end);
            }
            None => {
                if out.len() == MAX_POINTS {
                    return Err(RangeError::TooLong);
                }
                out.push(integer(part)?);
            }
        }
    }
    Ok(out)
}

impl FromStr for Range {
    type Err = RangeError;

    fn from_str(s: &str) -> Result<Self, RangeError> {
        parse_range(s).map(Range)
    }
}

impl fmt::Display for Range {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> = self.0.iter().map(|v| v.to_string()).collect();
        f.write_str(&parts.join(","))
    }
}

impl Serialize for Range {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(serializer)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn forms() {
        assert_eq!(parse_range("1..8").unwrap(), (1..=8).collect::<Vec<_>>());
        assert_eq!(parse_range("1..=3").unwrap(), vec![1, 2, 3]);
        assert_eq!(parse_range("4").unwrap(), vec![4]);
        assert_eq!(parse_range("1,3,5..6").unwrap(), vec![1, 3, 5, 6]);
    }

    #[test]
    fn rejects() {
        assert_eq!(parse_range(""), Err(RangeError::Empty));
        assert_eq!(parse_range("8..1"), Err(RangeError::Backwards { start: 8, end: 1 }));
        assert!(matches!(parse_range("a..3"), Err(RangeError::Integer(_))));
        assert_eq!(parse_range("0..18446744073709551615"), Err(RangeError::TooLong));
    }

    proptest! {
        #[test]
        fn inclusive_length(a in 0usize..1000, len in 0usize..100) {
            let v = parse_range(&format!("{}..{}", a, a + len)).unwrap();
            prop_assert_eq!(v.len(), len + 1);
            prop_assert_eq!(v[0], a);
            prop_assert_eq!(Range(v.clone()).to_string().parse::<Range>().unwrap().0, v);
        }
    }
}
