//! The eight-row decode table shared by the weighing search and the adder
//! channel code.
//!
//! A first reading in `{0, 3}` fixes all three digits. A first reading in
//! `{1, 2}` is an ambiguity, settled by a second reading of a set that
//! contains group 1 when its digit is 1, group 2 when its digit is 0, and
//! never group 3.

use serde::Serialize;

use crate::error::{Error, Result};

/// Three recovered digits, one per forged coin (or per channel user).
pub type DigitTriple = [u8; 3];

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct DecodeRow {
    pub first: u8,
    pub second: Option<u8>,
    pub digits: DigitTriple,
}

#[derive(Debug, PartialEq, Eq)]
pub struct DecodeTable {
    rows: [DecodeRow; 8],
}

const fn row(first: u8, second: Option<u8>, digits: DigitTriple) -> DecodeRow {
    DecodeRow {
        first,
        second,
        digits,
    }
}

/// The single table instance used everywhere.
pub static DECODE_TABLE: DecodeTable = DecodeTable {
    rows: [
        row(0, None, [0, 0, 0]),
        row(3, None, [1, 1, 1]),
        row(1, Some(0), [0, 1, 0]),
        row(1, Some(1), [0, 0, 1]),
        row(1, Some(2), [1, 0, 0]),
        row(2, Some(0), [0, 1, 1]),
        row(2, Some(1), [1, 1, 0]),
        row(2, Some(2), [1, 0, 1]),
    ],
};

impl DecodeTable {
    pub fn rows(&self) -> &[DecodeRow; 8] {
        &self.rows
    }

    pub fn lookup(&self, first: u8, second: Option<u8>) -> Result<DigitTriple> {
        self.rows
            .iter()
            .find(|r| r.first == first && r.second == second)
            .map(|r| r.digits)
            .ok_or_else(|| {
                Error::Contract(format!(
                    "no decode row for first = {first}, second = {}",
                    second.map_or_else(|| "absent".to_string(), |s| s.to_string())
                ))
            })
    }
}

/// Digits of the three hidden labels at one position, from the first reading
/// and, for ambiguities, the second.
pub fn decode_row(first: u8, second: Option<u8>) -> Result<DigitTriple> {
    DECODE_TABLE.lookup(first, second)
}

/// Whether a first reading leaves the position undetermined.
pub fn is_ambiguous(first: u8) -> bool {
    matches!(first, 1 | 2)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unanimous_rows() {
        assert_eq!(decode_row(0, None).unwrap(), [0, 0, 0]);
        assert_eq!(decode_row(3, None).unwrap(), [1, 1, 1]);
    }

    #[test]
    fn ambiguous_rows() {
        assert_eq!(decode_row(1, Some(1)).unwrap(), [0, 0, 1]);
        assert_eq!(decode_row(2, Some(2)).unwrap(), [1, 0, 1]);
        assert_eq!(decode_row(2, Some(0)).unwrap(), [0, 1, 1]);
    }

    #[test]
    fn illegal_combinations() {
        for (f, s) in [
            (0, Some(1)),
            (1, None),
            (2, None),
            (3, Some(0)),
            (1, Some(3)),
            (4, None),
        ] {
            assert!(
                matches!(decode_row(f, s), Err(Error::Contract(_))),
                "{f} {s:?}"
            );
        }
    }

    #[test]
    fn rows_form_a_bijection_consistent_with_first() {
        let mut seen = std::collections::HashSet::new();
        for r in DECODE_TABLE.rows() {
            assert!(seen.insert(r.digits));
            assert_eq!(r.digits.iter().sum::<u8>(), r.first);
        }
        assert_eq!(seen.len(), 8);
    }

    // The second reading weighs group 1 when its digit is 1 and group 2 when
    // its digit is 0; every row must agree with that count.
    #[test]
    fn rows_agree_with_second_weighing() {
        for r in DECODE_TABLE.rows() {
            if let Some(s) = r.second {
                let [a, b, _] = r.digits;
                assert_eq!(a + (1 - b), s);
            }
        }
    }
}
