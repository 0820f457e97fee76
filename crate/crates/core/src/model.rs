//! Problem instances, coin blocks and labels, weighable subsets, and the
//! counting scale that every search step queries through.
//!
//! Coins are numbered `0..2^m`. A weighing returns the number of forged coins
//! in the weighed subset. Subsets are described symbolically so that a
//! weighing never has to enumerate the coins it covers; the `Explicit`
//! variant and [`materialize`] exist for brute-force cross-checks on small
//! instances.

use std::fmt;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Number of forged coins the search is built for.
pub const FORGED: usize = 3;

/// Smallest supported exponent: 4 coins.
pub const MIN_M: u32 = 2;

/// Largest supported exponent. Coin indices are `u64`.
pub const MAX_M: u32 = 62;

/// Largest exponent for which subsets may be listed coin by coin.
pub const EXPLICIT_MAX_M: u32 = 12;

/// `t = 2^m` coins, three of which are forged.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ProblemInstance {
    m: u32,
    forged: [u64; FORGED],
}

impl ProblemInstance {
    /// Builds an instance; the forged indices are stored sorted.
    pub fn new(m: u32, forged: [u64; FORGED]) -> Result<Self> {
        check_m(m)?;
        let t = 1u64 << m;
        let mut forged = forged;
        forged.sort_unstable();
        if forged[0] == forged[1] || forged[1] == forged[2] {
            return Err(Error::Instance(format!(
                "forged coins must be distinct, got {forged:?}"
            )));
        }
        if forged[2] >= t {
            return Err(Error::Instance(format!(
                "forged coin {} out of range for t = {t}",
                forged[2]
            )));
        }
        Ok(Self { m, forged })
    }

    pub fn m(&self) -> u32 {
        self.m
    }

    pub fn coin_count(&self) -> u64 {
        1u64 << self.m
    }

    /// Forged coin indices in ascending order.
    pub fn forged(&self) -> [u64; FORGED] {
        self.forged
    }

    pub fn is_forged(&self, coin: u64) -> bool {
        self.forged.contains(&coin)
    }
}

pub(crate) fn check_m(m: u32) -> Result<()> {
    if !(MIN_M..=MAX_M).contains(&m) {
        return Err(Error::Domain(format!(
            "m must lie in {MIN_M}..={MAX_M}, got {m}"
        )));
    }
    Ok(())
}

/// A contiguous, aligned run of `2^k` coins starting at `base`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct Block {
    pub base: u64,
    pub len: u64,
}

impl Block {
    pub fn new(base: u64, len: u64) -> Self {
        Self { base, len }
    }

    pub fn full(m: u32) -> Self {
        Self {
            base: 0,
            len: 1u64 << m,
        }
    }

    pub fn contains(&self, coin: u64) -> bool {
        coin >= self.base && coin - self.base < self.len
    }

    pub fn end(&self) -> u64 {
        self.base + self.len
    }

    pub fn lower(&self) -> Self {
        Self {
            base: self.base,
            len: self.len / 2,
        }
    }

    pub fn upper(&self) -> Self {
        Self {
            base: self.base + self.len / 2,
            len: self.len / 2,
        }
    }

    pub fn half(&self, half: Half) -> Self {
        match half {
            Half::Lower => self.lower(),
            Half::Upper => self.upper(),
        }
    }

    /// Label length of the coins in this block, i.e. `log2(len)`.
    pub fn label_len(&self) -> u32 {
        self.len.trailing_zeros()
    }

    /// Label of `coin` within this block, or `None` if it lies outside.
    pub fn label_of(&self, coin: u64) -> Option<CoinLabel> {
        self.contains(coin)
            .then(|| CoinLabel::new(coin - self.base, self.label_len()))
    }

    /// Coin carrying `label` in this block.
    pub fn coin_at(&self, label: &CoinLabel) -> u64 {
        debug_assert_eq!(label.len(), self.label_len());
        self.base + label.value()
    }

    fn overlaps(&self, other: &Block) -> bool {
        self.base < other.end() && other.base < self.end()
    }
}

impl fmt::Display for Block {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "[{}, {})", self.base, self.end())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Half {
    Lower,
    Upper,
}

/// Binary label of a coin inside its block. Digit 1 is the most significant
/// bit of the coin's offset; an empty label (`len == 0`) is legal.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct CoinLabel {
    value: u64,
    len: u32,
}

impl CoinLabel {
    pub fn new(value: u64, len: u32) -> Self {
        debug_assert!(len == 64 || value >> len == 0);
        Self { value, len }
    }

    /// Builds a label from digits `c^(1), c^(2), ...`.
    pub fn from_digits(digits: &[u8]) -> Self {
        let value = digits
            .iter()
            .fold(0u64, |acc, &d| (acc << 1) | u64::from(d & 1));
        Self {
            value,
            len: digits.len() as u32,
        }
    }

    pub fn value(&self) -> u64 {
        self.value
    }

    pub fn len(&self) -> u32 {
        self.len
    }

    pub fn is_empty(&self) -> bool {
        self.len == 0
    }

    /// Digit `i`, 1-based from the most significant end.
    pub fn digit(&self, i: u32) -> u8 {
        assert!(
            (1..=self.len).contains(&i),
            "digit {i} outside 1..={}",
            self.len
        );
        digit_of(self.value, self.len, i)
    }

    pub fn digits(&self) -> Vec<u8> {
        (1..=self.len).map(|i| self.digit(i)).collect()
    }
}

impl fmt::Display for CoinLabel {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.len == 0 {
            return f.write_str("ε");
        }
        for d in self.digits() {
            write!(f, "{d}")?;
        }
        Ok(())
    }
}

#[inline]
fn digit_of(offset: u64, len: u32, i: u32) -> u8 {
    ((offset >> (len - i)) & 1) as u8
}

/// One of the three single-forged-coin blocks found by the bisection stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum Group {
    T1,
    T2,
    T3,
}

/// Coins of `block` whose digit at the predicate's position equals `value`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct GroupClause {
    pub group: Group,
    pub block: Block,
    pub value: u8,
}

/// A weighable subset.
#[derive(Debug, Clone, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SubsetDescriptor {
    /// One half of the aligned interval `[base, base + len)`.
    IntervalHalf { base: u64, len: u64, half: Half },
    /// Union over the clauses of the coins whose label digit `digit`
    /// (1-based, most significant first) matches the clause's value.
    DigitPredicate {
        digit: u32,
        clauses: Vec<GroupClause>,
    },
    /// An explicit coin list; only for `t <= 2^12`.
    Explicit { coins: Vec<u64> },
}

impl SubsetDescriptor {
    pub fn interval_half(block: Block, half: Half) -> Self {
        Self::IntervalHalf {
            base: block.base,
            len: block.len,
            half,
        }
    }

    /// Checks the descriptor against a coin set of size `2^m`.
    pub fn validate(&self, m: u32) -> Result<()> {
        let t = 1u64 << m;
        match self {
            Self::IntervalHalf { base, len, .. } => {
                if *len < 2 || !len.is_power_of_two() {
                    return Err(Error::Descriptor(format!(
                        "interval length {len} is not a power of two >= 2"
                    )));
                }
                if base % len != 0 {
                    return Err(Error::Descriptor(format!(
                        "interval base {base} not aligned to length {len}"
                    )));
                }
                if base.checked_add(*len).is_none_or(|end| end > t) {
                    return Err(Error::Descriptor(format!(
                        "interval [{base}, {base}+{len}) exceeds t = {t}"
                    )));
                }
            }
            Self::DigitPredicate { digit, clauses } => {
                if clauses.is_empty() || clauses.len() > FORGED {
                    return Err(Error::Descriptor(format!(
                        "digit predicate needs 1..=3 clauses, got {}",
                        clauses.len()
                    )));
                }
                let len = clauses[0].block.len;
                if !len.is_power_of_two() {
                    return Err(Error::Descriptor(format!(
                        "block length {len} is not a power of two"
                    )));
                }
                let n = len.trailing_zeros();
                if !(1..=n).contains(digit) {
                    return Err(Error::Descriptor(format!(
                        "digit position {digit} outside 1..={n}"
                    )));
                }
                for (idx, c) in clauses.iter().enumerate() {
                    if c.block.len != len {
                        return Err(Error::Descriptor(
                            "digit predicate blocks differ in size".into(),
                        ));
                    }
                    if c.block.base % len != 0 || c.block.end() > t {
                        return Err(Error::Descriptor(format!(
                            "block {} misaligned or out of range",
                            c.block
                        )));
                    }
                    if c.value > 1 {
                        return Err(Error::Descriptor(format!(
                            "required digit {} is not binary",
                            c.value
                        )));
                    }
                    for other in &clauses[..idx] {
                        if other.group == c.group || other.block.overlaps(&c.block) {
                            return Err(Error::Descriptor(
                                "digit predicate groups must be distinct and disjoint".into(),
                            ));
                        }
                    }
                }
            }
            Self::Explicit { coins } => {
                if m > EXPLICIT_MAX_M {
                    return Err(Error::Size(format!(
                        "explicit subsets need t <= 2^{EXPLICIT_MAX_M}, got 2^{m}"
                    )));
                }
                let mut sorted = coins.clone();
                sorted.sort_unstable();
                if sorted.windows(2).any(|w| w[0] == w[1]) {
                    return Err(Error::Descriptor("explicit subset repeats a coin".into()));
                }
                if sorted.last().is_some_and(|&c| c >= t) {
                    return Err(Error::Descriptor(format!(
                        "explicit coin out of range for t = {t}"
                    )));
                }
            }
        }
        Ok(())
    }

    /// Whether `coin` belongs to the subset. Assumes a validated descriptor.
    pub fn contains(&self, coin: u64) -> bool {
        match self {
            Self::IntervalHalf { base, len, half } => {
                Block::new(*base, *len).half(*half).contains(coin)
            }
            Self::DigitPredicate { digit, clauses } => clauses.iter().any(|c| {
                c.block.contains(coin)
                    && digit_of(coin - c.block.base, c.block.label_len(), *digit) == c.value
            }),
            Self::Explicit { coins } => coins.contains(&coin),
        }
    }

    /// Number of coins in the subset, computed without enumeration.
    pub fn size(&self) -> u64 {
        match self {
            Self::IntervalHalf { len, .. } => len / 2,
            Self::DigitPredicate { clauses, .. } => clauses.iter().map(|c| c.block.len / 2).sum(),
            Self::Explicit { coins } => coins.len() as u64,
        }
    }
}

/// Lists the coins of `subset` in ascending order. Cross-check mode only.
pub fn materialize(subset: &SubsetDescriptor, instance: &ProblemInstance) -> Result<Vec<u64>> {
    let m = instance.m();
    if m > EXPLICIT_MAX_M {
        return Err(Error::Size(format!(
            "materialize needs t <= 2^{EXPLICIT_MAX_M}, got 2^{m}"
        )));
    }
    subset.validate(m)?;
    Ok(match subset {
        SubsetDescriptor::IntervalHalf { base, len, half } => {
            let b = Block::new(*base, *len).half(*half);
            (b.base..b.end()).collect()
        }
        SubsetDescriptor::DigitPredicate { .. } => (0..instance.coin_count())
            .filter(|&c| subset.contains(c))
            .collect(),
        SubsetDescriptor::Explicit { coins } => {
            let mut coins = coins.clone();
            coins.sort_unstable();
            coins
        }
    })
}

/// Number of forged coins in a weighed subset.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(transparent)]
pub struct WeighOutcome(u8);

impl WeighOutcome {
    pub fn new(value: u8) -> Result<Self> {
        if value as usize > FORGED {
            return Err(Error::CorruptedOracle(format!("outcome {value} exceeds 3")));
        }
        Ok(Self(value))
    }

    pub fn value(self) -> u8 {
        self.0
    }
}

impl fmt::Display for WeighOutcome {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.0)
    }
}

/// Something that answers weighings: given a subset, reports how many forged
/// coins it holds.
pub trait Scale {
    /// Exponent of the coin set being weighed.
    fn m(&self) -> u32;

    /// Ground truth, for scales that know it.
    fn instance(&self) -> Option<&ProblemInstance> {
        None
    }

    fn weigh(&mut self, subset: &SubsetDescriptor) -> Result<WeighOutcome>;
}

impl<S: Scale + ?Sized> Scale for &mut S {
    fn m(&self) -> u32 {
        (**self).m()
    }

    fn instance(&self) -> Option<&ProblemInstance> {
        (**self).instance()
    }

    fn weigh(&mut self, subset: &SubsetDescriptor) -> Result<WeighOutcome> {
        (**self).weigh(subset)
    }
}

/// Counting scale over a known instance. Each successful weighing bumps the
/// query counter by one; descriptors rejected as malformed are not counted.
#[derive(Debug, Clone)]
pub struct ScaleOracle {
    instance: ProblemInstance,
    queries: u64,
}

impl ScaleOracle {
    pub fn new(instance: ProblemInstance) -> Self {
        Self {
            instance,
            queries: 0,
        }
    }

    pub fn instance(&self) -> &ProblemInstance {
        &self.instance
    }

    pub fn query_count(&self) -> u64 {
        self.queries
    }

    /// Weight computed straight from the three forged positions.
    fn symbolic_weight(&self, subset: &SubsetDescriptor) -> u8 {
        self.instance
            .forged
            .iter()
            .filter(|&&c| subset.contains(c))
            .count() as u8
    }
}

impl Scale for ScaleOracle {
    fn m(&self) -> u32 {
        self.instance.m
    }

    fn instance(&self) -> Option<&ProblemInstance> {
        Some(&self.instance)
    }

    fn weigh(&mut self, subset: &SubsetDescriptor) -> Result<WeighOutcome> {
        subset.validate(self.instance.m)?;
        self.queries += 1;
        Ok(WeighOutcome(self.symbolic_weight(subset)))
    }
}

/// Scale that answers symbolically and also recounts every subset by brute
/// force, tallying disagreements.
#[derive(Debug, Clone)]
pub struct CrossCheckScale {
    inner: ScaleOracle,
    checked: u64,
    mismatches: Vec<(SubsetDescriptor, u8, u8)>,
}

impl CrossCheckScale {
    pub fn new(instance: ProblemInstance) -> Result<Self> {
        if instance.m() > EXPLICIT_MAX_M {
            return Err(Error::Size(format!(
                "cross-check needs t <= 2^{EXPLICIT_MAX_M}, got 2^{}",
                instance.m()
            )));
        }
        Ok(Self {
            inner: ScaleOracle::new(instance),
            checked: 0,
            mismatches: Vec::new(),
        })
    }

    pub fn query_count(&self) -> u64 {
        self.inner.query_count()
    }

    pub fn checked(&self) -> u64 {
        self.checked
    }

    /// `(descriptor, symbolic, explicit)` for every disagreement.
    pub fn mismatches(&self) -> &[(SubsetDescriptor, u8, u8)] {
        &self.mismatches
    }
}

impl Scale for CrossCheckScale {
    fn m(&self) -> u32 {
        self.inner.m()
    }

    fn instance(&self) -> Option<&ProblemInstance> {
        Some(&self.inner.instance)
    }

    fn weigh(&mut self, subset: &SubsetDescriptor) -> Result<WeighOutcome> {
        let symbolic = self.inner.weigh(subset)?;
        let coins = materialize(subset, &self.inner.instance)?;
        let explicit = coins
            .iter()
            .filter(|&&c| self.inner.instance.is_forged(c))
            .count() as u8;
        self.checked += 1;
        if explicit != symbolic.value() {
            self.mismatches
                .push((subset.clone(), symbolic.value(), explicit));
        }
        Ok(symbolic)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn inst(m: u32, f: [u64; 3]) -> ProblemInstance {
        ProblemInstance::new(m, f).unwrap()
    }

    #[test]
    fn instance_rejects_bad_input() {
        assert!(matches!(
            ProblemInstance::new(1, [0, 1, 0]),
            Err(Error::Domain(_))
        ));
        assert!(matches!(
            ProblemInstance::new(2, [0, 1, 1]),
            Err(Error::Instance(_))
        ));
        assert!(matches!(
            ProblemInstance::new(2, [0, 1, 4]),
            Err(Error::Instance(_))
        ));
        assert_eq!(inst(3, [7, 0, 4]).forged(), [0, 4, 7]);
    }

    #[test]
    fn weigh_small_examples() {
        let mut o = ScaleOracle::new(inst(2, [0, 1, 2]));
        let empty = SubsetDescriptor::Explicit { coins: vec![] };
        assert_eq!(o.weigh(&empty).unwrap().value(), 0);
        let all = SubsetDescriptor::Explicit {
            coins: vec![0, 1, 2, 3],
        };
        assert_eq!(o.weigh(&all).unwrap().value(), 3);
        let lower = SubsetDescriptor::interval_half(Block::full(2), Half::Lower);
        assert_eq!(o.weigh(&lower).unwrap().value(), 2);
        assert_eq!(o.query_count(), 3);
    }

    #[test]
    fn malformed_descriptors_are_rejected() {
        let mut o = ScaleOracle::new(inst(3, [0, 1, 2]));
        let misaligned = SubsetDescriptor::IntervalHalf {
            base: 2,
            len: 4,
            half: Half::Lower,
        };
        assert!(matches!(o.weigh(&misaligned), Err(Error::Descriptor(_))));
        let unit = SubsetDescriptor::IntervalHalf {
            base: 0,
            len: 1,
            half: Half::Lower,
        };
        assert!(matches!(o.weigh(&unit), Err(Error::Descriptor(_))));
        let past_end = SubsetDescriptor::IntervalHalf {
            base: 8,
            len: 8,
            half: Half::Lower,
        };
        assert!(matches!(o.weigh(&past_end), Err(Error::Descriptor(_))));
        let bad_digit = SubsetDescriptor::DigitPredicate {
            digit: 2,
            clauses: vec![GroupClause {
                group: Group::T1,
                block: Block::new(0, 2),
                value: 1,
            }],
        };
        assert!(matches!(o.weigh(&bad_digit), Err(Error::Descriptor(_))));
        let zero_digit = SubsetDescriptor::DigitPredicate {
            digit: 0,
            clauses: vec![GroupClause {
                group: Group::T1,
                block: Block::new(0, 2),
                value: 1,
            }],
        };
        assert!(matches!(o.weigh(&zero_digit), Err(Error::Descriptor(_))));
        let overlapping = SubsetDescriptor::DigitPredicate {
            digit: 1,
            clauses: vec![
                GroupClause {
                    group: Group::T1,
                    block: Block::new(0, 2),
                    value: 1,
                },
                GroupClause {
                    group: Group::T2,
                    block: Block::new(0, 2),
                    value: 0,
                },
            ],
        };
        assert!(matches!(o.weigh(&overlapping), Err(Error::Descriptor(_))));
        let dup = SubsetDescriptor::Explicit { coins: vec![1, 1] };
        assert!(matches!(o.weigh(&dup), Err(Error::Descriptor(_))));
        assert_eq!(o.query_count(), 0);
    }

    #[test]
    fn explicit_subsets_limited_to_small_instances() {
        let big = inst(13, [0, 1, 2]);
        let mut o = ScaleOracle::new(big.clone());
        let e = SubsetDescriptor::Explicit { coins: vec![0] };
        assert!(matches!(o.weigh(&e), Err(Error::Size(_))));
        let half = SubsetDescriptor::interval_half(Block::full(13), Half::Lower);
        assert!(matches!(materialize(&half, &big), Err(Error::Size(_))));
        assert!(CrossCheckScale::new(big).is_err());
    }

    #[test]
    fn materialize_halves_and_digits() {
        let i = inst(2, [0, 1, 2]);
        let b = Block::full(2);
        assert_eq!(
            materialize(&SubsetDescriptor::interval_half(b, Half::Lower), &i).unwrap(),
            vec![0, 1]
        );
        assert_eq!(
            materialize(&SubsetDescriptor::interval_half(b, Half::Upper), &i).unwrap(),
            vec![2, 3]
        );
        // labels over the 2-coin block {2, 3} are "0" and "1"
        let d = SubsetDescriptor::DigitPredicate {
            digit: 1,
            clauses: vec![GroupClause {
                group: Group::T1,
                block: Block::new(2, 2),
                value: 1,
            }],
        };
        assert_eq!(materialize(&d, &i).unwrap(), vec![3]);
    }

    #[test]
    fn labels_are_msb_first() {
        let l = CoinLabel::new(0b100, 3);
        assert_eq!(l.digits(), vec![1, 0, 0]);
        assert_eq!(CoinLabel::from_digits(&[1, 0, 0]), l);
        assert_eq!(l.to_string(), "100");
        assert!(CoinLabel::new(0, 0).is_empty());
        let b = Block::new(8, 8);
        let label = b.label_of(13).unwrap();
        assert_eq!(label.digits(), vec![1, 0, 1]);
        assert_eq!(b.coin_at(&label), 13);
        assert!(b.label_of(16).is_none());
    }

    #[test]
    fn partition_weights_sum_to_three() {
        let i = inst(4, [3, 9, 14]);
        let mut o = ScaleOracle::new(i);
        let b = Block::full(4);
        let lo = o
            .weigh(&SubsetDescriptor::interval_half(b, Half::Lower))
            .unwrap();
        let hi = o
            .weigh(&SubsetDescriptor::interval_half(b, Half::Upper))
            .unwrap();
        assert_eq!(lo.value() + hi.value(), 3);
    }

    #[test]
    fn descriptor_json_shape() {
        let d = SubsetDescriptor::interval_half(Block::full(3), Half::Upper);
        assert_eq!(
            serde_json::to_string(&d).unwrap(),
            r#"{"kind":"interval_half","base":0,"len":8,"half":"upper"}"#
        );
    }
}
