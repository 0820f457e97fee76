//! Three-stage sequential search for three forged coins among `2^m`.
//!
//! * Stage 0 bisects the coin set until it holds three aligned blocks of
//!   equal size `2^n`, each with exactly one forged coin.
//! * Stage 1 weighs, for every label digit `i`, the coins of all three
//!   blocks whose `i`-th digit is 1. The reading is the sum of the three
//!   hidden digits.
//! * Stage 2 settles each position whose reading was 1 or 2 with one more
//!   weighing and the shared decode table.
//!
//! Bisections always weigh the lower half.

use serde::Serialize;

use crate::error::{Error, Result};
use crate::model::{
    check_m, Block, CoinLabel, Group, GroupClause, Half, ProblemInstance, Scale, SubsetDescriptor,
    WeighOutcome,
};
use crate::table::{decode_row, is_ambiguous};

/// Version tag written into serialized traces.
pub const TRACE_SCHEMA_VERSION: u32 = 1;

/// Outcome of the bisection stage.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Stage0Result {
    pub m: u32,
    pub t1: Block,
    pub t2: Block,
    pub t3: Block,
    /// Weighings until the first reading of 1 or 2.
    pub l1: u32,
    /// Weighings splitting the two-coin block; the one-coin block is then
    /// narrowed by the same number of bisections.
    pub l2: u32,
    /// Label length, `m - l1 - l2`.
    pub n: u32,
}

impl Stage0Result {
    pub fn blocks(&self) -> [Block; 3] {
        [self.t1, self.t2, self.t3]
    }

    pub fn weighings(&self) -> u64 {
        u64::from(self.l1) + 2 * u64::from(self.l2)
    }
}

/// A label position left undetermined by its stage-1 reading.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct AmbiguityRecord {
    pub position: u32,
    pub first_outcome: WeighOutcome,
}

/// Stage-1 readings, one per label position, and the ambiguous subset.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct DigitSweep {
    pub outcomes: Vec<WeighOutcome>,
    pub ambiguities: Vec<AmbiguityRecord>,
}

impl DigitSweep {
    /// Digit triple for position `i` if stage 1 alone fixed it.
    pub fn fixed(&self, i: u32) -> Option<[u8; 3]> {
        match self.outcomes[(i - 1) as usize].value() {
            0 => Some([0, 0, 0]),
            3 => Some([1, 1, 1]),
            _ => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Weighing {
    pub descriptor: SubsetDescriptor,
    pub outcome: WeighOutcome,
}

/// Full record of one search.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SearchTrace {
    pub version: u32,
    pub m: u32,
    /// Ground truth when the scale exposes it.
    pub forged: Option<[u64; 3]>,
    pub l1: u32,
    pub l2: u32,
    pub l3: u32,
    pub total: u64,
    pub weighings: Vec<Weighing>,
    /// Recovered forged coins, ascending.
    pub recovered: [u64; 3],
}

impl SearchTrace {
    pub fn n(&self) -> u32 {
        self.m - self.l1 - self.l2
    }

    /// `total == l1 + 2 l2 + n + l3` and `total <= 2m - 1`.
    pub fn budget_holds(&self) -> bool {
        let expected =
            u64::from(self.l1) + 2 * u64::from(self.l2) + u64::from(self.n()) + u64::from(self.l3);
        self.total == expected
            && self.total == self.weighings.len() as u64
            && self.total < 2 * u64::from(self.m)
            && self.l3 <= self.n()
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("trace serializes")
    }
}

/// Scale wrapper that logs every weighing it forwards.
#[derive(Debug)]
pub struct Recorder<S> {
    inner: S,
    log: Vec<Weighing>,
}

impl<S: Scale> Recorder<S> {
    pub fn new(inner: S) -> Self {
        Self {
            inner,
            log: Vec::new(),
        }
    }

    pub fn into_parts(self) -> (S, Vec<Weighing>) {
        (self.inner, self.log)
    }
}

impl<S: Scale> Scale for Recorder<S> {
    fn m(&self) -> u32 {
        self.inner.m()
    }

    fn instance(&self) -> Option<&ProblemInstance> {
        self.inner.instance()
    }

    fn weigh(&mut self, subset: &SubsetDescriptor) -> Result<WeighOutcome> {
        let outcome = self.inner.weigh(subset)?;
        self.log.push(Weighing {
            descriptor: subset.clone(),
            outcome,
        });
        Ok(outcome)
    }
}

fn weigh_half<S: Scale>(scale: &mut S, block: Block) -> Result<u8> {
    Ok(scale
        .weigh(&SubsetDescriptor::interval_half(block, Half::Lower))?
        .value())
}

fn corrupted(phase: &str, block: Block, outcome: u8, holds: u8) -> Error {
    Error::CorruptedOracle(format!(
        "{phase}: lower half of {block} weighed {outcome}, but the block holds {holds} forged coin(s)"
    ))
}

fn check_scale_m<S: Scale>(scale: &S, m: u32) -> Result<()> {
    check_m(m)?;
    if scale.m() != m {
        return Err(Error::Domain(format!(
            "scale weighs 2^{} coins, search asked for 2^{m}",
            scale.m()
        )));
    }
    Ok(())
}

/// Bisection stage. Consumes exactly `l1 + 2 l2` weighings.
pub fn stage0<S: Scale>(scale: &mut S, m: u32) -> Result<Stage0Result> {
    check_scale_m(scale, m)?;

    // Phase A: halve the block holding all three until a half holds 1 or 2.
    let mut current = Block::full(m);
    let mut l1 = 0;
    let (single, double) = loop {
        let lower = current.lower();
        l1 += 1;
        match weigh_half(scale, current)? {
            3 if lower.len >= 4 => current = lower,
            0 if lower.len >= 4 => current = current.upper(),
            1 => break (lower, current.upper()),
            2 => break (current.upper(), lower),
            w => return Err(corrupted("phase A", current, w, 3)),
        }
    };

    // Phase B: split the two-coin block until each half holds one.
    let mut current = double;
    let mut l2 = 0;
    let (t1, t2) = loop {
        let lower = current.lower();
        l2 += 1;
        match weigh_half(scale, current)? {
            2 if lower.len >= 2 => current = lower,
            0 if lower.len >= 2 => current = current.upper(),
            1 => break (lower, current.upper()),
            w => return Err(corrupted("phase B", current, w, 2)),
        }
    };

    // Phase C: narrow the one-coin block to the same size.
    let mut t3 = single;
    for _ in 0..l2 {
        t3 = match weigh_half(scale, t3)? {
            1 => t3.lower(),
            0 => t3.upper(),
            w => return Err(corrupted("phase C", t3, w, 1)),
        };
    }

    Ok(Stage0Result {
        m,
        t1,
        t2,
        t3,
        l1,
        l2,
        n: m - l1 - l2,
    })
}

/// Coins across the three blocks whose digit `i` is 1.
pub fn digit_weighing(blocks: &Stage0Result, i: u32) -> SubsetDescriptor {
    SubsetDescriptor::DigitPredicate {
        digit: i,
        clauses: vec![
            GroupClause {
                group: Group::T1,
                block: blocks.t1,
                value: 1,
            },
            GroupClause {
                group: Group::T2,
                block: blocks.t2,
                value: 1,
            },
            GroupClause {
                group: Group::T3,
                block: blocks.t3,
                value: 1,
            },
        ],
    }
}

/// Coins of `T1` with digit `i` equal to 1 together with coins of `T2` with
/// digit `i` equal to 0.
pub fn resolving_weighing(blocks: &Stage0Result, i: u32) -> SubsetDescriptor {
    SubsetDescriptor::DigitPredicate {
        digit: i,
        clauses: vec![
            GroupClause {
                group: Group::T1,
                block: blocks.t1,
                value: 1,
            },
            GroupClause {
                group: Group::T2,
                block: blocks.t2,
                value: 0,
            },
        ],
    }
}

/// Static digit weighings, positions `1..=n` in order.
pub fn stage1<S: Scale>(scale: &mut S, blocks: &Stage0Result) -> Result<DigitSweep> {
    let mut outcomes = Vec::with_capacity(blocks.n as usize);
    let mut ambiguities = Vec::new();
    for i in 1..=blocks.n {
        let outcome = scale.weigh(&digit_weighing(blocks, i))?;
        if is_ambiguous(outcome.value()) {
            ambiguities.push(AmbiguityRecord {
                position: i,
                first_outcome: outcome,
            });
        }
        outcomes.push(outcome);
    }
    Ok(DigitSweep {
        outcomes,
        ambiguities,
    })
}

/// Resolves every ambiguity in ascending position order and returns the
/// complete labels `(c1, c2, c3)`.
pub fn stage2<S: Scale>(
    scale: &mut S,
    blocks: &Stage0Result,
    sweep: &DigitSweep,
) -> Result<[CoinLabel; 3]> {
    let n = blocks.n as usize;
    let mut digits = [vec![0u8; n], vec![0u8; n], vec![0u8; n]];
    let mut pending = sweep.ambiguities.iter().peekable();
    for i in 1..=blocks.n {
        let triple = match sweep.fixed(i) {
            Some(t) => t,
            None => {
                let record = pending.next_if(|a| a.position == i).ok_or_else(|| {
                    Error::Contract(format!("position {i} is ambiguous but has no record"))
                })?;
                let second = scale.weigh(&resolving_weighing(blocks, i))?.value();
                if second > 2 {
                    return Err(Error::CorruptedOracle(format!(
                        "resolving weighing at position {i} read {second}; it spans only two blocks"
                    )));
                }
                decode_row(record.first_outcome.value(), Some(second))?
            }
        };
        for (g, d) in triple.into_iter().enumerate() {
            digits[g][i as usize - 1] = d;
        }
    }
    Ok(digits.map(|d| CoinLabel::from_digits(&d)))
}

/// Runs all three stages against `scale`.
pub fn search<S: Scale>(scale: &mut S, m: u32) -> Result<SearchTrace> {
    let mut rec = Recorder::new(scale);
    let blocks = stage0(&mut rec, m)?;
    let sweep = stage1(&mut rec, &blocks)?;
    let labels = stage2(&mut rec, &blocks, &sweep)?;
    let forged = rec.instance().map(ProblemInstance::forged);
    let (_, weighings) = rec.into_parts();

    let mut recovered = [0u64; 3];
    for ((slot, block), label) in recovered.iter_mut().zip(blocks.blocks()).zip(&labels) {
        *slot = block.coin_at(label);
    }
    recovered.sort_unstable();

    Ok(SearchTrace {
        version: TRACE_SCHEMA_VERSION,
        m,
        forged,
        l1: blocks.l1,
        l2: blocks.l2,
        l3: sweep.ambiguities.len() as u32,
        total: weighings.len() as u64,
        weighings,
        recovered,
    })
}
