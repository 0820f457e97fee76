//! Three-user binary adder channel with noiseless feedback, and the two-stage
//! zero-error code built from the weighing search.
//!
//! Every slot, each encoder sends one bit and the channel outputs their sum.
//! All encoders and the decoder see every past output.
//!
//! * Stage 1 (`l` slots): user `i` sends digit `k` of its message.
//! * Stage 2 (one slot per ambiguous `k`, ascending): users send
//!   `b1(k)`, `1 - b2(k)` and `0`.
//!
//! Messages are `0..2^l`; the 1-based message sets `{1, ..., 2^l}` map onto
//! them by subtracting one (see [`MessageTriple::from_one_based`]).

use std::collections::BTreeMap;

use num_rational::Ratio;
use rayon::prelude::*;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::table::{decode_row, is_ambiguous};
use crate::verify::ser_ratio;

/// Longest supported message, in bits.
pub const MAX_L: u32 = 63;

/// Largest `l` accepted by [`exhaustive_channel_verify`] (`2^18` sessions).
pub const EXHAUSTIVE_MAX_L: u32 = 6;

pub const SESSION_SCHEMA_VERSION: u32 = 1;

/// The channel: output is the sum of the three input bits.
pub fn adder(x1: u8, x2: u8, x3: u8) -> u8 {
    debug_assert!(x1 <= 1 && x2 <= 1 && x3 <= 1);
    x1 + x2 + x3
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize)]
pub enum User {
    One,
    Two,
    Three,
}

impl User {
    pub const ALL: [User; 3] = [User::One, User::Two, User::Three];

    pub fn index(self) -> usize {
        self as usize
    }
}

/// Three `l`-bit messages, 0-based.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize)]
pub struct MessageTriple {
    pub l: u32,
    pub messages: [u64; 3],
}

fn check_l(l: u32) -> Result<()> {
    if !(1..=MAX_L).contains(&l) {
        return Err(Error::Domain(format!(
            "message length must lie in 1..={MAX_L}, got {l}"
        )));
    }
    Ok(())
}

impl MessageTriple {
    pub fn new(l: u32, messages: [u64; 3]) -> Result<Self> {
        check_l(l)?;
        if let Some(m) = messages.iter().find(|&&m| m >> l != 0) {
            return Err(Error::Domain(format!(
                "message {m} does not fit in {l} bits"
            )));
        }
        Ok(Self { l, messages })
    }

    /// From messages numbered `1..=2^l`.
    pub fn from_one_based(l: u32, messages: [u64; 3]) -> Result<Self> {
        if messages.contains(&0) {
            return Err(Error::Domain("1-based messages start at 1".into()));
        }
        Self::new(l, messages.map(|m| m - 1))
    }

    pub fn to_one_based(&self) -> [u64; 3] {
        self.messages.map(|m| m + 1)
    }

    /// Digit `k` (1-based, most significant first) of a user's message.
    pub fn digit(&self, user: User, k: u32) -> u8 {
        message_digit(self.messages[user.index()], self.l, k)
    }

    pub fn bits(&self, user: User) -> Vec<u8> {
        (1..=self.l).map(|k| self.digit(user, k)).collect()
    }

    fn from_digit_rows(l: u32, rows: &[[u8; 3]]) -> Self {
        let mut messages = [0u64; 3];
        for triple in rows {
            for (m, &d) in messages.iter_mut().zip(triple) {
                *m = (*m << 1) | u64::from(d);
            }
        }
        Self { l, messages }
    }
}

fn message_digit(message: u64, l: u32, k: u32) -> u8 {
    ((message >> (l - k)) & 1) as u8
}

/// Position in the transmission schedule.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(tag = "stage", content = "k")]
pub enum SlotKind {
    /// Send digit `k`.
    Stage1(u32),
    /// Resolve ambiguous position `k`.
    Stage2(u32),
}

impl SlotKind {
    pub fn stage(self) -> u8 {
        match self {
            Self::Stage1(_) => 1,
            Self::Stage2(_) => 2,
        }
    }

    pub fn position(self) -> u32 {
        match self {
            Self::Stage1(k) | Self::Stage2(k) => k,
        }
    }
}

/// The slot that follows `feedback`, or `None` once the session is complete.
/// Derived from the outputs alone, so every party agrees on it.
pub fn next_slot(l: u32, feedback: &[u8]) -> Result<Option<SlotKind>> {
    check_l(l)?;
    let l_us = l as usize;
    let (first, second) = feedback.split_at(feedback.len().min(l_us));
    if let Some(y) = first.iter().find(|&&y| y > 3) {
        return Err(Error::Protocol(format!("stage-1 output {y} exceeds 3")));
    }
    if let Some(y) = second.iter().find(|&&y| y > 2) {
        return Err(Error::Protocol(format!("stage-2 output {y} exceeds 2")));
    }
    if feedback.len() < l_us {
        return Ok(Some(SlotKind::Stage1(feedback.len() as u32 + 1)));
    }
    let mut ambiguous = (1..=l).filter(|&k| is_ambiguous(first[k as usize - 1]));
    match ambiguous.nth(second.len()) {
        Some(k) => Ok(Some(SlotKind::Stage2(k))),
        None if second.len() == first.iter().filter(|&&y| is_ambiguous(y)).count() => Ok(None),
        None => Err(Error::Protocol(format!(
            "{} stage-2 outputs for fewer ambiguous positions",
            second.len()
        ))),
    }
}

/// One user's encoder. It holds only its own message; everything else comes
/// in through the feedback sequence.
#[derive(Debug, Clone, Copy)]
pub struct Encoder {
    user: User,
    l: u32,
    message: u64,
}

impl Encoder {
    pub fn new(user: User, l: u32, message: u64) -> Result<Self> {
        check_l(l)?;
        if message >> l != 0 {
            return Err(Error::Domain(format!(
                "message {message} does not fit in {l} bits"
            )));
        }
        Ok(Self { user, l, message })
    }

    pub fn user(&self) -> User {
        self.user
    }

    /// Bit to send after observing `feedback`.
    pub fn step(&self, feedback: &[u8]) -> Result<u8> {
        let slot = next_slot(self.l, feedback)?.ok_or_else(|| {
            Error::Protocol("session already complete; nothing left to send".into())
        })?;
        let digit = |k| message_digit(self.message, self.l, k);
        Ok(match (slot, self.user) {
            (SlotKind::Stage1(k), _) => digit(k),
            (SlotKind::Stage2(k), User::One) => digit(k),
            (SlotKind::Stage2(k), User::Two) => 1 - digit(k),
            (SlotKind::Stage2(_), User::Three) => 0,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct Slot {
    pub stage: u8,
    pub k: u32,
    pub inputs: [u8; 3],
    pub output: u8,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ChannelTranscript {
    pub l: u32,
    pub slots: Vec<Slot>,
}

impl ChannelTranscript {
    /// All outputs in transmission order, as seen on the feedback link.
    pub fn outputs(&self) -> Vec<u8> {
        self.slots.iter().map(|s| s.output).collect()
    }

    pub fn stage1_outputs(&self) -> Vec<u8> {
        self.slots
            .iter()
            .filter(|s| s.stage == 1)
            .map(|s| s.output)
            .collect()
    }

    pub fn stage2_outputs(&self) -> Vec<u8> {
        self.slots
            .iter()
            .filter(|s| s.stage == 2)
            .map(|s| s.output)
            .collect()
    }

    pub fn ambiguous_positions(&self) -> Vec<u32> {
        self.slots
            .iter()
            .filter(|s| s.stage == 2)
            .map(|s| s.k)
            .collect()
    }

    pub fn total_transmissions(&self) -> usize {
        self.slots.len()
    }

    /// Every output is the sum of its inputs.
    pub fn channel_law_holds(&self) -> bool {
        self.slots
            .iter()
            .all(|s| s.inputs.iter().all(|&x| x <= 1) && s.output == s.inputs.iter().sum::<u8>())
    }
}

/// A finished session: what was sent, the transcript, and the decoder's
/// reading.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Session {
    pub version: u32,
    pub l: u32,
    pub messages: [u64; 3],
    pub slots: Vec<Slot>,
    pub decoded: [u64; 3],
    pub total: usize,
}

impl Session {
    pub fn transcript(&self) -> ChannelTranscript {
        ChannelTranscript {
            l: self.l,
            slots: self.slots.clone(),
        }
    }

    pub fn is_correct(&self) -> bool {
        self.decoded == self.messages
    }

    pub fn to_json(&self) -> String {
        serde_json::to_string_pretty(self).expect("session serializes")
    }
}

/// Simulates the feedback loop until the schedule is exhausted, then decodes
/// from the outputs alone.
pub fn run_session(msgs: &MessageTriple) -> Result<(ChannelTranscript, MessageTriple)> {
    let [e1, e2, e3] = User::ALL.map(|u| Encoder::new(u, msgs.l, msgs.messages[u.index()]));
    let encoders = [e1?, e2?, e3?];
    let mut feedback = Vec::with_capacity(2 * msgs.l as usize);
    let mut slots = Vec::with_capacity(2 * msgs.l as usize);
    while let Some(kind) = next_slot(msgs.l, &feedback)? {
        let inputs = [
            encoders[0].step(&feedback)?,
            encoders[1].step(&feedback)?,
            encoders[2].step(&feedback)?,
        ];
        let output = adder(inputs[0], inputs[1], inputs[2]);
        slots.push(Slot {
            stage: kind.stage(),
            k: kind.position(),
            inputs,
            output,
        });
        feedback.push(output);
    }
    let transcript = ChannelTranscript { l: msgs.l, slots };
    let decoded = decode_transcript(
        msgs.l,
        &transcript.stage1_outputs(),
        &transcript.stage2_outputs(),
    )?;
    Ok((transcript, decoded))
}

/// [`run_session`], packaged for serialization.
pub fn session(msgs: &MessageTriple) -> Result<Session> {
    let (transcript, decoded) = run_session(msgs)?;
    Ok(Session {
        version: SESSION_SCHEMA_VERSION,
        l: msgs.l,
        messages: msgs.messages,
        total: transcript.total_transmissions(),
        slots: transcript.slots,
        decoded: decoded.messages,
    })
}

/// Recovers the three messages from the stage-1 outputs `y` and the stage-2
/// outputs `y2` (one per ambiguous position, ascending).
pub fn decode_transcript(l: u32, y: &[u8], y2: &[u8]) -> Result<MessageTriple> {
    check_l(l)?;
    if y.len() != l as usize {
        return Err(Error::Protocol(format!(
            "expected {l} stage-1 outputs, got {}",
            y.len()
        )));
    }
    let ambiguous = y.iter().filter(|&&v| is_ambiguous(v)).count();
    if y2.len() != ambiguous {
        return Err(Error::Protocol(format!(
            "{ambiguous} ambiguous positions but {} stage-2 outputs",
            y2.len()
        )));
    }
    let mut second = y2.iter();
    let mut rows = Vec::with_capacity(l as usize);
    for &first in y {
        if first > 3 {
            return Err(Error::Protocol(format!("stage-1 output {first} exceeds 3")));
        }
        let s = if is_ambiguous(first) {
            let &s = second.next().expect("count checked above");
            if s > 2 {
                return Err(Error::Protocol(format!("stage-2 output {s} exceeds 2")));
            }
            Some(s)
        } else {
            None
        };
        rows.push(decode_row(first, s)?);
    }
    Ok(MessageTriple::from_digit_rows(l, &rows))
}

/// Mean slots per session over uniform messages: `l + 3l/4`.
pub fn expected_transmissions(l: u32) -> Ratio<u64> {
    Ratio::new(7 * u64::from(l), 4)
}

/// Per-user rate `l / (7l/4) = 4/7`.
pub fn per_user_rate(l: u32) -> Ratio<u64> {
    Ratio::from_integer(u64::from(l)) / expected_transmissions(l)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ChannelSweepReport {
    pub l: u32,
    pub sessions: u64,
    /// Message triples decoded wrongly.
    pub failures: Vec<[u64; 3]>,
    /// Sessions with a slot whose output is not the sum of its inputs, or
    /// whose length is not `l` plus the number of non-unanimous positions.
    pub law_violations: u64,
    /// Total transmissions -> number of sessions.
    pub histogram: BTreeMap<u64, u64>,
    pub total_transmissions: u64,
    #[serde(serialize_with = "ser_ratio")]
    pub mean: Ratio<u64>,
}

impl ChannelSweepReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty() && self.law_violations == 0
    }
}

/// Runs a session for every one of the `2^(3l)` message triples.
pub fn exhaustive_channel_verify(l: u32) -> Result<ChannelSweepReport> {
    if !(1..=EXHAUSTIVE_MAX_L).contains(&l) {
        return Err(Error::Size(format!(
            "exhaustive channel sweeps support 1 <= l <= {EXHAUSTIVE_MAX_L}, got {l}"
        )));
    }
    let size = 1u64 << l;
    let partials: Vec<_> = (0..size)
        .into_par_iter()
        .map(|m1| {
            let mut failures = Vec::new();
            let mut violations = 0u64;
            let mut histogram = BTreeMap::new();
            let mut sum = 0u64;
            for m2 in 0..size {
                for m3 in 0..size {
                    let msgs = MessageTriple {
                        l,
                        messages: [m1, m2, m3],
                    };
                    match run_session(&msgs) {
                        Ok((t, decoded)) => {
                            if decoded != msgs {
                                failures.push(msgs.messages);
                            }
                            let split = (1..=l)
                                .filter(|&k| {
                                    let d = User::ALL.map(|u| msgs.digit(u, k));
                                    d[0] != d[1] || d[1] != d[2]
                                })
                                .count();
                            if !t.channel_law_holds()
                                || t.total_transmissions() != l as usize + split
                            {
                                violations += 1;
                            }
                            let total = t.total_transmissions() as u64;
                            *histogram.entry(total).or_insert(0u64) += 1;
                            sum += total;
                        }
                        Err(_) => failures.push(msgs.messages),
                    }
                }
            }
            (failures, violations, histogram, sum)
        })
        .collect();

    let mut report = ChannelSweepReport {
        l,
        sessions: size * size * size,
        failures: Vec::new(),
        law_violations: 0,
        histogram: BTreeMap::new(),
        total_transmissions: 0,
        mean: Ratio::from_integer(0),
    };
    for (f, v, h, s) in partials {
        report.failures.extend(f);
        report.law_violations += v;
        for (k, c) in h {
            *report.histogram.entry(k).or_default() += c;
        }
        report.total_transmissions += s;
    }
    report.mean = Ratio::new(report.total_transmissions, report.sessions);
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn msgs(l: u32, m: [u64; 3]) -> MessageTriple {
        MessageTriple::new(l, m).unwrap()
    }

    #[test]
    fn adder_sums() {
        assert_eq!(adder(0, 0, 0), 0);
        assert_eq!(adder(1, 1, 1), 3);
        assert_eq!(adder(1, 0, 1), 2);
    }

    #[test]
    fn encoder_steps() {
        // b2 = 101, stage 1 slot k = 3
        let e = Encoder::new(User::Two, 3, 0b101).unwrap();
        assert_eq!(e.step(&[0, 0]).unwrap(), 1);
        // l = 1, y1 = 1 makes position 1 ambiguous; b2(1) = 1 so user 2 sends 0
        let e = Encoder::new(User::Two, 1, 1).unwrap();
        assert_eq!(e.step(&[1]).unwrap(), 0);
        for m in 0..2 {
            let e = Encoder::new(User::Three, 1, m).unwrap();
            assert_eq!(e.step(&[2]).unwrap(), 0);
        }
    }

    #[test]
    fn encoder_rejects_bad_feedback() {
        let e = Encoder::new(User::One, 2, 0b10).unwrap();
        assert!(matches!(e.step(&[4]), Err(Error::Protocol(_))));
        assert!(matches!(e.step(&[1, 0, 3]), Err(Error::Protocol(_))));
        // unanimous outputs leave nothing to resolve
        assert!(matches!(e.step(&[0, 3]), Err(Error::Protocol(_))));
        assert!(matches!(e.step(&[1, 0, 2, 2]), Err(Error::Protocol(_))));
    }

    #[test]
    fn session_examples() {
        let (t, d) = run_session(&msgs(1, [1, 0, 0])).unwrap();
        assert_eq!(t.stage1_outputs(), vec![1]);
        assert_eq!(t.slots[1].inputs, [1, 1, 0]);
        assert_eq!(t.stage2_outputs(), vec![2]);
        assert_eq!(d.messages, [1, 0, 0]);
        assert_eq!(t.total_transmissions(), 2);

        let (t, d) = run_session(&msgs(1, [0, 0, 0])).unwrap();
        assert_eq!((t.stage1_outputs(), t.total_transmissions()), (vec![0], 1));
        assert_eq!(d.messages, [0, 0, 0]);

        let (t, d) = run_session(&msgs(2, [3, 3, 3])).unwrap();
        assert_eq!(t.stage1_outputs(), vec![3, 3]);
        assert!(t.ambiguous_positions().is_empty());
        assert_eq!(d.messages, [3, 3, 3]);
        assert_eq!(t.total_transmissions(), 2);
    }

    #[test]
    fn decode_rows() {
        assert_eq!(
            decode_transcript(1, &[1], &[0]).unwrap().messages,
            [0, 1, 0]
        );
        assert_eq!(
            decode_transcript(1, &[2], &[1]).unwrap().messages,
            [1, 1, 0]
        );
        assert_eq!(decode_transcript(1, &[0], &[]).unwrap().messages, [0, 0, 0]);
        assert!(matches!(
            decode_transcript(1, &[1], &[3]),
            Err(Error::Protocol(_))
        ));
        assert!(matches!(
            decode_transcript(1, &[1], &[]),
            Err(Error::Protocol(_))
        ));
        assert!(matches!(
            decode_transcript(2, &[1], &[0]),
            Err(Error::Protocol(_))
        ));
        assert!(matches!(
            decode_transcript(1, &[4], &[]),
            Err(Error::Protocol(_))
        ));
    }

    #[test]
    fn one_based_boundary() {
        let t = MessageTriple::from_one_based(2, [1, 4, 2]).unwrap();
        assert_eq!(t.messages, [0, 3, 1]);
        assert_eq!(t.to_one_based(), [1, 4, 2]);
        assert!(MessageTriple::from_one_based(2, [0, 1, 1]).is_err());
        assert!(MessageTriple::new(2, [4, 0, 0]).is_err());
        assert!(MessageTriple::new(0, [0, 0, 0]).is_err());
    }

    #[test]
    fn expected_cost() {
        assert_eq!(expected_transmissions(4), Ratio::from_integer(7));
        assert_eq!(expected_transmissions(1), Ratio::new(7, 4));
        assert_eq!(per_user_rate(10), Ratio::new(4, 7));
        let r = exhaustive_channel_verify(1).unwrap();
        assert_eq!(r.histogram, BTreeMap::from([(1, 2), (2, 6)]));
        assert_eq!(r.mean, Ratio::new(7, 4));
    }

    #[test]
    fn long_messages() {
        let m = msgs(63, [u64::MAX >> 1, 0x1234_5678_9abc_def0, 42]);
        let (t, d) = run_session(&m).unwrap();
        assert_eq!(d, m);
        assert!(t.channel_law_holds());
    }
}
