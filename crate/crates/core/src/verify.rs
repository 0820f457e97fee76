//! Ground truth for the search: exhaustive sweeps over every placement of the
//! three forged coins, exact means, brute-force oracle cross-checks, and
//! seeded Monte Carlo for large instances.
//!
//! Work is split across rayon workers; every aggregate is an integer sum,
//! maximum or histogram, so results do not depend on the worker count.
//!
//! Monte Carlo draws placements from `ChaCha8Rng` (crate `rand_chacha` 0.3)
//! seeded with `seed_from_u64`. Each placement takes three `gen_range(0..t)`
//! draws, redrawing any index that repeats an earlier one.

use std::collections::BTreeMap;

use num_rational::Ratio;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Serialize, Serializer};

use crate::error::{Error, Result};
use crate::model::{check_m, CrossCheckScale, ProblemInstance, ScaleOracle};
use crate::search::search;

/// Largest `m` for exhaustive sweeps: `C(128, 3) = 341,376` placements.
pub const EXHAUSTIVE_MAX_M: u32 = 7;

/// Name of the Monte Carlo generator, recorded in reports.
pub const MONTE_CARLO_GENERATOR: &str = "ChaCha8Rng/rand_chacha-0.3/seed_from_u64";

pub(crate) fn ser_ratio<S: Serializer>(
    r: &Ratio<u64>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&format!("{}/{}", r.numer(), r.denom()))
}

pub(crate) fn ser_opt_ratio<S: Serializer>(
    r: &Option<Ratio<u64>>,
    s: S,
) -> std::result::Result<S::Ok, S::Error> {
    match r {
        Some(r) => ser_ratio(r, s),
        None => s.serialize_none(),
    }
}

/// A placement the search got wrong or that broke the weighing budget.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Failure {
    pub forged: [u64; 3],
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SweepReport {
    pub m: u32,
    pub placements_checked: u64,
    pub failures: Vec<Failure>,
    /// Total weighings -> number of placements.
    pub histogram: BTreeMap<u64, u64>,
    pub total_weighings: u64,
    #[serde(serialize_with = "ser_ratio")]
    pub exact_mean: Ratio<u64>,
    pub max_total: u64,
}

impl SweepReport {
    pub fn passed(&self) -> bool {
        self.failures.is_empty()
    }

    pub fn exact_mean_f64(&self) -> f64 {
        *self.exact_mean.numer() as f64 / *self.exact_mean.denom() as f64
    }
}

#[derive(Debug, Default)]
struct Tally {
    placements: u64,
    failures: Vec<Failure>,
    histogram: BTreeMap<u64, u64>,
    sum: u64,
    max: u64,
    descriptors_checked: u64,
    mismatches: u64,
}

impl Tally {
    fn merge(mut self, other: Tally) -> Tally {
        self.placements += other.placements;
        self.failures.extend(other.failures);
        for (k, v) in other.histogram {
            *self.histogram.entry(k).or_default() += v;
        }
        self.sum += other.sum;
        self.max = self.max.max(other.max);
        self.descriptors_checked += other.descriptors_checked;
        self.mismatches += other.mismatches;
        self
    }

    fn fail(&mut self, forged: [u64; 3], reason: impl Into<String>) {
        self.failures.push(Failure {
            forged,
            reason: reason.into(),
        });
    }
}

fn check_exhaustive_m(m: u32) -> Result<()> {
    if !(2..=EXHAUSTIVE_MAX_M).contains(&m) {
        return Err(Error::Size(format!(
            "exhaustive sweeps support 2 <= m <= {EXHAUSTIVE_MAX_M}, got {m}"
        )));
    }
    Ok(())
}

/// Runs `visit` over every 3-subset of `0..2^m`, one rayon task per smallest
/// element, and merges the tallies in index order.
fn sweep<F>(m: u32, visit: F) -> Tally
where
    F: Fn(&mut Tally, [u64; 3]) + Sync,
{
    let t = 1u64 << m;
    (0..t)
        .into_par_iter()
        .map(|a| {
            let mut tally = Tally::default();
            for b in a + 1..t {
                for c in b + 1..t {
                    visit(&mut tally, [a, b, c]);
                }
            }
            tally
        })
        .collect::<Vec<_>>()
        .into_iter()
        .fold(Tally::default(), Tally::merge)
}

fn record_trace(
    tally: &mut Tally,
    forged: [u64; 3],
    trace: &crate::search::SearchTrace,
    queries: u64,
) {
    tally.placements += 1;
    if trace.recovered != forged {
        tally.fail(forged, format!("recovered {:?}", trace.recovered));
    }
    if !trace.budget_holds() {
        tally.fail(
            forged,
            format!(
                "budget broken: total {} with l1={} l2={} l3={}",
                trace.total, trace.l1, trace.l2, trace.l3
            ),
        );
    }
    if queries != trace.total {
        tally.fail(
            forged,
            format!("scale counted {queries} queries, trace has {}", trace.total),
        );
    }
    *tally.histogram.entry(trace.total).or_default() += 1;
    tally.sum += trace.total;
    tally.max = tally.max.max(trace.total);
}

/// Runs the search on every placement for `2 <= m <= 7`.
pub fn exhaustive_verify(m: u32) -> Result<SweepReport> {
    check_exhaustive_m(m)?;
    let tally = sweep(m, |tally, forged| {
        let instance = ProblemInstance::new(m, forged).expect("sweep placements are valid");
        let mut oracle = ScaleOracle::new(instance);
        match search(&mut oracle, m) {
            Ok(trace) => record_trace(tally, forged, &trace, oracle.query_count()),
            Err(e) => {
                tally.placements += 1;
                tally.fail(forged, e.to_string());
            }
        }
    });
    Ok(SweepReport {
        m,
        placements_checked: tally.placements,
        failures: tally.failures,
        histogram: tally.histogram,
        total_weighings: tally.sum,
        exact_mean: Ratio::new(tally.sum, tally.placements),
        max_total: tally.max,
    })
}

/// Mean weighing count over all `C(2^m, 3)` placements.
pub fn exact_mean(m: u32) -> Result<Ratio<u64>> {
    Ok(exhaustive_verify(m)?.exact_mean)
}

/// Result of re-weighing every issued subset by explicit enumeration.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct EquivalenceReport {
    pub m: u32,
    pub placements_checked: u64,
    pub descriptors_checked: u64,
    pub mismatches: u64,
    pub failures: Vec<Failure>,
}

impl EquivalenceReport {
    pub fn passed(&self) -> bool {
        self.mismatches == 0 && self.failures.is_empty()
    }
}

/// Full sweep where every weighing is answered symbolically and recounted
/// over the materialized subset.
pub fn oracle_equivalence_sweep(m: u32) -> Result<EquivalenceReport> {
    check_exhaustive_m(m)?;
    let tally = sweep(m, |tally, forged| {
        let instance = ProblemInstance::new(m, forged).expect("sweep placements are valid");
        let mut scale = CrossCheckScale::new(instance).expect("m <= 7 is explicit-safe");
        match search(&mut scale, m) {
            Ok(trace) => record_trace(tally, forged, &trace, scale.query_count()),
            Err(e) => {
                tally.placements += 1;
                tally.fail(forged, e.to_string());
            }
        }
        tally.descriptors_checked += scale.checked();
        tally.mismatches += scale.mismatches().len() as u64;
    });
    Ok(EquivalenceReport {
        m,
        placements_checked: tally.placements,
        descriptors_checked: tally.descriptors_checked,
        mismatches: tally.mismatches,
        failures: tally.failures,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct MonteCarloReport {
    pub m: u32,
    pub trials: u64,
    pub seed: u64,
    pub generator: &'static str,
    pub mean: f64,
    pub stddev: f64,
    pub stderr: f64,
    pub failures: u64,
}

/// Three distinct indices below `t`, drawn uniformly.
pub fn sample_placement<R: Rng>(rng: &mut R, t: u64) -> [u64; 3] {
    let mut out = [0u64; 3];
    let mut filled = 0;
    while filled < 3 {
        let c = rng.gen_range(0..t);
        if !out[..filled].contains(&c) {
            out[filled] = c;
            filled += 1;
        }
    }
    out
}

const MC_BATCH: usize = 1 << 16;

/// Mean weighing count over `trials` uniformly drawn placements.
pub fn monte_carlo(m: u32, trials: u64, seed: u64) -> Result<MonteCarloReport> {
    check_m(m)?;
    if trials == 0 {
        return Err(Error::Domain("Monte Carlo needs at least one trial".into()));
    }
    let t = 1u64 << m;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let (mut sum, mut sum_sq, mut failures) = (0u128, 0u128, 0u64);
    let mut remaining = trials;
    while remaining > 0 {
        let batch = remaining.min(MC_BATCH as u64) as usize;
        remaining -= batch as u64;
        let placements: Vec<[u64; 3]> = (0..batch).map(|_| sample_placement(&mut rng, t)).collect();
        let (s, sq, f) = placements
            .par_iter()
            .map(|&forged| {
                let instance = ProblemInstance::new(m, forged).expect("sampled placement is valid");
                let mut oracle = ScaleOracle::new(instance);
                match search(&mut oracle, m) {
                    Ok(trace) => {
                        let ok = trace.recovered == oracle.instance().forged();
                        let total = u128::from(trace.total);
                        (total, total * total, u64::from(!ok))
                    }
                    Err(_) => (0, 0, 1),
                }
            })
            .reduce(|| (0, 0, 0), |a, b| (a.0 + b.0, a.1 + b.1, a.2 + b.2));
        sum += s;
        sum_sq += sq;
        failures += f;
    }
    let n = u128::from(trials);
    let mean = sum as f64 / trials as f64;
    let variance = if trials > 1 {
        (n * sum_sq - sum * sum) as f64 / (n * (n - 1)) as f64
    } else {
        0.0
    };
    let stddev = variance.sqrt();
    Ok(MonteCarloReport {
        m,
        trials,
        seed,
        generator: MONTE_CARLO_GENERATOR,
        mean,
        stddev,
        stderr: stddev / (trials as f64).sqrt(),
        failures,
    })
}
