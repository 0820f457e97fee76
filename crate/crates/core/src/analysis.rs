//! Mean number of weighings: the nested-sum formula, its closed form, and the
//! limiting rate `log2(t) / N -> 4/7`.
//!
//! The nested sum models each bisection reading as independent fair coin
//! flips per forged coin. Exhaustive sweeps over uniform placements (see
//! [`crate::verify`]) measure the true mean, which differs at small `m`.

use num_rational::Ratio;
use serde::Serialize;

use crate::error::{Error, Result};
use crate::verify::{self, MonteCarloReport};

/// Rate of the best known static algorithm, quoted for comparison.
pub const STATIC_ALGORITHM_RATE: f64 = 0.46;

/// Rate bound for static algorithms, quoted for comparison.
pub const STATIC_RATE_BOUND: f64 = 0.6;

/// `4/7` rounded to six places.
pub const ASYMPTOTIC_RATE_DISPLAY: f64 = 0.571429;

/// Largest `m` accepted by [`mean_triple_sum`]; the sum costs `O(m^3)`.
pub const TRIPLE_SUM_MAX_M: u32 = 1000;

/// Limiting rate `4/7`.
pub fn asymptotic_rate() -> Ratio<u64> {
    Ratio::new(4, 7)
}

fn check_domain(m: u32) -> Result<()> {
    if m < 2 {
        return Err(Error::Domain(format!(
            "mean duration needs m >= 2, got {m}"
        )));
    }
    Ok(())
}

/// `sum_k k * C(n, k) (3/4)^k (1/4)^(n-k)`, summed term by term.
fn ambiguity_mean(n: u32) -> f64 {
    let (ln_p, ln_q) = (0.75f64.ln(), 0.25f64.ln());
    let mut ln_binom = 0.0f64;
    let mut acc = 0.0;
    for k in 0..=n {
        if k > 0 {
            ln_binom += f64::from(n - k + 1).ln() - f64::from(k).ln();
        }
        let ln_pmf = ln_binom + f64::from(k) * ln_p + f64::from(n - k) * ln_q;
        acc += f64::from(k) * ln_pmf.exp();
    }
    acc
}

/// Mean weighings from the nested sum over `l1`, `l2`, `l3`, evaluated term by
/// term. `l2` runs to `m - l1 - 1`, so outer terms with no admissible `l2`
/// contribute `l1` alone.
pub fn mean_triple_sum(m: u32) -> Result<f64> {
    check_domain(m)?;
    if m > TRIPLE_SUM_MAX_M {
        return Err(Error::Domain(format!(
            "nested sum limited to m <= {TRIPLE_SUM_MAX_M}, got {m}"
        )));
    }
    let mut total = 0.0;
    for l1 in 1..m {
        let weight1 = 0.25f64.powi(l1 as i32 - 1) * 0.75;
        let mut inner = f64::from(l1);
        for l2 in 1..(m - l1) {
            let n = m - l1 - l2;
            let l3_mean = ambiguity_mean(n);
            debug_assert!((l3_mean - 0.75 * f64::from(n)).abs() <= 1e-9 * f64::from(n.max(1)));
            inner += 0.5f64.powi(l2 as i32) * (f64::from(2 * l2 + n) + l3_mean);
        }
        total += weight1 * inner;
    }
    Ok(total)
}

/// `N(m) = 7m/4 - 1/2 - (4m + 22)/4^m - (24m - 45)/2^(m+1)`.
pub fn mean_closed_form(m: u32) -> Result<f64> {
    check_domain(m)?;
    let mf = f64::from(m);
    let pow4 = 4f64.powi(m as i32);
    let pow2 = 2f64.powi(m as i32 + 1);
    Ok(1.75 * mf - 0.5 - (4.0 * mf + 22.0) / pow4 - (24.0 * mf - 45.0) / pow2)
}

/// `m / N(m)` using the closed form.
pub fn rate_at(m: u32) -> Result<f64> {
    Ok(f64::from(m) / mean_closed_form(m)?)
}

/// Every available estimate of the mean weighing count at one `m`.
#[derive(Debug, Clone, Serialize)]
pub struct DurationReport {
    pub m: u32,
    pub mean_triple_sum: f64,
    pub mean_closed_form: f64,
    #[serde(serialize_with = "verify::ser_opt_ratio")]
    pub mean_exact: Option<Ratio<u64>>,
    pub mean_monte_carlo: Option<MonteCarloReport>,
    pub rate_at_m: f64,
}

impl DurationReport {
    pub fn formulas_agree(&self) -> bool {
        (self.mean_triple_sum - self.mean_closed_form).abs()
            <= 1e-9 * self.mean_closed_form.abs().max(1.0)
    }

    pub fn exact_mean_f64(&self) -> Option<f64> {
        self.mean_exact
            .map(|r| *r.numer() as f64 / *r.denom() as f64)
    }
}

/// Builds a report; `exact` runs the exhaustive sweep (`m <= 7`) and
/// `monte_carlo` takes `(trials, seed)`.
pub fn duration_report(
    m: u32,
    exact: bool,
    monte_carlo: Option<(u64, u64)>,
) -> Result<DurationReport> {
    let mean_triple_sum = mean_triple_sum(m)?;
    let mean_closed_form = mean_closed_form(m)?;
    let mean_exact = if exact {
        Some(verify::exact_mean(m)?)
    } else {
        None
    };
    let mean_monte_carlo = match monte_carlo {
        Some((trials, seed)) => Some(verify::monte_carlo(m, trials, seed)?),
        None => None,
    };
    Ok(DurationReport {
        m,
        mean_triple_sum,
        mean_closed_form,
        mean_exact,
        mean_monte_carlo,
        rate_at_m: f64::from(m) / mean_closed_form,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    // Independent evaluation of the nested sum in exact rationals.
    fn triple_sum_exact(m: i64) -> Ratio<i128> {
        let r = |n: i128, d: i128| Ratio::new(n, d);
        let pow = |b: Ratio<i128>, e: i64| (0..e).fold(r(1, 1), |acc, _| acc * b);
        let binom = |n: i64, k: i64| -> i128 {
            (0..k).fold(1i128, |acc, j| acc * (n - j) as i128 / (j + 1) as i128)
        };
        let mut total = r(0, 1);
        for l1 in 1..m {
            let mut inner = r(l1 as i128, 1);
            for l2 in 1..(m - l1) {
                let n = m - l1 - l2;
                let mut l3sum = r(0, 1);
                for l3 in 0..=n {
                    l3sum +=
                        r(l3 as i128 * binom(n, l3), 1) * pow(r(3, 4), l3) * pow(r(1, 4), n - l3);
                }
                inner += pow(r(1, 2), l2) * (r((2 * l2 + n) as i128, 1) + l3sum);
            }
            total += pow(r(1, 4), l1 - 1) * r(3, 4) * inner;
        }
        total
    }

    #[test]
    fn anchors() {
        assert_eq!(mean_triple_sum(2).unwrap(), 0.75);
        assert_eq!(mean_closed_form(2).unwrap(), 0.75);
        assert!((mean_triple_sum(3).unwrap() - 2.53125).abs() < 1e-12);
        assert_eq!(mean_closed_form(3).unwrap(), 2.53125);
        assert_eq!(triple_sum_exact(2), Ratio::new(3, 4));
        assert_eq!(triple_sum_exact(3), Ratio::new(81, 32));
    }

    #[test]
    fn float_sum_matches_rational_sum() {
        for m in 2..=16 {
            let exact = triple_sum_exact(m);
            let exact = *exact.numer() as f64 / *exact.denom() as f64;
            let got = mean_triple_sum(m as u32).unwrap();
            assert!(
                (got - exact).abs() <= 1e-12 * exact.max(1.0),
                "m={m}: {got} vs {exact}"
            );
        }
    }

    #[test]
    fn closed_form_at_ten() {
        // 17 - 62/4^10 - 195/2^11, recomputed independently
        let expected = 17.0 - 62.0 / 1_048_576.0 - 195.0 / 2048.0;
        assert!((mean_closed_form(10).unwrap() - expected).abs() < 1e-12);
        assert!((expected - 16.904_726_2).abs() < 1e-6);
        assert!((mean_triple_sum(10).unwrap() - expected).abs() < 1e-9 * expected);
    }

    #[test]
    fn ambiguity_mean_is_three_quarters_n() {
        for n in 0..200 {
            assert!((ambiguity_mean(n) - 0.75 * f64::from(n)).abs() < 1e-9 * f64::from(n.max(1)));
        }
    }

    #[test]
    fn domain_errors() {
        assert!(matches!(mean_triple_sum(1), Err(Error::Domain(_))));
        assert!(matches!(mean_closed_form(0), Err(Error::Domain(_))));
        assert!(matches!(
            mean_triple_sum(TRIPLE_SUM_MAX_M + 1),
            Err(Error::Domain(_))
        ));
    }

    #[test]
    fn rate_constants() {
        assert_eq!(asymptotic_rate(), Ratio::new(4, 7));
        assert!((4.0 / 7.0 - ASYMPTOTIC_RATE_DISPLAY).abs() < 5e-7);
        const { assert!(STATIC_ALGORITHM_RATE < ASYMPTOTIC_RATE_DISPLAY) };
        const { assert!(ASYMPTOTIC_RATE_DISPLAY < STATIC_RATE_BOUND) };
        assert!((rate_at(1000).unwrap() - 4.0 / 7.0).abs() < 1e-3);
    }

    #[test]
    fn closed_form_below_worst_case() {
        for m in 2..=40 {
            assert!(mean_closed_form(m).unwrap() < f64::from(2 * m - 1));
        }
    }

    #[test]
    fn report_without_sweeps() {
        let r = duration_report(12, false, None).unwrap();
        assert!(r.formulas_agree());
        assert!(r.mean_exact.is_none() && r.mean_monte_carlo.is_none());
        assert!(r.rate_at_m > 0.0 && r.rate_at_m <= 1.0);
    }

    // N(m) < m for m <= 3, so the rate only drops into (0, 1] from m = 4.
    #[test]
    fn rate_range() {
        assert!(rate_at(2).unwrap() > 1.0 && rate_at(3).unwrap() > 1.0);
        for m in 4..=200 {
            let r = rate_at(m).unwrap();
            assert!(r > 0.0 && r <= 1.0, "m={m}: {r}");
        }
    }
}
