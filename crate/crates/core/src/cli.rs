//! Command-line front end. Exit codes: 0 success, 1 verification failure,
//! 2 usage error. Randomized subcommands take an explicit `--seed`.

use std::ffi::OsString;
use std::fmt::Write as _;
use std::io::Write;
use std::path::PathBuf;

use clap::{ArgGroup, Parser, Subcommand, ValueEnum};
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::Serialize;

use crate::analysis::{self, TRIPLE_SUM_MAX_M};
use crate::channel::{self, MessageTriple, EXHAUSTIVE_MAX_L, MAX_L};
use crate::error::Error;
use crate::model::{ProblemInstance, ScaleOracle, MAX_M, MIN_M};
use crate::search::search;
use crate::verify::{self, sample_placement, EXHAUSTIVE_MAX_M};

pub const EXIT_OK: i32 = 0;
pub const EXIT_FAILURE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum Format {
    Json,
    Csv,
}

#[derive(Debug, Parser)]
#[command(
    name = "coinweigh",
    version,
    about = "Three-forged-coin weighing search and adder-channel feedback code"
)]
pub struct Cli {
    /// Output format (defaults depend on the subcommand)
    #[arg(long, global = true, value_enum)]
    pub format: Option<Format>,
    /// Write output to PATH instead of stdout
    #[arg(long, global = true, value_name = "PATH")]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Search one instance and print its trace
    #[command(group(ArgGroup::new("placement").required(true).args(["forged", "seed"])))]
    Run {
        /// Coin count is 2^M (2..=62)
        #[arg(long)]
        m: u32,
        /// Forged coins as A,B,C
        #[arg(long, value_delimiter = ',')]
        forged: Option<Vec<u64>>,
        /// Sample the forged coins from this seed
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Exhaustive sweeps over every placement for m = m-min..=m-max
    Verify {
        /// Largest m to sweep (at most 7)
        #[arg(long)]
        m_max: u32,
        #[arg(long, default_value_t = 2)]
        m_min: u32,
        /// CSV of (m,total,count) instead of the summary
        #[arg(long)]
        histogram: bool,
    },
    /// Seeded Monte Carlo estimate of the mean weighing count
    Montecarlo {
        /// Coin count is 2^M (2..=62)
        #[arg(long)]
        m: u32,
        /// Number of sampled placements
        #[arg(long)]
        trials: u64,
        /// Generator seed
        #[arg(long)]
        seed: u64,
    },
    /// Mean-duration table for m = m-min..=m-max
    Analyze {
        /// Smallest m in the table
        #[arg(long)]
        m_min: u32,
        /// Largest m in the table (at most 1000)
        #[arg(long)]
        m_max: u32,
        /// Add the exhaustive mean (needs m-max <= 7)
        #[arg(long)]
        exact: bool,
        /// Add a Monte Carlo mean with this many trials
        #[arg(long, requires = "seed")]
        mc_trials: Option<u64>,
        /// Seed for --mc-trials
        #[arg(long)]
        seed: Option<u64>,
    },
    /// Simulate one feedback-code session
    ChannelSimulate {
        /// Message length in bits (1..=63)
        #[arg(long)]
        l: u32,
        /// User 1's message
        #[arg(long)]
        m1: u64,
        /// User 2's message
        #[arg(long)]
        m2: u64,
        /// User 3's message
        #[arg(long)]
        m3: u64,
        /// Messages are numbered 1..=2^l instead of 0..2^l
        #[arg(long)]
        one_based: bool,
    },
    /// Exhaustive zero-error check for l = 1..=l-max
    ChannelVerify {
        /// Largest message length to sweep (at most 6)
        #[arg(long)]
        l_max: u32,
    },
}

struct Outcome {
    body: String,
    diagnostics: String,
    passed: bool,
}

impl Outcome {
    fn ok(body: String) -> Self {
        Self {
            body,
            diagnostics: String::new(),
            passed: true,
        }
    }
}

fn usage(msg: impl Into<String>) -> Error {
    Error::Domain(msg.into())
}

fn check_range(name: &str, v: u32, lo: u32, hi: u32) -> Result<(), Error> {
    if !(lo..=hi).contains(&v) {
        return Err(usage(format!("--{name} must lie in {lo}..={hi}, got {v}")));
    }
    Ok(())
}

fn to_json<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn execute(cmd: &Command, format: Option<Format>) -> Result<Outcome, Error> {
    match cmd {
        Command::Run { m, forged, seed } => {
            check_range("m", *m, MIN_M, MAX_M)?;
            let placement = match (forged, seed) {
                (Some(f), None) => <[u64; 3]>::try_from(f.as_slice()).map_err(|_| {
                    usage(format!("--forged needs exactly 3 coins, got {}", f.len()))
                })?,
                (None, Some(s)) => sample_placement(&mut ChaCha8Rng::seed_from_u64(*s), 1u64 << m),
                _ => return Err(usage("give exactly one of --forged or --seed")),
            };
            let mut oracle = ScaleOracle::new(ProblemInstance::new(*m, placement)?);
            let trace = search(&mut oracle, *m)?;
            let passed = Some(trace.recovered) == trace.forged && trace.budget_holds();
            let body = match format.unwrap_or(Format::Json) {
                Format::Json => format!("{}\n", trace.to_json()),
                Format::Csv => {
                    let join = |a: [u64; 3]| format!("{};{};{}", a[0], a[1], a[2]);
                    format!(
                        "m,forged,l1,l2,n,l3,total,recovered\n{},{},{},{},{},{},{},{}\n",
                        trace.m,
                        join(oracle.instance().forged()),
                        trace.l1,
                        trace.l2,
                        trace.n(),
                        trace.l3,
                        trace.total,
                        join(trace.recovered)
                    )
                }
            };
            Ok(Outcome {
                body,
                diagnostics: String::new(),
                passed,
            })
        }
        Command::Verify {
            m_max,
            m_min,
            histogram,
        } => {
            check_range("m-max", *m_max, MIN_M, EXHAUSTIVE_MAX_M)?;
            check_range("m-min", *m_min, MIN_M, *m_max)?;
            let reports = (*m_min..=*m_max)
                .map(verify::exhaustive_verify)
                .collect::<Result<Vec<_>, _>>()?;
            let passed = reports.iter().all(|r| r.passed());
            let mut diagnostics = String::new();
            for r in &reports {
                for f in &r.failures {
                    let _ = writeln!(diagnostics, "m={} forged={:?}: {}", r.m, f.forged, f.reason);
                }
            }
            let body = match format.unwrap_or(Format::Csv) {
                Format::Json => to_json(&reports),
                Format::Csv if *histogram => {
                    let mut s = String::from("m,total,count\n");
                    for r in &reports {
                        for (total, count) in &r.histogram {
                            let _ = writeln!(s, "{},{total},{count}", r.m);
                        }
                    }
                    s
                }
                Format::Csv => {
                    let mut s = String::from(
                        "m,placements,failures,exact_mean,exact_mean_float,closed_form,max_total\n",
                    );
                    for r in &reports {
                        let _ = writeln!(
                            s,
                            "{},{},{},{}/{},{},{},{}",
                            r.m,
                            r.placements_checked,
                            r.failures.len(),
                            r.exact_mean.numer(),
                            r.exact_mean.denom(),
                            r.exact_mean_f64(),
                            analysis::mean_closed_form(r.m)?,
                            r.max_total
                        );
                    }
                    s
                }
            };
            Ok(Outcome {
                body,
                diagnostics,
                passed,
            })
        }
        Command::Montecarlo { m, trials, seed } => {
            check_range("m", *m, MIN_M, MAX_M)?;
            if *trials == 0 {
                return Err(usage("--trials must be at least 1"));
            }
            let r = verify::monte_carlo(*m, *trials, *seed)?;
            let body = match format.unwrap_or(Format::Json) {
                Format::Json => to_json(&r),
                Format::Csv => format!(
                    "m,trials,seed,mean,stddev,stderr\n{},{},{},{},{},{}\n",
                    r.m, r.trials, r.seed, r.mean, r.stddev, r.stderr
                ),
            };
            Ok(Outcome {
                body,
                diagnostics: String::new(),
                passed: r.failures == 0,
            })
        }
        Command::Analyze {
            m_min,
            m_max,
            exact,
            mc_trials,
            seed,
        } => {
            check_range("m-max", *m_max, MIN_M, TRIPLE_SUM_MAX_M)?;
            check_range("m-min", *m_min, MIN_M, *m_max)?;
            if *exact && *m_max > EXHAUSTIVE_MAX_M {
                return Err(usage(format!(
                    "--exact needs --m-max <= {EXHAUSTIVE_MAX_M}"
                )));
            }
            if *mc_trials == Some(0) {
                return Err(usage("--mc-trials must be at least 1"));
            }
            if *m_max > MAX_M && mc_trials.is_some() {
                return Err(usage(format!("Monte Carlo needs --m-max <= {MAX_M}")));
            }
            let mc = mc_trials.zip(*seed);
            let reports = (*m_min..=*m_max)
                .map(|m| analysis::duration_report(m, *exact, mc))
                .collect::<Result<Vec<_>, _>>()?;
            let body = match format.unwrap_or(Format::Csv) {
                Format::Json => to_json(&reports),
                Format::Csv => {
                    let mut s = String::from("m,triple_sum,closed_form,exact_mean,mc_mean,rate\n");
                    for r in &reports {
                        let exact = r
                            .exact_mean_f64()
                            .map(|v| v.to_string())
                            .unwrap_or_default();
                        let mc = r
                            .mean_monte_carlo
                            .as_ref()
                            .map(|mc| mc.mean.to_string())
                            .unwrap_or_default();
                        let _ = writeln!(
                            s,
                            "{},{},{},{},{},{}",
                            r.m, r.mean_triple_sum, r.mean_closed_form, exact, mc, r.rate_at_m
                        );
                    }
                    s
                }
            };
            Ok(Outcome::ok(body))
        }
        Command::ChannelSimulate {
            l,
            m1,
            m2,
            m3,
            one_based,
        } => {
            check_range("l", *l, 1, MAX_L)?;
            let msgs = if *one_based {
                MessageTriple::from_one_based(*l, [*m1, *m2, *m3])?
            } else {
                MessageTriple::new(*l, [*m1, *m2, *m3])?
            };
            let s = channel::session(&msgs)?;
            let body = match format.unwrap_or(Format::Json) {
                Format::Json => format!("{}\n", s.to_json()),
                Format::Csv => {
                    let mut out = String::from("stage,k,x1,x2,x3,output\n");
                    for slot in &s.slots {
                        let [a, b, c] = slot.inputs;
                        let _ =
                            writeln!(out, "{},{},{a},{b},{c},{}", slot.stage, slot.k, slot.output);
                    }
                    out
                }
            };
            let passed = s.is_correct() && s.transcript().channel_law_holds();
            Ok(Outcome {
                body,
                diagnostics: String::new(),
                passed,
            })
        }
        Command::ChannelVerify { l_max } => {
            check_range("l-max", *l_max, 1, EXHAUSTIVE_MAX_L)?;
            let reports = (1..=*l_max)
                .map(channel::exhaustive_channel_verify)
                .collect::<Result<Vec<_>, _>>()?;
            let mut diagnostics = String::new();
            for r in &reports {
                let _ = writeln!(
                    diagnostics,
                    "l={} sessions={} failures={} law_violations={} mean={}/{} {}",
                    r.l,
                    r.sessions,
                    r.failures.len(),
                    r.law_violations,
                    r.mean.numer(),
                    r.mean.denom(),
                    if r.passed() { "PASS" } else { "FAIL" }
                );
            }
            let body = match format.unwrap_or(Format::Csv) {
                Format::Json => to_json(&reports),
                Format::Csv => {
                    let mut s = String::from("l,total,count\n");
                    for r in &reports {
                        for (total, count) in &r.histogram {
                            let _ = writeln!(s, "{},{total},{count}", r.l);
                        }
                    }
                    s
                }
            };
            Ok(Outcome {
                body,
                diagnostics,
                passed: reports.iter().all(|r| r.passed()),
            })
        }
    }
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::Domain(_) | Error::Instance(_) | Error::Size(_) => EXIT_USAGE,
        _ => EXIT_FAILURE,
    }
}

/// Parses `args` (including the program name), runs the command and writes
/// its report to `stdout` or the `--out` file. Returns the exit code.
pub fn dispatch<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(cli) => cli,
        Err(e) => {
            let rendered = e.render().to_string();
            return if e.use_stderr() {
                let _ = stderr.write_all(rendered.as_bytes());
                EXIT_USAGE
            } else {
                let _ = stdout.write_all(rendered.as_bytes());
                EXIT_OK
            };
        }
    };
    let outcome = match execute(&cli.command, cli.format) {
        Ok(o) => o,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            return exit_code_for(&e);
        }
    };
    let written = match &cli.out {
        Some(path) => std::fs::write(path, &outcome.body),
        None => stdout.write_all(outcome.body.as_bytes()),
    };
    if let Err(e) = written {
        let _ = writeln!(stderr, "error: cannot write output: {e}");
        return EXIT_FAILURE;
    }
    let _ = stderr.write_all(outcome.diagnostics.as_bytes());
    if outcome.passed {
        EXIT_OK
    } else {
        EXIT_FAILURE
    }
}

pub fn run_from_env() -> i32 {
    let stdout = std::io::stdout();
    let stderr = std::io::stderr();
    dispatch(std::env::args_os(), &mut stdout.lock(), &mut stderr.lock())
}
