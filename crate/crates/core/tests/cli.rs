use std::path::PathBuf;
use std::process::Command;

use coinweigh::cli::{dispatch, EXIT_OK, EXIT_USAGE};

fn run(args: &[&str]) -> (i32, String, String) {
    let mut out = Vec::new();
    let mut err = Vec::new();
    let argv = std::iter::once("coinweigh").chain(args.iter().copied());
    let code = dispatch(argv, &mut out, &mut err);
    (
        code,
        String::from_utf8(out).unwrap(),
        String::from_utf8(err).unwrap(),
    )
}

fn golden_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("tests/golden")
        .join(name)
}

/// Compares against `tests/golden/<name>`; `UPDATE_GOLDEN=1` rewrites it.
fn assert_golden(name: &str, actual: &str) {
    let path = golden_path(name);
    if std::env::var_os("UPDATE_GOLDEN").is_some() {
        std::fs::write(&path, actual).unwrap();
        return;
    }
    let expected = std::fs::read_to_string(&path)
        .unwrap_or_else(|e| panic!("missing golden {}: {e}", path.display()));
    assert_eq!(actual, expected, "output differs from golden {name}");
}

#[test]
fn golden_outputs() {
    let cases: &[(&str, &[&str])] = &[
        (
            "run_m3_0_4_7.json",
            &["run", "--m", "3", "--forged", "0,4,7"],
        ),
        (
            "run_m6_seed9.csv",
            &["run", "--m", "6", "--seed", "9", "--format", "csv"],
        ),
        ("verify_m5.csv", &["verify", "--m-max", "5"]),
        (
            "verify_m4_histogram.csv",
            &["verify", "--m-max", "4", "--histogram"],
        ),
        (
            "analyze_2_6.csv",
            &["analyze", "--m-min", "2", "--m-max", "6", "--exact"],
        ),
        (
            "montecarlo_m10.csv",
            &[
                "montecarlo",
                "--m",
                "10",
                "--trials",
                "2000",
                "--seed",
                "42",
                "--format",
                "csv",
            ],
        ),
        (
            "channel_simulate_l1.json",
            &[
                "channel-simulate",
                "--l",
                "1",
                "--m1",
                "1",
                "--m2",
                "0",
                "--m3",
                "0",
            ],
        ),
        (
            "channel_simulate_l4.csv",
            &[
                "channel-simulate",
                "--l",
                "4",
                "--m1",
                "9",
                "--m2",
                "5",
                "--m3",
                "12",
                "--format",
                "csv",
            ],
        ),
        ("channel_verify_l3.csv", &["channel-verify", "--l-max", "3"]),
    ];
    for (name, args) in cases {
        let (code, out, err) = run(args);
        assert_eq!(code, EXIT_OK, "{args:?}: {err}");
        assert_golden(name, &out);
    }
}

#[test]
fn repeated_runs_are_byte_identical() {
    for args in [
        &["montecarlo", "--m", "12", "--trials", "500", "--seed", "3"][..],
        &["run", "--m", "20", "--seed", "77"],
        &[
            "analyze",
            "--m-min",
            "2",
            "--m-max",
            "5",
            "--mc-trials",
            "300",
            "--seed",
            "5",
            "--format",
            "json",
        ],
    ] {
        assert_eq!(run(args), run(args));
    }
}

#[test]
fn verify_rows_report_no_failures() {
    let (code, out, _) = run(&["verify", "--m-max", "5"]);
    assert_eq!(code, EXIT_OK);
    let rows: Vec<Vec<&str>> = out
        .lines()
        .skip(1)
        .map(|l| l.split(',').collect())
        .collect();
    assert_eq!(rows.len(), 4);
    for (row, m) in rows.iter().zip(2..) {
        assert_eq!(row[0], m.to_string());
        assert_eq!(row[2], "0");
    }
}

#[test]
fn analyze_columns_agree() {
    let (code, out, _) = run(&["analyze", "--m-min", "2", "--m-max", "6"]);
    assert_eq!(code, EXIT_OK);
    let mut lines = out.lines();
    assert_eq!(
        lines.next(),
        Some("m,triple_sum,closed_form,exact_mean,mc_mean,rate")
    );
    for line in lines {
        let cols: Vec<&str> = line.split(',').collect();
        let (a, b): (f64, f64) = (cols[1].parse().unwrap(), cols[2].parse().unwrap());
        assert!((a - b).abs() <= 1e-9 * b.max(1.0), "{line}");
        assert!(cols[3].is_empty() && cols[4].is_empty());
    }
}

#[test]
fn channel_simulate_example() {
    let (code, out, _) = run(&[
        "channel-simulate",
        "--l",
        "1",
        "--m1",
        "1",
        "--m2",
        "0",
        "--m3",
        "0",
    ]);
    assert_eq!(code, EXIT_OK);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    let outputs: Vec<u64> = v["slots"]
        .as_array()
        .unwrap()
        .iter()
        .map(|s| s["output"].as_u64().unwrap())
        .collect();
    assert_eq!(outputs, vec![1, 2]);
    assert_eq!(v["decoded"], serde_json::json!([1, 0, 0]));
    assert_eq!(v["total"], 2);

    let (_, one_based, _) = run(&[
        "channel-simulate",
        "--l",
        "1",
        "--m1",
        "2",
        "--m2",
        "1",
        "--m3",
        "1",
        "--one-based",
    ]);
    assert_eq!(one_based, out);
}

#[test]
fn trace_json_schema() {
    let (_, out, _) = run(&["run", "--m", "3", "--forged", "7,0,4"]);
    let v: serde_json::Value = serde_json::from_str(&out).unwrap();
    // top-level keys, in emitted order
    let keys: Vec<&str> = out
        .lines()
        .filter_map(|l| l.strip_prefix("  \""))
        .filter_map(|l| l.split('"').next())
        .collect();
    assert_eq!(
        keys,
        [
            "version",
            "m",
            "forged",
            "l1",
            "l2",
            "l3",
            "total",
            "weighings",
            "recovered"
        ]
    );
    assert_eq!(v["total"], 5);
    assert_eq!(v["recovered"], serde_json::json!([0, 4, 7]));
    assert_eq!(v["weighings"].as_array().unwrap().len(), 5);
}

#[test]
fn usage_errors_exit_two() {
    for args in [
        &["montecarlo", "--m", "10", "--trials", "100"][..],
        &["run", "--m", "4", "--forged", "1,2,3", "--seed", "1"],
        &["run", "--m", "4"],
        &["run", "--m", "1", "--seed", "1"],
        &["run", "--m", "3", "--forged", "1,1,2"],
        &["run", "--m", "3", "--forged", "1,2,9"],
        &["run", "--m", "3", "--forged", "1,2"],
        &["verify", "--m-max", "8"],
        &["analyze", "--m-min", "2", "--m-max", "9", "--exact"],
        &[
            "analyze",
            "--m-min",
            "2",
            "--m-max",
            "5",
            "--mc-trials",
            "10",
        ],
        &[
            "channel-simulate",
            "--l",
            "2",
            "--m1",
            "4",
            "--m2",
            "0",
            "--m3",
            "0",
        ],
        &["channel-verify", "--l-max", "7"],
        &["bogus"],
        &[],
    ] {
        let (code, _, err) = run(args);
        assert_eq!(code, EXIT_USAGE, "{args:?}");
        assert!(!err.is_empty(), "{args:?} printed no diagnostic");
    }
}

#[test]
fn out_flag_writes_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("mc.json");
    let (code, out, _) = run(&[
        "montecarlo",
        "--m",
        "8",
        "--trials",
        "100",
        "--seed",
        "1",
        "--out",
        path.to_str().unwrap(),
    ]);
    assert_eq!(code, EXIT_OK);
    assert!(out.is_empty());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["trials"], 100);
    assert_eq!(v["seed"], 1);
}

#[test]
fn binary_exit_codes() {
    let bin = env!("CARGO_BIN_EXE_coinweigh");
    let ok = Command::new(bin)
        .args(["channel-verify", "--l-max", "2"])
        .output()
        .unwrap();
    assert_eq!(ok.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&ok.stderr)
        .contains("l=2 sessions=64 failures=0 law_violations=0 mean=7/2 PASS"));
    let bad = Command::new(bin).args(["verify"]).output().unwrap();
    assert_eq!(bad.status.code(), Some(2));
    let help = Command::new(bin).arg("--help").output().unwrap();
    assert_eq!(help.status.code(), Some(0));
}
