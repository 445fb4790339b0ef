//! End-to-end tests of the installed binary: spawn it, read back the CSV and
//! key-value artifacts, and check exit codes against the documented contract
//! (0 success, 1 usage or runtime error, 2 failed property check).

use std::collections::HashMap;
use std::path::Path;
use std::process::{Command, Output};
use tempfile::TempDir;

const BIN: &str = env!("CARGO_BIN_EXE_randmarket");

fn run(args: &[&str]) -> Output {
    Command::new(BIN)
        .args(args)
        .output()
        .expect("binary spawns")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn kv(path: &Path) -> HashMap<String, String> {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
        .lines()
        .filter(|l| !l.trim().is_empty() && !l.trim_start().starts_with('#'))
        .map(|l| {
            let (k, v) = l.split_once('=').expect("key=value line");
            (k.trim().to_string(), v.trim().to_string())
        })
        .collect()
}

fn kvf(map: &HashMap<String, String>, key: &str) -> f64 {
    map[key]
        .parse()
        .unwrap_or_else(|_| panic!("{key}={} not a number", map[key]))
}

fn csv_column(path: &Path, idx: usize) -> Vec<f64> {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
        .lines()
        .skip(1)
        .map(|l| {
            l.split(',')
                .nth(idx)
                .expect("column")
                .parse()
                .expect("number")
        })
        .collect()
}

#[test]
fn iterate_reproduces_the_damped_gamma_distances() {
    let dir = TempDir::new().unwrap();
    let out_path = dir.path().to_str().unwrap();
    let out = run(&[
        "iterate",
        "--family",
        "gamma1",
        "--op",
        "Tlambda:0.5",
        "--steps",
        "4",
        "--out",
        out_path,
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let distances = csv_column(&dir.path().join("trace.csv"), 4);
    assert_eq!(distances.len(), 5, "rows 0..=4");
    let reference = [0.368226, 0.273011, 0.206554, 0.158701];
    for (i, (got, want)) in distances.iter().zip(reference).enumerate() {
        assert!(
            (got - want).abs() <= 2e-3,
            "step {i}: distance {got} vs reference {want}"
        );
    }

    let report = kv(&dir.path().join("report.kv"));
    assert_eq!(report["entropy_gated"], "true");
    assert_eq!(report["entropy_violations"], "0");
    assert!((kvf(&report, "target_rate") - 0.5).abs() < 1e-4);

    // Emitted densities round-trip through the CSV reader, and the recomputed
    // distance agrees with the report.
    let final_pdf = randmarket_core::io::read_pdf_csv(&dir.path().join("final.csv")).unwrap();
    let target = randmarket_core::io::read_pdf_csv(&dir.path().join("target.csv")).unwrap();
    let d = final_pdf.l1_distance(&target).unwrap();
    assert!((d - kvf(&report, "final_distance")).abs() < 1e-9);
}

#[test]
fn iterate_kernel_reports_departure_without_gating() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "iterate",
        "--family",
        "exp:1",
        "--op",
        "TK:0.5",
        "--steps",
        "1",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let report = kv(&dir.path().join("report.kv"));
    // The constrained kernel pushes the exponential off itself.
    assert!(kvf(&report, "final_distance") >= 0.01);
    assert_eq!(report["entropy_gated"], "false");
    assert!(stdout(&out).contains("not gated"));
}

#[test]
fn iterate_snaps_the_default_grid_to_the_cap() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "iterate",
        "--family",
        "truncexp:1,5",
        "--op",
        "Tcap:5",
        "--steps",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let report = kv(&dir.path().join("report.kv"));
    // The input is the confined equilibrium, so the orbit stays put up to the
    // h^2 shift between the discrete mean and the solved target rate.
    assert!(kvf(&report, "final_distance") < 1e-3);
    assert_eq!(report["entropy_violations"], "0");
}

#[test]
fn simulate_matches_the_exponential_and_reruns_bitwise() {
    let dir_a = TempDir::new().unwrap();
    let dir_b = TempDir::new().unwrap();
    let dir_c = TempDir::new().unwrap();
    let base = [
        "simulate", "--agents", "50000", "--trades", "5000000", "--seed", "7",
    ];

    let mut args_a: Vec<&str> = base.to_vec();
    args_a.extend(["--out", dir_a.path().to_str().unwrap()]);
    let out_a = run(&args_a);
    assert_eq!(code(&out_a), 0, "stderr: {}", stderr(&out_a));

    let meta = kv(&dir_a.path().join("meta.kv"));
    assert!(
        kvf(&meta, "l1_to_target") <= 0.06,
        "l1 {}",
        meta["l1_to_target"]
    );
    assert!(kvf(&meta, "total_drift_rel") <= 1e-12);
    assert!((kvf(&meta, "mean") - 1.0).abs() < 1e-12);

    // Same seed, fresh directory: byte-identical artifacts.
    let mut args_b: Vec<&str> = base.to_vec();
    args_b.extend(["--out", dir_b.path().to_str().unwrap()]);
    run(&args_b);
    for name in ["snapshot.csv", "histogram.csv", "meta.kv"] {
        let a = std::fs::read(dir_a.path().join(name)).unwrap();
        let b = std::fs::read(dir_b.path().join(name)).unwrap();
        assert_eq!(a, b, "{name} differs between identical runs");
    }

    // A different seed produces a different ensemble.
    let out_c = run(&[
        "simulate",
        "--agents",
        "50000",
        "--trades",
        "5000000",
        "--seed",
        "8",
        "--out",
        dir_c.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out_c), 0);
    let a = std::fs::read(dir_a.path().join("snapshot.csv")).unwrap();
    let c = std::fs::read(dir_c.path().join("snapshot.csv")).unwrap();
    assert_ne!(a, c, "different seeds must diverge");
}

#[test]
fn simulate_with_zero_effectiveness_freezes_the_ensemble() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "simulate",
        "--agents",
        "200",
        "--trades",
        "5000",
        "--seed",
        "3",
        "--lambda",
        "0",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let money = csv_column(&dir.path().join("snapshot.csv"), 1);
    assert_eq!(money.len(), 200);
    assert!(
        money.iter().all(|&m| m == 1.0),
        "no trade may complete at lambda 0"
    );
}

#[test]
fn simulate_under_a_cap_stays_under_it_and_matches_truncexp() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "simulate",
        "--agents",
        "20000",
        "--trades",
        "2000000",
        "--seed",
        "11",
        "--cap",
        "5",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let money = csv_column(&dir.path().join("snapshot.csv"), 1);
    assert!(money.iter().all(|&m| m <= 5.0), "cap violated");
    let meta = kv(&dir.path().join("meta.kv"));
    // Unit mean under cap 5 solves to this rate.
    assert!((kvf(&meta, "target_rate") - 0.96020151).abs() <= 1e-5);
    assert!(meta["target_family"].starts_with("truncexp:"));
    assert!(kvf(&meta, "l1_to_target") <= 0.1);
}

#[test]
fn middle_class_scan_writes_the_table_and_verdict() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "middle-class",
        "--scan",
        "m=1",
        "--aL",
        "2.5,4,8,16,32",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));

    let cm = csv_column(&dir.path().join("scan.csv"), 1);
    let pinned = [0.50835341, 0.48128511, 0.47143962, 0.47119549, 0.47119538];
    assert_eq!(cm.len(), 5);
    for (got, want) in cm.iter().zip(pinned) {
        assert!((got - want).abs() <= 1e-6, "CM {got} vs {want}");
    }

    let verdict = kv(&dir.path().join("verdict.kv"));
    for key in [
        "cm_decreasing",
        "xcm_decreasing",
        "per_capita_decreasing",
        "proportion_decreasing",
    ] {
        assert_eq!(verdict[key], "true", "{key}");
    }
    assert!(stdout(&out).contains("strictly decreasing: CM=true"));
}

#[test]
fn middle_class_single_point_report() {
    let dir = TempDir::new().unwrap();
    let out = run(&[
        "middle-class",
        "--a",
        "1",
        "--cap",
        "2",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let report = kv(&dir.path().join("report.kv"));
    assert!((kvf(&report, "mean") - 0.686965).abs() <= 1e-6);
    assert!(kvf(&report, "quadrature_gap") <= 1e-8);
    assert!(kvf(&report, "per_capita_consistency") <= 1e-12);
}

#[test]
fn config_file_fills_gaps_and_flags_override() {
    let dir = TempDir::new().unwrap();
    let cfg_path = dir.path().join("run.cfg");
    std::fs::write(
        &cfg_path,
        "# reproducible pilot run\nseed=3\nagents=400\ntrades=3000\n",
    )
    .unwrap();
    let out = run(&[
        "simulate",
        "--config",
        cfg_path.to_str().unwrap(),
        "--trades",
        "6000",
        "--out",
        dir.path().join("art").to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "stderr: {}", stderr(&out));
    let meta = kv(&dir.path().join("art/meta.kv"));
    assert_eq!(meta["seed"], "3", "config fills the absent flag");
    assert_eq!(meta["agents"], "400");
    assert_eq!(meta["trades"], "6000", "explicit flag beats the config");
}

#[test]
fn usage_errors_exit_one() {
    let cases: &[&[&str]] = &[
        &["iterate", "--family", "cauchy", "--op", "T"],
        &["iterate", "--family", "exp:1", "--op", "Tfoo"],
        &["iterate", "--family", "exp:1"],
        &["iterate", "--family", "truncexp:1,70", "--op", "T"],
        &["simulate"],
        &[
            "simulate", "--seed", "1", "--lambda", "2", "--agents", "10", "--trades", "10",
        ],
        &["middle-class"],
        &["middle-class", "--scan", "m=1"],
        &["middle-class", "--scan", "1", "--aL", "2,4"],
        &["iterate", "--bogus"],
    ];
    for args in cases {
        let out = run(args);
        assert_eq!(
            code(&out),
            1,
            "{args:?} should exit 1; stderr: {}",
            stderr(&out)
        );
        assert!(!stderr(&out).is_empty(), "{args:?} should explain itself");
    }
}

#[test]
fn help_and_version_exit_zero() {
    for args in [
        &["--help"][..],
        &["--version"][..],
        &["iterate", "--help"][..],
    ] {
        let out = run(args);
        assert_eq!(code(&out), 0, "{args:?}");
    }
    assert!(stdout(&run(&["--help"])).contains("iterate"));
}
