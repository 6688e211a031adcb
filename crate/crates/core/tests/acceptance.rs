//! One test per acceptance criterion, driven through the harness exactly as the CLI does.
//! Each prints a single PASS/FAIL line, written straight to stderr so it shows without
//! `--nocapture`.

use std::fs;
use std::io::Write;

use cronlab_core::harness::{self, AcceptanceRecord, ExperimentConfig, SubCheck};

const TAU: f64 = std::f64::consts::TAU;

fn config(json: serde_json::Value) -> ExperimentConfig {
    serde_json::from_value(json).expect("valid config literal")
}

fn records(cfg: &ExperimentConfig) -> Vec<AcceptanceRecord> {
    harness::execute(cfg, None).expect("suite runs").1
}

/// Merges per-run records for one id into a single verdict, prints it and asserts.
fn verdict(id: &str, runs: Vec<(String, Vec<AcceptanceRecord>)>) {
    let mut checks: Vec<SubCheck> = Vec::new();
    let mut runtime = 0.0;
    for (label, recs) in runs {
        for r in recs.into_iter().filter(|r| r.id == id) {
            runtime += r.runtime_s.unwrap_or(0.0);
            checks.extend(r.details.into_iter().map(|c| SubCheck { name: format!("{label}: {}", c.name), ..c }));
        }
    }
    let rec = AcceptanceRecord::from_checks(id, checks);
    let mut err = std::io::stderr().lock();
    let _ = writeln!(
        err,
        "{} {} measured {:.4e} threshold {:.4e} ({} checks, {:.1}s)",
        id,
        if rec.passed { "PASS" } else { "FAIL" },
        rec.measured,
        rec.threshold,
        rec.details.len(),
        runtime
    );
    for c in rec.details.iter().filter(|c| !c.passed) {
        let _ = writeln!(err, "    failed {} measured {:.6e} threshold {:.6e}", c.name, c.measured, c.threshold);
    }
    assert!(rec.passed, "{id} failed");
}

#[test]
fn ac1_exact_identities() {
    let mut runs = Vec::new();
    for n in [2usize, 3] {
        for size in [32usize, 64] {
            let cfg = config(serde_json::json!({
                "experiment": "identities", "n": n, "N": size, "L": 8.0, "eps": [0.01],
                "seed": 7, "time_window": [0.0, 2.0], "samples": 5
            }));
            runs.push((format!("n={n} N={size}"), records(&cfg)));
        }
    }
    verdict("AC1", runs);
}

#[test]
fn ac2_coulomb_gain() {
    let cfg = config(serde_json::json!({
        "experiment": "coulomb-gain", "n": 2, "N": 64, "L": 8.0, "eps": [0.01],
        "seed": 5, "time_window": [0.0, 1.0]
    }));
    verdict("AC2", vec![("n=2".into(), records(&cfg))]);
}

fn lp_records() -> Vec<AcceptanceRecord> {
    let cfg = config(serde_json::json!({
        "experiment": "lp-suite", "n": 2, "N": 512, "L": 32.0, "eps": [0.01],
        "seed": 3, "time_window": [0.0, 1.0]
    }));
    records(&cfg)
}

#[test]
fn ac3_commutator() {
    verdict("AC3", vec![("n=2".into(), lp_records())]);
}

#[test]
fn ac4_bernstein() {
    verdict("AC4", vec![("n=2".into(), lp_records())]);
}

#[test]
fn ac5_dispersive_decay() {
    let mut runs = Vec::new();
    for (n, size, l) in [(3usize, 128usize, 8.0), (2, 256, 16.0)] {
        let cfg = config(serde_json::json!({
            "experiment": "dispersive", "n": n, "N": size, "L": l, "eps": [0.01],
            "seed": 19, "time_window": [0.0, 1.0], "samples": 5
        }));
        runs.push((format!("n={n}"), records(&cfg)));
    }
    verdict("AC5", runs);
}

#[test]
fn ac6_parametrix_accuracy() {
    let residual = config(serde_json::json!({
        "experiment": "parametrix-residual", "n": 2, "N": 64, "L": 8.0,
        "eps": [0.1, 0.03, 0.01, 0.003], "seed": 13, "time_window": [0.0, 1.0], "samples": 3
    }));
    let unitarity = config(serde_json::json!({
        "experiment": "unitarity", "n": 2, "N": 64, "L": 8.0,
        "eps": [0.1, 0.01], "seed": 17, "time_window": [0.0, 3.0], "samples": 2
    }));
    verdict(
        "AC6",
        vec![("residual".into(), records(&residual)), ("unitarity".into(), records(&unitarity))],
    );
}

#[test]
fn ac7_mkg_evolution() {
    let cfg = config(serde_json::json!({
        "experiment": "mkg-evolve", "n": 3, "N": 32, "L": TAU, "eps": [0.01],
        "seed": 11, "time_window": [0.0, 1.5]
    }));
    verdict("AC7", vec![("n=3".into(), records(&cfg))]);
}

#[test]
fn ac8_exponent_bookkeeping() {
    let cfg = config(serde_json::json!({
        "experiment": "norms", "n": 6, "N": 8, "L": TAU, "sigma": 0.48, "eps": [0.01],
        "seed": 23, "time_window": [0.0, 0.1]
    }));
    verdict("AC8", vec![("n=6".into(), records(&cfg))]);
}

#[test]
fn ac9_rerun_determinism() {
    let mut runs = Vec::new();
    for json in [
        serde_json::json!({
            "experiment": "identities", "n": 3, "N": 32, "L": 8.0, "eps": [0.01],
            "seed": 7, "time_window": [0.0, 2.0], "rerun_check": true
        }),
        serde_json::json!({
            "experiment": "dispersive", "n": 2, "N": 64, "L": 8.0, "eps": [0.01],
            "seed": 19, "time_window": [0.0, 1.0], "rerun_check": true
        }),
    ] {
        let cfg = config(json);
        let label = cfg.experiment.clone();
        let (a, b) = (tempfile::tempdir().unwrap(), tempfile::tempdir().unwrap());
        let first = harness::run(&cfg, Some(a.path())).expect("first run");
        let second = harness::run(&cfg, Some(b.path())).expect("second run");
        let same = |name: &str| fs::read(a.path().join(name)).unwrap() == fs::read(b.path().join(name)).unwrap();
        let csv = format!("{label}.csv");
        let mut recs = first.records.clone();
        recs.push(AcceptanceRecord::from_checks(
            "AC9",
            vec![
                SubCheck::at_most("separate runs, csv differs", (!same(&csv)) as u8 as f64, 0.0),
                SubCheck::at_most("separate runs, summary differs", (!same("summary.json")) as u8 as f64, 0.0),
            ],
        ));
        assert_eq!(first.summary, second.summary);
        runs.push((label, recs));
    }
    verdict("AC9", runs);
}
