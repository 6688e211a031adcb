use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use cronlab_core::{dump, GridSpec, ScalarField};

fn cronlab(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cronlab")).args(args).env("CRONLAB_THREADS", "2").output().unwrap()
}

fn write_config(dir: &Path, body: &str) -> String {
    let p = dir.join("cfg.json");
    fs::write(&p, body).unwrap();
    p.to_str().unwrap().to_string()
}

const SMALL: &str = r#"{"experiment":"identities","n":2,"N":32,"L":8.0,"eps":[0.01],"seed":7,"time_window":[0.0,1.0]}"#;

#[test]
fn run_then_report() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let out = tmp.path().join("out");
    let o = cronlab(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    for f in ["identities.csv", "summary.json", "summary.txt", "timings.json"] {
        assert!(out.join(f).exists(), "{f} missing");
    }
    let csv = fs::read_to_string(out.join("identities.csv")).unwrap();
    assert!(csv.starts_with("# cronlab-scan v1 config="));

    let r = cronlab(&["report", out.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    assert!(String::from_utf8_lossy(&r.stdout).contains("PASS AC1"));
}

#[test]
fn seed_override_changes_hash() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), SMALL);
    let (a, b) = (tmp.path().join("a"), tmp.path().join("b"));
    cronlab(&["run", "--config", &cfg, "--out", a.to_str().unwrap()]);
    cronlab(&["run", "--config", &cfg, "--seed", "8", "--out", b.to_str().unwrap()]);
    let head = |d: &Path| fs::read_to_string(d.join("identities.csv")).unwrap().lines().next().unwrap().to_string();
    assert_ne!(head(&a), head(&b));
}

#[test]
fn invalid_configs_write_nothing() {
    let tmp = tempfile::tempdir().unwrap();
    for body in [
        r#"{"experiment":"identities","n":2,"N":32,"L":8.0,"eps":[],"seed":7,"time_window":[0.0,1.0]}"#,
        r#"{"experiment":"nope","n":2,"N":32,"L":8.0,"eps":[0.01],"seed":7,"time_window":[0.0,1.0]}"#,
        r#"{"experiment":"identities","n":2,"N":32,"L":8.0,"eps":[0.01],"seed":7,"time_window":[0.0,5.0]}"#,
        r#"{"experiment":"identities","n":2,"N":32,"L":8.0,"eps":[0.01],"seed":7,"time_window":[0.0,1.0],"bogus":1}"#,
    ] {
        let cfg = write_config(tmp.path(), body);
        let out = tmp.path().join("never");
        let o = cronlab(&["run", "--config", &cfg, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(2), "{body}");
        assert!(!out.exists(), "{body} created output");
    }
}

#[test]
fn report_exits_one_on_failure() {
    let tmp = tempfile::tempdir().unwrap();
    let summary = r#"{"experiment":"norms","seed":1,"config_hash":"00","passed":false,"records":[
        {"id":"AC1","measured":0.0,"threshold":1.0,"passed":true,"details":[]},
        {"id":"AC8","measured":2.0,"threshold":1.0,"passed":false,"details":[]}]}"#;
    fs::write(tmp.path().join("summary.json"), summary).unwrap();
    let o = cronlab(&["report", tmp.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(1));
    let text = String::from_utf8_lossy(&o.stdout).to_string();
    let first = text.lines().find(|l| l.starts_with("PASS ") || l.starts_with("FAIL ")).unwrap();
    assert!(first.starts_with("FAIL AC8"), "{text}");
}

#[test]
fn dump_field_describes_header() {
    let tmp = tempfile::tempdir().unwrap();
    let g = GridSpec::new(2, 8, 2.0).unwrap();
    let f = ScalarField::from_real_fn(g, |x| (std::f64::consts::PI * x[0]).cos());
    let path = tmp.path().join("f.bin");
    dump::save(&path, &f, &[1.0, 0.0, 0.5]).unwrap();
    let o = cronlab(&["dump-field", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let text = String::from_utf8_lossy(&o.stdout);
    assert!(text.contains("n=2 N=8 L=2"), "{text}");
    assert!(text.contains("extension  [1.000000, 0.000000, 0.500000]"));

    fs::write(&path, b"garbage").unwrap();
    assert_eq!(cronlab(&["dump-field", path.to_str().unwrap()]).status.code(), Some(2));
}
