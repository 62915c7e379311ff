//! Runs the `excess` binary end to end.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

fn excess(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_excess"))
        .args(args)
        .env("EXCESS_THREADS", "1")
        .output()
        .expect("binary runs")
}

fn ok(args: &[&str]) {
    let out = excess(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn config_line(file: &Path) -> String {
    let text = fs::read_to_string(file).unwrap();
    text.lines()
        .find_map(|l| l.strip_prefix("# config="))
        .expect("config echo present")
        .to_string()
}

#[test]
fn generate_analyze_decompose_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("ar2.csv");
    ok(&["generate", "ar2", "--a1", "0.5", "--a2", "-0.3", "--n", "3000", "--seed", "9", "-o", path(&series)]);
    let again = dir.path().join("ar2b.csv");
    ok(&["generate", "ar2", "--a1", "0.5", "--a2", "-0.3", "--n", "3000", "--seed", "9", "-o", path(&again)]);
    assert_eq!(fs::read(&series).unwrap(), fs::read(&again).unwrap());

    let a = dir.path().join("a");
    let b = dir.path().join("b");
    for out in [&a, &b] {
        ok(&["analyze", "-i", path(&series), "--m-max", "4", "--n-eps", "24", "-o", path(out)]);
    }
    for name in excess::run::CURVE_FILES {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }

    let d = dir.path().join("d");
    ok(&["decompose", "-i", path(&a), "--window", "0.5:3", "-o", path(&d)]);
    let report: serde_json::Value = serde_json::from_str(&fs::read_to_string(d.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["per_eps"].as_array().unwrap().len(), 24);
    assert_eq!(report["windows"].as_array().unwrap().len(), 1);
    let csv = fs::read_to_string(d.join("decomposition.csv")).unwrap();
    assert!(csv.contains("epsilon,E_state,E_eps,E_mem,E_total,m_l,m_u,kappa,stochastic,neg,nofit,extrap"));
}

#[test]
fn config_echo_reproduces_output() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("x.csv");
    ok(&["generate", "lorenz", "--n", "2000", "-o", path(&series)]);
    let first = dir.path().join("pi.csv");
    ok(&[
        "ksg", "-i", path(&series), "--m-max", "2", "--tau", "10", "--k", "4", "--n-eta", "3", "--seed", "4", "-o",
        path(&first),
    ]);
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, config_line(&first)).unwrap();
    let second = dir.path().join("pi2.csv");
    ok(&["ksg", "--config", path(&cfg), "-o", path(&second)]);
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
    let text = fs::read_to_string(&first).unwrap();
    assert!(text.contains("m,eta,pi_nats,pi_half_nats"));
    assert_eq!(text.lines().filter(|l| !l.starts_with('#')).count(), 1 + 2 * 3);
}

#[test]
fn bits_switch_scales_information() {
    let dir = tempfile::tempdir().unwrap();
    let series = dir.path().join("s.csv");
    ok(&["generate", "ar2", "--a1", "0.5", "--a2", "0", "--n", "1000", "-o", path(&series)]);
    let nats = dir.path().join("n");
    let bits = dir.path().join("b");
    ok(&["analyze", "-i", path(&series), "--m-max", "2", "--n-eps", "8", "-o", path(&nats)]);
    ok(&["analyze", "--bits", "-i", path(&series), "--m-max", "2", "--n-eps", "8", "-o", path(&bits)]);
    let n = excess::io::read_curve(&nats.join("block_entropy.csv")).unwrap();
    let b = excess::io::read_curve(&bits.join("block_entropy.csv")).unwrap();
    for (x, y) in n.values().iter().flatten().zip(b.values().iter().flatten()) {
        if let (Some(x), Some(y)) = (x, y) {
            assert!((x - y).abs() < 1e-12 * x.abs().max(1.0));
        }
    }
    assert!(fs::read_to_string(bits.join("block_entropy.csv")).unwrap().contains("# units=bits"));
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("o.csv");
    // usage
    assert_eq!(excess(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(excess(&["analyze", "--tau", "x"]).status.code(), Some(1));
    // invalid parameters
    let bad = excess(&["generate", "ar2", "--a2", "2.0", "-o", path(&out)]);
    assert_eq!(bad.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad.stderr).contains("stationarity"));
    // data
    let empty = dir.path().join("empty.csv");
    fs::write(&empty, "# nothing here\n").unwrap();
    let e = excess(&["analyze", "-i", path(&empty), "-o", path(&dir.path().join("x"))]);
    assert_eq!(e.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&e.stderr).contains("at least 2 samples"));
    let missing = excess(&["analyze", "-i", "/no/such/file.csv", "-o", path(&out)]);
    assert_eq!(missing.status.code(), Some(2));
    let nan = dir.path().join("nan.csv");
    fs::write(&nan, "1\n2\nNaN\n").unwrap();
    assert_eq!(excess(&["ksg", "-i", path(&nan), "-o", path(&out)]).status.code(), Some(2));
    // help is not an error
    assert_eq!(excess(&["--help"]).status.code(), Some(0));
}
