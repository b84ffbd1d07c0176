use std::path::Path;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_remote-parity"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn cell(csv: &str, column: &str) -> String {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == column).unwrap();
    lines.next().unwrap().split(',').nth(k).unwrap().to_owned()
}

#[test]
fn rates_row() {
    let o = run(&["rates", "--alpha2", "2", "--eta", "0.75"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.starts_with("alpha2,eta,r_parity,r_dephasing,n_meas,f_meas,delta,p_steady\n"));
    let rp: f64 = cell(&out, "r_parity").parse().unwrap();
    assert!((rp - 0.072538969480391).abs() < 1e-12);
    assert_eq!(out.lines().count(), 2);
}

#[test]
fn fmeas_quoted_point() {
    let o = run(&["fmeas", "--alpha2", "1.63", "--eta", "0.85"]);
    assert!(o.status.success());
    let n: f64 = cell(&stdout(&o), "n_meas").parse().unwrap();
    assert!((15.5..18.0).contains(&n));
}

#[test]
fn usage_errors_exit_1() {
    assert_eq!(
        run(&["fmeas", "--alpha2", "2", "--eta", "1"]).status.code(),
        Some(1)
    );
    assert_eq!(run(&["preset", "fig9"]).status.code(), Some(1));
    assert_eq!(run(&["rates", "--eta", "1.5"]).status.code(), Some(1));
    assert_eq!(run(&["rates", "--bogus"]).status.code(), Some(1));
    assert_eq!(
        run(&["rates", "--config", "/nonexistent/cfg.json"])
            .status
            .code(),
        Some(1)
    );
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn optimize_alpha_row() {
    let o = run(&["optimize-alpha", "--eta", "0.85", "--t1-ratio", "3000"]);
    assert!(o.status.success());
    let out = stdout(&o);
    let a2: f64 = cell(&out, "alpha2").parse().unwrap();
    let p: f64 = cell(&out, "p_steady").parse().unwrap();
    assert!(a2 > 1.0 && a2 < 4.0);
    assert!((p - 0.99).abs() < 0.01);
}

#[test]
fn validate_kraus_grid() {
    let o = run(&["validate-kraus"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(stdout(&o).lines().count(), 26);
}

#[test]
fn config_file_and_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"alpha2": 1.0, "eta": 0.9}"#).unwrap();
    let cfg = cfg.to_str().unwrap();
    let from_file = stdout(&run(&["rates", "--config", cfg]));
    assert_eq!(cell(&from_file, "alpha2"), "1");
    assert_eq!(cell(&from_file, "eta"), "0.9");
    let overridden = stdout(&run(&["rates", "--config", cfg, "--eta", "0.6"]));
    assert_eq!(cell(&overridden, "alpha2"), "1");
    assert_eq!(cell(&overridden, "eta"), "0.6");

    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, r#"{"alpha": 1.0}"#).unwrap();
    assert_eq!(
        run(&["rates", "--config", bad.to_str().unwrap()])
            .status
            .code(),
        Some(1)
    );
}

#[test]
fn trajectory_with_event_log() {
    let dir = tempfile::tempdir().unwrap();
    let events = dir.path().join("events.csv");
    let series = dir.path().join("series.csv");
    let o = bin()
        .args([
            "trajectory",
            "--feedback",
            "--steps",
            "25",
            "--seed",
            "3",
            "--events",
        ])
        .arg(&events)
        .arg("--output")
        .arg(&series)
        .output()
        .unwrap();
    assert!(o.status.success());
    let ev = std::fs::read_to_string(&events).unwrap();
    assert!(ev.starts_with("step,outcome,pulse_fired,fid_be_plus,p_odd_filter\n"));
    assert_eq!(ev.lines().count(), 26);
    let se = std::fs::read_to_string(&series).unwrap();
    assert!(se.starts_with("step,fid_be_plus,fid_bo_plus,fid_closest,zz_parity,coherence\n"));
    assert_eq!(se.lines().count(), 26);
}

fn ensemble_bytes(dir: &Path, workers: &str) -> Vec<u8> {
    let out = dir.join(format!("ens{workers}.csv"));
    let o = bin()
        .args([
            "ensemble",
            "--steps",
            "60",
            "--trajectories",
            "40",
            "--seed",
            "5",
            "--workers",
            workers,
        ])
        .args(["--feedback", "--record-every", "3", "--output"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(o.status.success());
    std::fs::read(out).unwrap()
}

#[test]
fn ensemble_is_worker_independent() {
    let dir = tempfile::tempdir().unwrap();
    let a = ensemble_bytes(dir.path(), "1");
    let b = ensemble_bytes(dir.path(), "3");
    assert_eq!(a, b);
    let text = String::from_utf8(a).unwrap();
    assert_eq!(text.lines().count(), 21);
    assert!(text.starts_with("step,fid_be_plus_mean,fid_be_plus_sem,"));
    let meta = std::fs::read_to_string(dir.path().join("ens1.csv.meta.json")).unwrap();
    assert!(meta.contains("\"rng_stream\": \"splitmix-chacha8/v1\""));
    assert!(meta.contains("\"trajectories\": 40"));
}

#[test]
fn fig3_preset() {
    let o = run(&["preset", "fig3"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.lines().any(|l| l.starts_with("3.273,0.7,")));
    assert!(out.lines().any(|l| l.starts_with("1.63,0.85,")));
}

#[test]
fn abstract_demo_report() {
    let o = run(&["abstract-demo"]);
    assert!(o.status.success());
    let out = stdout(&o);
    assert!(out.contains("# phase-flip counterexample"));
    assert!(!out.contains(",false,"));
}
