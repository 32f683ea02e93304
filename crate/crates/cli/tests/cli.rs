use std::path::Path;
use std::process::{Command, Output};

const LN2: f64 = std::f64::consts::LN_2;

fn eqldp(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_eqldp"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn write_config(dir: &Path, beta_a: f64, beta_b: f64, grid: &str) -> String {
    let path = dir.join("run.json");
    let text = format!(
        r#"{{
  "mechanism": {{"a": {{"kind": "block_depolarizing", "beta": {beta_a}}},
                 "b": {{"kind": "block_depolarizing", "beta": {beta_b}}}}},
  "s_grid": {grid},
  "search": {{"grid_points": 21}},
  "optimizer": {{"restarts": 2}},
  "output": {{"dir": "{}"}}
}}"#,
        dir.join("out").display()
    );
    std::fs::write(&path, text).unwrap();
    path.to_string_lossy().into_owned()
}

fn column(csv: &str, name: &str) -> Vec<String> {
    let mut lines = csv.lines();
    let header: Vec<&str> = lines.next().unwrap().split(',').collect();
    let k = header.iter().position(|h| *h == name).unwrap();
    lines.map(|l| l.split(',').nth(k).unwrap().to_string()).collect()
}

/// `log((8τ+1)/(3−2τ))` with `τ` from bisection, `2 log 3` below `log 2`.
fn two_block_oracle(s: f64) -> f64 {
    if s <= LN2 {
        return 2.0 * 3f64.ln();
    }
    let (mut lo, mut hi) = (0.5f64, 1.0f64);
    for _ in 0..100 {
        let t = 0.5 * (lo + hi);
        let h = -t * t.ln() - (1.0 - t) * (1.0 - t).ln();
        if LN2 + h > s {
            lo = t;
        } else {
            hi = t;
        }
    }
    let t = 0.5 * (lo + hi);
    ((8.0 * t + 1.0) / (3.0 - 2.0 * t)).ln()
}

#[test]
fn sweep_reproduces_the_two_block_curve() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 0.5, 0.5, r#"{"start": 0.0, "stop": 1.3862943611198906, "count": 50}"#);
    let out = eqldp(&["sweep", "--config", &cfg]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    assert_eq!(
        csv.lines().next().unwrap(),
        "s,tau,epsilon_upper,epsilon_numeric,j_max,j_min_bound,regime_max,regime_min,wall_time_ms"
    );
    let s: Vec<f64> = column(&csv, "s").iter().map(|v| v.parse().unwrap()).collect();
    let eps: Vec<f64> = column(&csv, "epsilon_upper").iter().map(|v| v.parse().unwrap()).collect();
    assert_eq!(eps.len(), 50);
    for (si, ei) in s.iter().zip(&eps) {
        assert!((ei - two_block_oracle(*si)).abs() < 1e-6, "s={si}: {ei}");
    }
    for k in 1..50 {
        if s[k] <= LN2 {
            assert_eq!(eps[k], eps[0]);
        } else if s[k - 1] >= LN2 {
            assert!(eps[k] < eps[k - 1]);
        }
    }
    let summary: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["rows"], 50);
}

#[test]
fn sweep_of_non_private_channel_reports_inf_until_threshold() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 0.0, 0.5, "[0.0, 0.3, 0.6, 0.8, 1.0, 1.3862943611198906]");
    assert!(eqldp(&["sweep", "--config", &cfg]).status.success());
    let csv = std::fs::read_to_string(dir.path().join("out/sweep.csv")).unwrap();
    let eps = column(&csv, "epsilon_upper");
    assert_eq!(&eps[..3], &["inf", "inf", "inf"]);
    assert!(eps[3..].iter().all(|e| e != "inf"));
    let last: f64 = eps[5].parse().unwrap();
    assert!((last - 3f64.ln()).abs() < 1e-4);
}

#[test]
fn sweep_is_reproducible() {
    let hash = |seed: &str| {
        let dir = tempfile::tempdir().unwrap();
        let cfg = write_config(dir.path(), 0.5, 0.25, "[0.2, 0.9, 1.3]");
        assert!(eqldp(&["sweep", "--config", &cfg, "--seed", seed]).status.success());
        let summary: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(dir.path().join("out/summary.json")).unwrap()).unwrap();
        summary["determinism_hash"].as_str().unwrap().to_string()
    };
    assert_eq!(hash("5"), hash("5"));
}

#[test]
fn bad_configs_exit_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 0.5, 0.5, "[]");
    let out = eqldp(&["sweep", "--config", &cfg]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("empty"));

    let cfg = write_config(dir.path(), 0.5, 0.5, "[3.0]");
    assert_eq!(eqldp(&["sweep", "--config", &cfg]).status.code(), Some(2));

    let broken = dir.path().join("broken.json");
    std::fs::write(&broken, "{ not json").unwrap();
    assert_eq!(eqldp(&["sweep", "--config", broken.to_str().unwrap()]).status.code(), Some(2));
    assert_eq!(eqldp(&["sweep"]).status.code(), Some(2));
    assert_eq!(eqldp(&["sweep", "--config", "/nonexistent/run.json"]).status.code(), Some(2));
    assert_eq!(eqldp(&["frobnicate"]).status.code(), Some(2));
    assert_eq!(eqldp(&["report", "--s", "0.1", "--log-base", "10"]).status.code(), Some(2));
}

#[test]
fn plot_from_sweep_output() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), 0.0, 0.5, "[0.2, 0.5, 0.8, 1.0, 1.2]");
    assert!(eqldp(&["sweep", "--config", &cfg]).status.success());
    let csv = dir.path().join("out/sweep.csv");
    let svg_path = dir.path().join("plot.svg");
    let out = eqldp(&["plot", csv.to_str().unwrap(), "--output", svg_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let svg = std::fs::read_to_string(&svg_path).unwrap();
    assert!(svg.starts_with("<svg"));
    assert!(svg.contains("omitted"));
    assert!(svg.contains("log 2"));

    let bad = dir.path().join("bad.csv");
    std::fs::write(&bad, "x,y\n1,2\n").unwrap();
    assert_eq!(eqldp(&["plot", bad.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn report_prints_json_in_either_base() {
    let nats = eqldp(&["report", "--s", "0.3"]);
    assert!(nats.status.success());
    let v: serde_json::Value = serde_json::from_slice(&nats.stdout).unwrap();
    let e = v["epsilon_upper"].as_f64().unwrap();
    assert!((e - 2.0 * 3f64.ln()).abs() < 1e-4);
    assert_eq!(v["log_base"], "e");

    let bits = eqldp(&["report", "--s", "0.3", "--log-base", "2"]);
    let v: serde_json::Value = serde_json::from_slice(&bits.stdout).unwrap();
    assert!((v["epsilon_upper"].as_f64().unwrap() - e / LN2).abs() < 1e-12);

    let inf = eqldp(&["report", "--s", "0.3", "--beta-a", "0"]);
    let v: serde_json::Value = serde_json::from_slice(&inf.stdout).unwrap();
    assert_eq!(v["epsilon_upper"], "inf");

    assert_eq!(eqldp(&["report", "--s", "5.0"]).status.code(), Some(2));
}

#[test]
fn selftest_detects_a_corrupted_gibbs_solver() {
    let out = eqldp(&["selftest", "--criterion", "8", "--corrupt-gibbs"]);
    assert_eq!(out.status.code(), Some(1));
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("criterion  8 [KKT certificate at the Gibbs witness]: FAIL"));
    assert!(String::from_utf8_lossy(&out.stderr).contains("8 (KKT certificate"));
    let ok = eqldp(&["selftest", "--criterion", "8"]);
    assert!(ok.status.success());
}

#[test]
fn quick_selftest_passes() {
    let out = eqldp(&["selftest", "--level", "quick"]);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "{stdout}");
    assert_eq!(stdout.matches(": PASS").count(), 11);
}
