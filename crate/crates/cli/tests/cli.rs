//! End-to-end checks of the `nsdo` binary: output contracts, exit codes,
//! constants printing, determinism, and sweep scaling.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_nsdo"))
}

fn configs_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("reading {path:?}: {e}"))
}

fn assert_success(out: &Output) {
    assert!(
        out.status.success(),
        "stdout: {}\nstderr: {}",
        String::from_utf8_lossy(&out.stdout),
        String::from_utf8_lossy(&out.stderr)
    );
}

#[test]
fn ring5_config_produces_one_trace_per_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run"])
        .arg(configs_dir().join("ring5_mspd.json"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_success(&out);
    for seed in [1, 2, 3] {
        let trace = dir.path().join(format!("trace_{seed}.csv"));
        assert!(trace.exists(), "missing {trace:?}");
        let text = read(&trace);
        assert!(text.starts_with("time,node,gap,consensus,subgrads,messages\n"));
    }
    assert!(dir.path().join("summary.json").exists());
    assert!(dir.path().join("bounds.json").exists());

    let summary: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("summary.json"))).unwrap();
    assert_eq!(
        summary["total_simulated_time"], summary["accounting_time"],
        "simulated time must equal the closed-form accounting"
    );
    let bounds: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("bounds.json"))).unwrap();
    assert_eq!(bounds["upper_violations"], 0);
}

#[test]
fn reruns_are_byte_identical() {
    let run_once = || {
        let dir = tempfile::tempdir().unwrap();
        let out = bin()
            .args(["run"])
            .arg(configs_dir().join("path3_naive.json"))
            .arg("--out")
            .arg(dir.path())
            .output()
            .unwrap();
        assert_success(&out);
        (
            read(&dir.path().join("trace_1.csv")),
            read(&dir.path().join("summary.json")),
            read(&dir.path().join("bounds.json")),
        )
    };
    let a = run_once();
    let b = run_once();
    assert_eq!(a.0, b.0);
    assert_eq!(a.1, b.1);
    assert_eq!(a.2, b.2);
}

#[test]
fn print_constants_reports_header_formulas() {
    // R = L_g = 1, d = 1, ε = 1 → T = 20, K = 5.
    let dir = tempfile::tempdir().unwrap();
    let config = serde_json::json!({
        "problem": {
            "kind": "abs_deviation",
            "d": 1,
            "n": 1,
            "params": { "anchors": [[0.0]] },
            "R": 1.0,
            "seed": 0
        },
        "network": { "kind": "path", "n": 1, "tau": 0.0 },
        "algorithm": { "name": "drs", "constants": "auto" },
        "epsilon": 1.0,
        "seeds": [1]
    });
    let path = dir.path().join("config.json");
    std::fs::write(&path, serde_json::to_string_pretty(&config).unwrap()).unwrap();
    let out = bin()
        .args(["run"])
        .arg(&path)
        .arg("--print-constants")
        .output()
        .unwrap();
    assert_success(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(stdout.contains("T=20"), "stdout: {stdout}");
    assert!(stdout.contains("K=5"), "stdout: {stdout}");
}

#[test]
fn unknown_algorithm_exits_two_with_message() {
    let dir = tempfile::tempdir().unwrap();
    let mut config: serde_json::Value =
        serde_json::from_str(&read(&configs_dir().join("path3_naive.json"))).unwrap();
    config["algorithm"]["name"] = serde_json::json!("genie");
    let path = dir.path().join("config.json");
    std::fs::write(&path, config.to_string()).unwrap();
    let out = bin().args(["run"]).arg(&path).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("unknown algorithm"), "stderr: {stderr}");
    assert!(stderr.contains("algorithm.name"), "stderr: {stderr}");
}

#[test]
fn sweep_with_empty_values_prints_header_only() {
    let out = bin()
        .args(["sweep"])
        .arg(configs_dir().join("sweep_base.json"))
        .args(["--axis", "dimension", "--values", ""])
        .output()
        .unwrap();
    assert_success(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert_eq!(stdout.lines().count(), 1);
    assert!(stdout.starts_with("dimension,naive_time,drs_time"));
}

fn fit_log_log_slope(points: &[(f64, f64)]) -> f64 {
    let n = points.len() as f64;
    let xs: Vec<f64> = points.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = points.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let cov: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let var: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    cov / var
}

fn sweep_rows(axis: &str, values: &str) -> Vec<Vec<f64>> {
    let out = bin()
        .args(["sweep"])
        .arg(configs_dir().join("sweep_base.json"))
        .args(["--axis", axis, "--values", values])
        .output()
        .unwrap();
    assert_success(&out);
    let stdout = String::from_utf8_lossy(&out.stdout);
    stdout
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect()
}

#[test]
fn dimension_sweep_shows_quarter_power_communication() {
    // Columns: value, naive, drs, drs_comm, drs_comp, mspd, mspd_comm, mspd_comp.
    let rows = sweep_rows("dimension", "1,16,256");
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[3])).collect();
    let slope = fit_log_log_slope(&points);
    assert!(
        (slope - 0.25).abs() <= 0.05,
        "communication exponent {slope}"
    );
}

#[test]
fn eigengap_sweep_shows_inverse_sqrt_communication() {
    let rows = sweep_rows("eigengap", "0.25,0.04,0.01");
    let points: Vec<(f64, f64)> = rows.iter().map(|r| (r[0], r[6])).collect();
    let slope = fit_log_log_slope(&points);
    assert!(
        (slope + 0.5).abs() <= 0.05,
        "communication exponent {slope}"
    );
}

#[test]
fn run_worst_case_global_records_zero_lower_violations() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run"])
        .arg(configs_dir().join("worst_case_global.json"))
        .arg("--out")
        .arg(dir.path())
        .output()
        .unwrap();
    assert_success(&out);
    let bounds: serde_json::Value =
        serde_json::from_str(&read(&dir.path().join("bounds.json"))).unwrap();
    assert_eq!(bounds["lower_violations"], 0);
    assert_eq!(bounds["envelope"], "global");
}

#[test]
fn no_bounds_skips_the_report() {
    let dir = tempfile::tempdir().unwrap();
    let out = bin()
        .args(["run"])
        .arg(configs_dir().join("path3_naive.json"))
        .arg("--out")
        .arg(dir.path())
        .arg("--no-bounds")
        .output()
        .unwrap();
    assert_success(&out);
    assert!(!dir.path().join("bounds.json").exists());
    assert!(dir.path().join("trace_1.csv").exists());
}
