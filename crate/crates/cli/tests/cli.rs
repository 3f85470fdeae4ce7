use std::process::{Command, Output};

use serde_json::Value;

fn mzqkd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mzqkd"))
        .args(args)
        .env_remove("MZQKD_CONFIG")
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8(out.stdout.clone()).unwrap()
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--format", "json"]);
    let out = mzqkd(&all);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_str(&stdout(&out)).unwrap()
}

fn csv_rows(text: &str) -> (Vec<String>, Vec<Vec<f64>>) {
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines
        .map(|l| l.split(',').map(|v| v.parse().unwrap()).collect())
        .collect();
    (header, rows)
}

#[test]
fn design_reports_the_fifty_km_chain() {
    let v = json(&["design", "--length-km", "50", "--rho", "3", "--convention", "calibrated", "--sum-m", "0.5"]);
    let r = &v["result"];
    assert!((r["min_phase_sum"].as_f64().unwrap() - 0.423).abs() < 5e-4);
    assert!((r["max_rate_linear"].as_f64().unwrap() / 710e6 - 1.0).abs() < 5e-3);
    assert!((r["max_rate_nonlinear"].as_f64().unwrap() / 473e6 - 1.0).abs() < 5e-3);
    assert!((r["gate_window"].as_f64().unwrap() / 0.962e-9 - 1.0).abs() < 1e-3);
    assert_eq!(v["params"]["fiber_length"].as_f64().unwrap(), 50e3);
    assert_eq!(v["run"]["link"]["kappa_convention"], "calibrated");

    let text = stdout(&mzqkd(&["design", "--length-km", "50", "--convention", "calibrated", "--sum-m", "0.5"]));
    assert!(text.contains("gate window           0.962"), "{text}");
}

#[test]
fn invalid_values_exit_with_config_code() {
    let out = mzqkd(&["design", "--rho", "0"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("design.rho"));
    assert_eq!(mzqkd(&["design", "--convention", "other"]).status.code(), Some(2));
    assert_eq!(mzqkd(&["bb84", "--format", "svg"]).status.code(), Some(2));
}

#[test]
fn infeasible_requests_exit_with_code_three() {
    let out = mzqkd(&["compensate", "--length-km", "100", "--clock-ghz", "1000"]);
    assert_eq!(out.status.code(), Some(3));
    let gate = mzqkd(&["design", "--length-km", "50", "--sum-m", "0.1"]);
    assert_eq!(gate.status.code(), Some(3));
}

#[test]
fn sweep_has_linear_sum_and_constant_rate_length() {
    let out = mzqkd(&["sweep", "--convention", "calibrated", "--start-km", "50", "--stop-km", "500", "--points", "46", "--format", "csv"]);
    assert!(out.status.success());
    let (header, rows) = csv_rows(&stdout(&out));
    assert_eq!(header[0], "length_km");
    assert_eq!(rows.len(), 46);
    let products: Vec<f64> = rows.iter().map(|r| r[5]).collect();
    let mean = products.iter().sum::<f64>() / products.len() as f64;
    assert!(products.iter().all(|p| (p - mean).abs() <= 0.01 * mean));

    let n = rows.len() as f64;
    let (mx, my) = (rows.iter().map(|r| r[0]).sum::<f64>() / n, rows.iter().map(|r| r[1]).sum::<f64>() / n);
    let sxy: f64 = rows.iter().map(|r| (r[0] - mx) * (r[1] - my)).sum();
    let sxx: f64 = rows.iter().map(|r| (r[0] - mx).powi(2)).sum();
    let syy: f64 = rows.iter().map(|r| (r[1] - my).powi(2)).sum();
    assert!(sxy * sxy / (sxx * syy) > 0.999);

    for row in [&rows[0], &rows[20], &rows[45]] {
        let km = format!("{}", row[0]);
        let v = json(&["design", "--convention", "calibrated", "--length-km", &km]);
        let want = v["result"]["min_phase_sum"].as_f64().unwrap();
        assert!((row[1] - want).abs() <= 1e-12 * want);
    }
}

#[test]
fn bb84_table_has_eight_rows() {
    let out = mzqkd(&["bb84", "--length-km", "50", "--convention", "calibrated", "--baseline-m", "0.25", "--format", "csv"]);
    assert!(out.status.success());
    let text = stdout(&out);
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 9);
    assert!(lines[0].starts_with("alice_basis,alice_bit,bob_basis"));
}

#[test]
fn bb84_warns_below_the_visibility_bound() {
    let out = mzqkd(&["bb84", "--length-km", "50", "--baseline-m", "0.25", "--format", "csv"]);
    assert!(out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("warning"));
}

#[test]
fn oracle_check_passes_on_defaults_and_fails_below_its_error() {
    assert!(mzqkd(&["oracle-check"]).status.success());
    let strict = mzqkd(&["oracle-check", "--threshold", "1e-15"]);
    assert_eq!(strict.status.code(), Some(4));
}

#[test]
fn compensate_emits_a_partial_plan() {
    let v = json(&["compensate", "--length-km", "405", "--clock-ghz", "2.5", "--convention", "calibrated"]);
    let r = &v["result"];
    assert_eq!(r["regime"], "partial_dcf");
    let active = r["active_length"].as_f64().unwrap();
    assert_eq!(r["dcf_equivalent_length"].as_f64().unwrap(), 405e3 - active);
    let text = stdout(&mzqkd(&["compensate", "--length-km", "405", "--dcf", "dcf-100"]));
    assert!(text.contains("partial_dcf"));
}

#[test]
fn config_file_from_environment_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("run.toml");
    std::fs::write(&path, "[link]\nlength_km = 50\nkappa_convention = \"calibrated\"\n\n[design]\nrho = 2\n").unwrap();
    let run = |extra: &[&str]| {
        let out = Command::new(env!("CARGO_BIN_EXE_mzqkd"))
            .arg("design")
            .args(extra)
            .args(["--format", "json"])
            .env("MZQKD_CONFIG", &path)
            .output()
            .unwrap();
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        serde_json::from_slice::<Value>(&out.stdout).unwrap()
    };
    let from_file = run(&[]);
    assert_eq!(from_file["result"]["rho"].as_f64(), Some(2.0));
    assert_eq!(from_file["params"]["fiber_length"].as_f64(), Some(50e3));
    let overridden = run(&["--rho", "3"]);
    assert_eq!(overridden["result"]["rho"].as_f64(), Some(3.0));
}

#[test]
fn bad_config_file_names_the_field() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.toml");
    std::fs::write(&path, "[link]\nlength_km = -5\n").unwrap();
    let out = mzqkd(&["--config", path.to_str().unwrap(), "design"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("link.length_km"));
    let missing = mzqkd(&["--config", "/nonexistent/run.toml", "design"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn file_output_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    for path in [&a, &b] {
        let out = mzqkd(&["spectra", "--length-km", "50", "--format", "csv", "-o", path.to_str().unwrap()]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        assert!(out.stdout.is_empty());
    }
    let first = std::fs::read(&a).unwrap();
    assert_eq!(first, std::fs::read(&b).unwrap());
    assert!(first.starts_with(b"x_m,intensity_o_per_m,intensity_p_per_m\n"));
    let leftovers = std::fs::read_dir(dir.path()).unwrap().count();
    assert_eq!(leftovers, 2);
}

#[test]
fn svg_plots() {
    for args in [
        vec!["spectra", "--length-km", "50", "--peak", "--centered"],
        vec!["sweep", "--points", "10"],
        vec!["gterm", "--points", "50"],
    ] {
        let mut all = args.clone();
        all.extend(["--format", "svg"]);
        let out = mzqkd(&all);
        assert!(out.status.success(), "{args:?}");
        let text = stdout(&out);
        assert!(text.starts_with("<svg") && text.contains("<polyline"), "{args:?}");
    }
}

#[test]
fn compensated_spectra_match_between_models() {
    let run = |source: &str| {
        let out = mzqkd(&[
            "spectra", "--length-km", "50", "--compensated", "--peak", "--centered", "--source", source, "--format", "csv",
        ]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        csv_rows(&stdout(&out)).1
    };
    let analytic = run("analytic");
    let oracle = run("oracle");
    let worst = analytic
        .iter()
        .zip(&oracle)
        .flat_map(|(a, b)| [(a[1] - b[1]).abs(), (a[2] - b[2]).abs()])
        .fold(0.0, f64::max);
    assert!(worst < 1e-6, "{worst}");
}
