use std::io::BufReader;
use std::path::Path;
use std::process::{Command, Output};

use beqpt::families::FamilyId;
use beqpt::matcore::{hermitian_eigenvalues, max_abs_diff};
use beqpt::parenth::{default_local_term, read_local_term};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beqpt")).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn field(text: &str, key: &str) -> f64 {
    text.lines()
        .find_map(|l| l.strip_prefix(&format!("{key} ")))
        .unwrap_or_else(|| panic!("no `{key}` in\n{text}"))
        .parse()
        .unwrap()
}

fn csv_rows(path: &Path) -> Vec<Vec<f64>> {
    std::fs::read_to_string(path)
        .unwrap()
        .lines()
        .skip(1)
        .map(|l| l.split(',').map(|t| t.parse().unwrap()).collect())
        .collect()
}

#[test]
fn measures_at_realignment_peak() {
    let o = run(&["measures", "--family", "horodecki", "--a", "0.2365"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(field(&text, "negativity").abs() <= 1e-12);
    assert!(text.contains("is_ppt true"));
    assert!(field(&text, "n_r") > 0.0);
    assert!(text.contains("eigenvalues "));
}

#[test]
fn measures_at_product_point() {
    let text = stdout(&run(&["measures", "--family", "horodecki", "--a", "0"]));
    for key in ["negativity", "n_r", "n_sr", "concurrence_lb"] {
        assert!(field(&text, key) <= 1e-10, "{key}");
    }
    assert!((field(&text, "purity") - 1.0).abs() < 1e-12);
}

#[test]
fn measures_json_has_all_fields() {
    let o = run(&["measures", "--family", "chi2a", "--a", "0.1", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    for key in ["negativity", "n_r", "n_sr", "concurrence_lb", "is_ppt", "eigenvalues", "purity"] {
        assert!(v.get(key).is_some(), "{key}");
    }
}

#[test]
fn out_of_domain_parameter_exits_2_naming_interval() {
    let o = run(&["measures", "--family", "horodecki", "--a", "1.5"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("[0, 1]"));
}

#[test]
fn usage_errors_exit_2() {
    assert_eq!(run(&["scan", "--family", "horodecki", "--bogus"]).status.code(), Some(2));
    assert_eq!(run(&["measures", "--family", "nope", "--a", "0.1"]).status.code(), Some(2));
    assert_eq!(run(&["scan", "--family", "horodecki", "--steps", "1"]).status.code(), Some(2));
    assert_eq!(
        run(&["scan", "--family", "horodecki", "--a-min", "0", "--a-max", "0.5", "--steps", "3"]).status.code(),
        Some(2)
    );
}

#[test]
fn minimal_scan_is_deterministic_and_formats_agree() {
    let dir = tempfile::tempdir().unwrap();
    let csv1 = dir.path().join("a.csv");
    let csv2 = dir.path().join("b.csv");
    let json = dir.path().join("c.json");
    let base = ["scan", "--family", "chi2b", "--a-min", "0.2", "--a-max", "0.9", "--steps", "2"];
    for (path, fmt) in [(&csv1, "csv"), (&csv2, "csv"), (&json, "json")] {
        let mut args = base.to_vec();
        args.extend(["--out", path.to_str().unwrap(), "--format", fmt]);
        assert!(run(&args).status.success());
    }
    assert_eq!(std::fs::read(&csv1).unwrap(), std::fs::read(&csv2).unwrap());
    let text = std::fs::read_to_string(&csv1).unwrap();
    assert_eq!(text.lines().next().unwrap(), "a,F,S_over_N,negativity,n_r,n_sr,parity_gap");
    let rows = csv_rows(&csv1);
    assert_eq!(rows.len(), 2);
    let records: Vec<serde_json::Value> = serde_json::from_str(&std::fs::read_to_string(&json).unwrap()).unwrap();
    let keys = ["a", "F", "S_over_N", "negativity", "n_r", "n_sr", "parity_gap"];
    for (row, rec) in rows.iter().zip(&records) {
        for (x, k) in row.iter().zip(keys) {
            assert_eq!(*x, rec[k].as_f64().unwrap(), "{k}");
        }
    }
}

#[test]
fn config_file_supplies_flags_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("scan.json");
    let out = dir.path().join("s.csv");
    std::fs::write(
        &cfg,
        r#"{"family": "example3", "a-min": -1.5, "a-max": -0.5, "steps": 7, "delta": 0.01, "n-pairs": 11}"#,
    )
    .unwrap();
    let o = run(&["scan", "--config", cfg.to_str().unwrap(), "--steps", "3", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = csv_rows(&out);
    assert_eq!(rows.len(), 3);
    assert_eq!(rows[1][0], -1.0);
    std::fs::write(&cfg, r#"{"family": "example3", "stpes": 3}"#).unwrap();
    assert_eq!(run(&["scan", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn build_ham_round_trips_and_reports_spin_form() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("h.txt");
    let o = run(&["build-ham", "--family", "example3", "--a", "1", "--out", path.to_str().unwrap()]);
    assert!(o.status.success());
    let text = std::fs::read_to_string(&path).unwrap();
    assert!(text.contains("# family: example3"));
    assert!(text.contains("# spin_form_scale:"));
    assert!(text.contains("# vector 0:"));
    let m = read_local_term(BufReader::new(text.as_bytes())).unwrap();
    assert_eq!(m.shape(), (27, 27));
    let expected = default_local_term(&FamilyId::Example3.eval(1.0).unwrap()).unwrap();
    assert!(max_abs_diff(&m, &expected.matrix) < 1e-15);
    let ev = hermitian_eigenvalues(&m);
    assert!(ev[0] > -1e-12);
    assert_eq!(ev.iter().filter(|l| l.abs() > 1e-10).count(), 1);
}

#[test]
fn build_ham_without_spin_form_notes_it() {
    let text = stdout(&run(&["build-ham", "--family", "example3", "--a", "-1"]));
    assert!(text.contains("# spin_form: unavailable"));
}

#[test]
fn verify_all_families_on_six_sites() {
    for (f, a) in [("horodecki", "0.4"), ("chi2a", "-0.3"), ("chi2b", "0.7"), ("example3", "-1.2")] {
        let o = run(&["verify", "--family", f, "--a", a, "--sites", "6"]);
        assert_eq!(o.status.code(), Some(0), "{f}: {}", stdout(&o));
        assert!(stdout(&o).contains("result PASS"));
    }
}

#[test]
fn verify_negative_control_and_bad_sites() {
    let o = run(&["verify", "--family", "horodecki", "--a", "0.4", "--sites", "4", "--corrupt-local-term"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(stdout(&o).contains("result FAIL"));
    assert_eq!(run(&["verify", "--family", "horodecki", "--a", "0.4", "--sites", "5"]).status.code(), Some(2));
    assert_eq!(run(&["verify", "--family", "horodecki", "--a", "0.4", "--sites", "12"]).status.code(), Some(2));
    assert_eq!(
        run(&["verify", "--family", "horodecki", "--a", "0.4", "--couplings", "1,-1"]).status.code(),
        Some(2)
    );
}

#[test]
fn verify_ten_sites_uses_matrix_free_path() {
    let o = run(&["verify", "--family", "chi2a", "--a", "0.2", "--sites", "10"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(stdout(&o).contains("min_eigenvalue n/a"));
}

#[test]
fn gsf_reports_parity_pair() {
    let o = run(&["gsf", "--family", "horodecki", "--a", "0.5", "--format", "json"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(v["parity_gap"].as_f64().unwrap() < 1e-6);
    assert!(v["S"].as_f64().unwrap() <= 0.0);
    assert_eq!(v["n_pairs"].as_u64(), Some(100_000_000));
}
