//! End-to-end runs of the binary: exit codes, file formats, table values.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_fbm-approx"))
}

fn tempdir(name: &str) -> std::path::PathBuf {
    let dir = std::env::temp_dir().join(format!("fbm-approx-cli-{name}-{}", std::process::id()));
    let _ = std::fs::remove_dir_all(&dir);
    std::fs::create_dir_all(&dir).unwrap();
    dir
}

fn read(path: &Path) -> String {
    std::fs::read_to_string(path).unwrap_or_else(|e| panic!("reading {}: {e}", path.display()))
}

#[test]
fn invalid_hurst_exits_2_with_range_in_message() {
    let out = bin().args(["solve", "--H", "0.4", "--N", "10"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    let stderr = String::from_utf8_lossy(&out.stderr);
    assert!(stderr.contains("(0.5, 1)"), "diagnostic must name the valid range: {stderr}");
}

#[test]
fn unknown_flag_exits_2() {
    let out = bin().args(["solve", "--bogus"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn table_reproduces_reference_row() {
    let dir = tempdir("table");
    let out = bin()
        .args(["table", "--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir.join("table.csv"));
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("H,minF,dual,gap,iters"));
    let mut found = false;
    for line in lines {
        let fields: Vec<&str> = line.split(',').collect();
        assert_eq!(fields.len(), 5);
        let h: f64 = fields[0].parse().unwrap();
        let min_f: f64 = fields[1].parse().unwrap();
        if (h - 0.75).abs() < 1e-12 {
            assert!((min_f - 0.0320).abs() <= 1e-3, "minF at H=0.75 was {min_f}");
            found = true;
        }
    }
    assert!(found, "no H=0.75 row in table output");
}

#[test]
fn solve_writes_json_document() {
    let dir = tempdir("solve");
    let out = bin()
        .args(["solve", "--H", "0.75", "--N", "40", "--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let json: serde_json::Value = serde_json::from_str(&read(&dir.join("solve.json"))).unwrap();
    for key in ["config", "result", "structure", "meta"] {
        assert!(json.get(key).is_some(), "missing {key} object");
    }
    assert!(json["result"]["gap"].as_f64().unwrap() <= 1e-6);
    assert!(json["meta"]["timestamp"].as_str().unwrap().contains('T'));
}

#[test]
fn profile_and_kernel_outputs() {
    let dir = tempdir("profile");
    let out = bin()
        .args(["profile", "--H", "0.75", "--N", "60", "--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir.join("profile.csv"));
    assert!(csv.starts_with("s,a_s,k_Ns,lambda_s,h_s\n"));
    assert_eq!(csv.lines().count(), 61);
    let svg = read(&dir.join("profile.svg"));
    assert!(svg.starts_with("<?xml"));
    assert!(svg.contains("<svg") && svg.trim_end().ends_with("</svg>"));

    let out = bin()
        .args(["kernel", "--H", "0.8", "--N", "10", "--out", dir.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(out.status.success());
    let csv = read(&dir.join("kernel.csv"));
    assert!(csv.starts_with("t,s,K\n"));
    // Triangular grid: 10 * 11 / 2 entries plus header.
    assert_eq!(csv.lines().count(), 56);
}

#[test]
fn curve_monotone_on_small_model() {
    let dir = tempdir("curve");
    let out = bin()
        .args(["curve", "--N", "16", "--out", dir.to_str().unwrap(), "--format", "csv"])
        .output()
        .unwrap();
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let csv = read(&dir.join("curve.csv"));
    assert_eq!(csv.lines().count(), 50);
    assert!(!dir.join("curve.svg").exists(), "csv format must not emit svg");
}

#[test]
fn check_suite_passes_on_fresh_build() {
    let out = bin().args(["check"]).output().unwrap();
    let stdout = String::from_utf8_lossy(&out.stdout);
    assert!(out.status.success(), "check failed:\n{stdout}");
    assert!(stdout.lines().filter(|l| l.starts_with("PASS ")).count() >= 7);
    assert!(!stdout.contains("FAIL"));
}
