use std::fs;
use std::process::Command;

use powersum_core::oracles::brute_cf;
use serde_json::Value;

struct Out {
    code: i32,
    stdout: String,
    stderr: String,
}

fn powersum(args: &[&str]) -> Out {
    let out = Command::new(env!("CARGO_BIN_EXE_powersum"))
        .args(args)
        .output()
        .expect("binary runs");
    Out {
        code: out.status.code().expect("exit code"),
        stdout: String::from_utf8(out.stdout).unwrap(),
        stderr: String::from_utf8(out.stderr).unwrap(),
    }
}

fn rows(csv: &str) -> Vec<Vec<String>> {
    csv.lines()
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn num(s: &str) -> f64 {
    s.parse().unwrap()
}

#[test]
fn density_grid_example() {
    let out = powersum(&[
        "density", "--d", "3", "--n", "1", "--xmin", "-2", "--xmax", "2", "--points", "8",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.starts_with("x,f,err_est,converged\n"));
    let table = rows(&out.stdout);
    assert_eq!(table.len(), 8);
    for r in &table {
        assert_ne!(num(&r[0]), 0.0);
        assert!(num(&r[1]) > 0.0);
        assert_eq!(r[3], "true");
    }
    // CSV mode sends the manifest to standard error
    let manifest: Value = serde_json::from_str(&out.stderr).unwrap();
    assert_eq!(manifest["command"], "density");
    assert_eq!(manifest["converged"].as_array().unwrap().len(), 8);
}

#[test]
fn origin_is_shifted_and_recorded() {
    let out = powersum(&[
        "density", "--d", "3", "--xmin", "-1", "--xmax", "1", "--points", "3", "--format", "json",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    let shifted = v["manifest"]["shifted_points"].as_array().unwrap();
    assert_eq!(shifted.len(), 1);
    assert_eq!(shifted[0]["index"], 1);
    assert_eq!(shifted[0]["used"], 0.5);
    assert_eq!(v["rows"][1]["x"], 0.5);
    let f1 = v["rows"][2]["f"].as_f64().unwrap();
    assert!((f1 - 0.0806569).abs() < 1e-5, "{f1}");
    let fm1 = v["rows"][0]["f"].as_f64().unwrap();
    assert!((f1 - fm1).abs() < 1e-12);
}

#[test]
fn csv_numbers_carry_seventeen_digits() {
    let out = powersum(&[
        "density", "--d", "4", "--xmin", "0.3", "--xmax", "1.7", "--points", "3",
    ]);
    assert_eq!(out.code, 0);
    for r in rows(&out.stdout) {
        for cell in &r[..3] {
            let mantissa = cell.split('e').next().unwrap().trim_start_matches('-');
            assert_eq!(mantissa.len(), 18, "{cell}");
        }
    }
}

#[test]
fn json_output_has_manifest_and_rows() {
    let out = powersum(&[
        "cdf", "--d", "3", "--xmin", "0", "--xmax", "1", "--points", "2", "--format", "json",
    ]);
    assert_eq!(out.code, 0);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    let keys: Vec<&String> = v.as_object().unwrap().keys().collect();
    assert_eq!(keys, ["manifest", "rows"]);
    for key in [
        "command",
        "d",
        "n",
        "epsilon",
        "quadrature",
        "seed",
        "version",
        "duration_seconds",
        "converged",
    ] {
        assert!(v["manifest"].get(key).is_some(), "{key}");
    }
    assert_eq!(v["manifest"]["n"], 1);
}

#[test]
fn small_power_is_a_usage_error() {
    let out = powersum(&[
        "density", "--d", "2", "--xmin", "1", "--xmax", "2", "--points", "2",
    ]);
    assert_eq!(out.code, 1);
    assert!(
        out.stderr.contains("d must be at least 3"),
        "{}",
        out.stderr
    );
    assert!(out.stdout.is_empty());
}

#[test]
fn other_usage_errors_exit_one() {
    let cases: &[&[&str]] = &[
        &[
            "density", "--d", "3", "--xmin", "2", "--xmax", "1", "--points", "4",
        ],
        &[
            "density", "--d", "3", "--eps", "0.6", "--xmin", "1", "--xmax", "2", "--points", "2",
        ],
        &[
            "density", "--d", "3", "--n", "0", "--xmin", "1", "--xmax", "2", "--points", "2",
        ],
        &[
            "density",
            "--d",
            "3",
            "--xmin",
            "1",
            "--xmax",
            "2",
            "--points",
            "2",
            "--threads",
            "0",
        ],
        &[
            "cdf", "--d", "3", "--xmin", "1", "--xmax", "2", "--points", "2", "--tol", "0",
        ],
        &[
            "cdf", "--d", "3", "--xmin", "1", "--xmax", "2", "--points", "2", "--tol", "1e-14",
        ],
        &[
            "mc",
            "--d",
            "3",
            "--n",
            "2",
            "--against",
            "exact-cdf",
            "--samples",
            "10",
        ],
        &["density", "--d", "3"],
        &["frobnicate"],
    ];
    for args in cases {
        assert_eq!(powersum(args).code, 1, "{args:?}");
    }
    assert_eq!(powersum(&["--help"]).code, 0);
}

#[test]
fn unattainable_tolerance_exits_two_with_rows() {
    let out = powersum(&[
        "density", "--d", "3", "--xmin", "2", "--xmax", "2", "--points", "1", "--tol", "1e-13",
    ]);
    assert_eq!(out.code, 2);
    let r = &rows(&out.stdout)[0];
    assert_eq!(r[3], "false");
    assert!((num(&r[1]) - 0.037879338713175).abs() < 1e-12);
}

#[test]
fn cdf_examples() {
    let out = powersum(&[
        "cdf", "--d", "3", "--xmin", "-3", "--xmax", "3", "--points", "13",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let f: Vec<f64> = rows(&out.stdout).iter().map(|r| num(&r[1])).collect();
    assert!((f[6] - 0.5).abs() < 1e-3);
    assert!(f.windows(2).all(|w| w[0] <= w[1]), "{f:?}");

    let out = powersum(&[
        "cdf", "--d", "4", "--xmin", "-1", "--xmax", "-1", "--points", "1",
    ]);
    assert_eq!(out.code, 0);
    assert_eq!(num(&rows(&out.stdout)[0][1]), 0.0);
}

#[test]
fn cf_examples() {
    let out = powersum(&[
        "cf", "--d", "3", "--n", "2", "--tmin", "-2", "--tmax", "2", "--points", "9",
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert!(out.stdout.starts_with("t,re,im,err_est,converged\n"));
    for r in rows(&out.stdout) {
        let (t, re, im) = (num(&r[0]), num(&r[1]), num(&r[2]));
        assert!(re.hypot(im) <= 1.0 + 1e-8);
        if t == 0.0 {
            assert!((re - 1.0).abs() < 1e-8 && im.abs() < 1e-8);
        }
    }

    let out = powersum(&[
        "cf", "--d", "3", "--tmin", "1", "--tmax", "1", "--points", "1",
    ]);
    let r = &rows(&out.stdout)[0];
    let reference = brute_cf(1.0, 3, 1e-12).unwrap();
    assert!((num(&r[1]) - reference.re).abs() < 1e-7);
    assert!((num(&r[2]) - reference.im).abs() < 1e-7);
}

#[test]
fn validate_report_structure() {
    let out = powersum(&["validate", "--d", "3", "--n", "1", "--level", "fast"]);
    assert_eq!(out.code, 0, "{}", out.stdout);
    let v: Value = serde_json::from_str(&out.stdout).unwrap();
    let checks = v["rows"].as_array().unwrap();
    assert!(checks.iter().all(|c| c["passed"] == true));
    let names: Vec<&str> = checks.iter().map(|c| c["name"].as_str().unwrap()).collect();
    for name in [
        "oracle_agreement",
        "symmetry",
        "imaginary_part",
        "continuation_check",
        "continuation_check_rejects",
        "path_independence",
        "inversion_identity",
        "normalization",
        "monte_carlo_ks",
    ] {
        assert!(names.contains(&name), "{name}");
    }
    let probes = v["adjudication"]["probes"].as_array().unwrap();
    assert_eq!(probes.len(), 3);
    for p in probes {
        assert!(p["accepted"]["oracle_deviation"].as_f64().unwrap() < 1e-5);
        assert!(p["statement"]["oracle_deviation"].as_f64().is_some());
    }
    assert!(v["adjudication"]["relationship"]
        .as_str()
        .unwrap()
        .contains("2π"));
}

#[test]
fn mc_is_repeatable_by_seed() {
    let args = [
        "mc",
        "--d",
        "3",
        "--n",
        "1",
        "--samples",
        "50000",
        "--seed",
        "7",
        "--format",
        "json",
    ];
    let a: Value = serde_json::from_str(&powersum(&args).stdout).unwrap();
    let b: Value = serde_json::from_str(&powersum(&args).stdout).unwrap();
    assert_eq!(a["rows"], b["rows"]);
    assert_eq!(a["ks"]["passed"], true);
    assert!(a["manifest"]["rng"].as_str().unwrap().contains("ChaCha20"));

    let other = [
        "mc",
        "--d",
        "3",
        "--n",
        "1",
        "--samples",
        "50000",
        "--seed",
        "8",
        "--format",
        "json",
    ];
    let c: Value = serde_json::from_str(&powersum(&other).stdout).unwrap();
    assert_ne!(a["rows"], c["rows"]);
}

#[test]
fn mc_quantile_table() {
    let out = powersum(&["mc", "--d", "3", "--samples", "20000", "--quantiles", "4"]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let table = rows(&out.stdout);
    assert_eq!(table.len(), 4);
    // the median of a symmetric law
    assert!(num(&table[1][1]).abs() < 0.05);
    assert!(out.stderr.contains("passed=true"));
}

#[test]
fn results_do_not_depend_on_thread_count() {
    let base = [
        "density", "--d", "3", "--n", "2", "--xmin", "-1.5", "--xmax", "1.5", "--points", "6",
    ];
    let one = powersum(&[&base[..], &["--threads", "1"]].concat());
    let three = powersum(&[&base[..], &["--threads", "3"]].concat());
    assert_eq!(one.code, 0);
    assert_eq!(one.stdout, three.stdout);
    let m: Value = serde_json::from_str(&three.stderr).unwrap();
    assert_eq!(m["threads"], 3);
}

#[test]
fn rerun_reproduces_csv_bit_for_bit() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("first.csv");
    let second = dir.path().join("second.csv");
    let out = powersum(&[
        "density",
        "--d",
        "5",
        "--n",
        "2",
        "--xmin",
        "-1",
        "--xmax",
        "1",
        "--points",
        "5",
        "--out",
        first.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 0);
    assert!(out.stdout.is_empty());
    let manifest = dir.path().join("first.csv.manifest.json");
    let out = powersum(&[
        "rerun",
        "--manifest",
        manifest.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    assert_eq!(fs::read(&first).unwrap(), fs::read(&second).unwrap());
}

#[test]
fn rerun_accepts_json_results() {
    let dir = tempfile::tempdir().unwrap();
    let first = dir.path().join("a.json");
    let second = dir.path().join("b.json");
    let args = [
        "cf", "--d", "4", "--tmin", "-1", "--tmax", "3", "--points", "5", "--format", "json",
    ];
    assert_eq!(
        powersum(&[&args[..], &["--out", first.to_str().unwrap()]].concat()).code,
        0
    );
    let out = powersum(&[
        "rerun",
        "--manifest",
        first.to_str().unwrap(),
        "--out",
        second.to_str().unwrap(),
    ]);
    assert_eq!(out.code, 0, "{}", out.stderr);
    let a: Value = serde_json::from_str(&fs::read_to_string(&first).unwrap()).unwrap();
    let b: Value = serde_json::from_str(&fs::read_to_string(&second).unwrap()).unwrap();
    assert_eq!(a["rows"], b["rows"]);
    assert_eq!(a["manifest"]["command"], b["manifest"]["command"]);
}

#[test]
fn rerun_of_a_missing_manifest_fails() {
    let out = powersum(&["rerun", "--manifest", "/nonexistent/manifest.json"]);
    assert_eq!(out.code, 1);
}
