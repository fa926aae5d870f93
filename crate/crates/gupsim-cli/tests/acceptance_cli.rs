//! CLI-level acceptance: the bound and phase commands with their budgets, the
//! byte-identity of repeated verify runs, strict config validation, and the
//! golden phase report.

use std::path::PathBuf;
use std::process::{Command, Output};
use std::time::Instant;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gupsim"))
}

fn run_ok(args: &[&str]) -> Output {
    let out = bin().args(args).output().expect("spawn gupsim");
    assert!(
        out.status.success(),
        "gupsim {args:?} failed: {}\n{}",
        out.status,
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

fn stdout_json(args: &[&str]) -> serde_json::Value {
    let out = run_ok(args);
    serde_json::from_slice(&out.stdout).expect("report JSON")
}

#[test]
fn bound_yb_within_one_order() {
    // criterion: bound --species Yb171 --accuracy 1e-5 in [1e23, 1e25], < 1 s
    let start = Instant::now();
    let v = stdout_json(&["bound", "--species", "Yb171", "--accuracy", "1e-5"]);
    let elapsed = start.elapsed().as_secs_f64();
    println!("criterion 6 (cli): bound runtime {elapsed:.2}s [budget 1s]");
    assert!(elapsed < 1.0, "bound took {elapsed:.2}s");
    let bound = v["beta0_bound"].as_f64().unwrap();
    assert!((1e23..=1e25).contains(&bound), "bound {bound}");
    assert_eq!(v["regime"], "linear");
    // sensitivity table is attached
    assert!(!v["sensitivity"].as_array().unwrap().is_empty());
    // conventions embedded with exact decimal constants
    assert_eq!(v["conventions"]["constants"]["hbar_J_s"], "1.054571817e-34");
}

#[test]
#[allow(clippy::excessive_precision)]
fn phase_report_contents() {
    // criterion: phase --species Yb171 --beta0 1e33 at 256 bits carries the
    // unwrapped values, the wrapped values, and the sensitivity table; < 5 s
    let start = Instant::now();
    let v = stdout_json(&["phase", "--species", "Yb171", "--beta0", "1e33"]);
    let elapsed = start.elapsed().as_secs_f64();
    println!("criterion 7 (cli): phase runtime {elapsed:.2}s [budget 5s]");
    assert!(elapsed < 5.0);
    assert_eq!(v["precision_bits"], 256);
    // unwrapped values as full decimal strings
    let phi0_unwrapped = v["phi0_unwrapped"].as_str().unwrap();
    assert!(phi0_unwrapped.starts_with("-3.7508241535121623797632806395887"));
    let dphi_unwrapped = v["dphi_unwrapped"].as_str().unwrap();
    assert!(dphi_unwrapped.starts_with("1.77895521006418195769607461475"));
    // wrapped values against the independent high-precision reference
    assert!((v["phi0_wrapped"].as_f64().unwrap() - 0.410302336344225756).abs() < 1e-12);
    assert!((v["dphi_wrapped"].as_f64().unwrap() - 1.854496016410260785).abs() < 1e-12);
    assert!((v["phi_wrapped"].as_f64().unwrap() - 2.264798352754486541).abs() < 1e-12);
    // sensitivity table: every finite-difference check confirms its analytic
    // elasticity, and at least one pinned constant scrambles the wrap
    let sens = v["sensitivity"].as_array().unwrap();
    assert!(sens.len() >= 12);
    let mut scrambled = 0;
    for row in sens {
        if let Some(e) = row["fd_rel_error"].as_f64() {
            assert!(e < 1e-6, "{row}");
        }
        if row["wrap_scrambled_by_uncertainty"] == serde_json::json!(true) {
            scrambled += 1;
        }
    }
    assert!(scrambled >= 1, "no constant scrambles the wrapped phase");
    // provenance of every physical number is recorded
    assert_eq!(v["provenance"]["mass_u"], "catalog");
    assert_eq!(v["provenance"]["beta0"], "flag");
}

#[test]
fn golden_phase_yb171() {
    // frozen regression of the full report (byte-exact)
    let out = run_ok(&["phase", "--species", "Yb171", "--beta0", "1e33"]);
    let golden_path =
        PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/golden/phase_yb171.json");
    let golden = std::fs::read(&golden_path).expect("golden file");
    assert!(
        out.stdout == golden,
        "phase report drifted from the golden file {}",
        golden_path.display()
    );
}

#[test]
fn verify_quick_byte_identical() {
    // criterion: two verify runs produce byte-identical JSON reports
    let dir = std::env::temp_dir();
    let a = dir.join("gupsim_verify_a.json");
    let b = dir.join("gupsim_verify_b.json");
    let t = Instant::now();
    run_ok(&["verify", "--quick", "--output", a.to_str().unwrap()]);
    let once = t.elapsed().as_secs_f64();
    println!("criterion 9 (cli): verify --quick runtime {once:.1}s [budget 60s]");
    assert!(once < 60.0, "quick verify took {once:.1}s");
    run_ok(&["verify", "--quick", "--output", b.to_str().unwrap()]);
    let ba = std::fs::read(&a).unwrap();
    let bb = std::fs::read(&b).unwrap();
    assert!(!ba.is_empty());
    assert_eq!(ba, bb, "verify reports are not byte-identical");
    // every acceptance criterion appears exactly once
    let v: serde_json::Value = serde_json::from_slice(&ba).unwrap();
    let suites = v["suites"].as_array().unwrap();
    let mut ids: Vec<u64> = suites
        .iter()
        .map(|s| s["criterion"].as_u64().unwrap())
        .collect();
    ids.sort_unstable();
    assert_eq!(ids, (1..=9).collect::<Vec<u64>>());
    assert_eq!(v["all_passed"], serde_json::json!(true));
}

#[test]
fn config_rejects_unknown_keys() {
    let dir = std::env::temp_dir();
    let p = dir.join("gupsim_bad_config.json");
    std::fs::write(
        &p,
        r#"{ "plan": { "species": "Yb171", "extraneous_key": 1 } }"#,
    )
    .unwrap();
    let out = bin()
        .args(["phase", "--config", p.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("extraneous_key"),
        "error does not name the key: {err}"
    );
}

#[test]
fn config_requires_single_plan_source() {
    let dir = std::env::temp_dir();
    let p = dir.join("gupsim_two_sources.json");
    std::fs::write(
        &p,
        r#"{ "plan": { "species": "Yb171", "params": { "mass_u": 1.0 } } }"#,
    )
    .unwrap();
    let out = bin()
        .args(["phase", "--config", p.to_str().unwrap()])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("exactly one plan source"), "{err}");
}

#[test]
#[allow(clippy::excessive_precision)]
fn config_override_marks_user_provenance() {
    let dir = std::env::temp_dir();
    let p = dir.join("gupsim_override.json");
    std::fs::write(
        &p,
        r#"{ "plan": { "species": "Yb171", "overrides": { "mass_u": 170.936 }, "beta0": 1e33 } }"#,
    )
    .unwrap();
    let v = stdout_json(&["phase", "--config", p.to_str().unwrap()]);
    assert_eq!(v["provenance"]["mass_u"], "user");
    assert_eq!(v["provenance"]["trap_freq_over_2pi_hz"], "catalog");
    // the override reached the pipeline: phi0 differs from the catalog value
    assert!((v["phi0_wrapped"].as_f64().unwrap() - 0.410302336344225756).abs() > 1e-6);
}

#[test]
fn minimal_species_config_applies_defaults() {
    let dir = std::env::temp_dir();
    let p = dir.join("gupsim_minimal.json");
    std::fs::write(&p, r#"{ "plan": { "species": "Yb171" } }"#).unwrap();
    let v = stdout_json(&["phase", "--config", p.to_str().unwrap()]);
    assert_eq!(v["beta0"], "0");
    assert_eq!(v["precision_bits"], 256);
    assert_eq!(v["provenance"]["beta0"], "default");
    assert_eq!(v["dphi_wrapped"], 0.0);
}

#[test]
fn simulate_species_plan_caps_dimension() {
    // the reference Yb plan sits at kappa ~ 62; the composition oracle would
    // need D ~ 7700, beyond the 1024 cap, and must say so rather than run
    // silently truncated
    let out = bin()
        .args(["simulate", "--species", "Yb171", "--beta0", "1e33"])
        .output()
        .unwrap();
    assert!(!out.status.success());
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("beyond the cap"), "{err}");
}

#[test]
fn usage_error_exit_code() {
    let out = bin().args(["phase", "--no-such-flag"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
    // missing plan source is also a usage error
    let out = bin().args(["phase"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn table1_csv_columns() {
    let out = run_ok(&["table1", "--format", "csv"]);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(
        lines.next().unwrap(),
        "species,lambda_nm,N,nu_over_2pi_hz,dk_over_k,phi0_wrapped,regime,beta0_bound,claimed_bound,agreement"
    );
    let body: Vec<&str> = lines.collect();
    assert_eq!(body.len(), 3);
    let yb = body.iter().find(|l| l.starts_with("Yb171,")).unwrap();
    assert!(yb.ends_with(",true"), "Yb row should agree: {yb}");
    let be = body.iter().find(|l| l.starts_with("Be9,")).unwrap();
    assert!(be.contains(",quadratic,"), "Be row regime selector: {be}");
    assert!(be.ends_with(",false"), "Be row must be flagged: {be}");
}

#[test]
fn table1_json_flags_mismatches() {
    let v = stdout_json(&["table1"]);
    let rows = v["rows"].as_array().unwrap();
    let ca = rows.iter().find(|r| r["species"] == "Ca40").unwrap();
    assert_eq!(ca["agreement"], serde_json::json!(false));
    assert!(ca["log10_gap"].as_f64().unwrap() > 0.5);
}

#[test]
fn catalog_env_override() {
    let dir = std::env::temp_dir();
    let p = dir.join("gupsim_custom_catalog.json");
    let custom = serde_json::json!({
        "catalog_version": "custom-test",
        "shared": {
            "pulse_duration_s": "0.56e-6",
            "rabi1_rad_s": "2e9",
            "rabi2_rad_s": "2e9",
            "detuning_rad_s": "12e9"
        },
        "species": [{
            "name": "TestIon",
            "wavelength_nm": "400",
            "cycles": 1000,
            "trap_freq_over_2pi_hz": "1e5",
            "dk_over_k": "1.0",
            "mass_u": "100",
            "level_labels": ["e", "g", "r"],
            "claimed_bound": 1e24
        }]
    });
    std::fs::write(&p, serde_json::to_string_pretty(&custom).unwrap()).unwrap();
    let out = bin()
        .args(["phase", "--species", "TestIon", "--beta0", "1e30"])
        .env("GUPSIM_CATALOG", p.to_str().unwrap())
        .output()
        .unwrap();
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["species"], "TestIon");
    assert_eq!(v["conventions"]["catalog_version"], "custom-test");
}

#[test]
fn simulate_reports_oracle_runs() {
    let v = stdout_json(&[
        "simulate", "--kappa", "6", "--beta", "1e-4", "--cycles", "2",
    ]);
    let runs = v["runs"].as_array().unwrap();
    assert_eq!(runs.len(), 2);
    for r in runs {
        let rel = r["rel_deviation"].as_f64().unwrap();
        assert!(rel < 0.1, "oracle deviation {rel}");
    }
}
