//! End-to-end runs of the `ymac` binary.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use ymac::cylinder::{BoundaryCondition, CylinderField};
use ymac::geometry::RadialProfile;

fn ymac(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ymac")).args(args).output().expect("binary runs")
}

fn json(bytes: &[u8]) -> serde_json::Value {
    serde_json::from_slice(bytes).expect("valid JSON")
}

#[test]
fn classify_half_amplitude() {
    let out = ymac(&["classify", "--v0", "0.5", "--vt0", "0"]);
    assert_eq!(out.status.code(), Some(0));
    let v = json(&out.stdout);
    assert_eq!(v["class"], "Periodic");
    assert!((v["M"].as_f64().unwrap() - 0.5).abs() < 1e-15);
    assert_eq!(v["c"].as_f64().unwrap(), -0.5625);
    assert_eq!(v["origin"], "discontinuous");
    assert!(v["a"].is_null());
}

#[test]
fn classify_soliton_and_unbounded() {
    let v = json(&ymac(&["classify", "--v0", "0", "--vt0", "-1"]).stdout);
    assert_eq!(v["class"], "Soliton");
    assert_eq!(v["a"].as_f64().unwrap(), 1.0);
    assert_eq!(v["sign"], 1);
    assert_eq!(v["origin"], 1);
    let v = json(&ymac(&["classify", "--v0", "2", "--vt0", "0"]).stdout);
    assert_eq!(v["class"], "UnboundedBranch");
    assert_eq!(v["reason"], "c_below_minus_one");
    assert_eq!(v["origin"], "undefined");
}

#[test]
fn period_grid_has_nine_agreeing_rows() {
    let out = ymac(&["period", "--m-grid", "0.1:0.9:0.1"]);
    assert_eq!(out.status.code(), Some(0));
    let mut rd = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), ["M", "T_quad", "T_agm", "err"]);
    let rows: Vec<Vec<f64>> =
        rd.records().map(|r| r.unwrap().iter().map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r[3] < 1e-10 && (r[1] - r[2]).abs() < 1e-10));
}

#[test]
fn period_with_orbit_column() {
    let out = ymac(&["period", "--m", "0.5", "--ode"]);
    let mut rd = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(rd.headers().unwrap().len(), 5);
    let r: Vec<f64> = rd.records().next().unwrap().unwrap().iter().map(|x| x.parse().unwrap()).collect();
    assert!(((r[3] - r[1]) / r[1]).abs() < 1e-6);
}

#[test]
fn soliton_output_round_trips_and_classifies() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let out = ymac(&["--out", d, "soliton", "--a", "2", "--sign", "1"]);
    assert_eq!(out.status.code(), Some(0));
    let prof = RadialProfile::from_csv(fs::File::open(dir.path().join("soliton.csv")).unwrap()).unwrap();
    assert_eq!(prof.len(), 2001);
    let direct: Vec<f64> = prof.r_grid().iter().map(|r| (4.0 - r * r) / (4.0 + r * r)).collect();
    for (u, w) in prof.values().iter().zip(&direct) {
        assert!((u - w).abs() <= 1e-14);
    }
    let manifest = json(&fs::read(dir.path().join("manifest.json")).unwrap());
    assert_eq!(manifest["subcommand"], "soliton");
    assert_eq!(manifest["parameters"]["a"], "2.0");
    assert_eq!(manifest["seed"], 0);

    let csv_path = dir.path().join("soliton.csv");
    let v = json(&ymac(&["classify", "--profile", csv_path.to_str().unwrap()]).stdout);
    assert_eq!(v["class"], "Soliton");
    assert!((v["a"].as_f64().unwrap() - 2.0).abs() < 1e-6);

    let e = json(&ymac(&["energy", "--profile", csv_path.to_str().unwrap(), "--window", "-10:10"]).stdout);
    assert_eq!(e["finite"], true);
    assert!((e["value"].as_f64().unwrap() - 16.0 * std::f64::consts::PI / 3.0).abs() < 1e-3);
}

#[test]
fn energy_of_non_decaying_tail_is_null() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("zero.csv");
    let prof = RadialProfile::sample_cylinder(-5.0, 5.0, 101, |_| 0.0).unwrap();
    prof.to_csv(fs::File::create(&path).unwrap()).unwrap();
    let e = json(&ymac(&["energy", "--profile", path.to_str().unwrap(), "--window", "whole"]).stdout);
    assert!(e["value"].is_null());
    assert_eq!(e["finite"], false);
    assert!(e["windowed_value"].as_f64().unwrap() > 0.0);
}

#[test]
fn orbit_writes_table_and_events() {
    let out = ymac(&["orbit", "--v0", "2", "--vt0", "0", "--t-end", "10"]);
    assert_eq!(out.status.code(), Some(0));
    let ev = json(&out.stderr);
    assert_eq!(ev["escaped"], true);
    assert_eq!(ev["events"].as_array().unwrap().last().unwrap()["kind"], "bound_exceeded");
    let mut rd = csv::Reader::from_reader(out.stdout.as_slice());
    assert_eq!(rd.headers().unwrap().iter().collect::<Vec<_>>(), ["t", "v", "v_t", "c"]);
    assert!(rd.records().count() > 2);
}

fn relax_args<'a>(d: &'a str, extra: &[&'a str]) -> Vec<&'a str> {
    let mut v = vec!["--out", d, "--quiet", "relax", "--n-t", "17", "--n-theta", "8", "--t-min", "-1", "--t-max", "1"];
    v.extend_from_slice(extra);
    v
}

#[test]
fn relax_is_deterministic_and_round_trips() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = ymac(&relax_args(dir.path().to_str().unwrap(), &["--init", "random:0.3", "--tol", "1e-9"]));
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let fa = fs::read(a.path().join("relax_field.csv")).unwrap();
    assert_eq!(fa, fs::read(b.path().join("relax_field.csv")).unwrap());
    assert_eq!(
        fs::read(a.path().join("relax_report.json")).unwrap(),
        fs::read(b.path().join("relax_report.json")).unwrap()
    );
    let bc = BoundaryCondition::Dirichlet(0.0);
    let field = CylinderField::from_csv(fa.as_slice(), bc, bc).unwrap();
    assert!(field.max_abs() <= 1e-8);
    let report = json(&fs::read(a.path().join("relax_report.json")).unwrap());
    assert_eq!(report["converged"], true);

    // a different seed gives a different field
    let c = tempfile::tempdir().unwrap();
    let mut args = vec!["--seed", "5"];
    args.extend(relax_args(c.path().to_str().unwrap(), &["--init", "random:0.3", "--max-steps", "0"]));
    ymac(&args);
    assert_ne!(fa, fs::read(c.path().join("relax_field.csv")).unwrap());
}

#[test]
fn relax_exit_codes() {
    let d = tempfile::tempdir().unwrap();
    let dir = d.path().to_str().unwrap();
    let out = ymac(&relax_args(dir, &["--init", "perturbed-soliton:1:0.1", "--max-steps", "1"]));
    assert_eq!(out.status.code(), Some(2));
    let out = ymac(&relax_args(dir, &["--dt-factor", "0.3"]));
    assert_eq!(out.status.code(), Some(1));
    let out = ymac(&relax_args(dir, &["--init", "nonsense"]));
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn io_error_exit_3() {
    let out = ymac(&["classify", "--profile", "/nonexistent/profile.csv"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn unknown_subcommand_exit_64() {
    let out = ymac(&["launch"]);
    assert_eq!(out.status.code(), Some(64));
    assert!(!out.stderr.is_empty());
}

#[test]
fn check_group_and_negative_control() {
    let out = ymac(&["--quiet", "check", "--only", "orbit"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("[PASS]")).count(), 2);

    let out = ymac(&["--quiet", "check", "--only", "first-integral-drift", "--integrator-tol", "1e-3"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8(out.stdout).unwrap().contains("[FAIL]"));
}

#[test]
fn check_writes_json_report() {
    let d = tempfile::tempdir().unwrap();
    let out = ymac(&["--quiet", "--out", d.path().to_str().unwrap(), "check", "--only", "energy"]);
    assert_eq!(out.status.code(), Some(0));
    let report = json(&fs::read(d.path().join("check.json")).unwrap());
    assert_eq!(report["passed"], 1);
    assert!(Path::new(&d.path().join("manifest.json")).exists());
}
