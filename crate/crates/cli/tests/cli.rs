use std::f64::consts::PI;
use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use designcurve::curve::{HermiteSpline, PiecewiseCurve, Segment};
use designcurve::verify::Space;
use designcurve_cli::format::{parse_curve, serialize_curve, CurveDescription, Metadata};
use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_designcurve")).args(args).output().unwrap()
}

fn path(dir: &Path, name: &str) -> String {
    dir.join(name).display().to_string()
}

fn json(p: &str) -> Value {
    serde_json::from_str(&fs::read_to_string(p).unwrap()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

#[test]
fn explicit_curve_verifies_as_3_design() {
    let dir = tempfile::tempdir().unwrap();
    let curve = path(dir.path(), "s3.curve");
    let report = path(dir.path(), "s3.json");
    let o = bin(&["example", "--name", "s3-explicit", "--t", "3", "--out", &curve]);
    assert!(o.status.success(), "{}", stderr(&o));
    let o = bin(&["verify", "--curve", &curve, "--t", "3", "--space", "s3", "--report", &report]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&report);
    assert_eq!(r["verdict"], "pass");
    assert!(r["max_residual"].as_f64().unwrap() < 1e-9);
    assert_eq!(r["residuals"].as_array().unwrap().len(), 35);

    let o = bin(&["verify", "--curve", &curve, "--t", "4", "--space", "s3", "--report", &report]);
    assert_eq!(o.status.code(), Some(4));
    let err = stderr(&o);
    assert!(err.starts_with("ERROR VERIFY_FAIL "), "{err}");
    assert_eq!(err.trim_end().lines().count(), 1);
    assert_eq!(json(&report)["verdict"], "fail");
}

#[test]
fn stitched_equator_has_explicit_length() {
    let dir = tempfile::tempdir().unwrap();
    let eq = path(dir.path(), "equator.curve");
    let out = path(dir.path(), "gamma.curve");
    let report = path(dir.path(), "stitch.json");
    assert!(bin(&["example", "--name", "equator", "--out", &eq]).status.success());
    let o = bin(&["stitch", "--alpha", &eq, "--t", "3", "--epsilon", "0", "--out", &out, "--report", &report]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&report);
    let want = PI * 20f64.sqrt();
    assert!((r["length"].as_f64().unwrap() - want).abs() < 1e-8 * want);
    assert!((r["claimed_length"].as_f64().unwrap() - want).abs() < 1e-8 * want);
    assert_eq!(r["seed"], 0);
    assert_eq!(r["plan"]["g"], 1);

    let cert = path(dir.path(), "cert.json");
    let o = bin(&["verify", "--curve", &out, "--t", "3", "--space", "s3", "--report", &cert]);
    assert!(o.status.success(), "{}", stderr(&o));
}

#[test]
fn stitching_is_deterministic_given_seed() {
    let dir = tempfile::tempdir().unwrap();
    let eq = path(dir.path(), "equator.curve");
    assert!(bin(&["example", "--name", "equator", "--out", &eq]).status.success());
    let mut outputs = Vec::new();
    for run in 0..2 {
        let out = path(dir.path(), &format!("g{run}.curve"));
        let rep = path(dir.path(), &format!("r{run}.json"));
        let o = bin(&["stitch", "--alpha", &eq, "--t", "2", "--epsilon", "0.1", "--seed", "42", "--out", &out, "--report", &rep]);
        assert!(o.status.success(), "{}", stderr(&o));
        let mut r = json(&rep);
        r.as_object_mut().unwrap().remove("output");
        outputs.push((fs::read(&out).unwrap(), r));
    }
    assert!(outputs[0].0 == outputs[1].0, "stitched curves differ");
    assert_eq!(outputs[0].1, outputs[1].1);
    let r = &outputs[0].1;
    assert_eq!(r["seed"], 42);
    assert_eq!(r["simplicity_checked"], true);
}

#[test]
fn torus_curve_verifies() {
    let dir = tempfile::tempdir().unwrap();
    let curve = path(dir.path(), "torus_3_2.curve");
    let report = path(dir.path(), "torus.json");
    assert!(bin(&["example", "--name", "torus", "--t", "3", "--d", "2", "--out", &curve]).status.success());
    let o = bin(&["verify", "--curve", &curve, "--t", "3", "--space", "torus", "--report", &report]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&report);
    assert_eq!(r["verdict"], "pass");
    let want = 2.0 * PI * 17f64.sqrt();
    assert!((r["length"].as_f64().unwrap() - want).abs() < 1e-9 * want);
    assert_eq!(r["space"], "torus-2");
}

#[test]
fn lift_reports_holonomy() {
    let dir = tempfile::tempdir().unwrap();
    let eq = path(dir.path(), "equator.curve");
    let beta = path(dir.path(), "beta.curve");
    let report = path(dir.path(), "lift.json");
    assert!(bin(&["example", "--name", "equator", "--out", &eq]).status.success());
    let h = (0.5f64).sqrt().to_string();
    let start = format!("{h},0,{h},0");
    let o = bin(&["lift", "--alpha", &eq, "--start", &start, "--t", "3", "--out", &beta, "--report", &report]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r = json(&report);
    assert!((r["holonomy_angle"].as_f64().unwrap().abs() - PI).abs() < 1e-9);
    assert!((r["phi_alpha"].as_f64().unwrap().abs() - PI / 2.0).abs() < 1e-9);
    assert!((r["lift_length"].as_f64().unwrap() - PI).abs() < 1e-9);
    assert!((r["generator_bound"].as_f64().unwrap() - PI / 2.0).abs() < 1e-12);
    let lifted = parse_curve(&fs::read_to_string(&beta).unwrap()).unwrap();
    assert!(!lifted.closed);
    assert!(lifted.to_curve().is_ok());

    let o = bin(&["lift", "--alpha", &eq, "--start", "1,0,0,0", "--out", &beta, "--report", &report]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("ERROR DOMAIN "));
}

#[test]
fn export_rows_and_projection() {
    let dir = tempfile::tempdir().unwrap();
    let curve = path(dir.path(), "s3.curve");
    let csv = path(dir.path(), "s3.csv");
    assert!(bin(&["example", "--name", "s3-explicit", "--t", "3", "--out", &curve]).status.success());
    let o = bin(&["export", "--curve", &curve, "--samples", "64", "--format", "csv", "--projection", "stereographic", "--out", &csv]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("s,x,y,z"));
    let rows: Vec<Vec<f64>> = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    assert_eq!(rows.len(), 65);
    assert!(rows.windows(2).all(|w| w[1][0] > w[0][0]));
    assert_eq!(rows[0][0], 0.0);
    assert_eq!(rows[64][0], 1.0);
    // the curve lies on the Clifford torus: |a|² = 1/2 so x² + y² relates to w
    let first = &rows[0];
    assert!((first[1] - 1.0 / (2f64.sqrt())).abs() < 1e-12);

    let o = bin(&["export", "--curve", &curve, "--samples", "4"]);
    assert!(o.status.success());
    let stdout = String::from_utf8(o.stdout).unwrap();
    assert_eq!(stdout.lines().next(), Some("s,x1,x2,x3,x4"));
    assert_eq!(stdout.lines().count(), 6);
}

#[test]
fn lemmas_command_prints_small_residuals() {
    let o = bin(&["lemmas", "--t", "4", "--seed", "3"]);
    assert!(o.status.success(), "{}", stderr(&o));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!(r["polygon_design_residual"].as_f64().unwrap() < 1e-11);
    assert!(r["average_exchange_residual"].as_f64().unwrap() < 1e-10);
    assert!(r["degree_halving"]["residual"].as_f64().unwrap() < 1e-8);
    assert!(r["enclosed_area"]["residual"].as_f64().unwrap() < 1e-7);
    assert_eq!(r["seed"], 3);
}

#[test]
fn missing_ambient_dim_is_a_parse_error() {
    let dir = tempfile::tempdir().unwrap();
    let eq = path(dir.path(), "equator.curve");
    assert!(bin(&["example", "--name", "equator", "--out", &eq]).status.success());
    let text = fs::read_to_string(&eq).unwrap();
    let broken: String = text.lines().filter(|l| !l.contains("\"ambient_dim\"")).collect::<Vec<_>>().join("\n");
    let err = parse_curve(&broken).unwrap_err().to_string();
    assert!(err.contains("ambient_dim"), "{err}");
    fs::write(&eq, broken).unwrap();
    let report = path(dir.path(), "r.json");
    let o = bin(&["verify", "--curve", &eq, "--t", "1", "--space", "s2", "--report", &report]);
    assert_eq!(o.status.code(), Some(2));
    let e = stderr(&o);
    assert!(e.starts_with("ERROR PARSE ") && e.contains("ambient_dim"), "{e}");
}

#[test]
fn equator_file_round_trips_bytes() {
    let dir = tempfile::tempdir().unwrap();
    let eq = path(dir.path(), "equator.curve");
    assert!(bin(&["example", "--name", "equator", "--out", &eq]).status.success());
    let text = fs::read_to_string(&eq).unwrap();
    assert_eq!(serialize_curve(&parse_curve(&text).unwrap()), text);
}

#[test]
fn hermite_fixture_loads_and_closes() {
    // tilted small circle sampled at 100 knots
    let knots = HermiteSpline::uniform_knots(99);
    let (rho, tilt) = (0.7f64, 0.4f64);
    let spline = HermiteSpline::from_fn(knots, |u| {
        let th = 2.0 * PI * u;
        let p = [rho.cos(), rho.sin() * th.cos(), rho.sin() * th.sin()];
        let v = [0.0, -2.0 * PI * rho.sin() * th.sin(), 2.0 * PI * rho.sin() * th.cos()];
        let rot = |x: [f64; 3]| vec![x[0] * tilt.cos() - x[2] * tilt.sin(), x[1], x[0] * tilt.sin() + x[2] * tilt.cos()];
        (rot(p), rot(v))
    });
    let curve = PiecewiseCurve::single(Segment::Hermite(spline)).unwrap();
    let meta = Metadata {
        name: "hermite fixture".into(),
        provenance: "generated".into(),
    };
    let text = serialize_curve(&CurveDescription::from_curve(&curve, &Space::sphere(3), meta));
    let dir = tempfile::tempdir().unwrap();
    let file = path(dir.path(), "hermite.curve");
    fs::write(&file, &text).unwrap();
    let d = parse_curve(&fs::read_to_string(&file).unwrap()).unwrap();
    let Segment::Hermite(h) = &d.segments[0] else { panic!("expected hermite segment") };
    assert_eq!(h.knots.len(), 100);
    let loaded = d.to_curve().unwrap();
    assert!(loaded.closure_gap() < 1e-9);
    assert_eq!(serialize_curve(&d), text);

    let csv = bin(&["export", "--curve", &file, "--samples", "10", "--projection", "stereographic"]);
    assert!(csv.status.success(), "{}", stderr(&csv));
    assert_eq!(String::from_utf8(csv.stdout).unwrap().lines().next(), Some("s,x,y"));
}

#[test]
fn usage_and_domain_errors_are_single_lines() {
    let o = bin(&["stitch", "--t", "3"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("ERROR USAGE "));
    let dir = tempfile::tempdir().unwrap();
    let out = path(dir.path(), "x.curve");
    let o = bin(&["example", "--name", "s3-explicit", "--t", "5", "--out", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("ERROR DOMAIN "));
    let o = bin(&["verify", "--curve", "/nonexistent/file", "--t", "1", "--space", "s2", "--report", &out]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).starts_with("ERROR IO "));
    assert!(bin(&["--help"]).status.success());
}
