use std::path::PathBuf;
use std::process::{Command, Output};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_hillspec"))
}

fn spec_file(name: &str, body: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("hillspec-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join(name);
    std::fs::write(&path, body).unwrap();
    path
}

fn free_spec() -> PathBuf {
    spec_file("free.json", r#"{"period": 3.141592653589793, "type": "fourier", "coefficients": [[0, [0, 0]]]}"#)
}

fn run(args: &[&str], spec: &PathBuf) -> Output {
    bin().args(args).arg("--spec").arg(spec).output().unwrap()
}

#[test]
fn discriminant_csv_starts_at_one() {
    let out = run(&["discriminant", "--window", "0,1", "--samples", "11", "--format", "csv"], &free_spec());
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("e,re_delta,im_delta,re_dprime,im_dprime"));
    let first: Vec<f64> = lines.next().unwrap().split(',').map(|x| x.parse().unwrap()).collect();
    assert_eq!(first.len(), 5);
    assert_eq!(first[0], 0.0);
    assert!((first[1] - 1.0).abs() < 1e-9 && first[2].abs() < 1e-12);
    assert_eq!(text.lines().count(), 12);
}

#[test]
fn free_spectrum_is_one_arc() {
    let out = run(&["spectrum", "--box", "-1,26,-1,1", "--format", "json"], &free_spec());
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let doc: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(doc["schema"], "hillspec/1");
    assert_eq!(doc["arc_count"], 1);
    assert_eq!(doc["arcs"][0]["start"]["kind"], "band_edge");
    assert_eq!(doc["arcs"][0]["end"]["kind"], "box_exit");
    assert_eq!(doc["pt_symmetric"], true);
}

#[test]
fn spectrum_output_is_deterministic() {
    let spec = free_spec();
    let args = ["spectrum", "--box", "-1,10,-1,1", "--format", "json"];
    assert_eq!(run(&args, &spec).stdout, run(&args, &spec).stdout);
}

#[test]
fn verify_passes_on_free_edges() {
    let out = run(&["verify", "--box", "0.5,9.5,-1,1", "--format", "json"], &free_spec());
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stdout));
}

#[test]
fn exit_codes() {
    let missing = bin().args(["spectrum", "--spec", "/nonexistent/spec.json"]).output().unwrap();
    assert_eq!(missing.status.code(), Some(5));

    let bad = spec_file("bad.json", r#"{"period": 6.283185307179586, "type": "expression", "source": "sin(x"}"#);
    assert_eq!(run(&["spectrum"], &bad).status.code(), Some(2));

    let unknown = spec_file("unknown.json", r#"{"period": 1.0, "type": "fourier", "coefficients": [], "extra": 1}"#);
    assert_eq!(run(&["discriminant"], &unknown).status.code(), Some(2));

    assert_eq!(bin().args(["spectrum", "--bogus"]).output().unwrap().status.code(), Some(1));
    assert_eq!(run(&["discriminant", "--box", "-1,1,-1,1", "--format", "svg"], &free_spec()).status.code(), Some(1));
    assert_eq!(run(&["discriminant", "--ode-tol", "1"], &free_spec()).status.code(), Some(1));
    assert_eq!(bin().arg("--help").output().unwrap().status.code(), Some(0));
}

#[test]
fn scan_family_reports_certificates() {
    let spec = spec_file("family.json", r#"{"period": 6.283185307179586, "type": "expression", "source": "A*i*sin(x)^3"}"#);
    let out = run(&["scan-family", "--amplitudes", "1,2,2", "--window", "-1,5", "--format", "csv"], &spec);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), 2);
    for row in rows {
        let cols: Vec<&str> = row.split(',').collect();
        assert_eq!(cols[1], "true");
        assert!(cols[3].parse::<usize>().unwrap() >= 1, "{row}");
    }
}
