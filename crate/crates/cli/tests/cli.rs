//! End-to-end tests of the `hsflow` binary: flow -> analyze -> render on
//! a coarse grid, exit codes, format roundtrips, and schema conformance
//! of the report.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn bin() -> &'static str {
    env!("CARGO_BIN_EXE_hsflow")
}

fn run(args: &[&str]) -> Output {
    Command::new(bin())
        .args(args)
        .output()
        .expect("binary runs")
}

fn tmpdir(name: &str) -> PathBuf {
    let d = std::env::temp_dir().join(format!("hsflow_cli_{name}"));
    std::fs::create_dir_all(&d).unwrap();
    d
}

fn write_spec(dir: &Path, name: &str, body: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, body).unwrap();
    p
}

#[test]
fn flow_analyze_render_roundtrip() {
    let dir = tmpdir("roundtrip");
    let spec = write_spec(&dir, "zero.json", r#"{"variant":"zero"}"#);
    let flow = dir.join("flow.hsg");
    let out = run(&[
        "flow",
        "--spec",
        spec.to_str().unwrap(),
        "--n",
        "65",
        "--nt",
        "11",
        "--out",
        flow.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "flow failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let table = String::from_utf8_lossy(&out.stdout);
    assert!(table.contains("area"), "missing area table: {table}");

    let report = dir.join("report.json");
    let out = run(&[
        "analyze",
        "--flow",
        flow.to_str().unwrap(),
        "--smax",
        "8",
        "--ds",
        "0.05",
        "--out",
        report.to_str().unwrap(),
    ]);
    assert!(
        out.status.success(),
        "analyze failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&report).unwrap()).unwrap();
    // structural conformance with the published schema
    let schema: serde_json::Value = serde_json::from_str(
        &std::fs::read_to_string(
            Path::new(env!("CARGO_MANIFEST_DIR")).join("../../schema/report.schema.json"),
        )
        .unwrap(),
    )
    .unwrap();
    for key in schema["required"].as_array().unwrap() {
        assert!(
            doc.get(key.as_str().unwrap()).is_some(),
            "report missing {key}"
        );
    }
    // radial flow: no window, all rows simply connected after t=0
    assert!(doc["window"].is_null());
    let t = doc["t"].as_array().unwrap();
    let area = doc["area"].as_array().unwrap();
    assert_eq!(t.len(), area.len());
    for (tv, av) in t.iter().zip(area) {
        assert!(
            (tv.as_f64().unwrap() - av.as_f64().unwrap()).abs() < 0.02,
            "area law violated at coarse resolution: t={tv} area={av}"
        );
    }
    // discs include the center disc with tiny residual
    let discs = doc["discs"].as_array().unwrap();
    assert!(discs.iter().any(|d| d["kind"] == "center"));
    assert!(doc["residuals"]["center_max"].as_f64().unwrap() <= 1e-6);

    let prefix = dir.join("img");
    let out = run(&[
        "render",
        "--flow",
        flow.to_str().unwrap(),
        "--style",
        "fronts",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let ppm = std::fs::read(dir.join("img.fronts.ppm")).unwrap();
    assert!(ppm.starts_with(b"P6\n65 65\n255\n"));
    assert!(std::fs::read_to_string(dir.join("img.profile.csv"))
        .unwrap()
        .starts_with("r,phi"));
    // deterministic bytes
    let out = run(&[
        "render",
        "--flow",
        flow.to_str().unwrap(),
        "--style",
        "fronts",
        "--out",
        prefix.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    assert_eq!(ppm, std::fs::read(dir.join("img.fronts.ppm")).unwrap());
}

#[test]
fn malformed_spec_exits_2() {
    let dir = tmpdir("badspec");
    let spec = write_spec(&dir, "bad.json", "{not json");
    let out = run(&[
        "flow",
        "--spec",
        spec.to_str().unwrap(),
        "--out",
        dir.join("x.hsg").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn missing_flow_file_exits_2() {
    let dir = tmpdir("missing");
    let out = run(&[
        "analyze",
        "--flow",
        dir.join("nope.hsg").to_str().unwrap(),
        "--out",
        dir.join("r.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn corrupt_flow_file_exits_2() {
    let dir = tmpdir("corrupt");
    let p = dir.join("bad.hsg");
    std::fs::write(&p, b"HSG2\n{}\n").unwrap();
    let out = run(&[
        "analyze",
        "--flow",
        p.to_str().unwrap(),
        "--out",
        dir.join("r.json").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "{out:?}");
}

#[test]
fn single_time_flow_is_empty_domain() {
    let dir = tmpdir("nt1");
    let spec = write_spec(&dir, "zero.json", r#"{"variant":"zero"}"#);
    let flow = dir.join("flow.hsg");
    let out = run(&[
        "flow",
        "--spec",
        spec.to_str().unwrap(),
        "--n",
        "33",
        "--nt",
        "1",
        "--out",
        flow.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "{out:?}");
    let text = String::from_utf8_lossy(&out.stdout);
    let row = text.lines().find(|l| l.trim_start().starts_with("0.0")).unwrap();
    let area: f64 = row.split_whitespace().nth(1).unwrap().parse().unwrap();
    assert_eq!(area, 0.0);
}

#[test]
fn verify_radial_suite_passes_coarse() {
    let out = Command::new(bin())
        .args(["verify", "--suite", "radial", "--n", "97", "--nt", "41"])
        .env("HSFLOW_JOBS", "1")
        .output()
        .unwrap();
    let text = String::from_utf8_lossy(&out.stdout);
    assert!(
        out.status.success(),
        "verify failed:\n{text}\n{}",
        String::from_utf8_lossy(&out.stderr)
    );
    assert!(text.lines().all(|l| l.is_empty() || l.starts_with("PASS")));
}
