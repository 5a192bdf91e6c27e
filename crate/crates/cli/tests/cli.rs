use std::io::{BufRead, BufReader, Read, Write};
use std::net::TcpStream;
use std::path::{Path, PathBuf};
use std::process::{Command, Output, Stdio};

use choreo_core::notation::{parse, print};
use serde_json::Value;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn choreo(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_choreo"))
        .args(args)
        .env("CHOREO_COLOR", "never")
        .output()
        .unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn json_out(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| {
        panic!("{e}: {}", String::from_utf8_lossy(&o.stdout))
    })
}

#[test]
fn check_exit_codes() {
    let good = choreo(&["check", s(&fixture("demo.mvt"))]);
    assert_eq!(good.status.code(), Some(0));
    assert!(good.stdout.is_empty() && good.stderr.is_empty());

    let bad = choreo(&["check", s(&fixture("bad.mvt"))]);
    assert_eq!(bad.status.code(), Some(1));
    let err = String::from_utf8(bad.stderr).unwrap();
    assert!(err.contains("bad.mvt:5:10: error: unknown direction 'sideways_mid'"), "{err}");

    assert_eq!(choreo(&["check", "/no/such/file.mvt"]).status.code(), Some(2));
    assert_eq!(choreo(&["check"]).status.code(), Some(2));
    assert_eq!(choreo(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn transform_twice_is_the_canonical_print() {
    let dir = tempfile::tempdir().unwrap();
    let once = dir.path().join("r.mvt");
    let twice = dir.path().join("rr.mvt");
    let src = fixture("demo.mvt");
    for (from, to) in [(src.as_path(), &once), (once.as_path(), &twice)] {
        let o = choreo(&["transform", s(from), "--op", "retrograde", "-o", s(to)]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    }
    let canonical = print(&parse(&std::fs::read_to_string(&src).unwrap()).unwrap());
    assert_eq!(std::fs::read_to_string(&twice).unwrap(), canonical);
    assert_ne!(std::fs::read_to_string(&once).unwrap(), canonical);

    let o = choreo(&["transform", s(&src), "--op", "level", "--args", "-1"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8(o.stdout).unwrap().contains("_low"));
    assert_eq!(choreo(&["transform", s(&src), "--op", "scale"]).status.code(), Some(2));
}

#[test]
fn compile_duration_matches_check() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("demo.traj.json");
    let rate = 50.0;
    let o = choreo(&[
        "compile",
        s(&fixture("demo.mvt")),
        "--platform",
        s(&fixture("arm3.eurdf.json")),
        "--ecl",
        s(&fixture("arm3.ecl.json")),
        "-o",
        s(&out),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let traj: Value = serde_json::from_str(&std::fs::read_to_string(&out).unwrap()).unwrap();
    let frames = traj["frames"].as_array().unwrap();
    let end = frames.last().unwrap()[0].as_f64().unwrap();

    let check = json_out(&choreo(&["check", "--format", "json", s(&fixture("demo.mvt"))]));
    let seconds = check["beats"].as_f64().unwrap() * 60.0 / check["tempo"].as_f64().unwrap();
    assert!((end - seconds).abs() <= 1.0 / rate, "{end} vs {seconds}");
    assert_eq!(traj["trace"].as_array().unwrap().len(), check["actions"].as_u64().unwrap() as usize);
}

#[test]
fn outputs_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let mut texts = Vec::new();
    for name in ["a", "b"] {
        let traj = dir.path().join(format!("{name}.traj.json"));
        let ecl = dir.path().join(format!("{name}.ecl.json"));
        // The platform header is resolved beside the score.
        assert!(choreo(&["compile", s(&fixture("demo.mvt")), "-o", s(&traj)]).status.success());
        let o = choreo(&["ecl", "synth", "--platform", s(&fixture("spatial3.eurdf.json")), "-o", s(&ecl)]);
        assert!(o.status.success());
        assert!(String::from_utf8(o.stderr).unwrap().contains("of 156 poses"));
        texts.push((std::fs::read(traj).unwrap(), std::fs::read(ecl).unwrap()));
    }
    assert_eq!(texts[0], texts[1]);
    assert_eq!(texts[0].1, std::fs::read(fixture("spatial3.ecl.json")).unwrap());
}

#[test]
fn json_format_everywhere() {
    let dir = tempfile::tempdir().unwrap();
    let bad = json_out(&choreo(&["check", "--format", "json", s(&fixture("bad.mvt"))]));
    assert_eq!(bad["ok"], false);
    assert_eq!(bad["diagnostics"][0]["span"]["line"], 4);

    let c = json_out(&choreo(&[
        "compile",
        "--format",
        "json",
        s(&fixture("demo.mvt")),
        "-o",
        s(&dir.path().join("x.json")),
    ]));
    assert_eq!(c["ok"], true);
    assert!(c["frames"].as_u64().unwrap() > 0);

    let t = json_out(&choreo(&["transform", "--format", "json", s(&fixture("demo.mvt")), "--op", "mirror"]));
    assert!(t["score"].as_str().unwrap().starts_with("tempo 90"));

    let v = json_out(&choreo(&["validate", "--format", "json", s(&fixture("arm3.eurdf.json"))]));
    assert_eq!(v["ok"], true);

    let missing = choreo(&["check", "--format", "json", "/no/such.mvt"]);
    assert_eq!(missing.status.code(), Some(2));
    assert_eq!(json_out(&missing)["ok"], false);
}

#[test]
fn validate_reports_pointers() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.eurdf.json");
    std::fs::write(
        &p,
        r#"{"format": 1, "name": "bad",
            "links": [{"name": "a", "axis": [0,0,0], "length": -1, "limits": [1, -1]}],
            "labels": {"arm": ["a", "ghost"]}}"#,
    )
    .unwrap();
    let o = choreo(&["validate", s(&p)]);
    assert_eq!(o.status.code(), Some(1));
    let err = String::from_utf8(o.stderr).unwrap();
    assert!(err.contains("/links/0/axis"), "{err}");
    assert!(err.contains("/labels/arm/1"), "{err}");

    let o = choreo(&["validate", s(&fixture("spatial3.eurdf.json")), "--ecl", s(&fixture("arm3.ecl.json"))]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8(o.stderr).unwrap().contains("/platform"));
}

#[test]
fn play_streams_every_frame() {
    let o = choreo(&["play", "--fast", "--rate", "10", s(&fixture("demo.mvt"))]);
    assert!(o.status.success());
    let lines: Vec<Value> = o
        .stdout
        .split(|b| *b == b'\n')
        .filter(|l| !l.is_empty())
        .map(|l| serde_json::from_slice(l).unwrap())
        .collect();
    // 13 s at 10 frames per second, both ends included.
    assert_eq!(lines.len(), 131);
    assert!(lines.iter().all(|l| l["type"] == "frame"));
    assert_eq!(lines.last().unwrap()["t"], 13.0);
}

struct Daemon(std::process::Child);

impl Drop for Daemon {
    fn drop(&mut self) {
        let _ = self.0.kill();
        let _ = self.0.wait();
    }
}

#[test]
fn serve_speaks_the_protocol() {
    let dir = tempfile::tempdir().unwrap();
    for f in ["demo.mvt", "arm3.eurdf.json", "arm3.ecl.json"] {
        std::fs::copy(fixture(f), dir.path().join(f)).unwrap();
    }
    let mut child = Command::new(env!("CARGO_BIN_EXE_choreo"))
        .args(["serve", "--format", "json", "--port", "0", "--ui"])
        .arg(dir.path().join("demo.mvt"))
        .stdout(Stdio::piped())
        .stderr(Stdio::null())
        .spawn()
        .unwrap();
    let mut first = String::new();
    BufReader::new(child.stdout.take().unwrap()).read_line(&mut first).unwrap();
    let _guard = Daemon(child);
    let addr: String = serde_json::from_str::<Value>(&first).unwrap()["listening"]
        .as_str()
        .unwrap()
        .to_string();

    let stream = TcpStream::connect(&addr).unwrap();
    let mut lines = BufReader::new(stream.try_clone().unwrap()).lines();
    let hello: Value = serde_json::from_str(&lines.next().unwrap().unwrap()).unwrap();
    assert_eq!(hello["type"], "hello");
    assert_eq!(hello["platform"]["name"], "arm3");
    let compile: Value = serde_json::from_str(&lines.next().unwrap().unwrap()).unwrap();
    assert_eq!(compile["ok"], true);

    let mut http = TcpStream::connect(&addr).unwrap();
    http.write_all(b"GET / HTTP/1.1\r\nHost: x\r\n\r\n").unwrap();
    let mut page = String::new();
    http.read_to_string(&mut page).unwrap();
    assert!(page.starts_with("HTTP/1.1 200") && page.contains("<html>"));
}
