use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use rieszlab::asymptotics::{AsymptoticTrace, TraceRecord};
use rieszlab::geometry::{example_fractal, example_segment, example_union, SetSpec};
use rieszlab::optimizer::Status;

fn rieszlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_rieszlab"))
        .current_dir(dir)
        .env_remove("RIESZLAB_CACHE")
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr_json(out: &Output) -> serde_json::Value {
    serde_json::from_slice(&out.stderr).expect("error JSON on stderr")
}

const UNIT_SEGMENT: &str = r#"{"type": "segment", "a": [0], "b": [1]}"#;

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    fs::write(dir.join(name), body).unwrap();
    name.to_string()
}

#[test]
fn solve_prints_the_three_point_energy() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(dir.path(), "c.json", &format!(r#"{{"set": {UNIT_SEGMENT}, "s": 1.5}}"#));
    let out = rieszlab(dir.path(), &["solve", "--config", &cfg, "--s", "1.000001", "--n", "3"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let line = String::from_utf8(out.stdout).unwrap();
    let e: f64 = line.split_whitespace().find_map(|w| w.strip_prefix("E=")).unwrap().parse().unwrap();
    // s slightly above d = 1; the energy is continuous in s.
    let exact = 2.0 * (2.0 * 2f64.powf(1.000001) + 1.0);
    assert!((e - exact).abs() < 1e-6, "{e} vs {exact}");
    let written: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("rieszlab_out/solve_N3.json")).unwrap()).unwrap();
    assert_eq!(written["n1"], 3);
    assert!(dir.path().join("rieszlab_cache.json").exists());
}

#[test]
fn validation_failures_exit_with_code_2() {
    let dir = tempfile::tempdir().unwrap();
    let overlapping = write_config(
        dir.path(),
        "u.json",
        r#"{"set": {"type": "union",
                    "A1": {"type": "segment", "a": [0, 0], "b": [1, 0]},
                    "A2": {"type": "segment", "a": [1.5, 0], "b": [2.5, 0]}},
            "s": 3}"#,
    );
    let out = rieszlab(dir.path(), &["solve", "--config", &overlapping, "--n", "3"]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert!(err["message"].as_str().unwrap().contains("separation condition"));

    let low_s = rieszlab(dir.path(), &["solve", "--preset", "example-union", "--s", "1", "--n", "3"]);
    assert_eq!(low_s.status.code(), Some(2));
    assert_eq!(stderr_json(&low_s)["error"], "validation");

    let unknown = write_config(dir.path(), "x.json", r#"{"set": "unit-segment", "s": 2, "typo": 1}"#);
    assert_eq!(rieszlab(dir.path(), &["solve", "--config", &unknown, "--n", "2"]).status.code(), Some(2));
}

#[test]
fn infeasible_depth_exits_with_code_3() {
    let dir = tempfile::tempdir().unwrap();
    let out = rieszlab(
        dir.path(),
        &["solve", "--preset", "example-fractal", "--s", "3", "--depth", "1", "--n", "5"],
    );
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr_json(&out)["message"].as_str().unwrap().contains("depth"));
}

#[test]
fn sweeps_resume_from_the_cache_and_are_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"set": "example-fractal", "s": 3, "n_min": 2, "n_max": 9,
            "search": {"restarts": 2, "seed": 3}, "deterministic": true}"#,
    );
    let first = rieszlab(dir.path(), &["sweep", "--config", &cfg, "--cache", "a.json", "--out", "a"]);
    assert!(first.status.success(), "{}", String::from_utf8_lossy(&first.stderr));
    let again = rieszlab(dir.path(), &["sweep", "--config", &cfg, "--cache", "a.json", "--out", "a2"]);
    assert!(again.status.success());
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("a2/summary.json")).unwrap()).unwrap();
    assert_eq!(summary["solved"].as_array().unwrap().len(), 0);
    assert_eq!(summary["reused"].as_array().unwrap().len(), 8);

    let other = rieszlab(dir.path(), &["sweep", "--config", &cfg, "--cache", "b.json", "--out", "b"]);
    assert!(other.status.success());
    let a = fs::read(dir.path().join("a/trace.csv")).unwrap();
    assert_eq!(a, fs::read(dir.path().join("b/trace.csv")).unwrap());
    assert_eq!(a, fs::read(dir.path().join("a2/trace.csv")).unwrap());
    assert_eq!(String::from_utf8(a).unwrap().lines().count(), 9);
}

#[test]
fn cache_location_comes_from_the_environment() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_rieszlab"))
        .current_dir(dir.path())
        .env("RIESZLAB_CACHE", "env_cache.json")
        .args(["solve", "--preset", "unit-segment", "--s", "2", "--n", "2"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(dir.path().join("env_cache.json").exists());
    assert!(!dir.path().join("rieszlab_cache.json").exists());
}

fn synthetic(set: &SetSpec, s: f64, gs: &[f64], frac: f64) -> AsymptoticTrace {
    let mut t = AsymptoticTrace::new(set, s);
    for (k, &g) in gs.iter().enumerate() {
        let n = 10 + k;
        let n1 = if set.is_union() { (frac * n as f64).round() as usize } else { n };
        t.records.push(TraceRecord {
            n,
            e_best: g * (n as f64).powf(1.0 + s / t.d),
            g,
            n1,
            n2: n - n1,
            frac1: n1 as f64 / n as f64,
            min_dist: Some(0.1),
            status: Status::Heuristic,
        });
    }
    t
}

fn save(dir: &Path, name: &str, trace: &AsymptoticTrace) -> String {
    fs::write(dir.join(name), serde_json::to_string(trace).unwrap()).unwrap();
    name.to_string()
}

fn report(dir: &Path, files: &[&str]) -> (Option<i32>, serde_json::Value) {
    let mut args = vec!["report"];
    args.extend_from_slice(files);
    let out = rieszlab(dir, &args);
    let body = if out.status.success() {
        serde_json::from_slice(&out.stdout).unwrap()
    } else {
        stderr_json(&out)
    };
    (out.status.code(), body)
}

#[test]
fn report_on_synthetic_traces() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let a1 = SetSpec::Ifs(example_fractal());
    let a2 = SetSpec::Segment(example_segment());
    let union = SetSpec::Union(example_union());

    let flat = save(d, "flat.json", &synthetic(&a1, 3.0, &[0.7; 6], 1.0));
    let (code, body) = report(d, &[&flat]);
    assert_eq!(code, Some(0));
    assert_eq!(body["traces"][0]["gamma"]["spread"], 0.0);
    assert_eq!(body["traces"][0]["lemma3_flags"].as_array().unwrap().len(), 0);

    let t2 = save(d, "a2.json", &synthetic(&a2, 3.0, &[0.7; 6], 1.0));
    let tu = save(d, "u.json", &synthetic(&union, 3.0, &[0.2; 6], 0.5));
    let (code, body) = report(d, &[&flat, &t2, &tu]);
    assert_eq!(code, Some(0));
    assert_eq!(body["prediction"]["alpha_star"], 0.5);
    assert_eq!(body["prediction"]["beta_star"], 0.5);
    assert_eq!(body["observed_frac1"][0], 0.5);

    let (code, _) = report(d, &[&flat, &t2]);
    assert_eq!(code, Some(0));

    let other_s = save(d, "s4.json", &synthetic(&a2, 4.0, &[0.7; 6], 1.0));
    assert_eq!(report(d, &[&flat, &other_s]).0, Some(2));

    let stranger = save(d, "seg.json", &synthetic(&SetSpec::Segment(rieszlab::geometry::unit_segment()), 3.0, &[1.0; 6], 1.0));
    assert_eq!(report(d, &[&tu, &stranger]).0, Some(2));

    let mut old = synthetic(&a1, 3.0, &[0.7; 6], 1.0);
    old.schema_version = 0;
    let old = save(d, "old.json", &old);
    let (code, body) = report(d, &[&old]);
    assert_eq!(code, Some(2));
    assert!(body["message"].as_str().unwrap().contains("schema version"));

    let (code, _) = report(d, &["missing.json"]);
    assert_ne!(code, Some(0));
}
