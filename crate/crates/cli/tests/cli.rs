use serde_json::Value;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

const DELTA_SQUARED: &str = include_str!("../scenarios/delta-squared.json");

fn colombeau(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_colombeau")).args(args).output().expect("spawn colombeau")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn write_scenario(dir: &Path, name: &str, v: &Value) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, serde_json::to_string_pretty(v).unwrap()).unwrap();
    p
}

fn read_tree(dir: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut out = Vec::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for e in std::fs::read_dir(&d).unwrap() {
            let p = e.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                out.push((p.strip_prefix(dir).unwrap().to_path_buf(), std::fs::read(&p).unwrap()));
            }
        }
    }
    out.sort();
    out
}

#[test]
fn mollifier_build_roundtrips_through_verify() {
    let dir = tempfile::tempdir().unwrap();
    let o = colombeau(&["mollifier", "build", "--q", "2", "--n", "1", "--shifted"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let built: Value = serde_json::from_slice(&o.stdout).unwrap();
    let moments = built["moments"].as_array().unwrap();
    for m in moments {
        let order: u64 = m[0].as_array().unwrap().iter().map(|v| v.as_u64().unwrap()).sum();
        let v = m[1].as_f64().unwrap();
        if order == 0 {
            assert!((v - 1.0).abs() <= 1e-8);
        } else if order <= 2 {
            assert!(v.abs() <= 1e-8, "moment {m}");
        }
    }
    let file = dir.path().join("phi.json");
    std::fs::write(&file, &o.stdout).unwrap();
    let v = colombeau(&["mollifier", "verify", "--file", file.to_str().unwrap()]);
    assert_eq!(code(&v), 0, "{}", stderr(&v));
    let verified: Value = serde_json::from_slice(&v.stdout).unwrap();
    assert_eq!(verified["moments"], built["moments"]);
}

#[test]
fn lsk2_check_on_the_model_kernel_reports_the_scaling_slope() {
    let o = colombeau(&["kernel", "check", "--which", "lsk2", "--beta", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert!((r["slope"].as_f64().unwrap() + 2.0).abs() < 0.02);
    assert_eq!(r["verdict"], "pass");
}

#[test]
fn bundled_scenario_passes_and_reruns_byte_identically() {
    let dir = tempfile::tempdir().unwrap();
    let scenario = write_scenario(dir.path(), "s.json", &serde_json::from_str(DELTA_SQUARED).unwrap());
    let run = |out: &Path| colombeau(&["--scenario", scenario.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let first = run(&a);
    assert_eq!(code(&first), 0, "{}", stderr(&first));
    let second = run(&b);
    assert_eq!(first.stdout, second.stdout);
    let (ta, tb) = (read_tree(&a), read_tree(&b));
    assert!(ta.iter().any(|(p, _)| p.ends_with("summary.json")));
    assert!(ta.iter().any(|(p, _)| p.extension().is_some_and(|e| e == "csv")));
    assert_eq!(ta, tb);
    let summary: Value = serde_json::from_slice(&std::fs::read(a.join("summary.json")).unwrap()).unwrap();
    assert!(summary.to_string().contains("delta-squared-assoc"));
}

#[test]
fn demos_write_identical_reports_on_rerun() {
    let dir = tempfile::tempdir().unwrap();
    for demo in ["heaviside-times-delta", "lie-derivative"] {
        let (a, b) = (dir.path().join(demo).join("a"), dir.path().join(demo).join("b"));
        let first = colombeau(&["--out", a.to_str().unwrap(), "demo", demo]);
        assert_eq!(code(&first), 0, "{demo}: {}", stderr(&first));
        let second = colombeau(&["--out", b.to_str().unwrap(), "demo", demo]);
        assert_eq!(first.stdout, second.stdout);
        assert_eq!(read_tree(&a), read_tree(&b));
    }
}

#[test]
fn unmet_expectation_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let mut s: Value = serde_json::from_str(DELTA_SQUARED).unwrap();
    s["tests"][0]["expect"] = serde_json::json!({ "verdict": "associated" });
    let p = write_scenario(dir.path(), "wrong.json", &s);
    let o = colombeau(&["--scenario", p.to_str().unwrap()]);
    assert_eq!(code(&o), 1, "{}", stderr(&o));
}

#[test]
fn undefined_kernel_reference_exits_two_and_names_the_path() {
    let dir = tempfile::tempdir().unwrap();
    let mut s: Value = serde_json::from_str(DELTA_SQUARED).unwrap();
    s["tests"][0]["kernel"] = "missing".into();
    let p = write_scenario(dir.path(), "bad.json", &s);
    let o = colombeau(&["--scenario", p.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    let err = stderr(&o);
    assert!(err.contains("tests") && err.contains("missing"), "{err}");
}

#[test]
fn malformed_input_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let mut s: Value = serde_json::from_str(DELTA_SQUARED).unwrap();
    s["mollifiers"]["phi"]["q"] = "two".into();
    let p = write_scenario(dir.path(), "typed.json", &s);
    let o = colombeau(&["--scenario", p.to_str().unwrap()]);
    assert_eq!(code(&o), 2);
    assert!(stderr(&o).contains("mollifiers.phi.q"), "{}", stderr(&o));

    let junk = dir.path().join("junk.json");
    std::fs::write(&junk, "{ not json").unwrap();
    assert_eq!(code(&colombeau(&["--scenario", junk.to_str().unwrap()])), 2);
    assert_eq!(code(&colombeau(&["--scenario", dir.path().join("absent.json").to_str().unwrap()])), 2);
    assert_eq!(code(&colombeau(&["--workers", "0", "demo", "lie-derivative"])), 2);
    assert_eq!(code(&colombeau(&["--eps-min", "0.5", "--eps-max", "0.1", "demo", "lie-derivative"])), 2);
    assert_eq!(code(&colombeau(&["mollifier", "build", "--q", "9"])), 2);
}

#[test]
fn unwritable_output_exits_three() {
    let dir = tempfile::tempdir().unwrap();
    let blocker = dir.path().join("file");
    std::fs::write(&blocker, "").unwrap();
    let o = colombeau(&["--out", blocker.join("sub").to_str().unwrap(), "demo", "lie-derivative"]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
}
