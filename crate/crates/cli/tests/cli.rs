use std::path::Path;
use std::process::{Command, Output};

fn mqubit(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mqubit")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

#[test]
fn classify_prints_tag() {
    let o = mqubit(&["special", "classify", "--M", "1", "--T", "3.141592653589793"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    assert_eq!(v["kind"], "Shift");
    assert_eq!(v["q"], 1);
}

#[test]
fn point_json_has_flat_indicators() {
    let o = mqubit(&["point", "--M", "2.92", "--T", "3.1", "--cells", "500"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(stdout(&o).trim()).unwrap();
    for key in ["pr", "zeta", "support", "category", "h_max", "h_0", "fractal_dim", "chi2"] {
        assert!(v["indicators"].get(key).is_some(), "missing {key}");
    }
    assert_eq!(v["ergodicity"]["ergodic"], true);
}

#[test]
fn adf_csv_header() {
    let o = mqubit(&["adf", "--M", "1", "--T", "1.4049629462081452", "--method", "analytic", "--cells", "100"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = stdout(&o);
    assert!(text.starts_with("theta,weight\n"));
    assert_eq!(text.lines().count(), 101);
}

#[test]
fn invalid_config_exits_with_2() {
    assert_eq!(mqubit(&["point", "--M", "-1", "--T", "1"]).status.code(), Some(2));
    assert_eq!(mqubit(&["point", "--M", "1"]).status.code(), Some(2));
    assert_eq!(mqubit(&["grid", "--m-count", "2"]).status.code(), Some(2));
}

#[test]
fn grid_respects_thread_cap_and_resumes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("g.jsonl");
    let args = [
        "grid", "--m-min", "1", "--m-max", "3", "--m-count", "2", "--t-min", "1", "--t-max", "3", "--t-count", "2",
        "--cells", "200", "--out", out.to_str().unwrap(),
    ];
    let run = || Command::new(env!("CARGO_BIN_EXE_mqubit")).env("MQ_THREADS", "1").args(args).output().unwrap();
    assert!(run().status.success());
    let first = std::fs::read(&out).unwrap();
    assert_eq!(first.iter().filter(|&&b| b == b'\n').count(), 4);
    assert!(Path::new(&format!("{}.overlay.json", out.display())).exists());
    assert!(run().status.success());
    assert_eq!(std::fs::read(&out).unwrap(), first);
}
