//! End-to-end checks of the binary: exit codes, JSON contracts, and
//! seed-determinism of the stochastic commands.

use std::path::Path;
use std::process::{Command, Output};

fn siri_bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_siri"))
}

fn run(args: &[&str]) -> Output {
    siri_bin().args(args).output().expect("binary runs")
}

fn write_file(dir: &Path, name: &str, content: &str) -> std::path::PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, content).unwrap();
    path
}

/// A small dataset with one strongly relevant variable.
fn demo_csv() -> String {
    let mut s = String::from("x1,x2,x3,y\n");
    let mut state = 17u64;
    let mut unif = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state % 100_000) as f64 / 100_000.0 - 0.5
    };
    for i in 0..80 {
        let y = if i % 2 == 0 { 1.0 + 0.1 * unif() } else { -1.0 + 0.1 * unif() };
        let x1 = 5.0 * y + 0.3 * unif();
        let (x2, x3) = (unif(), unif());
        s.push_str(&format!("{},{},{},{}\n", x1, x2, x3, y));
    }
    s
}

fn canonical(text: &str) -> String {
    let v: serde_json::Value = serde_json::from_str(text).unwrap();
    serde_json::to_string(&v).unwrap()
}

#[test]
fn select_emits_selected_key_and_exit_zero() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "demo.csv", &demo_csv());
    let out = run(&[
        "select",
        "--input",
        input.to_str().unwrap(),
        "--response",
        "y",
        "--slices",
        "4",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert!(v.get("selected").is_some());
    let sel = v["selected"].as_array().unwrap();
    assert!(sel.iter().any(|e| e["name"] == "x1"), "x1 should be selected: {}", text);
}

#[test]
fn unknown_flag_exits_one() {
    let out = run(&["select", "--no-such-flag"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_command_exits_one() {
    let out = run(&[]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn missing_file_exits_two() {
    let out = run(&["screen", "--input", "/nonexistent/q.csv", "--response", "y"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn bad_cell_exits_two_with_location() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "bad.csv", "x1,y\n1,2\nfoo,3\n");
    let out = run(&["screen", "--input", input.to_str().unwrap(), "--response", "y"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("row 2"), "{}", err);
    assert!(err.contains("column x1"), "{}", err);
}

#[test]
fn too_many_slices_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "tiny.csv", "x1,y\n1,2\n3,4\n");
    let out = run(&[
        "screen",
        "--input",
        input.to_str().unwrap(),
        "--response",
        "y",
        "--slices",
        "5",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn numerical_failure_exits_three() {
    // Five rows over three slices leave a single-observation slice: the
    // marginal scan cannot form a within-slice variance there.
    let dir = tempfile::tempdir().unwrap();
    let mut content = String::from("x1,y\n");
    for i in 0..5 {
        content.push_str(&format!("{},{}\n", i as f64 * 0.7, i as f64));
    }
    let input = write_file(dir.path(), "thin.csv", &content);
    let out = run(&[
        "screen",
        "--input",
        input.to_str().unwrap(),
        "--response",
        "y",
        "--slices",
        "3",
    ]);
    assert_eq!(out.status.code(), Some(3), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    assert!(String::from_utf8_lossy(&out.stderr).contains("slice too small"));
}

#[test]
fn simulate_byte_identical_given_seed() {
    let dir = tempfile::tempdir().unwrap();
    let out1 = dir.path().join("a.csv");
    let out2 = dir.path().join("b.csv");
    for out in [&out1, &out2] {
        let st = run(&[
            "simulate",
            "--scenario",
            "2.3",
            "--n",
            "200",
            "--p",
            "200",
            "--seed",
            "7",
            "--out",
            out.to_str().unwrap(),
        ]);
        assert!(st.status.success());
    }
    let a = std::fs::read(&out1).unwrap();
    let b = std::fs::read(&out2).unwrap();
    assert_eq!(a, b);
    let ta = std::fs::read(dir.path().join("a.csv.truth.json")).unwrap();
    let tb = std::fs::read(dir.path().join("b.csv.truth.json")).unwrap();
    assert_eq!(ta, tb);
    let truth: serde_json::Value = serde_json::from_slice(&ta).unwrap();
    let idx: Vec<u64> =
        truth["truth"].as_array().unwrap().iter().map(|v| v["index"].as_u64().unwrap()).collect();
    assert_eq!(idx, vec![0, 1, 2]);
}

#[test]
fn screen_json_round_trips() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "demo.csv", &demo_csv());
    let out = run(&[
        "screen",
        "--input",
        input.to_str().unwrap(),
        "--response",
        "y",
        "--slices",
        "4",
        "--budget",
        "3",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let c1 = canonical(&text);
    let c2 = canonical(&serde_json::to_string_pretty(&serde_json::from_str::<serde_json::Value>(&text).unwrap()).unwrap());
    assert_eq!(c1, c2);
    let v: serde_json::Value = serde_json::from_str(&text).unwrap();
    assert_eq!(v["ranking"].as_array().unwrap().len(), 3);
    assert_eq!(v["ranking"][0]["name"], "x1");
}

#[test]
fn cv_select_deterministic_given_seed() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "demo.csv", &demo_csv());
    let mut outputs = Vec::new();
    for _ in 0..2 {
        let out = run(&[
            "cv-select",
            "--input",
            input.to_str().unwrap(),
            "--response",
            "y",
            "--slices",
            "4",
            "--q-grid",
            "0,1",
            "--alpha-grid",
            "0.99,0.999",
            "--folds",
            "4",
            "--measure",
            "ae",
            "--seed",
            "11",
        ]);
        assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
        outputs.push(String::from_utf8(out.stdout).unwrap());
    }
    assert_eq!(outputs[0], outputs[1]);
    let v: serde_json::Value = serde_json::from_str(&outputs[0]).unwrap();
    assert!(v.get("cv").is_some());
    assert!(v.get("chosen_q").is_some());
}

#[test]
fn bench_table_runs_small() {
    let out = run(&[
        "bench",
        "--kind",
        "table",
        "--scenarios",
        "2.1",
        "--methods",
        "fixed",
        "--q",
        "0",
        "--alpha",
        "0.9995",
        "--r",
        "3",
        "--n",
        "120",
        "--p",
        "30",
        "--seed",
        "5",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("scenario"));
    assert!(text.contains("2.1"));
}

#[test]
fn bench_screening_runs_small() {
    let dir = tempfile::tempdir().unwrap();
    let json_out = dir.path().join("screen.json");
    let out = run(&[
        "bench",
        "--kind",
        "screening",
        "--scenarios",
        "2.1",
        "--screen-methods",
        "sis-star,correlation",
        "--r",
        "3",
        "--n",
        "120",
        "--p",
        "30",
        "--seed",
        "5",
        "--out",
        json_out.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let reports: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&json_out).unwrap()).unwrap();
    assert_eq!(reports.as_array().unwrap().len(), 2);
}

#[test]
fn bench_deterministic_given_seed_modulo_wall_clock() {
    let dir = tempfile::tempdir().unwrap();
    let mut normalized = Vec::new();
    for name in ["r1.json", "r2.json"] {
        let path = dir.path().join(name);
        let out = run(&[
            "bench",
            "--kind",
            "table",
            "--scenarios",
            "2.1",
            "--methods",
            "fixed",
            "--q",
            "0",
            "--alpha",
            "0.9995",
            "--r",
            "4",
            "--n",
            "120",
            "--p",
            "25",
            "--seed",
            "9",
            "--out",
            path.to_str().unwrap(),
        ]);
        assert!(out.status.success());
        let mut v: serde_json::Value =
            serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
        for report in v.as_array_mut().unwrap() {
            report["seconds"] = serde_json::json!(0);
        }
        normalized.push(serde_json::to_string(&v).unwrap());
    }
    assert_eq!(normalized[0], normalized[1]);
}

#[test]
fn qnorm_flag_accepted() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "demo.csv", &demo_csv());
    let out = run(&[
        "screen",
        "--input",
        input.to_str().unwrap(),
        "--response",
        "y",
        "--slices",
        "4",
        "--qnorm",
    ]);
    assert!(out.status.success());
}

#[test]
fn discrete_response_screening() {
    let dir = tempfile::tempdir().unwrap();
    let input = write_file(dir.path(), "demo.csv", &demo_csv());
    // y takes many near-distinct values; use a two-class file instead.
    let mut content = String::from("x1,x2,y\n");
    let mut state = 3u64;
    let mut unif = || {
        state ^= state << 13;
        state ^= state >> 7;
        state ^= state << 17;
        (state % 100_000) as f64 / 100_000.0 - 0.5
    };
    for i in 0..60 {
        let cls = (i % 2) as f64;
        content.push_str(&format!("{},{},{}\n", unif() + 3.0 * cls, unif(), cls));
    }
    let two_class = write_file(dir.path(), "cls.csv", &content);
    let out = run(&[
        "screen",
        "--input",
        two_class.to_str().unwrap(),
        "--response",
        "y",
        "--discrete",
    ]);
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value =
        serde_json::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
    assert_eq!(v["slices"], 2);
    assert_eq!(v["ranking"][0]["name"], "x1");
    drop(input);
}
