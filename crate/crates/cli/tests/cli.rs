//! End-to-end tests of the `helicarnot` binary.

use std::f64::consts::PI;
use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use helicarnot::carnot::{AlgebraJson, StratifiedAlgebra2};
use helicarnot::geodesic::heisenberg_ivp;
use serde_json::{json, Value};
use tempfile::TempDir;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_helicarnot"))
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn write(dir: &TempDir, name: &str, contents: &str) -> PathBuf {
    let p = dir.path().join(name);
    fs::write(&p, contents).unwrap();
    p
}

fn write_json(dir: &TempDir, name: &str, value: &Value) -> PathBuf {
    write(dir, name, &serde_json::to_string(value).unwrap())
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// Parses CSV output into (header, numeric rows).
fn csv(out: &[u8]) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = String::from_utf8(out.to_vec()).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(String::from).collect();
    let rows = lines.map(|l| l.split(',').map(|x| x.parse().unwrap()).collect()).collect();
    (header, rows)
}

fn stdout_json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&out.stdout)))
}

fn stderr_json(out: &Output) -> Value {
    let text = String::from_utf8_lossy(&out.stderr);
    let line = text.lines().last().unwrap_or_default();
    serde_json::from_str(line).unwrap_or_else(|e| panic!("{e}: {text}"))
}

fn heisenberg_json() -> Value {
    serde_json::to_value(AlgebraJson::from(&StratifiedAlgebra2::heisenberg(1))).unwrap()
}

#[test]
fn gamma_two_rows_are_unit_vectors() {
    let out = run(&["gamma", "--m", "2", "--range", &format!("0:{PI}:5")]);
    assert_eq!(out.status.code(), Some(0));
    let (header, rows) = csv(&out.stdout);
    assert_eq!(header, ["s", "g0", "g1", "g2"]);
    assert_eq!(rows.len(), 5);
    for r in &rows {
        let norm: f64 = r[1..].iter().map(|x| x * x).sum::<f64>().sqrt();
        assert!((norm - 1.0).abs() < 1e-15);
    }
}

#[test]
fn gamma_zero_is_constant_and_gamma_three_starts_at_e0() {
    let (_, rows) = csv(&run(&["gamma", "--m", "0", "--range", "0:3:4"]).stdout);
    assert!(rows.iter().all(|r| r[1] == 1.0));
    let (_, rows) = csv(&run(&["gamma", "--m", "3", "--range", "0:1:3"]).stdout);
    assert_eq!(rows[0][1..], [1.0, 0.0, 0.0, 0.0]);
}

#[test]
fn gamma_writes_file_with_17_digits() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("g.csv");
    let out = run(&["gamma", "--m", "1", "--range", "0:1:2", "--out", s(&path)]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(&path).unwrap();
    let field = text.lines().nth(2).unwrap().split(',').nth(1).unwrap();
    assert_eq!(field, format!("{:.16e}", 1.0_f64.cos()));
    assert_eq!(field.split('e').next().unwrap().replace(['.', '-'], "").len(), 17);
}

#[test]
fn geodesic_heisenberg_origin_family() {
    let dir = TempDir::new().unwrap();
    let alg = write_json(&dir, "alg.json", &heisenberg_json());
    let a = [0.8, -0.6];
    let ivp = heisenberg_ivp(a, [-a[0], -a[1]], 0.0);
    let ivp = write_json(&dir, "ivp.json", &serde_json::to_value(&ivp).unwrap());
    let out = run(&["geodesic", "--algebra", s(&alg), "--ivp", s(&ivp), "--range", "0:6.283185307179586:41"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let (header, rows) = csv(&out.stdout);
    assert_eq!(header, ["s", "x1", "x2", "t1", "xi1", "xi2", "H"]);
    let a2 = a[0] * a[0] + a[1] * a[1];
    for r in &rows {
        let (sn, cs) = r[0].sin_cos();
        // a - a e^{-is}, and t = -½·|a|²(s - sin s) in these coordinates
        let x = [a[0] - (a[0] * cs + a[1] * sn), a[1] - (a[1] * cs - a[0] * sn)];
        assert!((r[1] - x[0]).abs() < 1e-12 && (r[2] - x[1]).abs() < 1e-12);
        assert!((r[3] + 0.5 * a2 * (r[0] - sn)).abs() < 1e-12);
        assert!((r[6] - rows[0][6]).abs() < 1e-8);
    }
}

#[test]
fn geodesic_tau_zero_is_a_straight_line() {
    let dir = TempDir::new().unwrap();
    let alg = write_json(&dir, "alg.json", &heisenberg_json());
    let ivp = write_json(&dir, "ivp.json", &json!({"x0": [1.0, 2.0], "t0": [0.5], "xi0": [0.3, -0.4], "tau0": [0.0]}));
    let out = run(&["geodesic", "--algebra", s(&alg), "--ivp", s(&ivp), "--range", "-1:3:9"]);
    let (_, rows) = csv(&out.stdout);
    for r in &rows {
        assert!((r[1] - (1.0 + 0.3 * r[0])).abs() < 1e-14);
        assert!((r[2] - (2.0 - 0.4 * r[0])).abs() < 1e-14);
    }
}

#[test]
fn geodesic_zero_data_is_constant() {
    let dir = TempDir::new().unwrap();
    let alg = write_json(&dir, "alg.json", &heisenberg_json());
    let ivp = write_json(&dir, "ivp.json", &json!({"x0": [0.0, 0.0], "t0": [0.0], "xi0": [0.0, 0.0], "tau0": [0.0]}));
    let (_, rows) = csv(&run(&["geodesic", "--algebra", s(&alg), "--ivp", s(&ivp)]).stdout);
    assert_eq!(rows.len(), 101);
    assert!(rows.iter().all(|r| r[1..].iter().all(|&x| x == 0.0)));
}

#[test]
fn geodesic_singular_a_tau_warns() {
    let dir = TempDir::new().unwrap();
    let g = serde_json::to_value(AlgebraJson::from(&StratifiedAlgebra2::free_nilpotent(3))).unwrap();
    let alg = write_json(&dir, "alg.json", &g);
    let ivp = write_json(
        &dir,
        "ivp.json",
        &json!({"x0": [0.1, 0.2, 0.3], "t0": [0.0, 0.0, 0.0], "xi0": [1.0, 0.0, 0.5], "tau0": [1.0, -0.5, 0.2]}),
    );
    let out = run(&["geodesic", "--algebra", s(&alg), "--ivp", s(&ivp), "--range", "0:1:3"]);
    assert_eq!(out.status.code(), Some(0));
    let warning = stderr_json(&out);
    assert_eq!(warning["warning"], "SingularATau");
    assert_eq!(warning["kernel_dim"], 1);
    let (header, _) = csv(&out.stdout);
    assert_eq!(header.len(), 1 + 3 + 3 + 3 + 1);
}

#[test]
fn decompose_circle_samples() {
    let dir = TempDir::new().unwrap();
    let mut text = String::from("s,u1,u2,u3\n");
    for i in 0..40 {
        let t = 0.25 * i as f64;
        text.push_str(&format!("{t},{},{},1\n", t.cos(), t.sin()));
    }
    let path = write(&dir, "circle.csv", &text);
    let out = run(&["decompose", "--samples", s(&path)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["n"], 1);
    assert_eq!(v["p"], 1);
    assert!((v["decomposition"]["frequencies"][0].as_f64().unwrap() - 1.0).abs() < 1e-9);
    assert_eq!(v["injectivity"]["verdict"], "non_injective");
    assert!((v["injectivity"]["period"].as_f64().unwrap() - 2.0 * PI).abs() < 1e-8);
}

#[test]
fn decompose_l3_generator() {
    let dir = TempDir::new().unwrap();
    let r3 = 3.0_f64.sqrt();
    let a = json!({"rows": 4, "cols": 4, "data": [0.0, -r3, 0.0, 0.0, r3, 0.0, -2.0, 0.0, 0.0, 2.0, 0.0, -r3, 0.0, 0.0, r3, 0.0]});
    let path = write_json(&dir, "gen.json", &json!({"A": a, "u0": [1.0, 0.0, 0.0, 0.0]}));
    let v = stdout_json(&run(&["decompose", "--generator", s(&path)]));
    let f: Vec<f64> = v["decomposition"]["frequencies"].as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect();
    assert_eq!(f.len(), 2);
    assert!((f[0] - 3.0).abs() < 1e-12 && (f[1] - 1.0).abs() < 1e-12);
    assert_eq!(v["injectivity"]["verdict"], "non_injective");
}

#[test]
fn decompose_constant_samples() {
    let dir = TempDir::new().unwrap();
    let text: String = (0..12).map(|i| format!("{},0.5,-2\n", i as f64 * 0.1)).collect();
    let path = write(&dir, "const.csv", &text);
    let out = run(&["decompose", "--samples", s(&path)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["n"], 0);
    assert!(v["injectivity"].is_null());
}

#[test]
fn decompose_non_q0_samples_is_numerical_failure() {
    let dir = TempDir::new().unwrap();
    let text: String = (0..30).map(|i| {
        let t = i as f64 * 0.2;
        format!("{t},{t},{}\n", t * t)
    }).collect();
    let path = write(&dir, "bad.csv", &text);
    let out = run(&["decompose", "--samples", s(&path)]);
    assert_eq!(out.status.code(), Some(3));
    assert_eq!(stderr_json(&out)["error"], "FitFailed");
}

#[test]
fn correspond_helical_to_group_gives_heisenberg() {
    let dir = TempDir::new().unwrap();
    let input = write_json(&dir, "h.json", &json!({"A": {"rows": 2, "cols": 2, "data": [0.0, -1.0, 1.0, 0.0]}, "w": [1.0]}));
    let out = run(&["correspond", "--mode", "helical-to-group", "--input", s(&input), "--check"]);
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["algebra"], heisenberg_json());
    assert!(v["roundtrip_residual"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn correspond_round_trips_with_check() {
    let dir = TempDir::new().unwrap();
    let input = write_json(&dir, "g.json", &json!({"algebra": heisenberg_json(), "w": [2.0]}));
    let v = stdout_json(&run(&["correspond", "--mode", "group-to-helical", "--input", s(&input), "--check"]));
    assert!(v["roundtrip_residual"].as_f64().unwrap() <= 1e-9);
    assert_eq!(v["w"], json!([2.0]));

    let a1 = json!({"rows": 4, "cols": 4, "data": [0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -2.0, 0.0, 0.0, 2.0, 0.0]});
    let a2 = json!({"rows": 4, "cols": 4, "data": [0.0, 0.0, -1.0, 0.0, 0.0, 0.0, 0.0, 1.0, 1.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0]});
    let tuple = json!({"curves": [
        {"A": a1, "v": [1.0, 0.0, 0.5, 0.0], "w": [1.0, 0.0], "v0": [0.0, 0.1, 0.0, 0.0], "w0": [0.2, 0.0]},
        {"A": a2, "v": [0.0, 1.0, 0.0, 0.3], "w": [0.5, 1.0], "v0": [0.3, 0.0, 0.0, 0.1], "w0": [0.0, 0.4]},
    ]});
    let input = write_json(&dir, "tuple.json", &tuple);
    let out = run(&["correspond", "--mode", "tuple-to-group", "--input", s(&input), "--check"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let group = stdout_json(&out);
    assert!(group["roundtrip_residual"].as_f64().unwrap() <= 1e-9);
    assert_eq!(group["algebra"]["p"], 2);

    let input = write_json(&dir, "group.json", &json!({"algebra": group["algebra"], "geodesics": group["geodesics"]}));
    let out = run(&["correspond", "--mode", "group-to-tuple", "--input", s(&input), "--check"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v = stdout_json(&out);
    assert_eq!(v["curves"].as_array().unwrap().len(), 2);
    assert!(v["roundtrip_residual"].as_f64().unwrap() <= 1e-9);
}

#[test]
fn correspond_dependent_verticals_is_domain_error() {
    let dir = TempDir::new().unwrap();
    let j4 = json!({"rows": 4, "cols": 4, "data": [0.0, -1.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 0.0, 0.0, 0.0, -1.0, 0.0, 0.0, 1.0, 0.0]});
    let tuple = json!({"curves": [
        {"A": j4, "v": [1.0, 0.0, 0.0, 0.0], "w": [1.0, 1.0], "v0": [0.0, 0.0, 0.0, 0.0], "w0": [0.0, 0.0]},
        {"A": j4, "v": [0.0, 1.0, 0.0, 0.0], "w": [2.0, 2.0], "v0": [0.0, 0.0, 0.0, 0.0], "w0": [0.0, 0.0]},
    ]});
    let input = write_json(&dir, "tuple.json", &tuple);
    let out = run(&["correspond", "--mode", "tuple-to-group", "--input", s(&input)]);
    assert_eq!(out.status.code(), Some(2));
    let err = stderr_json(&out);
    assert_eq!(err["error"], "DependentVerticals");
    assert_eq!(err["kind"], "domain");
}

#[test]
fn correspond_not_contact_is_domain_error() {
    let dir = TempDir::new().unwrap();
    let g = serde_json::to_value(AlgebraJson::from(&StratifiedAlgebra2::free_nilpotent(3))).unwrap();
    let input = write_json(&dir, "g.json", &json!({"algebra": g, "w": [1.0]}));
    let out = run(&["correspond", "--mode", "group-to-helical", "--input", s(&input)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "NotContact");
}

#[test]
fn schema_and_usage_errors_exit_one() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "bad.json", "{\"m\": 2");
    let ivp = write_json(&dir, "ivp.json", &json!({}));
    let out = run(&["geodesic", "--algebra", s(&bad), "--ivp", s(&ivp)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["kind"], "schema");
    assert_eq!(run(&["gamma", "--m", "2", "--range", "1:0:5"]).status.code(), Some(1));
    assert_eq!(run(&["gamma", "--range", "0:1:5"]).status.code(), Some(1));
    assert_eq!(run(&["frobnicate"]).status.code(), Some(1));
    let missing = dir.path().join("missing.json");
    let out = run(&["geodesic", "--algebra", s(&missing), "--ivp", s(&ivp)]);
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stderr_json(&out)["kind"], "io");
    assert_eq!(run(&["--help"]).status.code(), Some(0));
}

#[test]
fn not_skew_input_is_domain_error() {
    let dir = TempDir::new().unwrap();
    let input = write_json(&dir, "h.json", &json!({"A": {"rows": 2, "cols": 2, "data": [0.0, 1.0, 1.0, 0.0]}, "w": [1.0]}));
    let out = run(&["correspond", "--mode", "helical-to-group", "--input", s(&input)]);
    assert_eq!(out.status.code(), Some(2));
    assert_eq!(stderr_json(&out)["error"], "NotSkew");
}

#[test]
fn tolerance_flags_are_applied() {
    let dir = TempDir::new().unwrap();
    let input = write_json(&dir, "h.json", &json!({"A": {"rows": 2, "cols": 2, "data": [0.0, -1.0, 1.0001, 0.0]}, "w": [1.0]}));
    let strict = run(&["correspond", "--mode", "helical-to-group", "--input", s(&input)]);
    assert_eq!(strict.status.code(), Some(2));
    let loose = run(&["--tol-skew-tol", "1e-3", "correspond", "--mode", "helical-to-group", "--input", s(&input)]);
    assert_eq!(loose.status.code(), Some(0), "{}", String::from_utf8_lossy(&loose.stderr));
    let after = run(&["correspond", "--mode", "helical-to-group", "--input", s(&input), "--tol-skew-tol=1e-3"]);
    assert_eq!(after.status.code(), Some(0));
}

#[test]
fn verify_default_seed_passes_with_residuals() {
    let dir = TempDir::new().unwrap();
    let path = dir.path().join("report.json");
    let out = run(&["verify", "--out", s(&path)]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let v: Value = serde_json::from_str(&fs::read_to_string(&path).unwrap()).unwrap();
    assert_eq!(v["passed"], true);
    let suites = v["suites"].as_array().unwrap();
    assert_eq!(suites.len(), helicarnot::verify::suite_names().len());
    for suite in suites {
        assert_eq!(suite["passed"], true, "{suite}");
        assert!(suite["metrics"].as_array().unwrap().iter().all(|m| m["max"].is_number()));
    }
}

#[test]
fn verify_zero_skew_tolerance_lists_failures() {
    let out = run(&["verify", "--suite", "skewlin", "--tol-skew-tol", "0"]);
    assert_eq!(out.status.code(), Some(3));
    let v = stdout_json(&out);
    assert_eq!(v["passed"], false);
    let failures = v["suites"][0]["failures"].as_array().unwrap();
    assert!(failures.iter().any(|f| f.as_str().unwrap().contains("NotSkew")));
    assert!(String::from_utf8_lossy(&out.stderr).contains("FAIL skewlin"));
}

#[test]
fn verify_is_deterministic() {
    let args = ["verify", "--seed", "11", "--suite", "injectivity", "--suite", "closure", "--suite", "carnot"];
    let a = run(&args);
    let b = run(&args);
    assert_eq!(a.status.code(), Some(0));
    assert_eq!(a.stdout, b.stdout);
    assert!(run(&["verify", "--suite", "nope"]).status.code() == Some(1));
}
