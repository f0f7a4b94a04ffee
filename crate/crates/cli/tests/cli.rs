use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn cgist(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cgist"))
        .args(args)
        .output()
        .expect("run cgist")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap_or_else(|e| panic!("{e}: {}", String::from_utf8_lossy(&o.stdout)))
}

fn floats(v: &Value) -> Vec<f64> {
    v.as_array().unwrap().iter().map(|x| x.as_f64().unwrap()).collect()
}

/// Writes a matrix in the dense text format.
fn mat(dir: &Path, name: &str, rows: &[&[f64]]) -> String {
    let mut s = format!("{} {}\n", rows.len(), rows[0].len());
    for r in rows {
        s += &r.iter().map(|v| v.to_string()).collect::<Vec<_>>().join(" ");
        s += "\n";
    }
    let p = dir.join(name);
    fs::write(&p, s).unwrap();
    p.to_str().unwrap().to_string()
}

fn vector(dir: &Path, name: &str, v: &[f64]) -> String {
    let rows: Vec<Vec<f64>> = v.iter().map(|&x| vec![x]).collect();
    let refs: Vec<&[f64]> = rows.iter().map(|r| r.as_slice()).collect();
    mat(dir, name, &refs)
}

#[test]
fn scalar_solve_writes_report_and_trace() {
    let d = TempDir::new().unwrap();
    let k = mat(d.path(), "K.txt", &[&[1.0]]);
    let y = vector(d.path(), "y.txt", &[2.0]);
    let out: PathBuf = d.path().join("run");
    let o = cgist(&["solve", "--k-file", &k, "--y-file", &y, "--lambda", "1", "--out", out.to_str().unwrap()]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&o);
    assert!((floats(&r["x"])[0] - 1.0).abs() < 1e-8);
    assert_eq!(r["algorithm"], "ista");
    assert_eq!(r["converged"], true);
    let saved: Value = serde_json::from_str(&fs::read_to_string(out.join("report.json")).unwrap()).unwrap();
    assert_eq!(saved, r);

    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    let mut lines = trace.lines();
    assert_eq!(
        lines.next().unwrap(),
        "iteration,objective,constraint_norm,kkt_stationarity,rel_change"
    );
    let its: Vec<usize> = lines.map(|l| l.split(',').next().unwrap().parse().unwrap()).collect();
    assert!(!its.is_empty() && its.windows(2).all(|w| w[0] < w[1]));
}

#[test]
fn input_errors_exit_one_and_name_the_input() {
    let d = TempDir::new().unwrap();
    let k = mat(d.path(), "K.txt", &[&[1.0, 0.0], &[0.0, 1.0]]);
    let y = vector(d.path(), "y.txt", &[1.0, 2.0]);
    let missing = d.path().join("nope.txt");
    let o = cgist(&["solve", "--k-file", &k, "--y-file", missing.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("nope.txt"), "{}", stderr(&o));

    let b = mat(d.path(), "B.txt", &[&[1.0, 1.0]]);
    let o = cgist(&["solve", "--k-file", &k, "--y-file", &y, "--b-file", &b]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("right-hand side"), "{}", stderr(&o));

    let short = vector(d.path(), "short.txt", &[1.0]);
    let o = cgist(&["solve", "--k-file", &k, "--y-file", &short]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("short.txt"), "{}", stderr(&o));

    let bad = d.path().join("bad.txt");
    fs::write(&bad, "2 1\n1.0\nx\n").unwrap();
    let o = cgist(&["solve", "--k-file", &k, "--y-file", bad.to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("bad.txt"), "{}", stderr(&o));

    let o = cgist(&["solve", "--k-file", &k, "--y-file", &y, "--bogus"]);
    assert_eq!(code(&o), 1);
    let o = cgist(&["solve", "--k-file", &k, "--y-file", &y, "--penalty", "joint:0"]);
    assert_eq!(code(&o), 1);
}

#[test]
fn iteration_cap_and_divergence_exit_codes() {
    let d = TempDir::new().unwrap();
    let k = mat(d.path(), "K.txt", &[&[1.0, 0.5], &[0.2, 1.0], &[0.3, -0.4]]);
    let y = vector(d.path(), "y.txt", &[1.0, -2.0, 0.5]);
    let o = cgist(&["solve", "--k-file", &k, "--y-file", &y, "--lambda", "0.1", "--max-iter", "3"]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert_eq!(json(&o)["iterations"], 3);

    let o = cgist(&["solve", "--k-file", &k, "--y-file", &y, "--tau1", "50"]);
    assert_eq!(code(&o), 1, "step condition is checked by default");
    let o = cgist(&[
        "solve", "--k-file", &k, "--y-file", &y, "--tau1", "50", "--unchecked-steps", "--max-iter", "1000",
    ]);
    assert_eq!(code(&o), 3, "{}", stderr(&o));
    assert!(stderr(&o).contains("diverged"));
}

#[test]
fn solve_dispatches_on_a_and_b() {
    let d = TempDir::new().unwrap();
    let k = mat(d.path(), "K.txt", &[&[1.0, 0.0, 0.5], &[0.0, 1.0, 0.5]]);
    let y = vector(d.path(), "y.txt", &[1.0, 2.0]);
    let a = mat(d.path(), "A.txt", &[&[1.0, -1.0, 0.0], &[0.0, 1.0, -1.0]]);
    let b = mat(d.path(), "B.txt", &[&[1.0, 1.0, 1.0]]);
    let rhs = vector(d.path(), "b.txt", &[1.0]);
    let base = ["solve", "--k-file", &k, "--y-file", &y, "--lambda", "0.2", "--max-iter", "200000", "--rel-tol", "1e-12"];
    for (extra, name) in [
        (vec![], "ista"),
        (vec!["--b-file", &b, "--rhs-file", &rhs], "cista"),
        (vec!["--a-file", &a], "gist"),
        (vec!["--a-file", &a, "--b-file", &b, "--rhs-file", &rhs], "constrained_gist"),
    ] {
        let args: Vec<&str> = base.iter().copied().chain(extra.iter().map(|s| s.as_ref())).collect();
        let o = cgist(&args);
        assert_eq!(code(&o), 0, "{name}: {}", stderr(&o));
        let r = json(&o);
        assert_eq!(r["algorithm"], name);
        if name.contains("cista") || name.contains("constrained") {
            let x = floats(&r["x"]);
            assert!((x.iter().sum::<f64>() - 1.0).abs() < 1e-6);
        }
    }
    let o = cgist(&["solve", "--k-file", &k, "--y-file", &y, "--algorithm", "fista", "--lambda", "0.2"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    assert_eq!(json(&o)["algorithm"], "fista");
}

#[test]
fn constrained_trace_decays_late() {
    let d = TempDir::new().unwrap();
    let k = mat(d.path(), "K.txt", &[&[1.0, 0.3, 0.0, 0.2], &[0.0, 1.0, 0.4, 0.0], &[0.5, 0.0, 1.0, 0.1]]);
    let y = vector(d.path(), "y.txt", &[1.0, -1.0, 2.0]);
    let b = mat(d.path(), "B.txt", &[&[1.0, 1.0, 1.0, 1.0], &[1.0, -1.0, 0.0, 2.0]]);
    let rhs = vector(d.path(), "b.txt", &[1.0, 0.5]);
    let out = d.path().join("t");
    let o = cgist(&[
        "solve", "--k-file", &k, "--y-file", &y, "--b-file", &b, "--rhs-file", &rhs, "--lambda", "0.1",
        "--max-iter", "2000", "--rel-tol", "0", "--trace-every", "1", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    let trace = fs::read_to_string(out.join("trace.csv")).unwrap();
    let c: Vec<f64> = trace.lines().skip(1).map(|l| l.split(',').nth(2).unwrap().parse().unwrap()).collect();
    assert_eq!(c.len(), 2000);
    let tail = &c[c.len() - c.len() / 10..];
    assert!(tail.windows(2).all(|w| w[1] <= w[0]), "{tail:?}");
}

#[test]
fn basis_pursuit_examples() {
    let d = TempDir::new().unwrap();
    let b = mat(d.path(), "B.txt", &[&[1.0, 2.0]]);
    let rhs = vector(d.path(), "b.txt", &[2.0]);
    let o = cgist(&["bp", "--b-file", &b, "--rhs-file", &rhs, "--max-iter", "100000", "--rel-tol", "1e-13"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let x = floats(&json(&o)["x"]);
    assert!(x[0].abs() < 1e-6 && (x[1] - 1.0).abs() < 1e-6, "{x:?}");

    let zero = vector(d.path(), "zero.txt", &[0.0]);
    let o = cgist(&["bp", "--b-file", &b, "--rhs-file", &zero]);
    assert_eq!(code(&o), 0);
    assert!(floats(&json(&o)["x"]).iter().all(|&v| v == 0.0));

    let over = mat(d.path(), "over.txt", &[&[1.0], &[1.0]]);
    let bad = vector(d.path(), "bad.txt", &[1.0, 3.0]);
    let o = cgist(&["bp", "--b-file", &over, "--rhs-file", &bad]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("inconsistent"), "{}", stderr(&o));
}

#[test]
fn l1_ball_fits() {
    let d = TempDir::new().unwrap();
    let b = mat(d.path(), "B.txt", &[&[1.0, 0.0], &[0.0, 1.0]]);
    let rhs = vector(d.path(), "b.txt", &[2.0, 1.0]);
    // projection of (2, 1) onto the ℓ1 ball of radius 1 is (1, 0)
    for cmd in [
        vec!["bp", "--b-file", &b, "--rhs-file", &rhs, "--radius", "1"],
        vec!["l1c", "--k-file", &b, "--y-file", &rhs, "--radius", "1"],
    ] {
        let o = cgist(&cmd);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let x = floats(&json(&o)["x"]);
        assert!((x[0] - 1.0).abs() < 1e-6 && x[1].abs() < 1e-6, "{x:?}");
    }
}

#[test]
fn prox_examples() {
    let o = cgist(&["prox", "soft", "--lambda", "1", "--values", "3,0.5,-5"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let lines: Vec<String> = String::from_utf8(o.stdout).unwrap().lines().map(String::from).collect();
    assert_eq!(lines[0], "3 1");
    let v: Vec<f64> = lines[1..].iter().map(|l| l.parse().unwrap()).collect();
    assert_eq!(v, vec![2.0, 0.0, -4.0]);

    let o = cgist(&["prox", "joint", "--lambda", "1", "--group", "2", "--values", "3,1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let text = String::from_utf8(o.stdout).unwrap();
    let row: Vec<f64> = text.lines().nth(1).unwrap().split_whitespace().map(|t| t.parse().unwrap()).collect();
    assert_eq!(row, vec![2.0, 1.0]);

    let o = cgist(&["prox", "linf", "--lambda", "1", "--values", "3,-0.5"]);
    let v: Vec<f64> = String::from_utf8(o.stdout).unwrap().lines().skip(1).map(|l| l.parse().unwrap()).collect();
    assert_eq!(v, vec![1.0, -0.5]);

    let o = cgist(&["prox", "soft", "--values", "1"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("--lambda"));
}

#[test]
fn normcheck_reports_violated_condition() {
    let d = TempDir::new().unwrap();
    let k = mat(d.path(), "K.txt", &[&[1.0, 0.0], &[0.0, 1.0]]);
    let b = mat(d.path(), "B.txt", &[&[1.0, -1.0]]);
    let o = cgist(&["normcheck", "--k-file", &k, "--b-file", &b, "--tau1", "1", "--tau3", "1"]);
    assert_eq!(code(&o), 0, "{}", stderr(&o));
    let r = json(&o);
    assert!((r["primal"]["value"].as_f64().unwrap() - 2.5).abs() < 1e-6);
    assert_eq!(r["primal"]["holds"], false);
    assert!(stderr(&o).contains("VIOLATED") && stderr(&o).contains("suggested"));
    let t = r["suggested"]["tau1"].as_f64().unwrap();
    assert!((t - 0.9 / (1.01 * 2.5)).abs() < 1e-6, "{t}");

    let o = cgist(&["normcheck", "--k-file", &k, "--b-file", &b]);
    assert_eq!(json(&o)["primal"]["holds"], true);
}

#[test]
fn meg_validation_and_single_case() {
    let d = TempDir::new().unwrap();
    let cfg = d.path().join("bad.json");
    fs::write(&cfg, r#"{"n_face": 10}"#).unwrap();
    let o = cgist(&["meg", "--config", cfg.to_str().unwrap(), "--out", d.path().join("x").to_str().unwrap()]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).contains("dyadic"), "{}", stderr(&o));

    let cfg = d.path().join("small.json");
    fs::write(
        &cfg,
        r#"{"n_face": 8, "sensors": 80, "cases": ["a"], "budgets": {"unconstrained": 300, "constrained": 1000}}"#,
    )
    .unwrap();
    let run = |dir: &str| {
        let out = d.path().join(dir);
        let o = cgist(&["meg", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        out
    };
    let (o1, o2) = (run("one"), run("two"));
    let names: Vec<String> = {
        let mut v: Vec<String> = fs::read_dir(&o1)
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        v.sort();
        v
    };
    assert_eq!(
        names,
        [
            "coefficients_a.json", "coefficients_a.txt", "field_a.json", "field_a.txt", "field_input.json",
            "field_input.txt", "report_a.json", "summary.txt", "trace_a.csv",
        ]
    );
    let r1 = fs::read(o1.join("report_a.json")).unwrap();
    assert_eq!(r1, fs::read(o2.join("report_a.json")).unwrap());
    let r: Value = serde_json::from_slice(&r1).unwrap();
    assert_eq!(r["case"], "a");
    let (res, noise) = (r["residual"].as_f64().unwrap(), r["noise_norm"].as_f64().unwrap());
    assert!((res - noise).abs() <= 0.02 * noise);
    let layout: Value = serde_json::from_str(&fs::read_to_string(o1.join("field_a.json")).unwrap()).unwrap();
    assert_eq!(layout["length"], 768);
    assert_eq!(layout["channel_layout"].as_str().unwrap().split(':').next().unwrap(), "channel-major");
}
