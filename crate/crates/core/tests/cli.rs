//! The command-line binary: tables, artifacts, config files, determinism and exit codes.

use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn ssflow(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssflow")).args(args).output().unwrap()
}

fn ssflow_env(args: &[&str], threads: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ssflow")).args(args).env("SSFLOW_THREADS", threads).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines().filter(|l| !l.starts_with('#')).skip(1).map(|l| l.split(',').map(String::from).collect()).collect()
}

const FLAGSHIP: [&str; 8] = ["--n", "3", "--gamma", "12", "--lambda", "0.02", "--s-target", "-20"];

fn construct_into(dir: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["construct"];
    args.extend_from_slice(&FLAGSHIP);
    args.extend_from_slice(&["--out", dir.to_str().unwrap()]);
    args.extend_from_slice(extra);
    ssflow(&args)
}

#[test]
fn critical_points_table() {
    let o = ssflow(&["critical-points", "--n", "3", "--gamma", "1.6667", "--lambda", "0.6667", "--isentropic"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("id,V,C,line,kind\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 11);
    assert_eq!(r.iter().filter(|r| r[2] != "inf" && r[2] != "-inf").count(), 9);
    assert!(r.iter().any(|r| r[0] == "P+inf" && r[2] == "inf"));
}

#[test]
fn presence_case_for_gamma_two() {
    let o = ssflow(&["critical-points", "--kappa", "0", "--gamma", "2", "--lambda", "1.4", "--n", "3"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.contains("presence case (i): lambda_max = 1.5,"), "{text}");
}

#[test]
fn invalid_gamma_is_a_usage_error() {
    for g in ["1", "0.5", "-3"] {
        let o = ssflow(&["critical-points", "--n", "3", "--gamma", g, "--lambda", "0.5"]);
        assert_eq!(o.status.code(), Some(2), "gamma = {g}");
    }
    assert_eq!(ssflow(&["critical-points"]).status.code(), Some(2));
    assert_eq!(ssflow(&["construct", "--n", "3", "--gamma", "x"]).status.code(), Some(2));
}

#[test]
fn gamma3_column() {
    let o = ssflow(&["gamma3"]);
    assert_eq!(o.status.code(), Some(0));
    let r = rows(&stdout(&o));
    assert_eq!(r.len(), 50);
    let g: Vec<f64> = r.iter().map(|r| r[1].parse().unwrap()).collect();
    assert!(g.windows(2).all(|w| w[1] > w[0]));
    assert!((g[0] - ssflow::local_analysis::gamma3(0.001, 3).unwrap()).abs() < 1e-12);
    let r = rows(&stdout(&ssflow(&["gamma3", "--grid", "0.11,0.2"])));
    assert_eq!(r[0][2], "asymptote");
    assert!(r[0][1].parse::<f64>().unwrap() > 100.0);
    assert_eq!(r[1][1], "absent");
}

#[test]
fn construct_artifacts() {
    let dir = tempfile::tempdir().unwrap();
    let o = construct_into(dir.path(), &[]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let summary: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("summary.json")).unwrap()).unwrap();
    let m = summary.as_object().unwrap();
    assert_eq!(m["shock_detected"], Value::Bool(false));
    assert!(m["A8"].as_f64().unwrap() < 0.0);
    assert_eq!(m["x8"].as_f64(), Some(-1.0));
    assert_eq!(m["version"], Value::from(env!("CARGO_PKG_VERSION")));
    for k in ["s_origin", "nu", "omega", "L1", "L2", "R2", "n", "gamma", "lambda", "kappa", "rel_tol", "abs_tol"] {
        assert!(m.contains_key(k), "{k}");
    }
    assert!(m.values().all(|v| !v.is_string() || v.as_str() != Some("NaN")));
    let csv = fs::read_to_string(dir.path().join("solution.csv")).unwrap();
    assert!(csv.starts_with("x,V,C,R\n") && !csv.contains('\r'));
    let xs: Vec<f64> = rows(&csv).iter().map(|r| r[0].parse().unwrap()).collect();
    assert!(xs.windows(2).all(|w| w[1] >= w[0]));
    assert!(xs.contains(&0.0));
    let svg = fs::read_to_string(dir.path().join("portrait.svg")).unwrap();
    assert!(svg.contains(r#"width="800" height="800""#) && svg.contains("<polyline"));
}

#[test]
fn construct_is_deterministic_across_thread_counts() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let mut args = vec!["construct"];
    args.extend_from_slice(&FLAGSHIP);
    let run = |d: &Path, threads: &str| {
        let mut v = args.clone();
        v.extend_from_slice(&["--out", d.to_str().unwrap()]);
        ssflow_env(&v, threads)
    };
    assert_eq!(run(a.path(), "1").status.code(), Some(0));
    assert_eq!(run(b.path(), "4").status.code(), Some(0));
    for f in ["solution.csv", "summary.json", "portrait.svg"] {
        assert_eq!(fs::read(a.path().join(f)).unwrap(), fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    assert_eq!(ssflow_env(&["gamma3"], "0").status.code(), Some(2));
}

#[test]
fn construct_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path().to_str().unwrap();
    let o = ssflow(&["construct", "--n", "3", "--gamma", "12", "--lambda", "0.02", "--s-target", "1", "--out", d]);
    assert_eq!(o.status.code(), Some(3));
    let o = ssflow(&["construct", "--n", "3", "--gamma", "8", "--lambda", "0.02", "--out", d]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("run.cfg");
    let out = dir.path().join("out");
    fs::write(&cfg, format!("# flagship\nn = 3\ngamma = 12\nlambda = 0.5 # replaced below\nsvg = true\nout = {}\n", out.display())).unwrap();
    let o = ssflow(&["construct", "--config", cfg.to_str().unwrap(), "--lambda", "0.02", "--no-svg"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("summary.json").exists());
    assert!(!out.join("portrait.svg").exists());
    let m: Value = serde_json::from_str(&fs::read_to_string(out.join("summary.json")).unwrap()).unwrap();
    assert_eq!(m["lambda"].as_f64(), Some(0.02));
    assert_eq!(m["s_target_vertical"], Value::Bool(true));
    fs::write(&cfg, "n = 3\ncolour = red\n").unwrap();
    assert_eq!(ssflow(&["construct", "--config", cfg.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn flow_table() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec!["flow"];
    args.extend_from_slice(&FLAGSHIP);
    args.extend_from_slice(&["--grid", "t=-1,0;r=1e-2:1e2:9:log", "--out", dir.path().to_str().unwrap()]);
    let o = ssflow(&args);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let csv = fs::read_to_string(dir.path().join("flow.csv")).unwrap();
    assert!(csv.starts_with("t,r,rho,u,c,p,in_domain\n"));
    let r = rows(&csv);
    assert_eq!(r.len(), 18);
    let f = |row: &Vec<String>, i: usize| row[i].parse::<f64>().unwrap();
    for row in &r {
        let (rho, c, p) = (f(row, 2), f(row, 4), f(row, 5));
        assert!((p - rho * c * c / 12.0).abs() <= 1e-15 * p.abs());
    }
    let t0: Vec<&Vec<String>> = r.iter().filter(|row| f(row, 0) == 0.0).collect();
    let (a, b) = (t0[0], t0[8]);
    let slope = |i: usize| (f(b, i).abs().ln() - f(a, i).abs().ln()) / (f(b, 1).ln() - f(a, 1).ln());
    assert!((slope(3) - 0.98).abs() < 0.0098 && (slope(4) - 0.98).abs() < 0.0098);
    let m: Value = serde_json::from_str(&fs::read_to_string(dir.path().join("flow_summary.json")).unwrap()).unwrap();
    assert!(m["u_r_rel_err"].as_f64().unwrap() < 1e-3);
    assert_eq!(m["p_blowup"], Value::Bool(false));
}

#[test]
fn guderley_probe_rows() {
    let o = ssflow(&["guderley-probe", "--grid", "n=3;gamma=1.6666666666666667;lambda=0.5"]);
    assert_eq!(o.status.code(), Some(0));
    let text = stdout(&o);
    assert!(text.starts_with("n,gamma,lambda,V_cross,V8,reached,scenario\n"));
    let r = rows(&text);
    assert_eq!(r.len(), 1);
    assert!(r[0][3].parse::<f64>().unwrap() < r[0][4].parse::<f64>().unwrap());
    assert_eq!(r[0][5], "false");
    let all = rows(&stdout(&ssflow(&["guderley-probe"])));
    assert_eq!(all.len(), 90);
    assert!(all.iter().all(|r| r[5] == "false"));
    let dir = tempfile::tempdir().unwrap();
    let o = ssflow(&["guderley-probe", "--gamma", "1e6", "--n", "3", "--out", dir.path().to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(rows(&fs::read_to_string(dir.path().join("probe.csv")).unwrap()).len(), 9);
}
