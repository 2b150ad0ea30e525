//! End-to-end runs of the `csnvi` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};
use std::time::Instant;

fn csnvi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_csnvi")).args(args).env_remove("CSNVI_THREADS").output().expect("binary runs")
}

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let p = dir.join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn read_csv(p: &Path) -> (Vec<String>, Vec<Vec<f64>>) {
    let text = std::fs::read_to_string(p).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().split(',').map(str::to_owned).collect();
    let rows = lines.map(|l| l.split(',').map(|v| v.parse().unwrap()).collect()).collect();
    (header, rows)
}

#[test]
fn fit_bundled_fixture_and_rerun() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let t = Instant::now();
    let out = csnvi(&["fit", "--config", s(&fixture("normal_sample.toml")), "--out", s(&a)]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(t.elapsed().as_secs() < 60);
    for f in ["params.json", "trace.csv", "meta.json"] {
        assert!(a.join(f).exists(), "{f}");
    }
    let (header, rows) = read_csv(&a.join("trace.csv"));
    assert_eq!(header[..4], ["window", "elbo", "time", "skew_norm"]);
    assert_eq!(rows.len(), 20);
    let meta: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(a.join("meta.json")).unwrap()).unwrap();
    assert_eq!(meta["config"]["seed"], 1);
    assert_eq!(meta["optimizer"]["factor"], "lu");
    assert!(csnvi(&["fit", "--config", s(&fixture("normal_sample.toml")), "--out", s(&b)]).status.success());
    assert_eq!(std::fs::read(a.join("trace.csv")).unwrap(), std::fs::read(b.join("trace.csv")).unwrap());
    assert_eq!(std::fs::read(a.join("params.json")).unwrap(), std::fs::read(b.join("params.json")).unwrap());
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let missing = write(dir.path(), "missing.toml", "[model]\nkind = \"normal-sample\"\ndata = \"nowhere.csv\"\n");
    let out = csnvi(&["fit", "--config", s(&missing), "--out", s(&dir.path().join("o"))]);
    assert_eq!(out.status.code(), Some(3));
    assert!(String::from_utf8_lossy(&out.stderr).contains("nowhere.csv"));

    let bad = write(dir.path(), "bad.toml", "[model]\nkind = \"normal-sample\"\n[optimizer]\nstep = 0.0\n");
    assert_eq!(csnvi(&["fit", "--config", s(&bad)]).status.code(), Some(2));
    let unknown = write(dir.path(), "unknown.toml", "[model]\nkind = \"normal-sample\"\nwhat = 1\n");
    assert_eq!(csnvi(&["fit", "--config", s(&unknown)]).status.code(), Some(2));

    // A step this large sends the log-variance iterate to overflow.
    let wild = write(
        dir.path(),
        "wild.toml",
        "family = \"gaussian\"\n[model]\nkind = \"normal-sample\"\n[optimizer]\nmode = \"natural-constant\"\nstep = 50.0\niterations = 2000\n",
    );
    let out = csnvi(&["fit", "--config", s(&wild), "--out", s(&dir.path().join("w"))]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));

    let a = write(dir.path(), "a.csv", "u,v\n1,2\n3,4\n");
    let b = write(dir.path(), "b.csv", "u\n1\n3\n");
    assert_eq!(csnvi(&["metrics", "--a", s(&a), "--b", s(&b)]).status.code(), Some(3));
}

fn fit_small(dir: &Path, toml: &str) -> PathBuf {
    let cfg = write(dir, "run.toml", toml);
    let out = dir.join("fit");
    let o = csnvi(&["fit", "--config", s(&cfg), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    out.join("params.json")
}

#[test]
fn sample_and_density() {
    let dir = tempfile::tempdir().unwrap();
    let params = fit_small(dir.path(), "seed = 3\n[model]\nkind = \"normal-variance\"\n[optimizer]\niterations = 3000\n");
    let p = s(&params);

    let empty = dir.path().join("empty");
    assert!(csnvi(&["sample", "--params", p, "--n", "0", "--out", s(&empty)]).status.success());
    assert_eq!(std::fs::read_to_string(empty.join("samples.csv")).unwrap(), "theta1\n");

    let (x, y) = (dir.path().join("x"), dir.path().join("y"));
    for d in [&x, &y] {
        assert!(csnvi(&["sample", "--params", p, "--n", "500", "--seed", "9", "--out", s(d)]).status.success());
    }
    assert_eq!(std::fs::read(x.join("samples.csv")).unwrap(), std::fs::read(y.join("samples.csv")).unwrap());

    let dens = dir.path().join("dens");
    assert!(csnvi(&["density", "--params", p, "--coordinate", "1", "--out", s(&dens)]).status.success());
    let (_, rows) = read_csv(&dens.join("density.csv"));
    assert_eq!(rows.len(), 1024);
    let h = rows[1][0] - rows[0][0];
    let integral: f64 = rows.windows(2).map(|w| 0.5 * h * (w[0][1] + w[1][1])).sum();
    assert!((integral - 1.0).abs() < 1e-4, "{integral}");

    assert_eq!(csnvi(&["density", "--params", p, "--coordinate", "2", "--out", s(&dens)]).status.code(), Some(2));
    assert_eq!(csnvi(&["density", "--params", p, "--coordinate", "0", "--out", s(&dens)]).status.code(), Some(2));

    let m = csnvi(&["metrics", "--a", s(&x.join("samples.csv")), "--b", s(&y.join("samples.csv"))]);
    let v: serde_json::Value = serde_json::from_slice(&m.stdout).unwrap();
    assert!((v["m_star"].as_f64().unwrap() - 11.512925464970229).abs() < 1e-9);
}

#[test]
fn gaussian_density_matches_normal_pdf() {
    let dir = tempfile::tempdir().unwrap();
    let params = write(
        dir.path(),
        "p.json",
        r#"{"mu":[1.0,-2.0],"factor":"cholesky","l":[[1.5,0.0],[0.4,0.8]],"skew":"lambda","skew_values":[0.0,0.0]}"#,
    );
    let out = dir.path().join("d");
    let o = csnvi(&["density", "--params", s(&params), "--coordinate", "2", "--lo", "-6", "--hi", "2", "--points", "101", "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let sd = (0.4f64 * 0.4 + 0.8 * 0.8).sqrt();
    for r in read_csv(&out.join("density.csv")).1 {
        let z = (r[0] + 2.0) / sd;
        let want = (-0.5 * z * z).exp() / (sd * (2.0 * std::f64::consts::PI).sqrt());
        assert!((r[1] - want).abs() < 1e-10);
    }
}

#[test]
fn grid_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let grid = |shift: f64| {
        let mut t = String::from("x,density\n");
        for k in 0..1024 {
            let x = -10.0 + 20.0 * k as f64 / 1023.0;
            let z = x - shift;
            t.push_str(&format!("{x},{}\n", (-0.5 * z * z).exp() / (2.0 * std::f64::consts::PI).sqrt()));
        }
        t
    };
    let a = write(dir.path(), "a.csv", &grid(0.0));
    let b = write(dir.path(), "b.csv", &grid(0.5));
    let out = dir.path().join("m");
    let o = csnvi(&["metrics", "--grids", "--a", s(&a), "--b", s(&b), "--out", s(&out)]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(out.join("metrics.json")).unwrap()).unwrap();
    assert!((v["iae"].as_f64().unwrap() - 0.394_913_7).abs() < 1e-3);
}

#[test]
fn check_battery() {
    let t = Instant::now();
    let o = csnvi(&["check", "--quick"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stdout));
    assert!(t.elapsed().as_secs() < 30);
    assert!(csnvi(&["check"]).status.success());
}

#[test]
fn threads_variable_is_validated() {
    let o = Command::new(env!("CARGO_BIN_EXE_csnvi"))
        .args(["fit", "--config", s(&fixture("normal_sample.toml"))])
        .env("CSNVI_THREADS", "zero")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(2));
}
