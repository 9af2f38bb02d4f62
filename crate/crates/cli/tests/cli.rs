use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn nqs_bell(args: &[&str], out: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_nqs-bell"))
        .args(args)
        .arg("--out")
        .arg(out)
        .env_remove("NQS_BELL_OUT")
        .output()
        .expect("binary runs")
}

fn json(path: &Path) -> Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

#[test]
fn bound_matches_brute_force() {
    let dir = tempfile::tempdir().unwrap();
    for (args, expected) in [
        (["--ineq", "i2", "--n", "6"], -12.0),
        (["--ineq", "i3", "--n", "5"], -2.0),
    ] {
        let out = dir.path().join(args[1]);
        let o = nqs_bell(&[&["bound"][..], &args].concat(), &out);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
        let b = json(&out.join("bound.json"));
        assert_eq!(b["formula"], expected);
        assert_eq!(b["brute_force"], expected);
        assert_eq!(b["mismatch"], false);
    }
    let out = dir.path().join("i1");
    let o = nqs_bell(&["bound", "--ineq", "i1", "--n", "12"], &out);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).contains("formula-only"));
    let b = json(&out.join("bound.json"));
    assert_eq!(b["formula"], -96.0);
    assert_eq!(b["formula_only"], true);
    assert!(b["brute_force"].is_null());
}

#[test]
fn ed_values_and_capacity() {
    let dir = tempfile::tempdir().unwrap();
    let run = |args: &[&str], name: &str| {
        let out = dir.path().join(name);
        let o = nqs_bell(&[&["ed"][..], args].concat(), &out);
        (o, out)
    };
    let (o, out) = run(&["--ineq", "i3", "--n", "6", "--theta", "0"], "i3");
    assert_eq!(code(&o), 0);
    let e = json(&out.join("ed.json"));
    assert!((e["min_eigenvalue"].as_f64().unwrap() + 2.0 * 2f64.sqrt()).abs() < 1e-9);
    assert_eq!(e["violated"], true);
    assert_eq!(e["config"]["inequality"]["kind"], "i3");
    let header = json(&out.join("eigenvector.json"));
    assert_eq!(header["length"], 64);
    assert_eq!(
        fs::metadata(out.join("eigenvector.bin")).unwrap().len(),
        64 * 16
    );

    for n in ["4", "7"] {
        let (o, out) = run(
            &["--ineq", "i3", "--n", n, "--theta", "pi/2"],
            &format!("half_pi_{n}"),
        );
        assert_eq!(code(&o), 0);
        let e = json(&out.join("ed.json"));
        assert!(e["min_eigenvalue"].as_f64().unwrap() >= -2.0 - 1e-9);
        assert_eq!(e["violated"], false);
    }

    // two sites, Σᶻ = 0: the 2×2 block [[−Δ·w, 2w], [2w, −Δ·w]] with w = 4(1+δ)/√3
    let (o, out) = run(
        &["--ineq", "i1", "--n", "2", "--delta", "0.9", "--Delta", "2"],
        "i1",
    );
    assert_eq!(code(&o), 0);
    let w = 4.0 * 1.9 / 3f64.sqrt();
    let e = json(&out.join("ed.json"));
    assert!((e["min_eigenvalue"].as_f64().unwrap() - (-2.0 * w - 2.0 * w)).abs() < 1e-9);
    assert_eq!(e["sector"], 0);

    let (o, _) = run(&["--ineq", "i3", "--n", "24"], "too_big");
    assert_eq!(code(&o), 4);
}

#[test]
fn usage_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, "{\"inequality\": {\"kind\": \"i3\", ").unwrap();
    let o = nqs_bell(
        &["train", "--config", cfg.to_str().unwrap()],
        &dir.path().join("a"),
    );
    assert_eq!(code(&o), 2);
    fs::write(
        &cfg,
        r#"{"inequality": {"kind": "i3"}, "sr": {"learning_rate": 0.1}}"#,
    )
    .unwrap();
    let o = nqs_bell(
        &["train", "--config", cfg.to_str().unwrap()],
        &dir.path().join("a"),
    );
    assert_eq!(code(&o), 2);
    for args in [
        &["train"][..],
        &["train", "--ineq", "i4"],
        &["ed", "--ineq", "i3", "--Delta", "2"],
        &["train", "--ineq", "i1", "--n", "7"],
        &["scan", "--ineq", "i3", "--axis", "Delta", "--grid", "1,2"],
        &["scan", "--ineq", "i3", "--axis", "theta", "--grid", ""],
    ] {
        assert_eq!(code(&nqs_bell(args, &dir.path().join("b"))), 2, "{args:?}");
    }
}

#[test]
fn numerical_abort_exits_3_with_diagnostics() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("huge.json");
    fs::write(
        &cfg,
        r#"{"inequality": {"kind": "i3", "theta": 0}, "N": 6,
            "sr": {"eta0": 1e6, "iterations": 50, "samples_per_iteration": 200}}"#,
    )
    .unwrap();
    let out = dir.path().join("run");
    let o = nqs_bell(&["train", "--config", cfg.to_str().unwrap()], &out);
    assert_eq!(code(&o), 3, "{}", String::from_utf8_lossy(&o.stderr));
    let d = json(&out.join("diagnostic.json"));
    assert!(d["error"].as_str().unwrap().contains("non-finite"));
    let ck = json(&out.join("checkpoint.json"));
    assert!(ck["params"]["a_re"]
        .as_array()
        .unwrap()
        .iter()
        .all(|x| x.as_f64().unwrap().is_finite()));
    assert!(!out.join("summary.json").exists());
}

#[test]
fn i3_training_violates() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = nqs_bell(
        &[
            "train",
            "--ineq",
            "i3",
            "--n",
            "8",
            "--iters",
            "150",
            "--samples",
            "1000",
        ],
        &out,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&out.join("summary.json"));
    assert_eq!(s["violated"], true);
    let qv = s["qv_final"].as_f64().unwrap();
    assert!(qv < -2.7, "{qv}");
    assert!(s["margin"].as_f64().unwrap() > 0.0);
    assert_eq!(
        fs::read_to_string(out.join("curve.jsonl"))
            .unwrap()
            .lines()
            .count(),
        150
    );
    assert_eq!(
        json(&out.join("checkpoint.json"))["scheme"],
        "partial_symmetric"
    );
}

#[test]
fn i1_above_critical_anisotropy_does_not_violate() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("run");
    let o = nqs_bell(
        &[
            "train",
            "--ineq",
            "i1",
            "--n",
            "12",
            "--Delta",
            "3",
            "--iters",
            "30",
            "--samples",
            "300",
        ],
        &out,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let s = json(&out.join("summary.json"));
    assert_eq!(s["violated"], false);
    assert_eq!(s["classical_bound"], -144.0);
    assert!(s["margin"].as_f64().unwrap() < 0.0);
}

fn curve_without_wall_time(path: &Path) -> Vec<Value> {
    fs::read_to_string(path)
        .unwrap()
        .lines()
        .map(|l| {
            let mut v: Value = serde_json::from_str(l).unwrap();
            v.as_object_mut()
                .unwrap()
                .remove("wall_ms")
                .expect("wall_ms present");
            v
        })
        .collect()
}

#[test]
fn identical_configs_reproduce() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "train",
        "--ineq",
        "i2",
        "--n",
        "6",
        "--iters",
        "20",
        "--samples",
        "200",
        "--chains",
        "3",
        "--seed",
        "5",
    ];
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    assert_eq!(code(&nqs_bell(&args, &a)), 0);
    assert_eq!(code(&nqs_bell(&args, &b)), 0);
    assert_eq!(
        curve_without_wall_time(&a.join("curve.jsonl")),
        curve_without_wall_time(&b.join("curve.jsonl"))
    );
    let summary = |d: &Path| fs::read_to_string(d.join("summary.json")).unwrap();
    assert_eq!(
        summary(&a).replace(a.to_str().unwrap(), ""),
        summary(&b).replace(b.to_str().unwrap(), "")
    );
    assert_eq!(
        fs::read(a.join("checkpoint.json")).unwrap(),
        fs::read(b.join("checkpoint.json")).unwrap()
    );
    let c = dir.path().join("c");
    assert_eq!(
        code(&nqs_bell(
            &[
                "train",
                "--ineq",
                "i2",
                "--n",
                "6",
                "--iters",
                "20",
                "--samples",
                "200",
                "--chains",
                "3",
                "--seed",
                "6"
            ],
            &c
        )),
        0
    );
    assert_ne!(
        curve_without_wall_time(&a.join("curve.jsonl")),
        curve_without_wall_time(&c.join("curve.jsonl"))
    );
}

#[test]
fn ed_only_scan_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan");
    let o = nqs_bell(
        &[
            "scan",
            "--ineq",
            "i3",
            "--n",
            "6",
            "--axis",
            "theta",
            "--grid",
            "0:pi:5",
            "--ed-only",
        ],
        &out,
    );
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let mut rdr = csv::Reader::from_path(out.join("scan.csv")).unwrap();
    assert_eq!(
        rdr.headers().unwrap(),
        vec!["axis", "qv", "stderr", "ed", "bound", "violated"]
    );
    let rows: Vec<csv::StringRecord> = rdr.records().map(Result::unwrap).collect();
    assert_eq!(rows.len(), 5);
    let ed: Vec<f64> = rows.iter().map(|r| r[3].parse().unwrap()).collect();
    assert!((ed[0] + 2.0 * 2f64.sqrt()).abs() < 1e-9);
    assert!((ed[0] - ed[4]).abs() < 1e-9);
    assert!((ed[1] - ed[3]).abs() < 1e-9);
    assert!(ed[2] >= -2.0 - 1e-9);
    let violated: Vec<&str> = rows.iter().map(|r| &r[5]).collect();
    assert_eq!(violated, ["true", "true", "false", "true", "true"]);
    assert!(rows
        .iter()
        .all(|r| r[1].is_empty() && r[2].is_empty() && &r[4] == "-2.0"));
    assert!(out.join("point_002").join("ed.json").exists());
}

#[test]
fn scan_continues_past_failures() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("scan");
    let o = nqs_bell(
        &[
            "scan",
            "--ineq",
            "i3",
            "--axis",
            "N",
            "--grid",
            "4,1,5",
            "--ed-only",
        ],
        &out,
    );
    assert_eq!(code(&o), 2);
    let text = fs::read_to_string(out.join("scan.csv")).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 4);
    assert_eq!(lines[2], "1.0,,,,,");
    assert!(lines[3].starts_with("5.0,,,-2.828"));
}

#[test]
fn env_var_sets_default_output() {
    let dir = tempfile::tempdir().unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_nqs-bell"))
        .args(["bound", "--ineq", "i3", "--n", "4"])
        .env("NQS_BELL_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    assert!(dir.path().join("bound.json").exists());
}
