use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use expbasis::config::Config;
use expbasis::{GramReport, KadecReport};

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_expbasis"))
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs")
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn json(path: &Path) -> serde_json::Value {
    serde_json::from_str(&fs::read_to_string(path).unwrap()).unwrap()
}

fn write_config(dir: &Path, name: &str, body: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, body).unwrap();
    p.to_string_lossy().into_owned()
}

#[test]
fn ingham_manifest_exits_two_on_the_boundary() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = configs().join("ingham.json");
    let manifest = dir.path().join("m.json");
    fs::write(
        &manifest,
        format!(
            r#"{{"schema_version": 1, "experiment": "stability", "config": "{}", "output_dir": "out", "seed": 7}}"#,
            cfg.display()
        ),
    )
    .unwrap();
    let out = run(&["run", "--manifest", manifest.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2), "{}", String::from_utf8_lossy(&out.stderr));

    let report = json(&dir.path().join("out/stability.json"));
    assert_eq!(report["kadec"]["verdict"], "boundary");
    assert_eq!(report["seed"], 7);
    let kadec: KadecReport = serde_json::from_value(report["kadec"].clone()).unwrap();
    assert!(kadec.lambda.is_none());

    let csv = fs::read_to_string(dir.path().join("out/stability_kadec.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("# seed: 7"));
    assert_eq!(lines.next(), Some("n,epsilon,threshold,epsilon_times_4n"));
    let mut rows = 0;
    for line in lines {
        let cols: Vec<f64> = line.split(',').map(|c| c.parse().unwrap()).collect();
        assert!((cols[3] - 1.0).abs() < 1e-12, "{line}");
        assert!((cols[2] - 1.0 / (4.0 * cols[0].abs())).abs() < 1e-15);
        rows += 1;
    }
    assert_eq!(rows, 32);
    assert!(dir.path().join("out/stability_epsilon.dat").exists());
}

#[test]
fn unit_profile_gram_is_identity() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("gram.json");
    let bin_path = dir.path().join("g.gram");
    let cfg = configs().join("unit_gram.json");
    let out = run(&[
        "gram",
        "--config",
        cfg.to_str().unwrap(),
        "--out",
        out_path.to_str().unwrap(),
        "--export",
        bin_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&out_path);
    for r in report["reports"].as_array().unwrap() {
        assert_eq!(r["verdict"], "identity_within_tol");
        let parsed: GramReport = serde_json::from_value(r.clone()).unwrap();
        assert!(parsed.identity_deviation < 1e-12);
    }
    let bytes = fs::read(&bin_path).unwrap();
    assert_eq!(&bytes[..4], b"GRAM");
    assert_eq!(u32::from_le_bytes(bytes[4..8].try_into().unwrap()), 81);
    assert_eq!(u32::from_le_bytes(bytes[8..12].try_into().unwrap()), 0);
    assert_eq!(bytes.len(), 16 + 81 * 81 * 8);
    let sweep = fs::read_to_string(dir.path().join("gram_sweep.csv")).unwrap();
    assert!(sweep.starts_with("# seed: 0\nn_x,n_y,dimension,eigen_min,eigen_max,cond,verdict\n"));
}

#[test]
fn multirect_two_steps_matches_frozen_run() {
    let dir = tempfile::tempdir().unwrap();
    let out = run(&[
        "multirect",
        "build",
        "--steps",
        "1,0.5",
        "--window",
        "24",
        "--max-cond",
        "50",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    let code = out.status.code();
    assert!(code == Some(0) || code == Some(2), "{}", String::from_utf8_lossy(&out.stderr));
    let report = json(&dir.path().join("multirect.json"));
    // frozen from the first certified run
    assert_eq!(code, Some(0));
    let cond = report["selection"]["condition_number"].as_f64().unwrap();
    assert!((cond - 3.9999997923058377).abs() < 1e-9, "{cond}");
    let excluded: Vec<i64> = (-24..=24)
        .filter(|n| !report["selection"]["indices"].as_array().unwrap().contains(&(*n).into()))
        .collect();
    assert_eq!(excluded, vec![-22, -18, -14, -10, -6, -2, 2, 6, 10, 14, 18, 22]);
    assert!(report["isometry_defect"].as_f64().unwrap() < 1e-12);
    assert_eq!(report["phase_identity_holds"], true);
}

#[test]
fn search_miss_exits_two_with_best_condition() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("miss.json");
    let out = run(&[
        "multirect",
        "build",
        "--steps",
        "1,0.5",
        "--window",
        "6",
        "--max-cond",
        "1.0001",
        "--out",
        out_path.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
    let report = json(&out_path);
    assert_eq!(report["code"], "search_failed");
    assert!(report["best_condition_number"].as_f64().unwrap() > 1.0001);
}

#[test]
fn stability_outputs_are_byte_identical_across_runs() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_config(
        dir.path(),
        "c.json",
        r#"{"schema_version": 1,
            "profile": {"kind": "closed_form", "expr": "1+y/2", "lower": 1, "upper": 1.5},
            "perturbation": {"kind": "shrink", "theta": 0.9},
            "truncation": [3, 2], "n_max": 3, "grid": 201, "trials": 25}"#,
    );
    let mut outputs = Vec::new();
    for (i, threads) in ["1", "1", "2"].iter().enumerate() {
        let d = dir.path().join(format!("run{i}"));
        let out = run(&[
            "stability",
            "check",
            "--config",
            &cfg,
            "--seed",
            "11",
            "--threads",
            threads,
            "--out",
            d.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        outputs.push((
            fs::read(d.join("stability_kadec.csv")).unwrap(),
            fs::read(d.join("stability_pw.csv")).unwrap(),
            fs::read(d.join("stability.json")).unwrap(),
        ));
    }
    assert_eq!(outputs[0], outputs[1]);
    assert_eq!(outputs[0], outputs[2]);
    assert!(String::from_utf8_lossy(&outputs[0].1).starts_with("# seed: 11\n"));
}

#[test]
fn reports_reparse_and_configs_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    for name in [
        "linear_shrink.json",
        "ingham.json",
        "unit_gram.json",
        "reconstruct_box.json",
        "approximate.json",
        "spherical.json",
        "frame.json",
        "multirect.json",
    ] {
        let c = Config::from_path(&configs().join(name)).unwrap();
        let back = Config::from_json(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(back, c, "{name}");
    }
    let cfg = configs().join("reconstruct_box.json");
    let out = run(&["reconstruct", "--config", cfg.to_str().unwrap(), "--out", dir.path().to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = fs::read_to_string(dir.path().join("reconstruct.json")).unwrap();
    let report: serde_json::Value = serde_json::from_str(&text).unwrap();
    let parsed: Vec<expbasis::ReconstructionReport> = serde_json::from_value(report["reports"].clone()).unwrap();
    assert!(parsed[1].relative_residual < parsed[0].relative_residual);
    assert_eq!(serde_json::to_value(&parsed).unwrap(), report["reports"]);
}

#[test]
fn stdout_report_when_no_out_is_given() {
    let cfg = configs().join("linear_shrink.json");
    let out = run(&[
        "eval", "--config", cfg.to_str().unwrap(), "--n", "1", "--k", "0", "--x", "0", "--y", "0",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    // weighted element at the origin: (2 f(0))^{-1/2}
    assert!((v["value"][0].as_f64().unwrap() - 0.5f64.sqrt()).abs() < 1e-15);
}

#[test]
fn errors_exit_one_with_a_code() {
    let dir = tempfile::tempdir().unwrap();
    let bad = write_config(dir.path(), "bad.json", r#"{"schema_version": 2}"#);
    let out = run(&["gram", "--config", &bad]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["code"], "invalid_argument");

    let out = run(&["gram", "--config", dir.path().join("missing.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["code"], "io");

    let neg = write_config(
        dir.path(),
        "neg.json",
        r#"{"schema_version": 1, "profile": {"kind": "closed_form", "expr": "y-1/2", "lower": 0.1, "upper": 1}}"#,
    );
    let out = run(&["validate", "--config", &neg]);
    assert_eq!(out.status.code(), Some(1));
    let err: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(err["error"]["code"], "not_admissible");

    let cfg = configs().join("linear_shrink.json");
    let out = run(&["eval", "--config", cfg.to_str().unwrap(), "--n", "1", "--k", "0", "--x", "5", "--y", "0.5"]);
    assert_eq!(out.status.code(), Some(1));
}
