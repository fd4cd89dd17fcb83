use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn omnipred(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_omnipred")).args(args).output().expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exited normally")
}

fn read_json(path: &Path) -> Value {
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

fn small_multiclass(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run-multiclass-online", "--k", "3", "--eps", "0.5", "--T", "300", "--d", "3", "--seed", "7"];
    args.extend_from_slice(&["--out", out.to_str().unwrap()]);
    args.extend_from_slice(extra);
    omnipred(&args)
}

#[test]
fn verify_passes_with_margins() {
    let out = omnipred(&["verify"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().filter(|l| l.starts_with("PASS")).count(), 5, "{text}");
    assert!(text.contains("t_sq 0.42857"));
}

#[test]
fn gen_fixed_marginal_gives_identical_labels() {
    let out = omnipred(&["gen", "--kind", "fixed-marginal", "--q", "1,0,0", "--T", "50", "--d", "2"]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x0,x1,label"));
    let labels: Vec<&str> = lines.map(|l| l.rsplit(',').next().unwrap()).collect();
    assert_eq!(labels.len(), 50);
    assert!(labels.iter().all(|&l| l == "0"));
}

#[test]
fn multiclass_report_has_metrics_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a"), dir.path().join("b"));
    let out = small_multiclass(&a, &[]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(code(&small_multiclass(&b, &[])), 0);
    let ra = std::fs::read(a.join("report-0.json")).unwrap();
    assert_eq!(ra, std::fs::read(b.join("report-0.json")).unwrap());
    let report: Value = serde_json::from_slice(&ra).unwrap();
    assert!(report["linf_cal"].as_f64().unwrap() >= 0.0);
    assert!(report["multiaccuracy"].is_number());
    for loss in ["brier", "cross-entropy", "max-linear"] {
        assert!(report["losses"][loss]["gap"].is_number());
    }
    assert_eq!(report["config"]["T"], 300);
    // stdout carries the same report
    let printed: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(printed, report);
    let csv = std::fs::read_to_string(a.join("results.csv")).unwrap();
    let header = csv.lines().next().unwrap();
    assert_eq!(
        header,
        "trial_id,seed,k,eps,T,linf_cal,multiaccuracy,gap_brier,gap_cross-entropy,gap_max-linear,wallclock_ms"
    );
}

#[test]
fn flags_override_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"pipeline": {"k": 3, "eps": 1.0, "T": 200, "seed": 3}, "d": 2, "trials": 2}"#).unwrap();
    let out_dir = dir.path().join("o");
    let out = omnipred(&[
        "run-multiclass-online",
        "--config",
        cfg.to_str().unwrap(),
        "--eps",
        "0.5",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let run = read_json(&out_dir.join("run-config.json"));
    assert_eq!(run["pipeline"]["eps"], 0.5);
    assert_eq!(run["pipeline"]["T"], 200);
    assert_eq!(run["trials"], 2);
    for i in 0..2 {
        let r = read_json(&out_dir.join(format!("report-{i}.json")));
        assert_eq!(r["eps"], 0.5);
        assert_eq!(r["k"], 3);
    }
    assert_eq!(std::fs::read_to_string(out_dir.join("results.csv")).unwrap().lines().count(), 3);
}

#[test]
fn eval_recomputes_metrics_from_trace() {
    let dir = tempfile::tempdir().unwrap();
    let out = small_multiclass(dir.path(), &["--trace"]);
    assert_eq!(code(&out), 0);
    let trace = dir.path().join("trace-0.jsonl");
    assert_eq!(std::fs::read_to_string(&trace).unwrap().lines().count(), 301);
    let ev = omnipred(&["eval", "--trace", trace.to_str().unwrap()]);
    assert_eq!(code(&ev), 0, "{}", String::from_utf8_lossy(&ev.stderr));
    let recomputed: Value = serde_json::from_slice(&ev.stdout).unwrap();
    let original = read_json(&dir.path().join("report-0.json"));
    for key in ["linf_cal", "multiaccuracy", "losses", "max_gap", "config"] {
        assert_eq!(recomputed[key], original[key], "{key}");
    }
}

#[test]
fn binary_tracks_run_on_csv_data() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("data.csv");
    let gen = omnipred(&[
        "gen",
        "--kind",
        "logistic-binary",
        "--k",
        "2",
        "--d",
        "3",
        "--T",
        "1500",
        "--seed",
        "5",
        "--out",
        data.to_str().unwrap(),
    ]);
    assert_eq!(code(&gen), 0);
    for (cmd, sub) in [("run-binary-online", "online"), ("run-binary-stat", "stat")] {
        let out_dir = dir.path().join(sub);
        let out = omnipred(&[
            cmd,
            "--data",
            data.to_str().unwrap(),
            "--eps",
            "0.25",
            "--T",
            "1000",
            "--out",
            out_dir.to_str().unwrap(),
        ]);
        assert_eq!(code(&out), 0, "{cmd}: {}", String::from_utf8_lossy(&out.stderr));
        let r = read_json(&out_dir.join("report-0.json"));
        assert!(r["thresh_cal"].is_number());
        assert_eq!(r["config"]["T"], 1000);
    }
    let stat = read_json(&dir.path().join("stat").join("report-0.json"));
    assert_eq!(stat["track"], "binary-stat");
    assert_eq!(stat["T"], 500);
}

#[test]
fn union_reports_each_family() {
    let dir = tempfile::tempdir().unwrap();
    let out = omnipred(&[
        "run-union",
        "--k",
        "3",
        "--eps",
        "0.5",
        "--T",
        "300",
        "--d",
        "3",
        "--families",
        "linear,square",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    let r = read_json(&dir.path().join("report-0.json"));
    assert!(r["family_multiaccuracy"]["linear"].is_number());
    assert!(r["family_multiaccuracy"]["square"].is_number());
}

#[test]
fn rates_prints_ratio() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("rates.csv");
    let out = omnipred(&["rates", "--seeds", "2", "--T", "400", "--out", csv.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    let study: Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(study["ratio"].as_f64().unwrap() > 0.0);
    assert_eq!(std::fs::read_to_string(csv).unwrap().lines().count(), 5);
}

#[test]
fn bad_config_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let o = dir.path().to_str().unwrap();
    assert_eq!(code(&omnipred(&["run-binary-online", "--eps", "2", "--out", o])), 2);
    assert_eq!(code(&omnipred(&["run-binary-online", "--no-such-flag"])), 2);
    assert_eq!(code(&omnipred(&["run-binary-online", "--config", "/nonexistent/cfg.json", "--out", o])), 2);
    let cfg = dir.path().join("cfg.json");
    std::fs::write(&cfg, r#"{"pipeline": {"eps": 0.5, "bogus": 1}}"#).unwrap();
    assert_eq!(code(&omnipred(&["run-binary-online", "--config", cfg.to_str().unwrap(), "--out", o])), 2);
    assert_eq!(code(&omnipred(&["run-multiclass-online", "--losses", "hinge", "--T", "10", "--out", o])), 2);
    assert_eq!(code(&omnipred(&["run-binary-online", "--trials", "0", "--out", o])), 2);
}

#[test]
fn short_data_is_a_contract_violation() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("short.csv");
    assert_eq!(code(&omnipred(&["gen", "--kind", "logistic-binary", "--T", "10", "--out", data.to_str().unwrap()])), 0);
    let out = omnipred(&[
        "run-binary-online",
        "--data",
        data.to_str().unwrap(),
        "--T",
        "50",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(code(&out), 1, "{}", String::from_utf8_lossy(&out.stderr));
}
