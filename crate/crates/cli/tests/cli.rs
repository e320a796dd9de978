use std::path::Path;
use std::process::{Command, Output};

fn hieradmm(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hieradmm"))
        .args(args)
        .env("HIERADMM_THREADS", "2")
        .output()
        .expect("binary runs")
}

const SMALL: &[&str] = &[
    "--sets",
    "2",
    "--clients-per-set",
    "3",
    "--rounds",
    "4",
    "--set",
    "samples_per_client=10",
];

fn run_to(out: &Path, extra: &[&str]) -> Output {
    let mut args = vec!["run", "--out", out.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    args.extend_from_slice(extra);
    hieradmm(&args)
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn run_writes_metrics_and_sidecar() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("m.csv");
    let o = run_to(&out, &["--algorithm", "hierf2admm"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(
        text.starts_with("t,objective,consensus_residual,stationarity_residual,tau_used,wall_ms\n")
    );
    assert_eq!(text.lines().count(), 6);
    assert!(dir.path().join("m.csv.meta.json").is_file());
    assert!(stdout(&o).starts_with("hierf2admm: t = 4"));
}

#[test]
fn config_file_then_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("exp.cfg");
    std::fs::write(
        &cfg,
        "algorithm = hierfed\nrounds = 2\nsets = 2\nclients_per_set = 2\nsamples_per_client = 5\n",
    )
    .unwrap();
    let o = hieradmm(&["run", "--config", cfg.to_str().unwrap(), "--rounds", "3"]);
    assert!(o.status.success());
    assert!(stdout(&o).starts_with("hierfed: t = 3"));
}

#[test]
fn errors_are_one_json_line() {
    let o = hieradmm(&["run", "--mu", "fast"]);
    assert!(!o.status.success());
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "InvalidConfig");

    let o = hieradmm(&["run", "--data", "adult:/nonexistent/adult.data"]);
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "FileNotFound");

    let o = hieradmm(&["run", "--set", "momentum=0.9"]);
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "UnknownConfigKey");
}

#[test]
fn sweep_and_compare() {
    let dir = tempfile::tempdir().unwrap();
    let mut args = vec![
        "sweep",
        "--out-dir",
        dir.path().to_str().unwrap(),
        "--axis",
        "algorithm=hierfed,hierfadmm",
    ];
    args.extend_from_slice(SMALL);
    let o = hieradmm(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let fed = dir.path().join("run-000_algorithm=hierfed.csv");
    let admm = dir.path().join("run-001_algorithm=hierfadmm.csv");
    assert!(fed.is_file() && admm.is_file());

    let o = hieradmm(&[
        "compare",
        "--json",
        &format!("fed={}", fed.display()),
        &format!("admm={}", admm.display()),
    ]);
    assert!(o.status.success());
    let report: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(report["at_round"], 4);
    assert_eq!(report["entries"].as_array().unwrap().len(), 2);
}

#[test]
fn compare_rejects_different_data() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.csv"), dir.path().join("b.csv"));
    assert!(run_to(&a, &[]).status.success());
    assert!(run_to(&b, &["--seed", "7"]).status.success());
    let o = hieradmm(&["compare", a.to_str().unwrap(), b.to_str().unwrap()]);
    assert!(!o.status.success());
    let err: serde_json::Value = serde_json::from_slice(&o.stderr).unwrap();
    assert_eq!(err["error"]["kind"], "IncomparableRuns");
}

#[test]
fn oracle_caches() {
    let dir = tempfile::tempdir().unwrap();
    let cache = dir.path().join("oracle.json");
    let mut args = vec!["oracle", "--cache", cache.to_str().unwrap()];
    args.extend_from_slice(SMALL);
    let first: serde_json::Value = serde_json::from_slice(&hieradmm(&args).stdout).unwrap();
    let second: serde_json::Value = serde_json::from_slice(&hieradmm(&args).stdout).unwrap();
    assert_eq!(first["cached"], false);
    assert_eq!(second["cached"], true);
    assert_eq!(first["value"], second["value"]);
    assert!(first["value"].as_f64().unwrap() < std::f64::consts::LN_2);
}

#[test]
fn sequential_flag_gives_identical_payload() {
    let dir = tempfile::tempdir().unwrap();
    let (a, b) = (dir.path().join("a.jsonl"), dir.path().join("b.jsonl"));
    assert!(run_to(&a, &[]).status.success());
    assert!(run_to(&b, &["--sequential"]).status.success());
    let strip = |p: &Path| -> Vec<serde_json::Value> {
        std::fs::read_to_string(p)
            .unwrap()
            .lines()
            .map(|l| {
                let mut v: serde_json::Value = serde_json::from_str(l).unwrap();
                v.as_object_mut().unwrap().remove("wall_ms");
                v
            })
            .collect()
    };
    assert_eq!(strip(&a), strip(&b));
}
