use std::fs;
use std::path::Path;
use std::process::Command;

use flowkernel_cli::output::LOCK_FILE;
use flowkernel_cli::{run, CliError, ExperimentConfig};

const SMALL_GRID: &str = r#"
[grid]
points = [[0.0], [0.7, 0.2]]
times = [0.2, 0.4]
powers = [2.0]
ratios = [2.0]
radii = [0.5]
weight_scales = [1.0]
"#;

fn sphere_config(out: &Path, extra: &str) -> String {
    format!(
        r#"
seed = 11
out = "{}"
{extra}
[flow]
horizon = 0.6
model = {{ type = "sphere", dim = 2, curvature = 1.0 }}
law = {{ type = "ricci" }}
{SMALL_GRID}
"#,
        out.display()
    )
}

fn binary(config: &Path, args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_flowkernel"))
        .arg("--config")
        .arg(config)
        .args(args)
        .env("FLOWKERNEL_THREADS", "2")
        .output()
        .unwrap()
}

#[test]
fn time_past_blowup_is_rejected_with_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    fs::write(
        &cfg,
        r#"
seed = 1
[flow]
horizon = 1.5
model = { type = "sphere", dim = 2, curvature = 1.0 }
law = { type = "ricci" }
"#,
    )
    .unwrap();
    let out = binary(&cfg, &["--out", dir.path().join("o").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(
        err.contains("flow[0].horizon: horizon 1.5: time ≥ T_c = 1"),
        "{err}"
    );
}

#[test]
fn missing_seed_is_reported_and_flag_supplies_it() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    let text = sphere_config(&dir.path().join("o"), "kind = \"simulate\"").replace("seed = 11", "");
    fs::write(&cfg, text).unwrap();
    let out = binary(&cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("missing seed"));
    let out = binary(&cfg, &["--seed", "5", "--n-paths", "200"]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(dir.path().join("o/manifest.json")).unwrap())
            .unwrap();
    assert_eq!(manifest["seed"], 5);
}

#[test]
fn zero_horizon_simulation_writes_a_single_node_path() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("o");
    let text = format!(
        r#"
seed = 2
kind = "simulate"
out = "{}"
[flow]
horizon = 0.0
model = {{ type = "euclidean", dim = 2 }}
law = {{ type = "static" }}
"#,
        out_dir.display()
    );
    let outcome = run(&ExperimentConfig::from_toml(&text).unwrap()).unwrap();
    assert!(outcome.reports.is_empty());
    let path = fs::read_to_string(out_dir.join("path.csv")).unwrap();
    assert_eq!(path.lines().count(), 2, "{path}");
    assert!(path.lines().nth(1).unwrap().ends_with(",0,0.0,0 0"));
    let manifest: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("manifest.json")).unwrap()).unwrap();
    let files: Vec<&str> = manifest["files"]
        .as_array()
        .unwrap()
        .iter()
        .map(|f| f.as_str().unwrap())
        .collect();
    assert_eq!(
        files,
        [
            "path.csv",
            "simulate.csv",
            "reports.csv",
            "summary.json",
            "manifest.json"
        ]
    );
    assert_eq!(manifest["kind"], "simulate");
    assert_eq!(manifest["config_sha256"].as_str().unwrap().len(), 64);
    assert!(!out_dir.join(LOCK_FILE).exists());
}

#[test]
fn verify_run_writes_every_artifact_and_exits_0() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("o");
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, sphere_config(&out_dir, "kind = \"verify\"")).unwrap();
    let out = binary(&cfg, &[]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let reports = fs::read_to_string(out_dir.join("reports.csv")).unwrap();
    assert!(reports
        .starts_with("name,flow,points,params,lhs,rhs,margin,mc_sigma,allowance,verdict,note\n"));
    assert!(!reports.contains('\r'));
    let decay = fs::read_to_string(out_dir.join("decay.csv")).unwrap();
    assert!(decay.starts_with("d_t2,t,kernel,rhs,a,flow\n"));
    let summary: serde_json::Value =
        serde_json::from_str(&fs::read_to_string(out_dir.join("summary.json")).unwrap()).unwrap();
    assert_eq!(summary["failed"], 0);
    for suite in [
        "harnack",
        "lp_linfty",
        "on_diagonal",
        "hamilton",
        "weighted_decay",
        "grigoryan_tail",
        "gaussian",
    ] {
        assert!(
            summary["suites"][suite]["count"].as_u64().unwrap() > 0,
            "{suite}"
        );
    }
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let run_into = |name: &str| {
        let out_dir = dir.path().join(name);
        let mut c =
            ExperimentConfig::from_toml(&sphere_config(&out_dir, "kind = \"full-suite\"")).unwrap();
        c.mc.n_paths = 400;
        run(&c).unwrap();
        out_dir
    };
    let (a, b) = (run_into("a"), run_into("b"));
    for f in ["reports.csv", "summary.json", "decay.csv"] {
        assert_eq!(
            fs::read(a.join(f)).unwrap(),
            fs::read(b.join(f)).unwrap(),
            "{f}"
        );
    }
}

#[test]
fn locked_directory_is_refused() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("o");
    fs::create_dir_all(&out_dir).unwrap();
    fs::write(out_dir.join(LOCK_FILE), "").unwrap();
    let c = ExperimentConfig::from_toml(&sphere_config(&out_dir, "kind = \"kernel\"")).unwrap();
    assert!(matches!(run(&c), Err(CliError::Locked(_))));
    let cfg = dir.path().join("c.toml");
    fs::write(&cfg, sphere_config(&out_dir, "kind = \"kernel\"")).unwrap();
    let out = binary(&cfg, &[]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("locked"));
}

#[test]
fn hyperbolic_suites_fall_back_or_skip() {
    let dir = tempfile::tempdir().unwrap();
    let out_dir = dir.path().join("o");
    let text = format!(
        r#"
seed = 4
kind = "full-suite"
out = "{}"
[mc]
n_paths = 400
[flow]
horizon = 0.5
model = {{ type = "hyperbolic", dim = 2, curvature = -1.0 }}
law = {{ type = "ricci" }}
{SMALL_GRID}
"#,
        out_dir.display()
    );
    let outcome = run(&ExperimentConfig::from_toml(&text).unwrap()).unwrap();
    let suites: Vec<&str> = outcome.skipped.iter().map(|s| s.suite.as_str()).collect();
    for s in [
        "hamilton",
        "weighted_decay",
        "grigoryan_tail",
        "gaussian",
        "kernel_agreement",
    ] {
        assert!(suites.contains(&s), "{s} not skipped: {suites:?}");
    }
    let harnack = outcome
        .reports
        .iter()
        .find(|r| r.name == "harnack")
        .unwrap();
    assert!(harnack.mc_sigma > 0.0);
    assert!(outcome.reports.iter().any(|r| r.name == "martingale_mean"));
}
