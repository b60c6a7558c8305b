use std::path::Path;
use std::process::Command;

use epi_harness::stats::{family_level, intervals_overlap, loglog_slope, mean_rule, variance_ci};
use epi_harness::{execute, parse_config_str, HarnessError};

fn scenario(mode: &str, out: &Path, extra_run: &str) -> String {
    format!(
        r#"
[model]
L = 2
lambda = [1.5, 1.5]
gamma = 0.5
kappa = [[1.0, 0.3], [0.2, 1.0]]
nu_S = [[0.0, 0.1], [0.05, 0.0]]
nu_I = [[0.0, 0.05], [0.15, 0.0]]

[laws]
G = {{ family = "gamma", shape = 2.0, rate = 2.0 }}
F = {{ family = "lognormal", mu = 0.0, sigma = 0.5 }}

[init]
fractions = [[0.58, 0.01, 0.01, 0.0], [0.4, 0.0, 0.0, 0.0]]

[run]
mode = "{mode}"
dt = 0.1
T = 3.0
output_dt = 0.5
checkpoints = [1.0, 2.0, 3.0]
base_seed = 11
out_dir = "{}"
{extra_run}
"#,
        out.display()
    )
}

#[test]
fn chi_square_interval_matches_tables() {
    // df = 10: quantiles 3.2470 and 20.4832
    let ci = variance_ci(1.0, 11, 0.95);
    assert!((ci[0] - 10.0 / 20.4832).abs() < 1e-4, "{ci:?}");
    assert!((ci[1] - 10.0 / 3.2470).abs() < 1e-3, "{ci:?}");
    assert!(intervals_overlap([0.0, 1.0], [1.0, 2.0]));
    assert!(!intervals_overlap([0.0, 1.0], [1.1, 2.0]));
    assert!((family_level(10, 0.95) - (1.0 - 0.95f64.powi(20))).abs() < 1e-15);
    assert!(mean_rule(0.29, 0.1, 0.0, 3.0));
    assert!(!mean_rule(0.31, 0.1, 0.0, 3.0));
    assert!(mean_rule(0.31, 0.1, 0.31, 3.0));
}

#[test]
fn slope_of_exact_power_law() {
    let n = [100.0, 1000.0, 10000.0];
    let y: Vec<f64> = n.iter().map(|x: &f64| 3.0 * x.powf(-0.5)).collect();
    assert!((loglog_slope(&n, &y).unwrap() + 0.5).abs() < 1e-12);
    assert!(loglog_slope(&[1.0], &[1.0]).is_none());
}

#[test]
fn too_few_replicates_are_refused() {
    let dir = tempfile::tempdir().unwrap();
    for mode in ["verify-flln", "verify-fclt"] {
        let spec = parse_config_str(&scenario(mode, dir.path(), "N = [1000]\nM = 5")).unwrap();
        match execute(&spec) {
            Err(e @ HarnessError::InsufficientReplicates(5)) => assert_eq!(e.code(), "INSUFFICIENT_REPLICATES"),
            other => panic!("{other:?}"),
        }
    }
}

#[test]
fn flln_campaign_passes_and_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let spec = parse_config_str(&scenario("verify-flln", dir.path(), "N = [200, 2000]\nM = 40")).unwrap();
    let first = execute(&spec).unwrap();
    assert_eq!(first.passed, Some(true), "{}", first.summary);
    let bytes = |name: &str| std::fs::read(dir.path().join(name)).unwrap();
    let report = bytes("report.json");
    let cells = bytes("flln_cells.csv");
    execute(&spec).unwrap();
    assert_eq!(report, bytes("report.json"));
    assert_eq!(cells, bytes("flln_cells.csv"));
    let text = String::from_utf8(report).unwrap();
    for key in ["config_sha256", "eps_grid", "decision_rule", "slope", "z_threshold"] {
        assert!(text.contains(key), "{key}");
    }
}

#[test]
fn fclt_campaign_without_randomness_is_degenerate() {
    // no infection and nobody infected: E, I and R never fluctuate
    let dir = tempfile::tempdir().unwrap();
    let text = scenario("verify-fclt", dir.path(), "N = [1000]\nM = 20\nP = 50")
        .replace("lambda = [1.5, 1.5]", "lambda = [0.0, 0.0]")
        .replace("[[0.58, 0.01, 0.01, 0.0], [0.4, 0.0, 0.0, 0.0]]", "[[0.6, 0.0, 0.0, 0.0], [0.4, 0.0, 0.0, 0.0]]")
        + "\n[verify]\nfclt_compartments = [\"E\", \"I\", \"R\"]\n";
    let spec = parse_config_str(&text).unwrap();
    let out = execute(&spec).unwrap();
    assert_eq!(out.passed, Some(true));
    let report: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["degenerate_cells"], 3 * 2 * 3);
    assert_eq!(report["failed_cells"], 0);
}

fn epi(args: &[&str]) -> std::process::Output {
    Command::new(env!("CARGO_BIN_EXE_epi")).args(args).output().unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    let out = dir.path().join("out");
    let out_s = out.to_str().unwrap();

    std::fs::write(&cfg, scenario("fluid", &out, "")).unwrap();
    let o = epi(&["fluid", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(out.join("fluid.csv").exists());

    // the subcommand decides the mode
    let o = epi(&["kernels", "--config", cfg.to_str().unwrap(), "--out", out_s]);
    assert_eq!(o.status.code(), Some(0));
    assert!(out.join("kernels.csv").exists());

    std::fs::write(&cfg, scenario("fluid", &out, "beta = 1")).unwrap();
    let o = epi(&["fluid", "--config", cfg.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("SCHEMA_VIOLATION"));

    // an impossible tolerance makes the verification fail
    let text = scenario("verify-flln", &out, "N = [500]\nM = 10") + "\n[verify]\nz_threshold = 1e-9\n";
    std::fs::write(&cfg, text).unwrap();
    let o = epi(&["verify-flln", "--config", cfg.to_str().unwrap(), "--threads", "2"]);
    assert_eq!(o.status.code(), Some(1), "{}", String::from_utf8_lossy(&o.stdout));
}

#[test]
fn artifacts_do_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, scenario("fclt", &dir.path().join("x"), "N = [1000]\nM = 4\nP = 40")).unwrap();
    let mut runs = Vec::new();
    for threads in ["1", "3"] {
        for cmd in ["simulate", "fclt"] {
            let out = dir.path().join(cmd);
            let o = epi(&[cmd, "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", threads, "--seed", "5"]);
            assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
            let mut files: Vec<_> = std::fs::read_dir(&out).unwrap().map(|e| e.unwrap().path()).collect();
            files.sort();
            runs.push(files.iter().map(|f| std::fs::read(f).unwrap()).collect::<Vec<_>>());
        }
    }
    assert_eq!(runs[0], runs[2]);
    assert_eq!(runs[1], runs[3]);
}
