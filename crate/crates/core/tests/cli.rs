use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn pho(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_pho")).args(args).env("RUST_LOG", "off").output().expect("binary runs")
}

fn configs() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("configs")
}

fn write(dir: &Path, name: &str, text: &str) -> String {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p.to_str().unwrap().to_string()
}

const ANALYTIC: &str = r#"{ "learner": "analytic", "trials": 4, "seed": 3, "emit_pool": true }"#;

#[test]
fn enumerates_the_default_space() {
    let out = pho(&["space", "enumerate", configs().join("default_space.json").to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 540);
    let first: serde_json::Value = serde_json::from_str(lines[0]).unwrap();
    assert_eq!(first["index"], 0);
    assert_eq!(first["assignments"]["learning_rate"], 0.05);
}

#[test]
fn usage_errors_exit_1_and_help_exits_0() {
    assert_eq!(pho(&[]).status.code(), Some(1));
    assert_eq!(pho(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(pho(&["tune", "random"]).status.code(), Some(1), "--budget is required");
    assert_eq!(pho(&["tune", "pho", "--n", "many"]).status.code(), Some(1));
    assert_eq!(pho(&["--help"]).status.code(), Some(0));
    assert_eq!(pho(&["--version"]).status.code(), Some(0));
}

#[test]
fn bad_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    assert_eq!(pho(&["space", "enumerate", "/no/such/space.json"]).status.code(), Some(2));

    let space = write(
        dir.path(),
        "space.json",
        "[\n  {\"name\": \"a\", \"values\": [1, 2]},\n  {\"name\": \"a\", \"values\": [3]}\n]",
    );
    let out = pho(&["space", "enumerate", &space]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 3"));

    let config = write(dir.path(), "typo.json", r#"{ "trails": 3 }"#);
    assert_eq!(pho(&["compare", "--config", &config]).status.code(), Some(2));

    let csv = write(
        dir.path(),
        "missing.json",
        r#"{ "dataset": { "csv": { "path": "absent.csv", "label_column": "y", "positive_label": "1" } } }"#,
    );
    assert_eq!(pho(&["tune", "pho", "--config", &csv]).status.code(), Some(2));

    let junk = write(dir.path(), "junk.json", r#"{ "kind": "histogram" }"#);
    let out_dir = dir.path().join("plots");
    assert_eq!(pho(&["plots", "--input", &junk, "--out", out_dir.to_str().unwrap()]).status.code(), Some(2));
}

#[test]
fn run_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "analytic.json", ANALYTIC);
    let out = dir.path().join("out");
    let code = pho(&["tune", "pho", "--config", &config, "--n", "600", "--out", out.to_str().unwrap()]).status.code();
    assert_eq!(code, Some(3));
}

#[test]
fn tune_writes_artifacts_that_plots_can_replay() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "analytic.json", ANALYTIC);
    let out = dir.path().join("tune");
    let run = pho(&["tune", "pho", "--config", &config, "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0), "{}", String::from_utf8_lossy(&run.stderr));
    let stdout = String::from_utf8(run.stdout).unwrap();
    assert!(stdout.contains("fully trained 10, partially trained 530, cost 1260 units"), "{stdout}");

    let again = dir.path().join("again");
    let replay = pho(&["plots", "--input", out.join("tune.json").to_str().unwrap(), "--out", again.to_str().unwrap()]);
    assert_eq!(replay.status.code(), Some(0));
    for name in ["fig1_traces.csv", "fig3_scatter.csv"] {
        assert_eq!(fs::read(out.join(name)).unwrap(), fs::read(again.join(name)).unwrap(), "{name}");
    }
    let scatter = fs::read_to_string(out.join("fig3_scatter.csv")).unwrap();
    assert_eq!(scatter.lines().count(), 1 + 540);
}

#[test]
fn random_search_respects_the_budget() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "analytic.json", ANALYTIC);
    let out = dir.path().join("rs");
    let run = pho(&["tune", "random", "--config", &config, "--budget", "1260", "--out", out.to_str().unwrap()]);
    assert_eq!(run.status.code(), Some(0));
    assert!(String::from_utf8(run.stdout).unwrap().contains("fully trained 63, partially trained 0, cost 1260 units"));
}

#[test]
fn pool_evaluate_writes_the_cumulative_histogram() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "analytic.json", ANALYTIC);
    let out = dir.path().join("pool");
    assert_eq!(pho(&["pool", "evaluate", "--config", &config, "--out", out.to_str().unwrap()]).status.code(), Some(0));
    let csv = fs::read_to_string(out.join("fig2_pool.csv")).unwrap();
    let mut lines = csv.lines();
    assert_eq!(lines.next(), Some("rank,final_metric"));
    let values: Vec<f64> = lines.map(|l| l.split(',').nth(1).unwrap().parse().unwrap()).collect();
    assert_eq!(values.len(), 540);
    assert!(values.windows(2).all(|w| w[0] <= w[1]));
}

#[test]
fn compare_is_reproducible_and_seed_sensitive() {
    let dir = tempfile::tempdir().unwrap();
    let config = write(dir.path(), "analytic.json", ANALYTIC);
    let run = |name: &str, seed: &str| {
        let out = dir.path().join(name);
        let r = pho(&["compare", "--config", &config, "--seed", seed, "--out", out.to_str().unwrap()]);
        assert_eq!(r.status.code(), Some(0), "{}", String::from_utf8_lossy(&r.stderr));
        out
    };
    let (a, b, c) = (run("a", "11"), run("b", "11"), run("c", "12"));
    for name in ["report.json", "trials.csv", "fig1_traces.csv", "fig2_pool.csv", "fig3_scatter.csv"] {
        assert_eq!(fs::read(a.join(name)).unwrap(), fs::read(b.join(name)).unwrap(), "{name}");
    }
    assert_ne!(fs::read(a.join("trials.csv")).unwrap(), fs::read(c.join("trials.csv")).unwrap());
    let report: serde_json::Value = serde_json::from_slice(&fs::read(a.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["rows"].as_array().unwrap().len(), 4);
    assert!(report["welch_t_test"]["p_value"].is_number());
    assert!(report["paired_t_test"]["p_value"].is_number());

    let replay = dir.path().join("replay");
    let r = pho(&["plots", "--input", a.join("report.json").to_str().unwrap(), "--out", replay.to_str().unwrap()]);
    assert_eq!(r.status.code(), Some(0));
    assert_eq!(fs::read(a.join("fig2_pool.csv")).unwrap(), fs::read(replay.join("fig2_pool.csv")).unwrap());
}

#[test]
fn shipped_desk_config_loads() {
    let out = pho(&["compare", "--config", configs().join("desk.json").to_str().unwrap(), "--trials", "0"]);
    // Zero trials is rejected by validation, which proves the file parsed.
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("trials must be at least 1"));
}

#[test]
fn replayed_pair_reproduces_the_two_curve_figure() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("two");
    let run = pho(&[
        "tune",
        "pho",
        "--config",
        configs().join("two_models.json").to_str().unwrap(),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(run.status.code(), Some(0));
    assert!(String::from_utf8(run.stdout).unwrap().contains("final metric 0.8567"));
    let traces = fs::read_to_string(out.join("fig1_traces.csv")).unwrap();
    let rows: Vec<&str> = traces.lines().skip(1).collect();
    assert_eq!(rows.len(), 40);
    assert_eq!(rows.iter().filter(|r| r.split(',').nth(1) == Some("0")).count(), 20);
    assert_eq!(rows[19], "19,0,0.8567");
    assert_eq!(rows[39], "19,1,0.6743");
}
