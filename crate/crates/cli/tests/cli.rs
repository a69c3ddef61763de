use std::path::Path;

use serde_json::Value;

fn run(args: &[&str], out: &Path) -> i32 {
    let mut argv = vec!["flatlab", "--out", out.to_str().unwrap()];
    argv.extend_from_slice(args);
    flatlab_cli::run(argv)
}

fn json_report(args: &[&str]) -> Value {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.json");
    let mut all = args.to_vec();
    all.extend_from_slice(&["--format", "json"]);
    assert_eq!(run(&all, &out), 0);
    serde_json::from_slice(&std::fs::read(out).unwrap()).unwrap()
}

#[test]
fn exit_codes() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    assert_eq!(run(&["levy"], &out), 2, "seed is mandatory");
    assert_eq!(run(&["levy", "--seed", "1", "--bogus"], &out), 2);
    assert_eq!(run(&["convex", "--seed", "1", "--body", "l7"], &out), 2);
    assert_eq!(run(&["flat", "--seed", "1", "--p", "2", "--q", "2"], &out), 2);
    assert_eq!(run(&["levy", "--seed", "1", "--n", "34"], &out), 2, "no block union of dim 34");
    assert_eq!(
        run(&["convex", "--seed", "1", "--body", "l1", "--n", "8", "--check", "santalo"], &out),
        3
    );
    assert_eq!(flatlab_cli::run(["flatlab", "--help"]), 0);
}

#[test]
fn csv_header_embeds_resolved_config() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("r.csv");
    assert_eq!(run(&["nikolskii", "--seed", "9", "--n", "17", "--trials", "50"], &out), 0);
    let text = std::fs::read_to_string(out).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert!(lines[0].starts_with("# flatlab "));
    let cfg: Value = serde_json::from_str(lines[1].strip_prefix("# config: ").unwrap()).unwrap();
    assert_eq!(cfg["p"], serde_json::json!(["inf"]));
    assert_eq!(cfg["q"], 2.0);
    assert!(cfg.get("out").is_none());
    assert_eq!(lines[2], "n,p,q,max_ratio,bound,kernel_ratio,trials,passed");
    assert!(lines[3].ends_with(",50,true"));
}

#[test]
fn config_file_merges_under_flags() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.json");
    std::fs::write(&cfg, r#"{"command": "levy", "n": 33, "p": [4, "inf"], "seed": 3, "samples": 500}"#).unwrap();
    let out = dir.path().join("r.json");
    let code = run(&["--config", cfg.to_str().unwrap(), "--samples", "800", "--format", "json"], &out);
    assert_eq!(code, 0);
    let doc: Value = serde_json::from_slice(&std::fs::read(&out).unwrap()).unwrap();
    assert_eq!(doc["config"]["samples"], 800);
    assert_eq!(doc["config"]["seed"], 3);
    assert_eq!(doc["rows"].as_array().unwrap().len(), 2);
    assert_eq!(doc["rows"][1]["p"], "inf");

    std::fs::write(&cfg, r#"{"command": "levy", "seeds": 3}"#).unwrap();
    assert_eq!(run(&["--config", cfg.to_str().unwrap()], &out), 2);
}

#[test]
fn levy_l2_is_one() {
    let doc = json_report(&["levy", "--seed", "2", "--n", "9,17", "--samples", "300"]);
    for row in doc["rows"].as_array().unwrap() {
        assert!((row["mean"].as_f64().unwrap() - 1.0).abs() < 1e-12);
        assert_eq!(row["stderr"], 0.0);
    }
}

#[test]
fn flat_trials_and_summary() {
    let doc = json_report(&["flat", "--seed", "4", "--n", "17", "--trials", "3", "--restarts", "3", "--iters", "80"]);
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 4);
    assert!(rows[..3].iter().all(|r| r["kind"] == "trial" && r["rho"].is_null()));
    let summary = &rows[3];
    assert_eq!(summary["kind"], "summary");
    assert_eq!(summary["subspace_dim"], 9);
    let worst = rows[..3].iter().map(|r| r["ratio"].as_f64().unwrap()).fold(0.0, f64::max);
    assert_eq!(summary["worst_ratio"].as_f64().unwrap(), worst);
    assert!(worst >= 1.0);
}

#[test]
fn convex_square_santalo() {
    let doc = json_report(&["convex", "--seed", "6", "--body", "linf", "--n", "2", "--check", "santalo"]);
    let row = &doc["rows"][0];
    let exact = 8.0 / std::f64::consts::PI.powi(2);
    let lhs = row["lhs"].as_f64().unwrap();
    assert!((lhs - exact).abs() <= 3.0 * row["stderr_budget"].as_f64().unwrap());
    assert_eq!(row["status"], "passed");
}

#[test]
fn omega_and_baselines() {
    let doc = json_report(&["convex", "--seed", "1", "--check", "omega", "--n", "20", "--m", "20"]);
    assert_eq!(doc["rows"][0]["paper_value"], 1.0);
    let doc = json_report(&["baseline", "--seed", "1", "--baseline", "rudin-shapiro", "--n", "8,32"]);
    assert!(doc["rows"].as_array().unwrap().iter().all(|r| r["passed"] == true));
    let doc = json_report(&["baseline", "--seed", "1", "--n", "32", "--p", "2", "--trials", "10"]);
    assert_eq!(doc["rows"][0]["exact"], true);
    assert!((doc["rows"][0]["ratio"].as_f64().unwrap() - 33.0 / 32.0).abs() < 1e-12);
}

#[test]
fn report_summary_passes() {
    let doc = json_report(&["report", "--seed", "8", "--samples", "4000"]);
    let rows = doc["rows"].as_array().unwrap();
    assert_eq!(rows.len(), 9);
    assert!(rows.iter().all(|r| r["passed"] == true), "{rows:?}");
}
