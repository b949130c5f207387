use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn bin(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ch-apparatus")).args(args).output().expect("binary runs")
}

fn json(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn close(v: &Value, want: f64) -> bool {
    (v.as_f64().unwrap() - want).abs() < 1e-9
}

#[test]
fn demo_report_has_headline_values() {
    let out = bin(&["demo", "--trials", "20000"]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    assert_eq!(r["schema"], "ch-apparatus/1");
    let a = &r["analysis"];
    assert!(close(&a["naive_ch"]["value"], 0.25));
    assert_eq!(a["naive_ch"]["status"], "violated_upper");
    assert!(close(&a["naive_ch_primed"]["value"], 1.0 / 12.0));
    assert!(close(&a["naive_ch_sum"]["value"], 1.0 / 3.0));
    assert!(close(&a["naive_bayes"]["b_given_a"]["value"], 2.0));
    assert_eq!(a["naive_bayes"]["b_given_a"]["exceeds_one"], true);
    assert!(close(&a["corrected_ch"]["value"], -1.0 / 48.0));
    assert!(a["reduced_ch"]["identity_residual"].is_number());
    assert_eq!(r["feasibility"]["joint_distribution"]["feasible"], false);
    assert_eq!(r["monte_carlo"]["joint"]["ab"]["status"], "estimated");
}

#[test]
fn demo_is_byte_identical_across_runs() {
    let a = bin(&["demo", "--trials", "50000", "--seed", "3"]);
    let b = bin(&["demo", "--trials", "50000", "--seed", "3"]);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn demo_boundary_is_a_usage_error() {
    let out = bin(&["demo", "--gamma", "1.0471975511965976", "--theta", "1.0471975511965976"]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("theta"));
}

#[test]
fn unknown_flags_exit_with_one() {
    assert_eq!(bin(&["demo", "--frobnicate"]).status.code(), Some(1));
    assert_eq!(bin(&[]).status.code(), Some(1));
    assert_eq!(bin(&["--help"]).status.code(), Some(0));
}

#[test]
fn csv_report_uses_lf_and_periods() {
    let out = bin(&["exact", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(!text.contains('\r'));
    assert!(text.starts_with("key,value\n"));
    assert!(text.lines().any(|l| l == "ch_naive,0.25"));
}

#[test]
fn simulate_with_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    let out_path = dir.path().join("report.json");
    fs::write(
        &cfg,
        r#"{"apparatus":{"mode":"modified","gamma":1.0471975511965976,"theta":0.5235987755982988},
            "campaign":{"trials":100000,"per_setup":{"left_a":0,"left_a_prime":0,"right_b":0,"right_b_prime":0},"seed":5},
            "frequencies":{"ab":1,"ab_prime":0,"a_prime_b":0,"a_prime_b_prime":0}}"#,
    )
    .unwrap();
    let out = bin(&["simulate", "--config", cfg.to_str().unwrap(), "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r: Value = serde_json::from_str(&fs::read_to_string(&out_path).unwrap()).unwrap();
    assert_eq!(r["monte_carlo"]["singles"]["a"]["status"], "exact_only");
    assert!(r["monte_carlo"]["singles"]["a"]["estimate"].is_null());
    let corrected = &r["analysis"]["corrected"]["joint"];
    assert!(close(&corrected["ab"], 1.0 / 6.0));
    assert!(close(&corrected["a_prime_b"], 0.0));
    for entry in ["ab", "ab_prime", "a_prime_b", "a_prime_b_prime"] {
        let z = r["monte_carlo"]["joint"][entry]["z_score"].as_f64().unwrap_or(0.0);
        assert!(z.abs() <= 5.0, "{entry}: z = {z}");
    }
}

#[test]
fn config_errors_name_the_key() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"apparatus":{"mode":"modified","gamma":1.0,"theta":1.5}}"#).unwrap();
    let out = bin(&["exact", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("apparatus.theta"));

    fs::write(&cfg, "").unwrap();
    let out = bin(&["simulate", "--config", cfg.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("syntax"));

    let missing = dir.path().join("missing.json");
    assert_eq!(bin(&["exact", "--config", missing.to_str().unwrap()]).status.code(), Some(1));
}

#[test]
fn sweep_writes_rows_and_footer() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("sweep.csv");
    let out = bin(&["sweep", "--gamma", "0.5:2.5", "--theta", "0.1:2.0", "--steps", "5", "--out", out_path.to_str().unwrap()]);
    assert!(out.status.success());
    let text = fs::read_to_string(&out_path).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next().unwrap(), "gamma,theta,ch_naive,ch_primed,ch_sum,bayes_max,ch_corrected,naive_violated,corrected_violated");
    let rows: Vec<&str> = text.lines().filter(|l| !l.starts_with('#')).skip(1).collect();
    assert!(!rows.is_empty());
    for row in &rows {
        assert!(row.ends_with(",true,false"), "{row}");
    }
    let footer = text.lines().last().unwrap();
    assert!(footer.starts_with("# skipped "), "{footer}");
    let skipped: usize = footer.split_whitespace().nth(2).unwrap().parse().unwrap();
    assert_eq!(rows.len() + skipped, 25);
}

#[test]
fn sweep_single_demo_point_matches_demo() {
    let dir = tempfile::tempdir().unwrap();
    let out_path = dir.path().join("one.csv");
    let out = bin(&[
        "sweep", "--gamma", "1.0471975511965976", "--theta", "0.5235987755982988", "--steps", "1", "--out",
        out_path.to_str().unwrap(),
    ]);
    assert!(out.status.success());
    let text = fs::read_to_string(&out_path).unwrap();
    let row: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert!((row[2].parse::<f64>().unwrap() - 0.25).abs() < 1e-12);
    assert!((row[6].parse::<f64>().unwrap() + 1.0 / 48.0).abs() < 1e-12);
}

#[test]
fn sweep_to_unwritable_path_fails() {
    let out = bin(&["sweep", "--gamma", "1", "--theta", "0.5", "--steps", "1", "--out", "/nonexistent-dir/x.csv"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn check_passes_and_fault_is_reported() {
    let ok = bin(&["check", "--trials", "200000"]);
    assert_eq!(ok.status.code(), Some(0), "{}", String::from_utf8_lossy(&ok.stdout));
    let again = bin(&["check", "--trials", "200000"]);
    assert_eq!(ok.stdout, again.stdout);

    let bad = bin(&["check", "--trials", "200000", "--inject-fault"]);
    assert_eq!(bad.status.code(), Some(2));
    let text = String::from_utf8_lossy(&bad.stdout);
    assert!(text.contains("[FAIL] closed_form_vs_engine"), "{text}");
}

#[test]
fn unmodified_exact_reports_single_system_ch() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("honest.json");
    fs::write(&cfg, r#"{"apparatus":{"mode":"unmodified","gamma1":2.0,"lines":{"a":0,"a_prime":1,"b":2,"b_prime":3}}}"#).unwrap();
    let out = bin(&["exact", "--config", cfg.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let r = json(&out);
    let v = r["single_system"]["ch"]["value"].as_f64().unwrap();
    assert!((-1.0..=0.0).contains(&v));
    assert_eq!(bin(&["simulate", "--config", cfg.to_str().unwrap()]).status.code(), Some(1));
}
