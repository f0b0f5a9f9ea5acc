//! End-to-end checks of the binary: documented examples, grammar
//! enforcement, determinism across partition counts, checkpoint reuse, and
//! the exit-code contract.

use std::path::Path;
use std::process::{Command, Output};

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ocflab"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn run_env(args: &[&str], key: &str, value: &str) -> Output {
    Command::new(env!("CARGO_BIN_EXE_ocflab"))
        .args(args)
        .env(key, value)
        .output()
        .expect("binary runs")
}

fn stdout_json(out: &Output) -> serde_json::Value {
    assert!(out.status.success(), "stderr: {}", String::from_utf8_lossy(&out.stderr));
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn expand_reports_periods_and_pure_periodicity() {
    let pure = stdout_json(&run(&["expand", "--cf", "ocf", "--value", "(1+1*sqrt(2))/1"]));
    assert_eq!(pure["period"], "(3,-1)(1,+1)(1,+1)");
    assert_eq!(pure["purely_periodic"], true);
    assert_eq!(pure["preperiod"], "");

    // the shifted value picks up a preperiod before the same cycle
    let shifted = stdout_json(&run(&["expand", "--cf", "ocf", "--value", "(2+1*sqrt(2))/1"]));
    assert_eq!(shifted["period"], "(3,-1)(1,+1)(1,+1)");
    assert_eq!(shifted["purely_periodic"], false);
    assert_eq!(shifted["preperiod"], "(3,+1)");

    let rcf = stdout_json(&run(&["expand", "--cf", "rcf", "--value", "(1+1*sqrt(2))/1"]));
    assert_eq!(rcf["purely_periodic"], true);
}

#[test]
fn bad_grammar_exits_two_with_json_diagnostic() {
    let out = run(&["expand", "--value", "(1+1*sqrt(2))/1+1"]);
    assert_eq!(out.status.code(), Some(2));
    let diag: serde_json::Value =
        serde_json::from_slice(&out.stderr).expect("stderr is a JSON diagnostic");
    assert_eq!(diag["error"], "parse");

    let out = run(&["factor", "--matrix", "[[1,2],[3]]"]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn precondition_violations_exit_three() {
    // beta2 below its lower bound G-1
    let out = run(&["enumerate", "--N", "50", "--beta2", "1/2"]);
    assert_eq!(out.status.code(), Some(3));
    let diag: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(diag["error"], "precondition");

    // a rational value cannot be expanded
    let out = run(&["expand", "--value", "7/3"]);
    assert_eq!(out.status.code(), Some(3));

    // missing scale
    let out = run(&["enumerate", "--alpha", "1"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn exhausted_budget_exits_four() {
    let out = run_env(
        &["count", "--set", "S+1", "--N", "400", "--brute"],
        "OCFLAB_BUDGET_MS",
        "0",
    );
    assert_eq!(out.status.code(), Some(4));
    let diag: serde_json::Value = serde_json::from_slice(&out.stderr).unwrap();
    assert_eq!(diag["error"], "budget");
}

#[test]
fn classify_flags_match_conjugate_position() {
    let v = stdout_json(&run(&["classify", "--value", "(1+1*sqrt(2))/1"]));
    // conjugate 1 - sqrt(2) lies in [-1, 0] and in (-G, 2-G]
    assert_eq!(v["R"], true);
    assert_eq!(v["O"], true);
    assert_eq!(v["B"], false);
}

#[test]
fn factor_round_trips_matrix_words() {
    let v = stdout_json(&run(&["factor", "--matrix", "[[10,3],[3,1]]"]));
    assert_eq!(v["blocks"], serde_json::json!([[3, 1], [3, 1]]));
    assert_eq!(v["words"]["+1"], "(3,+1)(3,+1)");
    assert_eq!(v["words"]["-1"], "(3,+1)(3,-1)");

    // not in the nonnegative pattern
    let out = run(&["factor", "--matrix", "[[0,1],[1,0]]"]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn count_example_with_main_term() {
    let v = stdout_json(&run(&[
        "count", "--set", "S+1", "--alpha", "1", "--beta", "1", "--N", "400", "--with-main-term",
    ]));
    let count = v["count"].as_u64().unwrap();
    let main = v["main_term"].as_f64().unwrap();
    // N^2 log 2 / (4 zeta(2))
    let expect = 400.0f64 * 400.0 * 2f64.ln() / (4.0 * std::f64::consts::PI.powi(2) / 6.0);
    assert!((main - expect).abs() < 1e-6, "main {main} vs {expect}");
    assert!((count as f64 / main - 1.0).abs() < 0.02, "count {count} vs main {main}");
    let residual = v["residual"].as_f64().unwrap();
    assert!((residual - (count as f64 - main)).abs() < 1e-9);
}

#[test]
fn enumeration_output_is_identical_across_partition_counts() {
    let base = run(&["enumerate", "--N", "150"]);
    assert!(base.status.success());
    for partitions in ["2", "5"] {
        let split = run(&["enumerate", "--N", "150", "--partitions", partitions]);
        assert!(split.status.success());
        assert_eq!(base.stdout, split.stdout, "partitions={partitions}");
    }
    // the same records come out of every serialization
    let csv_lines = base.stdout.iter().filter(|&&b| b == b'\n').count();
    let tsv = run(&["enumerate", "--N", "150", "--format", "tsv"]);
    assert_eq!(tsv.stdout.iter().filter(|&&b| b == b'\n').count(), csv_lines);
    let json = run(&["enumerate", "--N", "150", "--format", "json"]);
    let rows: serde_json::Value = serde_json::from_slice(&json.stdout).unwrap();
    let rows = rows.as_array().unwrap();
    assert_eq!(rows.len() + 1, csv_lines);
    let first_csv = String::from_utf8_lossy(&base.stdout);
    let mut lines = first_csv.lines();
    assert!(lines.next().unwrap().starts_with("omega_p,omega_q,omega_d,omega_r,period"));
    assert!(lines.next().unwrap().contains(rows[0]["omega_p"].as_str().unwrap()));
}

#[test]
fn checkpoints_resume_and_reproduce_byte_identical_output() {
    let dir = tempfile::tempdir().unwrap();
    let ck: &Path = &dir.path().join("run.ck");
    let ck_arg = ck.to_str().unwrap();

    let first = run(&["enumerate", "--N", "120", "--checkpoint", ck_arg]);
    assert!(first.status.success());
    let reference = run(&["enumerate", "--N", "120"]);
    assert_eq!(first.stdout, reference.stdout);

    // full reuse
    let second = run(&["enumerate", "--N", "120", "--checkpoint", ck_arg]);
    assert_eq!(second.stdout, reference.stdout);

    // resume from a truncated (interrupted) checkpoint
    let text = std::fs::read(ck).unwrap();
    std::fs::write(ck, &text[..text.len() / 2]).unwrap();
    let resumed = run(&["enumerate", "--N", "120", "--checkpoint", ck_arg]);
    assert_eq!(resumed.stdout, reference.stdout);

    // a checkpoint from different parameters is rejected
    let clash = run(&["enumerate", "--N", "80", "--checkpoint", ck_arg]);
    assert_eq!(clash.status.code(), Some(3));
}

#[test]
fn verify_suites_pass_at_desk_scale() {
    for (suite, extra) in [
        ("roundtrip", vec!["--cases", "60"]),
        ("appendix3", vec!["--cases", "60"]),
        ("bijection", vec!["--N", "25"]),
        ("reduction-chain", vec!["--N", "30"]),
        ("kloosterman", vec!["--N", "40"]),
        ("totient", vec!["--N", "2000"]),
        ("measures", vec![]),
    ] {
        let mut args = vec!["verify", "--suite", suite];
        args.extend(extra);
        let out = run(&args);
        assert!(out.status.success(), "suite {suite}: {}", String::from_utf8_lossy(&out.stderr));
        let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
        assert_eq!(v["pass"], true, "suite {suite}");
        assert_eq!(v["failures"], 0, "suite {suite}");
    }
}

#[test]
fn equidist_reports_cells_and_scalar_summaries() {
    let out = run(&["equidist", "--N", "80", "--alpha", "2"]);
    let v = stdout_json(&out);
    assert_eq!(v["report"]["cells"].as_array().unwrap().len(), 25 * 16);
    let freq_sum: f64 = v["report"]["cells"]
        .as_array()
        .unwrap()
        .iter()
        .map(|c| c["frequency"].as_f64().unwrap())
        .sum();
    assert!((freq_sum - 1.0).abs() < 1e-9);
    assert!(v["corollary"]["ratio"].as_f64().unwrap() > 0.0);

    let csv_out = run(&["equidist", "--N", "80", "--format", "csv"]);
    assert!(csv_out.status.success());
    let text = String::from_utf8_lossy(&csv_out.stdout);
    assert_eq!(text.lines().count(), 25 * 16 + 1);
    assert!(text.starts_with("x_lo,x_hi,y_lo,y_hi,count,frequency,mass,residual"));

    // marginal dumps are two-column tables
    let dir = tempfile::tempdir().unwrap();
    let prefix = dir.path().join("marg");
    let out = run(&["equidist", "--N", "60", "--marginals", prefix.to_str().unwrap()]);
    assert!(out.status.success());
    for ext in ["x.dat", "y.dat"] {
        let dump = std::fs::read_to_string(dir.path().join(format!("marg.{ext}"))).unwrap();
        for line in dump.lines() {
            assert_eq!(line.split_whitespace().count(), 2);
        }
    }
}

#[test]
fn radius_flag_maps_to_trace_bound() {
    // R = 2 log N  =>  N = floor(exp(R/2))
    let by_n = run(&["enumerate", "--N", "90"]);
    let r = format!("{}", 2.0 * (90.5f64).ln());
    let by_r = run(&["enumerate", "--R", &r]);
    assert_eq!(by_n.stdout, by_r.stdout);

    let both = run(&["enumerate", "--N", "90", "--R", "9.0"]);
    assert_eq!(both.status.code(), Some(3));
}
