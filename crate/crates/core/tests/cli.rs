use std::process::{Command, Output};

use serde_json::Value;

fn hyperell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hyperell")).args(args).output().unwrap()
}

fn json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).unwrap()
}

#[test]
fn lpoly_has_2g_plus_1_coefficients() {
    let o = hyperell(&["lpoly", "--q", "3", "--g", "1", "--D", "x^3+2*x+1"]);
    assert_eq!(o.status.code(), Some(0));
    let v = json(&o);
    assert_eq!(v["schema"], "hyperell.ldata/1");
    assert_eq!(v["coeffs"].as_array().unwrap().len(), 3);
    assert_eq!(v["coeffs"][2], "3");
}

#[test]
fn lpoly_round_trips_through_zeros() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("l.json");
    let o = hyperell(&["lpoly", "--q", "5", "--g", "3", "--seed", "11", "--out", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let before: Value = serde_json::from_str(&std::fs::read_to_string(&path).unwrap()).unwrap();
    let o = hyperell(&["zeros", "--from-file", path.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(json(&o)["thetas"], before["thetas"]);
}

#[test]
fn verify_passes_on_a_sampled_d() {
    let o = hyperell(&["verify", "--q", "3", "--g", "2", "--seed", "7"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(json(&o)["breaches"].as_array().unwrap().is_empty());
}

#[test]
fn usage_errors_exit_2() {
    let o = hyperell(&["lpoly", "--no-such-flag"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("Usage"));
    assert_eq!(hyperell(&["lpoly", "--q", "4"]).status.code(), Some(2));
    assert_eq!(hyperell(&["lpoly", "--q", "3", "--D", "x^3"]).status.code(), Some(2));
    assert_eq!(hyperell(&["lpoly", "--q", "3", "--g", "2", "--D", "x^3+2*x+1"]).status.code(), Some(2));
}

#[test]
fn budget_errors_exit_3() {
    let o = Command::new(env!("CARGO_BIN_EXE_hyperell"))
        .args(["lpoly", "--q", "3", "--g", "4"])
        .env("HYPERELL_BUDGET", "10")
        .output()
        .unwrap();
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn symbol_and_csv_outputs() {
    let o = hyperell(&["symbol", "--q", "3", "--a", "x+1", "--b", "x^2+1"]);
    assert_eq!(json(&o)["symbol"], -1);
    let o = hyperell(&["arg", "--q", "3", "--g", "2", "--grid", "8", "--K", "4", "--format", "csv"]);
    let text = String::from_utf8(o.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("theta,S,S_K,N,f_K,K"));
    assert_eq!(lines.count(), 8);
    let o = hyperell(&["fmodel-zeros", "--q", "3", "--g", "2", "--K", "8", "--emit", "csv"]);
    assert_eq!(o.status.code(), Some(0));
    assert!(String::from_utf8(o.stdout).unwrap().starts_with("phi,level"));
}

#[test]
fn checks_exit_0_on_good_input() {
    for args in [
        vec!["trace-check", "--q", "5", "--g", "2", "--seed", "3"],
        vec!["hybrid-check", "--q", "3", "--g", "2", "--grid", "16"],
        vec!["count", "--q", "3", "--g", "3"],
        vec!["clustering-check", "--q", "3", "--g", "3", "--seed", "3", "--K", "64", "--delta", "0.02"],
        vec!["hybrid-check", "--q", "3", "--g", "3", "--profile", "disk"],
    ] {
        let o = hyperell(&args);
        assert_eq!(o.status.code(), Some(0), "{args:?}: {}", String::from_utf8_lossy(&o.stderr));
    }
}

#[test]
fn ensemble_then_report() {
    let dir = tempfile::tempdir().unwrap();
    let batch = dir.path().join("b.jsonl");
    let o = hyperell(&[
        "ensemble", "--q", "3", "--g", "2", "--samples", "6", "--K", "4,8", "--out", batch.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let again = hyperell(&[
        "ensemble", "--q", "3", "--g", "2", "--samples", "6", "--K", "4,8", "--out", batch.to_str().unwrap(),
    ]);
    assert_eq!(again.status.code(), Some(0));
    let text = std::fs::read_to_string(&batch).unwrap();
    assert_eq!(text.lines().count(), 7);

    let o = hyperell(&["report", batch.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0));
    let md = String::from_utf8(o.stdout).unwrap();
    assert!(md.contains("| 3 | 2 | 4 | 6 |"));
    assert!(md.contains("| 3 | 2 | 8 | 6 |"));
    let o = hyperell(&["report", "--as", "csv", batch.to_str().unwrap()]);
    assert!(String::from_utf8(o.stdout).unwrap().contains("# model_zeros"));
    assert_eq!(hyperell(&["report"]).status.code(), Some(0));
}

#[test]
fn threads_flag_is_accepted() {
    let o = hyperell(&["--threads", "2", "lpoly", "--q", "3", "--g", "2"]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(hyperell(&["--threads", "0", "lpoly"]).status.code(), Some(2));
}
