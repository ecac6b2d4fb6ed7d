use std::fs;
use std::process::{Command, Output};

use serde_json::Value;

fn beepsync(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_beepsync"))
        .args(args)
        .env_remove("BEEPSYNC_T")
        .output()
        .expect("binary runs")
}

fn summary(out: &Output) -> Value {
    serde_json::from_slice(&out.stdout).unwrap_or_else(|e| {
        panic!(
            "stdout is not JSON ({e}): {}\nstderr: {}",
            String::from_utf8_lossy(&out.stdout),
            String::from_utf8_lossy(&out.stderr)
        )
    })
}

#[test]
fn run_fast_line_meets_bound() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.csv");
    let out = beepsync(&[
        "run-fast",
        "--topology",
        "line",
        "--n",
        "4",
        "--T",
        "7",
        "--wake",
        "0=0",
        "--out",
        trace.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    assert_eq!(s["sync_round"], 21);
    assert_eq!(s["bound"], 21);
    assert_eq!(s["bound_satisfied"], true);
    assert_eq!(s["closure_verified"], true);
    let csv = fs::read_to_string(trace).unwrap();
    assert!(
        csv.starts_with("round,node,clock,state,induced,r,b,beeped,beep_class,virtual_counter\n")
    );
    assert_eq!(csv.lines().count(), 1 + 4 * 84);
}

#[test]
fn jsonl_trace_and_summary_file() {
    let dir = tempfile::tempdir().unwrap();
    let trace = dir.path().join("trace.jsonl");
    let sum = dir.path().join("summary.json");
    let out = beepsync(&[
        "run-fast",
        "--topology",
        "star",
        "--n",
        "5",
        "--T",
        "9",
        "--seed",
        "4",
        "--multi",
        "--format",
        "jsonl",
        "--out",
        trace.to_str().unwrap(),
        "--summary",
        sum.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0));
    for line in fs::read_to_string(trace).unwrap().lines() {
        let v: Value = serde_json::from_str(line).unwrap();
        assert!(v["round"].is_u64());
    }
    let written: Value = serde_json::from_str(&fs::read_to_string(sum).unwrap()).unwrap();
    assert_eq!(written, summary(&out));
}

#[test]
fn run_selfstab_clique_converges() {
    let out = beepsync(&[
        "run-selfstab",
        "--topology",
        "clique",
        "--n",
        "3",
        "--T",
        "8",
        "--seed",
        "11",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    assert!(s["legitimate_round"].is_u64());
    assert_eq!(s["closure_verified"], true);
    assert_eq!(s["N"], 3);
}

#[test]
fn run_selfstab_from_init_file() {
    let dir = tempfile::tempdir().unwrap();
    let init = dir.path().join("init.json");
    fs::write(
        &init,
        r#"[{"clock":3,"state":"lock","induced":false,"rounds":2,"beeps":0},
            {"clock":0,"state":"beep","induced":true,"rounds":0,"beeps":1}]"#,
    )
    .unwrap();
    let out = beepsync(&[
        "run-selfstab",
        "--topology",
        "line",
        "--n",
        "2",
        "--T",
        "6",
        "--init-file",
        init.to_str().unwrap(),
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );

    fs::write(
        &init,
        r#"[{"clock":99,"state":"lock","induced":false,"rounds":0,"beeps":0},
        {"clock":0,"state":"beep","induced":false,"rounds":0,"beeps":0}]"#,
    )
    .unwrap();
    let out = beepsync(&[
        "run-selfstab",
        "--topology",
        "line",
        "--n",
        "2",
        "--T",
        "6",
        "--init-file",
        init.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn run_slots_with_offsets() {
    let out = beepsync(&[
        "run-slots",
        "--topology",
        "line",
        "--n",
        "3",
        "--T",
        "12",
        "--wake",
        "0=0",
        "--wake",
        "2=0",
        "--offsets",
        "0,0.3,0.6",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    assert!(s["summary"]["alignment_time"].is_number());
    assert_eq!(s["summary"]["closure_verified"], true);

    let out = beepsync(&[
        "run-slots",
        "--n",
        "2",
        "--T",
        "12",
        "--wake",
        "0=0",
        "--offsets",
        "0,1.5",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn analyze_fast_automaton() {
    let out = beepsync(&["analyze-fsm", "--protocol", "fast", "--T", "4"]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    assert_eq!(s["certified_no_sync"], true);
    assert_eq!(s["counterexample"]["topology"]["nodes"], 3);
    assert!(s["demo"]["inapplicable"].is_string());
}

#[test]
fn analyze_automaton_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("toggle.fsm");
    // A lone node beeps every other round and ignores what it hears.
    fs::write(&path, "states 2\n0 1 1 1 0\n1 0 0 0 1\n").unwrap();
    let out = beepsync(&[
        "analyze-fsm",
        "--automaton",
        path.to_str().unwrap(),
        "--T",
        "2",
    ]);
    assert_eq!(
        out.status.code(),
        Some(0),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    let s = summary(&out);
    assert_eq!(s["certified_no_sync"], true);
    // Two such nodes one step apart never line up.
    assert!(s["demo"]["inapplicable"].is_string());

    fs::write(&path, "states 2\n0 1 1\n").unwrap();
    let out = beepsync(&[
        "analyze-fsm",
        "--automaton",
        path.to_str().unwrap(),
        "--T",
        "2",
    ]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn invalid_input_exits_with_2() {
    for args in [
        &["run-fast", "--n", "3", "--T", "2", "--wake", "0=0"][..],
        &["run-fast", "--n", "3", "--T", "8", "--wake", "5=0"],
        &["run-fast", "--n", "3", "--T", "8"],
        &[
            "run-fast",
            "--topology",
            "random",
            "--n",
            "4",
            "--T",
            "8",
            "--wake",
            "0=0",
        ],
        &[
            "run-fast",
            "--topology",
            "torus",
            "--n",
            "4",
            "--T",
            "8",
            "--wake",
            "0=0",
        ],
        &[
            "run-fast",
            "--topology",
            "file:/nonexistent/graph.txt",
            "--T",
            "8",
            "--wake",
            "0=0",
        ],
        &[
            "run-selfstab",
            "--n",
            "3",
            "--T",
            "8",
            "--q",
            "4",
            "--seed",
            "1",
        ],
        &["run-fast", "--n", "3"],
    ] {
        let code = beepsync(args).status.code();
        let expected = if args.iter().any(|a| a.starts_with("file:")) {
            1
        } else {
            2
        };
        assert_eq!(code, Some(expected), "{args:?}");
    }
}

#[test]
fn file_topology() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("graph.txt");
    fs::write(&path, "n 4\n0 1\n1 2\n2 0\n2 3\n").unwrap();
    let spec = format!("file:{}", path.display());
    let out = beepsync(&["run-fast", "--topology", &spec, "--T", "8", "--wake", "3=0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(summary(&out)["topology"]["nodes"], 4);
}

#[test]
fn environment_supplies_defaults_and_flags_win() {
    let run = |extra: &[&str]| {
        let mut args = vec!["run-fast", "--n", "4", "--wake", "0=0"];
        args.extend_from_slice(extra);
        let out = Command::new(env!("CARGO_BIN_EXE_beepsync"))
            .args(&args)
            .env("BEEPSYNC_T", "7")
            .env("BEEPSYNC_TOPOLOGY", "ring")
            .output()
            .unwrap();
        assert_eq!(out.status.code(), Some(0));
        summary(&out)
    };
    let s = run(&[]);
    assert_eq!(s["T"], 7);
    assert_eq!(s["topology"]["diameter"], 2);
    let s = run(&["--T", "9", "--topology", "line"]);
    assert_eq!(s["T"], 9);
    assert_eq!(s["topology"]["diameter"], 3);
}

#[test]
fn sweep_is_deterministic_across_job_counts() {
    let dir = tempfile::tempdir().unwrap();
    let mut reports = Vec::new();
    for jobs in ["1", "3"] {
        let path = dir.path().join(format!("sweep{jobs}.json"));
        let out = beepsync(&[
            "sweep",
            "--topology",
            "line,star,random",
            "--n",
            "2-6",
            "--T",
            "5,9",
            "--seeds",
            "0-2",
            "--jobs",
            jobs,
            "--out",
            path.to_str().unwrap(),
        ]);
        assert_eq!(out.status.code(), Some(0));
        reports.push(fs::read_to_string(path).unwrap());
    }
    assert_eq!(reports[0], reports[1]);
    let v: Value = serde_json::from_str(&reports[0]).unwrap();
    assert_eq!(v["aggregate"]["runs"], 3 * 5 * 2 * 3);
    assert_eq!(v["aggregate"]["failures"], 0);
}

#[test]
fn sweep_reports_bad_rows_and_empty_ranges() {
    let out = beepsync(&["sweep", "--n", "5-3", "--T", "8", "--seeds", "0"]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(summary(&out)["aggregate"]["runs"], 0);

    let out = beepsync(&["sweep", "--n", "3", "--T", "2,8", "--seeds", "0"]);
    assert_eq!(out.status.code(), Some(2));
    let s = summary(&out);
    assert_eq!(s["aggregate"]["errors"], 1);
    assert!(s["rows"][1]["ok"].as_bool().unwrap());

    let out = beepsync(&[
        "sweep",
        "--mode",
        "selfstab",
        "--topology",
        "clique",
        "--n",
        "2-3",
        "--T",
        "6",
        "--seeds",
        "0-1",
    ]);
    assert_eq!(out.status.code(), Some(0));
    assert_eq!(summary(&out)["aggregate"]["runs"], 4);
}

#[test]
fn single_source_line_sweep_meets_bound() {
    let out = beepsync(&[
        "sweep",
        "--topology",
        "line",
        "--n",
        "2-10",
        "--T",
        "4-12",
        "--schedule",
        "single",
        "--seeds",
        "0-4",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    assert_eq!(s["aggregate"]["runs"], 9 * 9 * 5);
    for row in s["rows"].as_array().unwrap() {
        assert_eq!(row["ok"], true, "{row}");
        assert!(row["converged_round"].as_u64().unwrap() <= row["bound"].as_u64().unwrap());
    }
}

#[test]
fn selfstab_sweep_converges_everywhere() {
    let out = beepsync(&[
        "sweep",
        "--mode",
        "selfstab",
        "--topology",
        "random",
        "--n",
        "8",
        "--T",
        "10",
        "--q",
        "5",
        "--seeds",
        "0-999",
    ]);
    assert_eq!(out.status.code(), Some(0));
    let s = summary(&out);
    assert_eq!(s["aggregate"]["runs"], 1000);
    assert_eq!(s["aggregate"]["failures"], 0);
    assert!(s["aggregate"]["max_converged_round"].is_u64());
}
