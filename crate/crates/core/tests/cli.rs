use std::process::{Command, Output};

use constrained_matching::experiments::{format_sig, run_sweep, PSpec, SweepConfig, CSV_HEADER};

fn cmatch(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_cmatch"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    assert!(
        out.status.success(),
        "{}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout.clone()).unwrap()
}

#[test]
fn sweep_rows_and_header() {
    let text = stdout(&cmatch(&[
        "sweep",
        "--n",
        "5,8",
        "--p",
        "0.2,0.5,1",
        "--trials",
        "10",
    ]));
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], CSV_HEADER);
    assert_eq!(lines.len(), 7);
}

#[test]
fn reruns_are_byte_identical() {
    let args = [
        "sweep", "--n", "30", "--c", "0.5,2", "--trials", "20", "--seed", "4",
    ];
    assert_eq!(stdout(&cmatch(&args)), stdout(&cmatch(&args)));
    let lazy = [
        "sweep", "--n", "300", "--c", "1", "--trials", "6", "--mode", "lazy", "--format", "jsonl",
    ];
    assert_eq!(stdout(&cmatch(&lazy)), stdout(&cmatch(&lazy)));
}

#[test]
fn thread_count_does_not_change_output() {
    let base = [
        "sweep", "--n", "40,200", "--c", "0.5,1,3", "--trials", "12", "--seed", "9",
    ];
    let one = stdout(&cmatch(&[&base[..], &["--threads", "1"]].concat()));
    let four = stdout(&cmatch(&[&base[..], &["--threads", "4"]].concat()));
    assert_eq!(one, four);
}

#[test]
fn csv_round_trip_at_nine_digits() {
    let config = SweepConfig::new(vec![6, 9], PSpec::Multiplier(vec![0.7, 1.9]), 15, 21);
    let rows = run_sweep(&config).unwrap();
    let text = stdout(&cmatch(&[
        "sweep", "--n", "6,9", "--c", "0.7,1.9", "--trials", "15", "--seed", "21",
    ]));
    for (line, row) in text.lines().skip(1).zip(&rows) {
        let fields: Vec<&str> = line.split(',').collect();
        let expect = [
            row.p,
            row.c,
            row.frac_complete,
            row.unmatched.unwrap().mean,
            row.unmatched.unwrap().se,
            row.q_minus.unwrap().mean,
            row.q_plus.unwrap().mean,
            row.r_minus.unwrap().mean,
            row.r_plus.unwrap().mean,
            row.proposals.unwrap().se,
        ];
        let got = [1, 2, 4, 5, 6, 7, 9, 11, 13, 16].map(|i| fields[i].parse::<f64>().unwrap());
        for (g, e) in got.iter().zip(expect) {
            assert_eq!(format_sig(*g), format_sig(e));
        }
    }
}

#[test]
fn config_file_and_overrides() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("grid.cfg");
    std::fs::write(&cfg, "n = 10, 20\np = 0.3\ntrials = 5\nseed = 2\n").unwrap();
    let out = dir.path().join("rows.csv");
    let cfg_s = cfg.to_str().unwrap();
    stdout(&cmatch(&[
        "sweep",
        "--config",
        cfg_s,
        "--out",
        out.to_str().unwrap(),
    ]));
    assert_eq!(std::fs::read_to_string(&out).unwrap().lines().count(), 3);
    let text = stdout(&cmatch(&["sweep", "--config", cfg_s, "--n", "10"]));
    assert_eq!(text.lines().count(), 2);
}

#[test]
fn exit_codes() {
    assert_eq!(
        cmatch(&["sweep", "--n", "10", "--p", "1.5", "--trials", "3"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        cmatch(&["sweep", "--n", "10", "--p", "0.5"]).status.code(),
        Some(2)
    );
    assert_eq!(cmatch(&["sweep", "--bogus"]).status.code(), Some(2));
    assert_eq!(
        cmatch(&["enumerate", "--n", "9", "--p", "0.5"])
            .status
            .code(),
        Some(2)
    );
    assert_eq!(
        cmatch(&["sweep", "--config", "/nonexistent/grid.cfg"])
            .status
            .code(),
        Some(1)
    );
    let bad_out = cmatch(&[
        "sweep",
        "--n",
        "5",
        "--p",
        "0.5",
        "--trials",
        "2",
        "--out",
        "/nonexistent/x.csv",
    ]);
    assert_eq!(bad_out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&bad_out.stderr).contains("/nonexistent/x.csv"));
}

#[test]
fn other_subcommands_emit_json() {
    let v: serde_json::Value = serde_json::from_str(&stdout(&cmatch(&[
        "simulate", "--n", "50", "--c", "2", "--mode", "lazy",
    ])))
    .unwrap();
    assert_eq!(v["n"], 50);
    assert!(v["stored_entries"].as_u64().unwrap() > 0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&cmatch(&[
        "enumerate",
        "--n",
        "4",
        "--p",
        "0.8",
        "--seed",
        "3",
    ])))
    .unwrap();
    assert!(v["count"].as_u64().unwrap() >= 1);
    let v: serde_json::Value = serde_json::from_str(&stdout(&cmatch(&[
        "estimate", "--n", "1", "--p", "0.5", "--trials", "100",
    ])))
    .unwrap();
    assert_eq!(v["p_n"]["mean"], 0.5);
    let v: serde_json::Value = serde_json::from_str(&stdout(&cmatch(&[
        "estimate", "--what", "bound", "--n", "4", "--ell", "2", "--p", "0.5", "--trials", "1000",
    ])))
    .unwrap();
    assert!(v["full"]["mean"].as_f64().unwrap() > 0.0);
    let v: serde_json::Value = serde_json::from_str(&stdout(&cmatch(&[
        "spacings", "--ell", "1000", "--trials", "100",
    ])))
    .unwrap();
    assert_eq!(v["trials"], 100);
}
