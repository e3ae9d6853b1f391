use std::process::{Command, Output};

use irw_bridge::{evolve, State, StepPath};
use serde_json::Value;

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_irw-bridge"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("valid json")
}

fn schemas() -> Value {
    let text = std::fs::read_to_string(concat!(
        env!("CARGO_MANIFEST_DIR"),
        "/../../docs/schemas.json"
    ))
    .expect("schema file");
    serde_json::from_str(&text).unwrap()
}

const ALL: [&[&str]; 25] = [
    &["point-prob", "--n", "4", "--l1", "0", "--l2", "-2"],
    &["persistence", "--n", "7"],
    &["persistence", "--n", "7", "--mode", "float"],
    &["bridge", "--n", "8"],
    &["s-bridge", "--n", "6"],
    &["moments", "--n", "9"],
    &["first-passage", "--n", "6"],
    &["tail-bound", "--n", "6", "--l", "2", "--m", "1"],
    &["association", "--l", "5", "--m", "1"],
    &["decomposition", "--n", "8"],
    &["target-zone", "--n", "12", "--a", "0.2", "--b", "1.5"],
    &["llt-error", "--n", "10"],
    &["invert-cf", "--n", "3"],
    &["lemma-quadratic", "--n", "5"],
    &[
        "lemma-decay",
        "--n",
        "4",
        "--t1-points",
        "51",
        "--t2-points-per-n",
        "10",
    ],
    &["density", "--x", "0.1", "--y", "-0.2", "--t", "0.4"],
    &[
        "transition-ck",
        "--s",
        "0.3",
        "--t",
        "0.7",
        "--w1",
        "0.2",
        "--w2",
        "-0.1",
    ],
    &["transforms-check", "--n", "6"],
    &[
        "transforms-check",
        "--n",
        "6",
        "--kind",
        "level",
        "--r",
        "2",
    ],
    &["transforms-check", "--n", "5", "--kind", "monotone"],
    &[
        "sample", "--n", "12", "--count", "3", "--seed", "1", "--pin", "0,0", "--format", "json",
    ],
    &[
        "clt-check",
        "--n",
        "16",
        "--target",
        "0.5,0.5",
        "--samples",
        "500",
        "--seed",
        "2",
    ],
    &[
        "clt-check",
        "--n",
        "16",
        "--pin",
        "0,0",
        "--positive",
        "--kind",
        "chi-square",
        "--samples",
        "500",
        "--seed",
        "2",
    ],
    &[
        "mc",
        "--n",
        "8",
        "--regime",
        "free",
        "--samples",
        "300",
        "--seed",
        "3",
    ],
    &[
        "exponent",
        "--sizes",
        "4,8,16,32",
        "--min-n",
        "4",
        "--mode",
        "float",
    ],
];

#[test]
fn every_report_matches_its_schema() {
    let doc = schemas();
    let commands = doc["commands"].as_object().unwrap();
    assert_eq!(commands.len(), 21);
    let mut seen = std::collections::BTreeSet::new();
    for args in ALL {
        let report = json(args);
        let name = report["command"].as_str().unwrap().to_string();
        let mut schema = commands[&name].clone();
        schema["$defs"] = doc["$defs"].clone();
        let validator = jsonschema::validator_for(&schema).expect("schema compiles");
        let errors: Vec<String> = validator
            .iter_errors(&report)
            .map(|e| e.to_string())
            .collect();
        assert!(errors.is_empty(), "{args:?}: {errors:?}");
        seen.insert(name);
    }
    assert_eq!(seen.len(), 21, "every subcommand is exercised");
}

#[test]
fn persistence_of_one_step() {
    let r = json(&["persistence", "--n", "1"]);
    let p = &r["result"]["probability"];
    assert_eq!(p["numerator"], "1");
    assert_eq!(p["scale"], 1);
    assert_eq!(p["float_value"], 0.5);
}

#[test]
fn bridge_of_eight() {
    let r = json(&["bridge", "--n", "8", "--mode", "exact"]);
    let res = &r["result"];
    assert_eq!(res["joint"]["numerator"], "3");
    assert_eq!(res["joint"]["scale"], 8);
    assert_eq!(res["conditional"]["numerator"], "3");
    assert_eq!(res["conditional"]["denominator"], "8");
    assert_eq!(res["conditional"]["float_value"], 0.375);
}

#[test]
fn precondition_failures_exit_two() {
    let out = run(&["bridge", "--n", "6"]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("N must be divisible by 4"));
    for args in [
        &["s-bridge", "--n", "5"][..],
        &[
            "sample", "--n", "4", "--count", "1", "--seed", "0", "--pin", "1,0",
        ],
        &[
            "sample", "--n", "4", "--count", "1", "--seed", "0", "--pin", "0,6",
        ],
        &["exponent", "--source", "mc"],
        &["tail-bound", "--n", "3", "--l", "3", "--m", "0"],
    ] {
        let out = run(args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
        assert!(!out.stderr.is_empty());
    }
}

#[test]
fn budget_failures_exit_three() {
    for args in [
        &["persistence", "--n", "400"][..],
        &["bridge", "--n", "164"],
        &["persistence", "--n", "400", "--mode", "float"],
    ] {
        assert_eq!(run(args).status.code(), Some(3), "{args:?}");
    }
}

#[test]
fn randomized_commands_need_a_seed() {
    let out = run(&["sample", "--n", "4", "--count", "2"]);
    assert!(!out.status.success());
    assert!(String::from_utf8_lossy(&out.stderr).contains("--seed"));
}

#[test]
fn reproducible_and_worker_independent() {
    for args in [
        &[
            "sample", "--n", "40", "--count", "50", "--seed", "9", "--target", "0.3,0.1",
        ][..],
        &[
            "sample", "--n", "100", "--count", "20", "--seed", "9", "--pin", "0,0",
        ],
        &[
            "mc",
            "--n",
            "16",
            "--regime",
            "full-bridge",
            "--samples",
            "2000",
            "--seed",
            "5",
        ],
        &[
            "clt-check",
            "--n",
            "32",
            "--target",
            "0.5,0.5",
            "--samples",
            "2000",
            "--seed",
            "5",
        ],
    ] {
        let base = run(args).stdout;
        assert!(!base.is_empty());
        assert_eq!(run(args).stdout, base, "{args:?}");
        for w in ["1", "3"] {
            let mut with = args.to_vec();
            with.extend(["--workers", w]);
            assert_eq!(run(&with).stdout, base, "{args:?} workers {w}");
        }
    }
}

#[test]
fn sampled_paths_end_at_the_pin() {
    let out = run(&[
        "sample",
        "--n",
        "16",
        "--count",
        "40",
        "--seed",
        "1",
        "--pin",
        "2,10",
        "--positive",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert_eq!(text.lines().count(), 40);
    for line in text.lines() {
        let path: StepPath = line.parse().unwrap();
        let traj = evolve(&path);
        assert_eq!(traj.end(), State::new(2, 10));
        assert!(traj.states()[1..].iter().all(|st| st.a >= 0));
    }
}

#[test]
fn exponent_csv_columns() {
    let out = run(&[
        "exponent",
        "--regime",
        "full-bridge",
        "--sizes",
        "4,8,12",
        "--min-n",
        "4",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines[0], "regime,n,p_numerator,p_scale,p_float,exact_flag");
    assert_eq!(lines[1], "full-bridge,4,1,2,0.5,true");
    assert_eq!(lines[2], "full-bridge,8,3,8,0.375,true");
    assert_eq!(lines.len(), 4);
}

#[test]
fn generic_csv_has_header_and_rows() {
    let out = run(&["invert-cf", "--n", "2", "--format", "csv"]);
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("error_estimate,l1,l2,value"));
    // D_2 inside the box: S_2 in {-2, 0, 2}, A_2 odd in [-3, 3].
    assert_eq!(lines.count(), 3 * 4);
}
