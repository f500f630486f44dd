use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn boolebell(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_boolebell"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn json_stdout(o: &Output) -> Value {
    assert!(o.status.success(), "{}", stderr(o));
    serde_json::from_slice(&o.stdout).expect("stdout is JSON")
}

const TRI120: &str = r#"[
  {"label": "a", "angle": 0.0},
  {"label": "b", "angle": 2.0943951023931953},
  {"label": "c", "angle": 4.1887902047863905}
]"#;

fn write_settings(dir: &Path) -> String {
    let p = dir.join("tri120.json");
    fs::write(&p, TRI120).unwrap();
    p.to_str().unwrap().to_string()
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn simulate_then_audit_quantum_triangle() {
    let dir = tempfile::tempdir().unwrap();
    let settings = write_settings(dir.path());
    let csv = dir.path().join("run.csv");
    let o = boolebell(&[
        "simulate",
        "--model",
        "quantum",
        "--pairs",
        "100000",
        "--settings",
        &settings,
        "--seed",
        "7",
        "--out",
        path_str(&csv),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert!(o.stdout.is_empty());
    assert!(dir.path().join("run.json").is_file());

    let report = json_stdout(&boolebell(&["audit", "--in", path_str(&csv), "--out", "-"]));
    let bell = &report["bell"];
    let sum = bell["bell_sum"].as_f64().unwrap();
    let se = bell["bell_stderr"].as_f64().unwrap();
    assert!((sum - 1.5).abs() < 5.0 * se, "{sum} ± {se}");
    assert_eq!(bell["verdict"], "infeasible");
    assert_eq!(report["correlations"].as_array().unwrap().len(), 3);
}

#[test]
fn audit_of_deterministic_run_stays_within_the_bound() {
    let dir = tempfile::tempdir().unwrap();
    let settings = write_settings(dir.path());
    let csv = dir.path().join("det.csv");
    let o = boolebell(&[
        "simulate",
        "--model",
        "deterministic",
        "--pairs",
        "60000",
        "--settings",
        &settings,
        "--seed",
        "3",
        "--out",
        path_str(&csv),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let report = json_stdout(&boolebell(&["audit", "--in", path_str(&csv), "--out", "-"]));
    let sum = report["bell"]["bell_sum"].as_f64().unwrap();
    let se = report["bell"]["bell_stderr"].as_f64().unwrap();
    assert!(sum <= 1.0 + 5.0 * se);
    let verdict = report["bell"]["verdict"].as_str().unwrap();
    assert!(verdict == "feasible" || verdict == "boundary", "{verdict}");
}

#[test]
fn seed_is_mandatory() {
    let o = boolebell(&[
        "simulate", "--model", "quantum", "--angles", "0,1", "--pairs", "10", "--out", "-",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("--seed"));
    let o = boolebell(&["scan-window", "--delta", "0.4", "--pairs", "10"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn missing_settings_file_names_the_path() {
    let o = boolebell(&[
        "simulate",
        "--model",
        "quantum",
        "--settings",
        "no/such/settings.json",
        "--pairs",
        "10",
        "--seed",
        "1",
        "--out",
        "-",
    ]);
    assert_eq!(o.status.code(), Some(2));
    assert!(
        stderr(&o).contains("no/such/settings.json"),
        "{}",
        stderr(&o)
    );
}

#[test]
fn corrupted_row_exits_3_with_row_number() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let o = boolebell(&[
        "simulate",
        "--model",
        "quantum",
        "--angles",
        "0,1",
        "--pairs",
        "20",
        "--seed",
        "1",
        "--out",
        path_str(&csv),
    ]);
    assert!(o.status.success());
    let text = fs::read_to_string(&csv).unwrap();
    let mut lines: Vec<String> = text.lines().map(String::from).collect();
    lines[6] = lines[6].replace(",true", ",7");
    fs::write(&csv, lines.join("\n") + "\n").unwrap();
    for cmd in ["validate", "audit"] {
        let o = boolebell(&[cmd, "--in", path_str(&csv)]);
        assert_eq!(o.status.code(), Some(3), "{cmd}");
        assert!(stderr(&o).contains("row 7"), "{}", stderr(&o));
    }
}

#[test]
fn validation_failures_exit_3() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("run.csv");
    let o = boolebell(&[
        "simulate",
        "--model",
        "deterministic",
        "--angles",
        "0,1",
        "--pairs",
        "5",
        "--seed",
        "1",
        "--out",
        path_str(&csv),
    ]);
    assert!(o.status.success());
    let o = boolebell(&["validate", "--in", path_str(&csv)]);
    assert_eq!(o.status.code(), Some(0), "{}", stderr(&o));

    // a repeated trial index reuses both of its labels
    let text = fs::read_to_string(&csv).unwrap();
    let broken = text.replacen("\n2,", "\n1,", 1);
    fs::write(&csv, broken).unwrap();
    let o = boolebell(&["validate", "--in", path_str(&csv)]);
    assert_eq!(o.status.code(), Some(3));
    assert!(stderr(&o).contains("violation"), "{}", stderr(&o));
}

#[test]
fn bounds_builtins() {
    let min_max = |args: &[&str]| {
        let v = json_stdout(&boolebell(args));
        (
            v["min"].clone(),
            v["max"].clone(),
            v["cyclic"].as_bool().unwrap(),
        )
    };
    let (lo, hi, cyc) = min_max(&["bounds", "--builtin", "boole3", "--out", "-"]);
    assert_eq!((lo, hi, cyc), (Value::from(-1), Value::from(3), true));
    let (lo, hi, cyc) = min_max(&["bounds", "--builtin", "decyclified3", "--out", "-"]);
    assert_eq!((lo, hi, cyc), (Value::from(-3), Value::from(3), false));
    let (_, hi, cyc) = min_max(&[
        "bounds",
        "--builtin",
        "bell3",
        "--anticorrelated",
        "--out",
        "-",
    ]);
    assert_eq!((hi, cyc), (Value::from(1), true));
    let (_, hi, _) = min_max(&[
        "bounds",
        "--builtin",
        "bell3-distinct",
        "--anticorrelated",
        "--out",
        "-",
    ]);
    assert_eq!(hi, Value::from(3));

    let o = boolebell(&["bounds", "--builtin", "boole4"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn bounds_of_expression_file() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("e.json");
    fs::write(
        &p,
        r#"{"comparison": ">=", "stated_bound": -1, "terms": [
            {"coeff": 1, "factors": [{"station": "A", "setting": "a"}, {"station": "A", "setting": "b"}]},
            {"coeff": "1/2", "factors": [{"station": "A", "setting": "b"}, {"station": "B", "setting": "c"}]}
        ]}"#,
    )
    .unwrap();
    let v = json_stdout(&boolebell(&[
        "bounds",
        "--expr",
        path_str(&p),
        "--out",
        "-",
    ]));
    assert_eq!(v["min"], Value::from("-3/2"));
    assert_eq!(v["cyclic"], Value::from(false));
    assert_eq!(v["claim_holds"], Value::from(false));

    fs::write(&p, "{not json").unwrap();
    assert_eq!(
        boolebell(&["bounds", "--expr", path_str(&p)]).status.code(),
        Some(2)
    );
}

#[test]
fn feasibility_verdicts() {
    let v = json_stdout(&boolebell(&[
        "feasibility",
        "--corr=-0.5,-0.5,-0.5",
        "--out",
        "-",
    ]));
    assert_eq!(v["verdict"], "infeasible");
    assert_eq!(v["lp"]["verdict"], "infeasible");
    assert_eq!(v["closed_form"]["violated"].as_array().unwrap().len(), 1);
    assert!(v["lp"]["certificate"]["value"].as_f64().unwrap() < 0.0);

    let v = json_stdout(&boolebell(&[
        "feasibility",
        "--corr",
        "0.2,0.1,0.3",
        "--out",
        "-",
    ]));
    assert_eq!(v["verdict"], "feasible");
    assert!(!v["lp"]["witness"].as_array().unwrap().is_empty());

    // station-A/station-B values flip sign before the check
    let v = json_stdout(&boolebell(&[
        "feasibility",
        "--corr",
        "0.5,0.5,0.5",
        "--ab-form",
        "--out",
        "-",
    ]));
    assert_eq!(v["verdict"], "infeasible");

    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("c.json");
    fs::write(
        &p,
        r#"{"k": 4, "pairs": [{"i":0,"j":1,"e":-1}, {"i":1,"j":2,"e":-1}, {"i":2,"j":3,"e":-1}, {"i":0,"j":3,"e":-1}]}"#,
    )
    .unwrap();
    let v = json_stdout(&boolebell(&[
        "feasibility",
        "--in",
        path_str(&p),
        "--out",
        "-",
    ]));
    assert_eq!(v["verdict"], "boundary");
    assert!(v.get("closed_form").is_none());

    let o = boolebell(&["feasibility", "--corr", "0.1,0.2"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn stdout_stays_quiet_without_dash() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("b.json");
    let o = boolebell(&["bounds", "--builtin", "boole3", "--out", path_str(&out)]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert!(!o.stderr.is_empty());
    assert!(out.is_file());
}

#[test]
fn timetag_window_reports_matched_fraction() {
    let o = boolebell(&[
        "simulate", "--model", "timetag", "--angles", "0,0.4", "--pairs", "20000", "--seed", "2",
        "--window", "1e-3", "--out", "-",
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let err = stderr(&o);
    let line = err
        .lines()
        .find(|l| l.starts_with("matched "))
        .expect("summary line");
    let frac: f64 = line
        .split(['/', ' '])
        .nth(1)
        .unwrap()
        .parse::<f64>()
        .unwrap()
        / 20000.0;
    assert!(frac > 0.0 && frac < 1.0, "{line}");
    let csv = String::from_utf8(o.stdout).unwrap();
    assert_eq!(csv.lines().count(), 20001);
    assert!(csv.contains(",false"));
}

#[test]
fn config_file_supplies_defaults_and_flags_win() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(
        &cfg,
        r#"{"model": "quantum", "pairs": 50, "seed": 9, "settings": "tri120.json"}"#,
    )
    .unwrap();
    fs::write(dir.path().join("tri120.json"), TRI120).unwrap();
    let run = |extra: &[&str]| {
        let mut args = vec!["--config", path_str(&cfg), "simulate", "--out", "-"];
        args.extend_from_slice(extra);
        let o = boolebell(&args);
        assert!(o.status.success(), "{}", stderr(&o));
        o.stdout
    };
    let base = run(&[]);
    assert_eq!(String::from_utf8_lossy(&base).lines().count(), 51);
    assert_eq!(run(&[]), base);
    assert_eq!(
        String::from_utf8_lossy(&run(&["--pairs", "20"]))
            .lines()
            .count(),
        21
    );
    assert_ne!(run(&["--seed", "10"]), base);

    fs::write(&cfg, r#"{"modle": "quantum"}"#).unwrap();
    let o = boolebell(&["--config", path_str(&cfg), "validate", "--in", "x.csv"]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn scan_window_approaches_the_cosine() {
    let dir = tempfile::tempdir().unwrap();
    let csv = dir.path().join("scan.csv");
    let summary = dir.path().join("scan.json");
    let o = boolebell(&[
        "scan-window",
        "--delta",
        "0.3927",
        "--windows",
        "1e-4:1:log30",
        "--pairs",
        "1000000",
        "--seed",
        "5",
        "--out",
        path_str(&csv),
        "--summary",
        path_str(&summary),
    ]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&csv).unwrap();
    assert!(text.starts_with("window,delta,n_matched,E,stderr\n"));
    assert_eq!(text.lines().count(), 1 + 121);
    let s: Value = serde_json::from_str(&fs::read_to_string(&summary).unwrap()).unwrap();
    let e = s["narrowest_usable"]["E"].as_f64().unwrap();
    assert!((e + std::f64::consts::FRAC_1_SQRT_2).abs() < 0.05, "{e}");
    // the widest windows keep everything and show the unfiltered sawtooth
    let widest: Vec<&str> = text.lines().nth(1).unwrap().split(',').collect();
    assert_eq!(widest[2], "1000000");
}

#[test]
fn incompatible_binding_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let settings = write_settings(dir.path());
    let csv = dir.path().join("q.csv");
    assert!(boolebell(&[
        "simulate",
        "--model",
        "quantum",
        "--pairs",
        "3000",
        "--settings",
        &settings,
        "--seed",
        "1",
        "--out",
        path_str(&csv),
    ])
    .status
    .success());
    let o = boolebell(&[
        "audit",
        "--in",
        path_str(&csv),
        "--builtin",
        "bell3-shared-label",
    ]);
    assert_eq!(o.status.code(), Some(3));
    assert!(
        stderr(&o).contains("incompatible measurements"),
        "{}",
        stderr(&o)
    );

    // one trial per term is fine
    let v = json_stdout(&boolebell(&[
        "audit",
        "--in",
        path_str(&csv),
        "--builtin",
        "bell3-distinct",
        "--out",
        "-",
    ]));
    assert_eq!(v["expression"]["binding"], "PerTerm");
}
