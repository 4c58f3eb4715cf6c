//! End-to-end runs of the `sobolev2d` binary on the bundled fixtures.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use sobolev2d::besov_set::SetSeminorm;
use sobolev2d::cz::CzDecomposition;

fn fixture(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("fixtures")
        .join(name)
}

fn tmp(name: &str) -> PathBuf {
    Path::new(env!("CARGO_TARGET_TMPDIR")).join(name)
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_sobolev2d"))
        .args(args)
        .env_remove("SOBOLEV2D_CONFIG")
        .output()
        .expect("binary runs")
}

fn ok_json(args: &[&str]) -> Value {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn extend_reports_functional_and_writes_grid_csv() {
    let csv = tmp("extend_eight.csv");
    let v = ok_json(&[
        "extend",
        path(&fixture("eight_points.json")),
        "--csv",
        path(&csv),
    ]);
    assert!(v["m_p"].as_f64().unwrap() > 0.0);
    assert!(v["max_interpolation_error"].as_f64().unwrap() < 1e-10);
    let text = std::fs::read_to_string(&csv).unwrap();
    let lines: Vec<&str> = text.lines().collect();
    assert_eq!(lines.len(), 64 * 64 + 1);
    assert!(lines[0].starts_with("x,y,"));
    for l in &lines[1..] {
        assert!(
            l.split(',')
                .all(|s| s.parse::<f64>().is_ok_and(f64::is_finite)),
            "bad row {l}"
        );
    }
}

#[test]
fn output_is_byte_identical_across_runs() {
    let f = fixture("eight_points.json");
    let args = ["extend", path(&f), "--grid", "6"];
    let a = run(&args);
    let b = run(&args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn compare_reports_both_sides_and_their_ratio() {
    let v = ok_json(&[
        "compare",
        path(&fixture("eight_points.json")),
        "--grid",
        "20",
    ]);
    let m = v["M_p_root"].as_f64().unwrap();
    let o = v["oracle_root"].as_f64().unwrap();
    let r = v["ratio"].as_f64().unwrap();
    assert!(m > 0.0 && o > 0.0);
    assert!((r - m / o).abs() <= 1e-12 * r);
}

#[test]
fn collinear_set_decomposes_into_the_root_alone() {
    let v = ok_json(&["decompose", path(&fixture("collinear.json"))]);
    let d: CzDecomposition = serde_json::from_value(v).unwrap();
    assert_eq!(d.leaves.len(), 1);
    assert_eq!(d.leaves[0], d.root);
}

#[test]
fn decomposition_and_seminorm_round_trip_through_json() {
    let v = ok_json(&["decompose", path(&fixture("eight_points.json"))]);
    let d: CzDecomposition = serde_json::from_value(v.clone()).unwrap();
    assert_eq!(serde_json::to_value(&d).unwrap(), v);
    assert!(d.leaves.len() > 1);

    let v = ok_json(&["set-seminorm", path(&fixture("eight_points.json"))]);
    let s: SetSeminorm = serde_json::from_value(v.clone()).unwrap();
    assert_eq!(serde_json::to_value(s).unwrap(), v);
    assert!(s.value > 0.0);
}

#[test]
fn out_flag_writes_the_same_bytes_as_stdout() {
    let file = tmp("jets_out.json");
    let stdout = run(&["jets", path(&fixture("eight_points.json"))]).stdout;
    let o = run(&[
        "jets",
        path(&fixture("eight_points.json")),
        "-o",
        path(&file),
    ]);
    assert!(o.status.success());
    assert!(o.stdout.is_empty());
    assert_eq!(std::fs::read(&file).unwrap(), stdout);
}

#[test]
fn missing_field_is_an_input_error_naming_the_field() {
    let bad = tmp("no_values.json");
    std::fs::write(&bad, r#"{"points": [[0, 0], [1, 0]]}"#).unwrap();
    let o = run(&["extend", path(&bad)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("values"));
}

#[test]
fn malformed_json_and_unknown_fields_exit_with_code_2() {
    let bad = tmp("malformed.json");
    std::fs::write(&bad, "{\"points\": [[0, 0], ").unwrap();
    assert_eq!(run(&["decompose", path(&bad)]).status.code(), Some(2));

    let extra = tmp("extra.json");
    std::fs::write(&extra, r#"{"points": [[0, 0]], "pointz": 1}"#).unwrap();
    let o = run(&["decompose", path(&extra)]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("pointz"));

    assert_eq!(
        run(&["decompose", path(&tmp("does_not_exist.json"))])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn mismatched_value_count_is_rejected() {
    let bad = tmp("mismatch.json");
    std::fs::write(&bad, r#"{"points": [[0, 0], [1, 0]], "values": [1]}"#).unwrap();
    assert_eq!(run(&["extend", path(&bad)]).status.code(), Some(2));
}

#[test]
fn config_file_from_the_environment_sets_p() {
    let cfg = tmp("cfg_p3.json");
    std::fs::write(&cfg, r#"{"p": 3.0}"#).unwrap();
    let line = tmp("line_no_p.json");
    std::fs::write(&line, r#"{"xs": [0, 1, 2.5], "gs": [0, 1, 0]}"#).unwrap();
    let o = Command::new(env!("CARGO_BIN_EXE_sobolev2d"))
        .args(["trace1d", path(&line)])
        .env("SOBOLEV2D_CONFIG", &cfg)
        .output()
        .unwrap();
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let v: Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["p"].as_f64(), Some(3.0));

    // The command-line flag wins over the config file.
    let v = ok_json(&["trace1d", path(&line), "--config", path(&cfg), "--p", "5"]);
    assert_eq!(v["p"].as_f64(), Some(5.0));

    let bad = tmp("cfg_bad.json");
    std::fs::write(&bad, r#"{"p": 1.5}"#).unwrap();
    assert_eq!(
        run(&["trace1d", path(&line), "--config", path(&bad)])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn trace1d_norm_dominates_seminorm_and_samples_are_written() {
    let csv = tmp("trace1d.csv");
    let v = ok_json(&[
        "trace1d",
        path(&fixture("line.json")),
        "--samples",
        "50",
        "--csv",
        path(&csv),
    ]);
    assert!(v["norm_p"].as_f64().unwrap() >= v["seminorm_p"].as_f64().unwrap());
    let q = v["extension_seminorm_p"].as_f64().unwrap();
    assert!(q.is_finite() && q > 0.0);
    let text = std::fs::read_to_string(&csv).unwrap();
    assert_eq!(text.lines().count(), 51);
}

#[test]
fn local_extend_runs_on_the_fixture() {
    let csv = tmp("local.csv");
    let v = ok_json(&[
        "local-extend",
        path(&fixture("local.json")),
        "--grid",
        "5",
        "--csv",
        path(&csv),
    ]);
    assert!(v["mhat_p"].as_f64().unwrap().is_finite());
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 26);
}

#[test]
fn eval_interpolates_the_data() {
    let inst: Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("eight_points.json")).unwrap())
            .unwrap();
    let pts = inst["points"].as_array().unwrap();
    let vals = inst["values"].as_array().unwrap();
    let mut args = vec![
        "eval".to_owned(),
        path(&fixture("eight_points.json")).to_owned(),
    ];
    for p in pts {
        args.push("--at".into());
        args.push(format!("{},{}", p[0], p[1]));
    }
    let args: Vec<&str> = args.iter().map(|s| s.as_str()).collect();
    let o = run(&args);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let text = String::from_utf8(o.stdout).unwrap();
    let rows: Vec<&str> = text.lines().skip(1).collect();
    assert_eq!(rows.len(), pts.len());
    for (row, want) in rows.iter().zip(vals) {
        let got: f64 = row.split(',').nth(2).unwrap().parse().unwrap();
        assert!((got - want.as_f64().unwrap()).abs() < 1e-10, "{row}");
    }
}

#[test]
fn oracle_handles_grid_problems_lines_and_instances() {
    let v = ok_json(&["oracle", path(&fixture("grid_problem.json"))]);
    assert_eq!(v["kind"], "grid");
    assert!(v["energy_root"].as_f64().unwrap() > 0.0);

    let v = ok_json(&["oracle", path(&fixture("line.json")), "--line-nodes", "80"]);
    assert_eq!(v["kind"], "line");
    assert!(v["energy_root"].as_f64().unwrap() > 0.0);

    let csv = tmp("oracle.csv");
    let v = ok_json(&[
        "oracle",
        path(&fixture("eight_points.json")),
        "--grid",
        "16",
        "--csv",
        path(&csv),
    ]);
    assert_eq!(v["nodes"].as_u64(), Some(16));
    assert_eq!(std::fs::read_to_string(&csv).unwrap().lines().count(), 257);
}

#[test]
fn negative_box_coordinates_parse() {
    let f = fixture("eight_points.json");
    let o = run(&["eval", path(&f), "--box", "-0.5,-0.5,1", "--grid", "3"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    assert_eq!(String::from_utf8(o.stdout).unwrap().lines().count(), 10);
}
