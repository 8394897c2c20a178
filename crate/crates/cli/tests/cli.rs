use std::fs;
use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

use robustfl::experiments::ExperimentReport;
use robustfl::io::{read_closed_loop_csv, read_dataset, read_signal_csv};
use robustfl::{certify, pe_check, stack_state_input, PredictorModel};

fn robustfl(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_robustfl"))
        .current_dir(dir)
        .env_remove("ROBUSTFL_OUT_DIR")
        .args(args)
        .output()
        .expect("binary runs")
}

fn ok_json(dir: &Path, args: &[&str]) -> Value {
    let out = robustfl(dir, args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    serde_json::from_slice(&out.stdout).expect("stdout is JSON")
}

#[test]
fn design_round_trips_and_sidecar_alpha_matches() {
    let tmp = tempfile::tempdir().unwrap();
    let side = ok_json(tmp.path(), &["design", "--out", "u.csv", "--target-alpha", "0.3", "--seed", "11"]);
    let u = read_signal_csv(tmp.path().join("u.csv")).unwrap();
    assert_eq!((u.dim(), u.len()), (1, 50));

    let on_disk: Value = serde_json::from_str(&fs::read_to_string(tmp.path().join("u.json")).unwrap()).unwrap();
    assert_eq!(on_disk, side);
    let alpha = pe_check(&u, 3).unwrap().alpha;
    assert!((side["alpha"].as_f64().unwrap() - alpha).abs() <= 1e-12);
    assert!((alpha - 0.3).abs() <= 1e-12);
}

#[test]
fn seeded_design_is_byte_identical() {
    let tmp = tempfile::tempdir().unwrap();
    for name in ["a.csv", "b.csv"] {
        ok_json(tmp.path(), &["design", "--out", name, "--seed", "5", "--std", "0.2"]);
    }
    let a = fs::read(tmp.path().join("a.csv")).unwrap();
    let b = fs::read(tmp.path().join("b.csv")).unwrap();
    assert_eq!(a, b);
    ok_json(tmp.path(), &["design", "--out", "c.csv", "--seed", "6", "--std", "0.2"]);
    assert_ne!(a, fs::read(tmp.path().join("c.csv")).unwrap());
}

#[test]
fn certify_fields_are_consistent() {
    let tmp = tempfile::tempdir().unwrap();
    ok_json(tmp.path(), &["design", "--out", "u.csv", "--target-alpha", "0.48", "--seed", "2"]);
    ok_json(tmp.path(), &["simulate", "--input", "u.csv", "--out", "ds", "--seed", "2"]);
    let cert = ok_json(tmp.path(), &["certify", "--u", "ds/u.csv", "--x", "ds/x.csv", "--rho", "0.105"]);

    let alpha = cert["alpha"].as_f64().unwrap();
    let expected = alpha * 0.105 / 3f64.sqrt();
    assert!((cert["delta_cert"].as_f64().unwrap() - expected).abs() <= 1e-15);
    assert_eq!(cert["n"], 2);

    let data = read_dataset(tmp.path().join("ds")).unwrap();
    let lib = certify(&data.u, &data.x_past(), 0.105, 2).unwrap();
    assert_eq!(cert["delta_actual"].as_f64().unwrap(), lib.delta_actual);
}

#[test]
fn noise_free_certificate_holds() {
    let tmp = tempfile::tempdir().unwrap();
    ok_json(tmp.path(), &["design", "--out", "u.csv", "--target-alpha", "0.1", "--seed", "4"]);
    ok_json(tmp.path(), &["simulate", "--input", "u.csv", "--out", "ds", "--noise-std", "0"]);
    let cert = ok_json(tmp.path(), &["certify", "--u", "ds/u.csv", "--x", "ds/x.csv", "--rho", "0.105"]);
    assert!(cert["delta_actual"].as_f64().unwrap() >= cert["delta_cert"].as_f64().unwrap());
}

#[test]
fn missing_column_is_a_parse_error_naming_it() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("u.csv"), "t,u1\n0,1\n1,2\n2,3\n").unwrap();
    fs::write(tmp.path().join("x.csv"), "x1,x2\n0,0\n1,1\n2,2\n").unwrap();
    let out = robustfl(tmp.path(), &["certify", "--u", "u.csv", "--x", "x.csv", "--rho", "0.1"]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8_lossy(&out.stderr);
    assert!(err.contains("x.csv:1"), "{err}");
    assert!(err.contains("`t`") || err.contains("column t") || err.contains("\"t\""), "{err}");
}

#[test]
fn exit_codes_follow_error_class() {
    let tmp = tempfile::tempdir().unwrap();
    let io = robustfl(tmp.path(), &["certify", "--u", "absent.csv", "--x", "absent.csv", "--rho", "0.1"]);
    assert_eq!(io.status.code(), Some(4));

    let infeasible = robustfl(tmp.path(), &["design", "--T", "3", "--target-alpha", "1"]);
    assert_eq!(infeasible.status.code(), Some(2));

    fs::write(
        tmp.path().join("uncontrollable.json"),
        r#"{"system": {"a": [[1.0, 0.0], [0.0, 1.0]], "b": [[1.0], [0.0]]}}"#,
    )
    .unwrap();
    let nc = robustfl(tmp.path(), &["--config", "uncontrollable.json", "rho0"]);
    assert_eq!(nc.status.code(), Some(3), "{}", String::from_utf8_lossy(&nc.stderr));
}

#[test]
fn identify_then_dpc_uses_the_written_model() {
    let tmp = tempfile::tempdir().unwrap();
    ok_json(tmp.path(), &["simulate", "--out", "ds", "--seed", "9"]);
    let id = ok_json(tmp.path(), &["identify", "--data", "ds", "--out", "model.json"]);
    assert!(id["id_error"].as_f64().unwrap() <= id["error_bound"]["value"].as_f64().unwrap());
    let model: PredictorModel = robustfl::io::read_json(tmp.path().join("model.json")).unwrap();
    assert_eq!((model.n(), model.m()), (2, 1));

    let summary = ok_json(tmp.path(), &["dpc", "--model", "model.json", "--steps", "30", "--out", "cl.csv"]);
    let run = read_closed_loop_csv(tmp.path().join("cl.csv")).unwrap();
    assert_eq!(run.u.ncols(), 30);
    assert!((run.tracking_cost - summary["tracking_cost"].as_f64().unwrap()).abs() <= 1e-9 * run.tracking_cost);
}

#[test]
fn output_directory_defaults_to_env() {
    let tmp = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_robustfl"))
        .current_dir(tmp.path())
        .env("ROBUSTFL_OUT_DIR", "results")
        .args(["design", "--seed", "1"])
        .output()
        .unwrap();
    assert!(out.status.success());
    assert!(tmp.path().join("results/u.csv").exists());
    assert!(tmp.path().join("results/u.json").exists());
}

#[test]
fn reproduce_outputs_are_rereadable_and_recomputable() {
    let tmp = tempfile::tempdir().unwrap();
    fs::write(tmp.path().join("cfg.json"), r#"{"steps": 25, "rho0": {"starts": 8, "seed": 0, "refine_tol": 1e-10}}"#)
        .unwrap();
    let printed = ok_json(tmp.path(), &["--config", "cfg.json", "reproduce-sec4", "--out", "run", "--batch", "2"]);
    let run = tmp.path().join("run");

    let report: ExperimentReport = robustfl::io::read_json(run.join("report.json")).unwrap();
    assert_eq!(serde_json::to_value(&report).unwrap(), printed);
    assert!((report.rho0_estimate - 0.105).abs() <= 0.005);
    assert_eq!(report.records.len(), 3);
    for name in ["config.json", "seeds.json", "trajectories.svg", "batch.csv"] {
        assert!(run.join(name).exists(), "{name}");
    }
    let svg = fs::read_to_string(run.join("trajectories.svg")).unwrap();
    assert_eq!(svg.matches("<polyline").count(), 6);

    for (i, rec) in report.records.iter().enumerate() {
        let data = read_dataset(run.join(format!("dataset_{}", i + 1))).unwrap();
        let alpha = pe_check(&data.u, 3).unwrap().alpha;
        assert!((alpha - rec.alpha).abs() <= 1e-12 * alpha.max(1.0));
        let stacked = stack_state_input(&data.x_past(), &data.u).unwrap();
        let sigma = robustfl::linalg::min_singular_value(&stacked).unwrap();
        assert!((sigma - rec.delta_actual).abs() <= 1e-12);

        let cl = read_closed_loop_csv(run.join(format!("closed_loop_{}.csv", i + 1))).unwrap();
        assert_eq!(cl.u.ncols(), 25);
        let cost: f64 = cl.stage_costs.iter().sum();
        assert!((cost - rec.tracking_cost).abs() <= 1e-9 * rec.tracking_cost.max(1.0));
    }

    // the saved config reproduces the same report
    let again = ok_json(tmp.path(), &["--config", "run/config.json", "reproduce-sec4", "--out", "run2", "--batch", "2"]);
    assert_eq!(again, printed);
}
