//! Black-box tests of the `trf` binary: pinned outputs, the exit-code
//! contract, and the gen-data -> train -> eval pipeline.

use std::path::Path;
use std::process::{Command, Output};

fn trf(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_trf"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).into_owned()
}

#[test]
fn rf_report_json_pins_the_217_frame_receptive_field() {
    let out = trf(&[
        "rf-report",
        "--arch",
        "resnet50-3d",
        "--input-frames",
        "64",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).expect("valid JSON");
    assert_eq!(v["last_conv"]["rf_t"], 217);
    assert_eq!(v["last_conv"]["out_t"], 4);
    assert!(v["rows"].as_array().unwrap().len() > 100);
}

#[test]
fn param_count_is_within_five_percent_of_46_7_million() {
    let out = trf(&[
        "param-count",
        "--arch",
        "video-bagnet-9",
        "--classes",
        "3",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    let params = v["params"].as_u64().unwrap() as f64;
    assert!((params - 46.7e6).abs() <= 0.05 * 46.7e6, "params {params}");
}

#[test]
fn sensitivity_of_bagnet1_is_exactly_one() {
    let out = trf(&[
        "sensitivity",
        "--arch",
        "video-bagnet-1",
        "--video-len",
        "64",
        "--segment-len",
        "32",
        "--format",
        "csv",
    ]);
    assert!(out.status.success());
    let text = stdout(&out);
    let row = text.lines().nth(1).expect("data row");
    assert!(row.ends_with(",1.0"), "row: {row}");
}

#[test]
fn identical_invocations_print_identical_output() {
    let args = [
        "rf-report",
        "--arch",
        "video-bagnet-17",
        "--input-frames",
        "64",
        "--format",
        "csv",
    ];
    assert_eq!(stdout(&trf(&args)), stdout(&trf(&args)));
}

#[test]
fn arch_file_descriptions_drive_the_analysis_commands() {
    let tmp = tempfile::tempdir().unwrap();
    let file = tmp.path().join("arch.json");
    std::fs::write(&file, r#"{"preset": "video-bagnet-17", "n_classes": 4}"#).unwrap();
    let out = trf(&[
        "rf-report",
        "--arch-file",
        file.to_str().unwrap(),
        "--input-frames",
        "64",
        "--format",
        "json",
    ]);
    assert!(out.status.success());
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["last_conv"]["rf_t"], 17);
    assert_eq!(v["arch"], "video-bagnet-17");

    // missing and conflicting sources are usage errors
    assert_eq!(
        trf(&["rf-report", "--input-frames", "64"]).status.code(),
        Some(1)
    );
    assert_eq!(
        trf(&[
            "rf-report",
            "--arch",
            "resnet50-3d",
            "--arch-file",
            file.to_str().unwrap()
        ])
        .status
        .code(),
        Some(1)
    );
    // a malformed description is a data error
    std::fs::write(&file, "{").unwrap();
    assert_eq!(
        trf(&["rf-report", "--arch-file", file.to_str().unwrap()])
            .status
            .code(),
        Some(2)
    );
}

#[test]
fn exit_codes_follow_the_contract() {
    // 1: usage
    assert_eq!(trf(&["no-such-command"]).status.code(), Some(1));
    assert_eq!(trf(&["rf-report", "--bogus-flag"]).status.code(), Some(1));
    // 2: configuration / data
    assert_eq!(
        trf(&["rf-report", "--arch", "unknown-net"]).status.code(),
        Some(2)
    );
    assert_eq!(
        trf(&[
            "sensitivity",
            "--arch",
            "video-bagnet-33",
            "--video-len",
            "32",
            "--segment-len",
            "16"
        ])
        .status
        .code(),
        Some(2),
        "receptive field larger than the video must be a data error"
    );
    // 0: help
    assert_eq!(trf(&["--help"]).status.code(), Some(0));
}

/// Minimal JSON Schema checker covering the subset used by the shipped
/// schemas: `type`, `required`, `properties`, `items`.
fn check_schema(value: &serde_json::Value, schema: &serde_json::Value, at: &str) {
    if let Some(ty) = schema["type"].as_str() {
        let ok = match ty {
            "object" => value.is_object(),
            "array" => value.is_array(),
            "string" => value.is_string(),
            "integer" => value.is_i64() || value.is_u64(),
            "number" => value.is_number(),
            other => panic!("unsupported schema type {other}"),
        };
        assert!(ok, "{at}: {value} is not of type {ty}");
    }
    if let Some(required) = schema["required"].as_array() {
        for key in required {
            let key = key.as_str().unwrap();
            assert!(
                value.get(key).is_some(),
                "{at}: missing required field '{key}'"
            );
        }
    }
    if let Some(props) = schema["properties"].as_object() {
        for (key, sub) in props {
            if let Some(v) = value.get(key) {
                check_schema(v, sub, &format!("{at}.{key}"));
            }
        }
    }
    if let Some(items) = schema.get("items") {
        for (i, v) in value.as_array().into_iter().flatten().enumerate() {
            check_schema(v, items, &format!("{at}[{i}]"));
        }
    }
}

fn schema(name: &str) -> serde_json::Value {
    let path = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../docs/schemas")
        .join(name);
    serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap()
}

#[test]
fn json_outputs_validate_against_the_shipped_schemas() {
    let cases = [
        (
            vec!["rf-report", "--arch", "video-bagnet-9", "--input-frames", "64"],
            "rf-report.schema.json",
        ),
        (
            vec!["param-count", "--arch", "resnet50-3d"],
            "param-count.schema.json",
        ),
        (
            vec![
                "sensitivity",
                "--arch",
                "video-bagnet-9",
                "--video-len",
                "64",
                "--segment-len",
                "32",
            ],
            "sensitivity.schema.json",
        ),
    ];
    for (mut args, schema_name) in cases {
        args.extend(["--format", "json"]);
        let out = trf(&args);
        assert!(out.status.success());
        let value: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
        check_schema(&value, &schema(schema_name), schema_name);
    }
}

fn gen_tiny_data(dir: &Path) {
    let out = trf(&[
        "gen-data",
        "--out",
        dir.to_str().unwrap(),
        "--canvas",
        "24",
        "--d",
        "8",
        "--videos-per-class",
        "4",
        "--seed",
        "5",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn gen_data_train_eval_pipeline_round_trips() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen_tiny_data(&data);
    for split in ["train", "test_noperm", "test_perm"] {
        assert!(data.join(split).join("manifest.json").is_file());
        assert!(data.join(split).join("videos.bin").is_file());
    }

    let run = tmp.path().join("run");
    let out = trf(&[
        "train",
        "--arch",
        "video-bagnet-9",
        "--width-multiplier",
        "0.1",
        "--data",
        data.join("train").to_str().unwrap(),
        "--out",
        run.to_str().unwrap(),
        "--epochs",
        "1",
        "--batch-size",
        "4",
        "--seed",
        "0",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for artifact in ["config.json", "metrics.csv", "best.ckpt", "results.json"] {
        assert!(run.join(artifact).is_file(), "missing {artifact}");
    }
    let metrics = std::fs::read_to_string(run.join("metrics.csv")).unwrap();
    assert!(metrics.starts_with("run,epoch,split,loss,metric,seconds\n"));

    let out = trf(&[
        "eval",
        "--checkpoint",
        run.join("best.ckpt").to_str().unwrap(),
        "--data",
        data.join("test_noperm").to_str().unwrap(),
        "--format",
        "json",
    ]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let v: serde_json::Value = serde_json::from_str(&stdout(&out)).unwrap();
    check_schema(&v, &schema("eval.schema.json"), "eval.schema.json");
    let acc = v["accuracy"].as_f64().unwrap();
    assert!((0.0..=1.0).contains(&acc));
    assert_eq!(v["samples"], 12);
}

#[test]
fn diverging_training_exits_with_the_numerical_code() {
    let tmp = tempfile::tempdir().unwrap();
    let data = tmp.path().join("data");
    gen_tiny_data(&data);
    let out = trf(&[
        "train",
        "--arch",
        "video-bagnet-9",
        "--width-multiplier",
        "0.1",
        "--data",
        data.join("train").to_str().unwrap(),
        "--out",
        tmp.path().join("run").to_str().unwrap(),
        "--epochs",
        "3",
        "--batch-size",
        "4",
        "--lr",
        "1e8",
    ]);
    assert_eq!(
        out.status.code(),
        Some(3),
        "stderr: {}",
        String::from_utf8_lossy(&out.stderr)
    );
}
