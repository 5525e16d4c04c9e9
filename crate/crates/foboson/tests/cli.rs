//! Binary-level checks of the CLI contract: exit codes, the structured
//! error object, the tolerance override, and file output.

use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_foboson"))
}

fn stdout_json(output: &std::process::Output) -> serde_json::Value {
    serde_json::from_slice(&output.stdout).expect("stdout is JSON")
}

#[test]
fn passing_run_exits_zero() {
    let out = bin()
        .args(["contfrac", "--n", "27", "--k", "8"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    let v = stdout_json(&out);
    assert_eq!(v["schemaVersion"], 1);
    assert_eq!(v["dimEnd"], 27);
}

#[test]
fn domain_error_exits_one_with_error_object() {
    let out = bin()
        .args(["contfrac", "--n", "6", "--k", "4"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let v = stdout_json(&out);
    assert_eq!(v["error"], "domain");
    assert!(v["detail"].as_str().unwrap().contains("coprime"));
}

#[test]
fn unknown_flag_exits_two() {
    let out = bin()
        .args(["contfrac", "--n", "5", "--k", "2", "--frobnicate"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let out = bin().args(["no-such-command"]).output().unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn tolerance_env_var_applies() {
    // an impossible tolerance turns a passing run into a failing one;
    // n = 4 is the smallest chart with a pure-v triple, whose residual is
    // tiny but nonzero
    let out = bin()
        .args(["jacobi", "--n-points", "4", "--tau", "i", "--trials", "1", "--seed", "3"])
        .env("FOBOSON_TOL", "0")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    assert_eq!(stdout_json(&out)["pass"], false);

    // a garbage value is a usage error
    let out = bin()
        .args(["sweep", "--max-n", "5"])
        .env("FOBOSON_TOL", "not-a-number")
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn out_flag_writes_report_file() {
    let dir = std::env::temp_dir().join("foboson-cli-test");
    std::fs::create_dir_all(&dir).unwrap();
    let path = dir.join("image_27_8.json");
    let _ = std::fs::remove_file(&path);
    let out = bin()
        .args(["image", "--n", "27", "--k", "8", "--out"])
        .arg(&path)
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(0));
    assert!(out.stdout.is_empty());
    let v: serde_json::Value =
        serde_json::from_slice(&std::fs::read(&path).unwrap()).unwrap();
    assert_eq!(v["blockSizes"], serde_json::json!([1, 2, 2]));
    std::fs::remove_file(&path).unwrap();
}

#[test]
fn identical_invocations_are_byte_identical() {
    let run = || {
        bin()
            .args([
                "prime-check",
                "--n-points",
                "4",
                "--tau",
                "0.3+1.1i",
                "--trials",
                "2",
                "--seed",
                "9",
            ])
            .output()
            .unwrap()
            .stdout
    };
    assert_eq!(run(), run());
}
