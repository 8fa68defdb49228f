use std::process::Command;

fn modsel() -> Command {
    Command::new(env!("CARGO_BIN_EXE_modsel"))
}

#[test]
fn list_experiments() {
    let out = modsel().arg("list-experiments").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    for name in ["fig1-topleft", "fig1-topright", "fig1-bottomleft", "fig1-bottomright", "custom", "regret-balancing"] {
        assert!(text.contains(name), "{name}");
    }
}

#[test]
fn run_writes_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let status = modsel()
        .args(["run", "--experiment", "fig1-bottomright", "--horizon", "20", "--instances", "3", "--algorithms", "ps-oful,regret-balancing", "--out"])
        .arg(dir.path())
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(0));
    for file in ["regret.csv", "regret.svg", "manifest.toml"] {
        assert!(dir.path().join("fig1-bottomright").join(file).exists(), "{file}");
    }
}

#[test]
fn config_errors_exit_with_one() {
    let bad_alg = modsel().args(["run", "--experiment", "fig1-topleft", "--algorithms", "fs-scb"]).status().unwrap();
    assert_eq!(bad_alg.code(), Some(1));
    let bad_exp = modsel().args(["run", "--experiment", "nope"]).status().unwrap();
    assert_eq!(bad_exp.code(), Some(1));
    let missing = modsel().args(["validate-config", "/nonexistent/config.toml"]).status().unwrap();
    assert_eq!(missing.code(), Some(1));
}

#[test]
fn validate_config_file() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("c.toml");
    std::fs::write(&path, "experiment = \"custom\"\nenv = \"feature\"\nalgorithms = [\"fs-scb\"]\ndelta = \"0.05\"\n").unwrap();
    let out = modsel().arg("validate-config").arg(&path).output().unwrap();
    assert!(out.status.success());
    assert!(String::from_utf8(out.stdout).unwrap().contains("delta = 0.05"));
    std::fs::write(&path, "experiment = \"custom\"\n").unwrap();
    assert_eq!(modsel().arg("validate-config").arg(&path).status().unwrap().code(), Some(1));
}
