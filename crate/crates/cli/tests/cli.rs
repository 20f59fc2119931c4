use std::path::Path;
use std::process::{Command, Output};

fn fexbar(args: &[&str], cwd: &Path) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fexbar")).args(args).current_dir(cwd).output().expect("spawn fexbar")
}

#[test]
fn bad_config_lists_every_problem_and_exits_2() {
    let dir = tempfile::tempdir().unwrap();
    std::fs::write(dir.path().join("bad.toml"), "experiment = \"cell-iv\"\n[cell]\nbits = \"two\"\nvolts = 1\n")
        .unwrap();
    let out = fexbar(&["run", "--config", "bad.toml"], dir.path());
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("cell.volts") && err.contains("cell.bits"), "{err}");
    assert!(std::fs::read_dir(dir.path()).unwrap().count() == 1, "no output on config errors");
}

#[test]
fn run_without_experiment_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = fexbar(&["run"], dir.path());
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn missing_mnist_is_an_io_error() {
    let dir = tempfile::tempdir().unwrap();
    let out = Command::new(env!("CARGO_BIN_EXE_fexbar"))
        .args(["train", "--out", "o"])
        .current_dir(dir.path())
        .env("FEXBAR_MNIST_DIR", dir.path().join("nowhere"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(4));
}

#[test]
fn echoed_config_reproduces_the_run() {
    let dir = tempfile::tempdir().unwrap();
    let first = fexbar(&["cell-iv", "--seed", "3", "--echo-config", "--out", "a"], dir.path());
    assert!(first.status.success());
    let stdout = String::from_utf8(first.stdout).unwrap();
    let (toml, _summary) = stdout.trim_end().rsplit_once('\n').unwrap();
    std::fs::write(dir.path().join("echo.toml"), toml).unwrap();
    let second = fexbar(&["run", "--config", "echo.toml", "--out", "b"], dir.path());
    assert!(second.status.success(), "{}", String::from_utf8_lossy(&second.stderr));
    let read = |d: &str| std::fs::read(dir.path().join(d).join("cell_iv.csv")).unwrap();
    assert_eq!(read("a"), read("b"));
}
