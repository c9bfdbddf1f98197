use std::path::PathBuf;
use std::process::{Command, Output};

fn entangle(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_entangle")).args(args).output().unwrap()
}

fn write_config(name: &str, text: &str) -> PathBuf {
    let p = std::env::temp_dir().join(format!("entangle-cli-{}-{name}.conf", std::process::id()));
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn recipe_runs_and_prints_csv() {
    let out = entangle(&["--recipe", "fig12"]);
    assert_eq!(out.status.code(), Some(0));
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("T[Omega0],E_N[bits-base2]\n"));
    assert_eq!(text.lines().count(), 13);
}

#[test]
fn unknown_key_is_exit_2_with_line() {
    let p = write_config("unknown", "solver = equilibrium\ngeometry = free1d\ngamma = 1\nbogus = 1\n");
    let out = entangle(&["asymptotic", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("line 4") && err.contains("bogus"), "{err}");
}

#[test]
fn numerical_failure_is_exit_3() {
    let p = write_config("singular", "solver = markov_approx\ngeometry = free3d\ngamma = 0\ns = 3\nomega_c = 3\nr = 2\n");
    let out = entangle(&["markov", "--config", p.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(3));
}

#[test]
fn out_file_matches_stdout() {
    let p = write_config("out", "solver = equilibrium\ngeometry = free1d\ngamma = 1\ns = 1\nomega_c = 10\nscan = r\nscan_min = 0.01\nscan_max = 0.1\nscan_points = 4\n");
    let target = std::env::temp_dir().join(format!("entangle-cli-{}-out.csv", std::process::id()));
    let a = entangle(&["asymptotic", "--config", p.to_str().unwrap(), "--out", target.to_str().unwrap(), "--jobs", "2"]);
    assert_eq!(a.status.code(), Some(0));
    let b = entangle(&["asymptotic", "--config", p.to_str().unwrap()]);
    assert_eq!(std::fs::read(&target).unwrap(), b.stdout);
}

#[test]
fn missing_inputs_are_config_errors() {
    assert_eq!(entangle(&["evolve"]).status.code(), Some(2));
    assert_eq!(entangle(&["--recipe", "nope"]).status.code(), Some(2));
    assert_eq!(entangle(&["evolve", "--config", "/nonexistent/x.conf"]).status.code(), Some(2));
}
