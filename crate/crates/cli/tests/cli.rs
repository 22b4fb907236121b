use std::path::Path;
use std::process::{Command, Output};

use tempfile::TempDir;

fn run(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_elladic")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn workdir() -> TempDir {
    let dir = tempfile::tempdir().unwrap();
    let files = [
        ("uni.json", r#"{"prime":3,"dim":2,"images":[[[1,9],[0,1]]]}"#),
        ("diag.json", r#"{"prime":3,"dim":2,"images":[[[10,0],[0,1]]]}"#),
        ("good.json", "[[4,0],[0,1]]"),
        ("swapped.json", "[[1,0],[0,4]]"),
    ];
    for (name, body) in files {
        std::fs::write(dir.path().join(name), body).unwrap();
    }
    dir
}

#[test]
fn bound_reports_minimal_level() {
    let dir = workdir();
    let o = run(dir.path(), &["--format", "json", "bound", "--q", "4"]);
    assert!(o.status.success());
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["n_min"], 2);
    assert_eq!(v["bound"], "3/2");

    let o = run(dir.path(), &["--format", "json", "bound", "--q", "10"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["n_min"], 3);
}

#[test]
fn bound_rejects_trivial_q() {
    let dir = workdir();
    assert_eq!(run(dir.path(), &["bound", "--q", "1"]).status.code(), Some(1));
}

#[test]
fn sweep_rows_respect_caps() {
    let dir = workdir();
    let o = run(dir.path(), &["--format", "csv", "sweep-periods", "--q", "4", "--rank", "1", "--n-max", "8"]);
    assert!(o.status.success());
    let text = stdout(&o);
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("i,m,b,v_bound,c_bound"));
    let mut rows = 0;
    for line in lines {
        let f: Vec<&str> = line.split(',').collect();
        let b: i64 = f[2].parse().unwrap();
        let v: i64 = f[3].parse().unwrap();
        let c = match f[4].split_once('/') {
            Some((n, d)) => {
                let (n, d): (i64, i64) = (n.parse().unwrap(), d.parse().unwrap());
                (n + d - 1).div_euclid(d)
            }
            None => f[4].parse().unwrap(),
        };
        assert!(b <= v && v <= c, "{line}");
        rows += 1;
    }
    assert!(rows > 0);
    assert!(text.contains("2,8,1,6,15/2"));
}

#[test]
fn check_rep_exit_codes() {
    let dir = workdir();
    assert_eq!(run(dir.path(), &["check-rep", "--rep", "uni.json", "--N", "2"]).status.code(), Some(0));
    assert_eq!(run(dir.path(), &["check-rep", "--rep", "diag.json", "--N", "2"]).status.code(), Some(2));
    let o = run(dir.path(), &["check-rep", "--rep", "diag.json", "--N", "2", "--action", "cyclotomic:4"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn check_rep_reports_triviality_level() {
    let dir = workdir();
    let o = run(dir.path(), &["check-rep", "--rep", "diag.json", "--N", "3"]);
    assert!(stdout(&o).contains("trivial mod l^3: false"));
}

#[test]
fn certify_unipotent_fixture() {
    let dir = workdir();
    let o = run(
        dir.path(),
        &["--format", "json", "certify", "--rep", "uni.json", "--action", "cyclotomic:4", "--target", "good.json"],
    );
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["lifts_checked"], v["lifts_vanishing"]);

    let o = run(dir.path(), &["certify", "--rep", "uni.json", "--action", "cyclotomic:4", "--target", "swapped.json"]);
    assert_eq!(o.status.code(), Some(3));
}

#[test]
fn json_output_is_deterministic() {
    let dir = workdir();
    let args = ["--format", "json", "--seed", "7", "lift", "--rank", "2", "--action", "ihara:4", "--truncation", "4", "--all", "--radius", "2"];
    let a = run(dir.path(), &args);
    let b = run(dir.path(), &args);
    assert!(a.status.success());
    assert_eq!(a.stdout, b.stdout);
}

#[test]
fn lift_single_monomial() {
    let dir = workdir();
    let o = run(dir.path(), &["lift", "--rank", "1", "--action", "cyclotomic:4", "--truncation", "5", "--monomial", "0"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("4:-1"));
}

#[test]
fn semisimple_dimensions() {
    let dir = workdir();
    let o = run(dir.path(), &["semisimple", "--rank", "2", "--action", "cyclotomic:4", "--truncation", "3"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("total dimension 7"));
    assert!(text.contains("diagonalizable: true"));
}

#[test]
fn w_check_inclusions() {
    let dir = workdir();
    let o = run(dir.path(), &["w-check", "--weights", "1,2", "--degree", "4"]);
    assert!(o.status.success());
    assert!(stdout(&o).contains("inclusions hold"));
}
