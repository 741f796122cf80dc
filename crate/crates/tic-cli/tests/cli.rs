use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn scratch(name: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("tic-cli-{}-{name}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

fn tic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tic")).args(args).output().unwrap()
}

fn listed_files(dir: &Path) -> Vec<String> {
    let manifest = fs::read_to_string(dir.join("manifest.txt")).unwrap();
    manifest.lines().skip_while(|l| *l != "[files]").skip(1).map(str::to_string).collect()
}

#[test]
fn norms_run_is_deterministic_and_fully_listed() {
    let root = scratch("norms");
    let (a, b) = (root.join("a"), root.join("b"));
    for d in [&a, &b] {
        let out = tic(&["norms", "--out", d.to_str().unwrap()]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    }
    let mut on_disk: Vec<String> =
        fs::read_dir(&a).unwrap().map(|e| e.unwrap().file_name().into_string().unwrap()).collect();
    on_disk.sort();
    let mut listed = listed_files(&a);
    listed.sort();
    assert_eq!(on_disk, listed);
    for f in &listed {
        if f.ends_with(".csv") {
            assert_eq!(fs::read(a.join(f)).unwrap(), fs::read(b.join(f)).unwrap(), "{f}");
        }
    }
    let summary = fs::read_to_string(a.join("summary.csv")).unwrap();
    assert!(summary.starts_with("kind,name,value,condition,pass\n"));
    assert_eq!(fs::read_to_string(a.join("norms.csv")).unwrap().lines().count(), 1 + 10);
}

#[test]
fn fk_run_is_seed_deterministic() {
    let root = scratch("fk");
    let run = |dir: &Path, seed: &str| {
        let out = tic(&[
            "fk-verify",
            "--out",
            dir.to_str().unwrap(),
            "--seed",
            seed,
            "--set",
            "mc.paths=2000",
            "--set",
            "mc.steps=50",
            "--set",
            "grid.N=50",
        ]);
        assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
        fs::read(dir.join("residual.csv")).unwrap()
    };
    let a = run(&root.join("a"), "7");
    let b = run(&root.join("b"), "7");
    let c = run(&root.join("c"), "8");
    assert_eq!(a, b);
    assert_ne!(a, c);
    assert!(fs::read_to_string(root.join("a/manifest.txt")).unwrap().contains("seed: 7\n"));
}

#[test]
fn config_file_with_override() {
    let root = scratch("config");
    let cfg = root.join("run.cfg");
    fs::write(&cfg, "# power example\nproblem.preset = power-utility\ngrid.N = 16 # coarse\nsolver.tol = 1e-6\n").unwrap();
    let out_dir = root.join("out");
    let out = tic(&[
        "example-power",
        "--config",
        cfg.to_str().unwrap(),
        "--set",
        "grid.N=32",
        "--out",
        out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "{}", String::from_utf8_lossy(&out.stderr));
    let manifest = fs::read_to_string(out_dir.join("manifest.txt")).unwrap();
    assert!(manifest.contains("grid.N = 32\n") && manifest.contains("solver.tol = 1e-6\n"));
    assert_eq!(fs::read_to_string(out_dir.join("diagonal.csv")).unwrap().lines().count(), 1 + 33);
}

#[test]
fn usage_errors_exit_with_two() {
    let root = scratch("usage");
    let bad = root.join("bad.cfg");
    fs::write(&bad, "grid.N = 8\ngrid.whatever = 1\n").unwrap();
    for args in [
        vec!["solve-linear", "--set", "problem.preset=nonsense"],
        vec!["solve-linear", "--set", "grid.N=1"],
        vec!["solve-linear", "--config", bad.to_str().unwrap()],
        vec!["solve-linear", "--config", root.join("missing.cfg").to_str().unwrap()],
        vec!["example-exp", "--set", "problem.preset=norms"],
        vec!["not-a-command"],
    ] {
        let out = tic(&args);
        assert_eq!(out.status.code(), Some(2), "{args:?}");
    }
    let out = tic(&["solve-linear", "--config", bad.to_str().unwrap()]);
    assert!(String::from_utf8_lossy(&out.stderr).contains("line 2"));
}

#[test]
fn failing_check_exits_with_one() {
    let root = scratch("fail");
    let out = tic(&["check", "--set", "check.lambda=2", "--out", root.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&out.stderr).contains("ellipticity_margin"));
    let summary = fs::read_to_string(root.join("summary.csv")).unwrap();
    assert!(summary.lines().any(|l| l.starts_with("check,ellipticity_margin,") && l.ends_with(",0")));
}
