#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

pub const GRID: &str = "40";

pub fn stroke_path(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../core/tests/data")
        .join(name)
}

pub fn metacast(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_metacast"))
        .args(args)
        .env_remove("METACAST_PORT")
        .output()
        .expect("spawn metacast")
}

pub fn ok(args: &[&str]) -> Output {
    let out = metacast(args);
    assert!(
        out.status.success(),
        "metacast {args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    out
}

/// Small shell dataset with its field, written into `dir`.
pub fn shell_fixture(dir: &Path) -> (PathBuf, PathBuf) {
    let cloud = dir.join("shell.csv");
    let field = dir.join("shell.mtcf");
    ok(&[
        "gen",
        "shell",
        "--target",
        "3000",
        "--noise",
        "3000",
        "--seed",
        "7",
        "--out",
        s(&cloud),
    ]);
    ok(&["density", "--cloud", s(&cloud), "--out", s(&field), "--grid", GRID]);
    (cloud, field)
}

pub fn s(p: &Path) -> &str {
    p.to_str().expect("utf-8 path")
}
