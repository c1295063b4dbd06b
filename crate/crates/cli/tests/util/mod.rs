//! Helpers for driving the compiled binary in tests.

#![allow(dead_code)]

use std::path::{Path, PathBuf};
use std::process::Output;

pub fn rdepth(args: &[&str], cwd: &Path) -> Output {
    std::process::Command::new(env!("CARGO_BIN_EXE_rdepth"))
        .args(args)
        .current_dir(cwd)
        .output()
        .expect("binary runs")
}

pub fn assert_ok(out: &Output, what: &str) {
    assert!(
        out.status.success(),
        "{what} failed (status {:?}):\n{}",
        out.status.code(),
        String::from_utf8_lossy(&out.stderr)
    );
}

pub fn exit_code(out: &Output) -> i32 {
    out.status.code().expect("no signal")
}

pub fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

pub fn write(path: &Path, text: &str) {
    if let Some(parent) = path.parent() {
        std::fs::create_dir_all(parent).unwrap();
    }
    std::fs::write(path, text).unwrap();
}

pub fn read(path: &Path) -> String {
    std::fs::read_to_string(path)
        .unwrap_or_else(|e| panic!("cannot read {}: {e}", path.display()))
}

/// Recursively collect (relative path, bytes) of every file under a root.
pub fn snapshot(root: &Path) -> Vec<(PathBuf, Vec<u8>)> {
    let mut files = Vec::new();
    let mut stack = vec![root.to_path_buf()];
    while let Some(dir) = stack.pop() {
        for entry in std::fs::read_dir(&dir).unwrap() {
            let path = entry.unwrap().path();
            if path.is_dir() {
                stack.push(path);
            } else {
                let rel = path.strip_prefix(root).unwrap().to_path_buf();
                files.push((rel, std::fs::read(&path).unwrap()));
            }
        }
    }
    files.sort_by(|a, b| a.0.cmp(&b.0));
    files
}

pub fn assert_identical_trees(a: &Path, b: &Path, what: &str) {
    let sa = snapshot(a);
    let sb = snapshot(b);
    let names_a: Vec<_> = sa.iter().map(|(p, _)| p.clone()).collect();
    let names_b: Vec<_> = sb.iter().map(|(p, _)| p.clone()).collect();
    assert_eq!(names_a, names_b, "{what}: file sets differ");
    for ((p, da), (_, db)) in sa.iter().zip(&sb) {
        assert_eq!(da, db, "{what}: {} differs", p.display());
    }
}

pub const PHANTOM_SPEC: &str = r#"{ "mode": "phantoms", "subjects": 3,
  "dims": [32, 32, 32], "spacing": [2.0, 2.0, 2.0],
  "tumor_radius_mm": {"min": 7.0, "max": 10.0},
  "amplitude_mm": {"min": 1.0, "max": 4.0},
  "decay_mm": 15.0, "texture": {"kind": "noise", "amplitude": 1.0}, "seed": 7 }
"#;

pub const COHORT_SPEC: &str = r#"{ "mode": "cohort", "subjects": 160, "features": 20,
  "informative": {"f004": 1.0, "f011": -0.9, "f017": 0.7},
  "baseline_hazard": 0.002, "censoring_rate": 0.15, "seed": 5 }
"#;

/// Parse a `key: value` line from a report.
pub fn report_value(report: &str, key: &str) -> f64 {
    for line in report.lines() {
        if let Some(rest) = line.strip_prefix(&format!("{key}: ")) {
            return rest.parse().unwrap_or_else(|_| panic!("bad value in {line:?}"));
        }
    }
    panic!("no {key:?} line in report:\n{report}");
}
