#![allow(dead_code)]

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

pub fn demo(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../core/data/demo").join(name)
}

pub fn golden_dir() -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("tests/golden")
}

/// Runs the CLI in-process and returns its exit code.
pub fn needdesk(out: &Path, args: &[&str]) -> i32 {
    let mut argv = vec!["needdesk".to_owned(), "--out".to_owned(), out.display().to_string()];
    argv.extend(args.iter().map(|s| (*s).to_owned()));
    needdesk_cli::run(argv)
}

/// The full batch pipeline over the bundled demo corpus.
pub fn pipeline(out: &Path) {
    let gp = demo("google_play.jsonl");
    let gp_map = demo("google_play.toml");
    let ap = demo("apple.csv");
    let ap_map = demo("apple.toml");
    let truth = demo("truth.csv");
    let ratings = demo("ratings.csv");
    let s = |p: &PathBuf| p.display().to_string();
    let steps: Vec<Vec<String>> = vec![
        vec!["ingest".into(), s(&gp), "--source".into(), "google-play".into(), "--mapping".into(), s(&gp_map)],
        vec![
            "ingest".into(),
            s(&ap),
            "--source".into(),
            "apple".into(),
            "--mapping".into(),
            s(&ap_map),
            "--append".into(),
        ],
        vec!["detect".into()],
        vec!["classify".into()],
        vec!["--granularity".into(), "broad".into(), "classify".into()],
        vec!["assign".into()],
        vec!["resolve".into()],
        vec!["evaluate".into(), "detection".into(), "--truth".into(), s(&truth)],
        vec!["evaluate".into(), "taxonomy".into(), "--truth".into(), s(&truth)],
        vec!["--granularity".into(), "broad".into(), "evaluate".into(), "taxonomy".into(), "--truth".into(), s(&truth)],
        vec!["evaluate".into(), "teams".into(), "--truth".into(), s(&truth)],
        vec!["evaluate".into(), "agreement".into(), "--ratings".into(), s(&ratings)],
        vec!["evaluate".into(), "granularity".into(), "--truth".into(), s(&truth)],
    ];
    for step in steps {
        let args: Vec<&str> = step.iter().map(String::as_str).collect();
        assert_eq!(needdesk(out, &args), 0, "step {args:?} failed");
    }
}

/// Relative path → contents for every file under `dir`.
pub fn snapshot(dir: &Path) -> BTreeMap<String, Vec<u8>> {
    let mut files = BTreeMap::new();
    let mut stack = vec![dir.to_path_buf()];
    while let Some(d) = stack.pop() {
        for entry in fs::read_dir(&d).unwrap() {
            let p = entry.unwrap().path();
            if p.is_dir() {
                stack.push(p);
            } else {
                let rel = p.strip_prefix(dir).unwrap().display().to_string();
                files.insert(rel, fs::read(&p).unwrap());
            }
        }
    }
    files
}

/// Compares `out` with the checked-in golden files; with
/// `NEEDDESK_UPDATE_GOLDEN=1` rewrites them instead. Returns the mismatches.
pub fn compare_with_golden(out: &Path) -> Vec<String> {
    let actual = snapshot(out);
    let golden = golden_dir();
    if std::env::var_os("NEEDDESK_UPDATE_GOLDEN").is_some_and(|v| v == "1") {
        if golden.exists() {
            fs::remove_dir_all(&golden).unwrap();
        }
        fs::create_dir_all(&golden).unwrap();
        for (name, bytes) in &actual {
            fs::write(golden.join(name), bytes).unwrap();
        }
        return Vec::new();
    }
    let expected = snapshot(&golden);
    let mut problems = Vec::new();
    for name in expected.keys().filter(|k| !actual.contains_key(*k)) {
        problems.push(format!("missing output {name}"));
    }
    for (name, bytes) in &actual {
        match expected.get(name) {
            None => problems.push(format!("unexpected output {name}")),
            Some(g) if g != bytes => problems.push(format!("{name} differs from golden copy")),
            Some(_) => {}
        }
    }
    problems
}
