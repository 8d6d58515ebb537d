mod common;

use std::time::Instant;

#[test]
fn demo_pipeline_matches_golden_outputs() {
    let dir = tempfile::tempdir().unwrap();
    let started = Instant::now();
    common::pipeline(dir.path());
    let problems = common::compare_with_golden(dir.path());
    assert!(problems.is_empty(), "{problems:#?}\n(rerun with NEEDDESK_UPDATE_GOLDEN=1 after an intended change)");
    assert!(started.elapsed().as_secs() < 5);
}

#[test]
fn pipeline_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    common::pipeline(a.path());
    common::pipeline(b.path());
    assert_eq!(common::snapshot(a.path()), common::snapshot(b.path()));
}
