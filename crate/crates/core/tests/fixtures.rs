use std::path::PathBuf;

use maxweight::cli::load_spec;
use maxweight::corpus::{iid_instance, worked_certificate, worked_instance};

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

#[test]
fn worked_fixture_matches_corpus() {
    let loaded = load_spec(&fixture("worked.json")).unwrap();
    assert_eq!(loaded.spec, worked_instance());
    assert_eq!(loaded.certificate, Some(worked_certificate()));
    assert_eq!(loaded.achieved_eta, Some(0.5));
    assert_eq!(loaded.reference_label(), "s1");
}

#[test]
fn iid_fixture_matches_corpus() {
    let loaded = load_spec(&fixture("iid10.json")).unwrap();
    assert_eq!(loaded.spec, iid_instance());
    assert!(loaded.achieved_eta.unwrap() >= 0.5);
    assert_eq!(loaded.reference_choice, "max_pi");
}
