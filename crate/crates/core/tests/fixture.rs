use std::path::Path;

use dcpl_core::config::RunConfig;
use dcpl_core::synthetic::{generate, SyntheticConfig};

fn fixture() -> &'static Path {
    Path::new(concat!(env!("CARGO_MANIFEST_DIR"), "/../../fixtures/synthetic20"))
}

#[test]
fn bundled_fixture_matches_generator() {
    let dir = tempfile::tempdir().unwrap();
    let d = generate(&SyntheticConfig::default()).unwrap();
    d.log.save(dir.path().join("events.jsonl")).unwrap();
    d.net.save(dir.path().join("network.csv")).unwrap();
    d.model.save(dir.path().join("truth.json")).unwrap();
    for name in ["events.jsonl", "network.csv", "truth.json"] {
        let shipped = std::fs::read(fixture().join(name)).unwrap();
        let fresh = std::fs::read(dir.path().join(name)).unwrap();
        assert!(shipped == fresh, "{name} is stale; rerun the make_fixture example");
    }
}

#[test]
fn bundled_config_is_valid() {
    let cfg = RunConfig::load(fixture().join("config.json")).unwrap();
    cfg.validate().unwrap();
    assert_eq!(cfg.data.n_users, Some(20));
    assert!(cfg.data.events.unwrap().is_file());
}
