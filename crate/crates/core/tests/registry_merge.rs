//! Registry integrity and multi-source merge: random single-byte tampering
//! must never slip past digest verification, overlay merges must be
//! deterministic with the first source owning an identifier, and a large
//! publish run must leave a fully consistent index on disk.

mod common;

use std::collections::BTreeSet;
use std::path::PathBuf;

use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use umr_core::record::{digest, sha256_hex, Kind, ModelRecord, RecordId};
use umr_core::registry::{Registry, View};
use umr_core::version::{Version, VersionReq};
use umr_core::Error;

fn stored_path(registry: &Registry, dir: &std::path::Path, id: &RecordId) -> (PathBuf, Version) {
    let (version, entry) = registry.versions(id).next().expect("id is indexed");
    (dir.join(&entry.path), version.clone())
}

#[test]
fn single_byte_tampering_is_always_detected() {
    let dir = tempfile::tempdir().unwrap();
    let registry = common::fixture_registry(dir.path());
    let mut rng = ChaCha8Rng::seed_from_u64(0x7a3b_0001);
    for trial in 0..50 {
        let id = RecordId::parse(common::FIXTURE_IDS.choose(&mut rng).unwrap()).unwrap();
        let (path, version) = stored_path(&registry, dir.path(), &id);
        let original = std::fs::read(&path).unwrap();

        let mut tampered = original.clone();
        let at = rng.gen_range(0..tampered.len());
        let mask = rng.gen_range(1..=255u8);
        tampered[at] ^= mask;
        std::fs::write(&path, &tampered).unwrap();

        match registry.fetch(&id, &version) {
            Err(Error::DigestMismatch { expected, actual, .. }) => {
                assert_eq!(expected, sha256_hex(&original), "trial {trial}");
                assert_eq!(actual, sha256_hex(&tampered), "trial {trial}");
            }
            other => panic!(
                "trial {trial}: flipped byte {at} of {id} went undetected: {other:?}"
            ),
        }

        std::fs::write(&path, &original).unwrap();
        registry
            .fetch(&id, &version)
            .unwrap_or_else(|e| panic!("trial {trial}: restore failed: {e}"));
    }
}

fn private_overlay(dir: &std::path::Path) -> Registry {
    let mut registry = Registry::init_local(dir).unwrap();
    let mut plip = common::fixture_record("plip");
    plip.title = "PLIP (internal build)".to_string();
    registry.publish(&plip).unwrap();
    let mut internal = ModelRecord::minimal(
        RecordId::parse("internal-only").unwrap(),
        Version::parse("0.1.0").unwrap(),
        Kind::Model,
    );
    internal.license = "proprietary".to_string();
    registry.publish(&internal).unwrap();
    registry
}

#[test]
fn merge_order_decides_ownership_and_is_deterministic() {
    let public_dir = tempfile::tempdir().unwrap();
    let private_dir = tempfile::tempdir().unwrap();
    common::fixture_registry(public_dir.path());
    private_overlay(private_dir.path());
    let plip_id = RecordId::parse("plip").unwrap();
    let any = VersionReq::parse("*").unwrap();

    let open_pair = |first: &std::path::Path, second: &std::path::Path| {
        View::new(vec![
            Registry::open_local(first).unwrap(),
            Registry::open_local(second).unwrap(),
        ])
        .unwrap()
    };

    let private_first = open_pair(private_dir.path(), public_dir.path());
    let fetched = private_first.lookup(&plip_id, &any).unwrap().unwrap();
    assert_eq!(fetched.record.title, "PLIP (internal build)");
    let shadow_warnings: Vec<&String> = private_first
        .warnings()
        .iter()
        .filter(|w| w.contains("plip"))
        .collect();
    assert_eq!(
        shadow_warnings.len(),
        1,
        "exactly one shadow warning for plip: {:?}",
        private_first.warnings()
    );
    assert!(private_first
        .lookup(&RecordId::parse("internal-only").unwrap(), &any)
        .unwrap()
        .is_some());
    assert!(private_first
        .lookup(&RecordId::parse("laion-5b").unwrap(), &any)
        .unwrap()
        .is_some());

    let public_first = open_pair(public_dir.path(), private_dir.path());
    let fetched = public_first.lookup(&plip_id, &any).unwrap().unwrap();
    assert_ne!(fetched.record.title, "PLIP (internal build)");

    // Same construction, same outcome: the merge has no hidden state.
    for _ in 0..3 {
        let again = open_pair(private_dir.path(), public_dir.path());
        assert_eq!(again.warnings(), private_first.warnings());
        let a: Vec<String> = again
            .all_records()
            .unwrap()
            .iter()
            .map(|r| format!("{}@{} {}", r.id, r.version, digest(r).unwrap()))
            .collect();
        let b: Vec<String> = private_first
            .all_records()
            .unwrap()
            .iter()
            .map(|r| format!("{}@{} {}", r.id, r.version, digest(r).unwrap()))
            .collect();
        assert_eq!(a, b);
    }

    // Removing the overlay restores the public record.
    let public_only = View::new(vec![Registry::open_local(public_dir.path()).unwrap()]).unwrap();
    let fetched = public_only.lookup(&plip_id, &any).unwrap().unwrap();
    assert_ne!(fetched.record.title, "PLIP (internal build)");
    assert!(public_only.warnings().is_empty());
}

#[test]
fn census_after_a_hundred_publishes() {
    let dir = tempfile::tempdir().unwrap();
    let mut registry = Registry::init_local(dir.path()).unwrap();
    let mut expected: BTreeSet<(String, String, String)> = BTreeSet::new();
    for i in 0..20 {
        for minor in 0..5 {
            let id = RecordId::parse(&format!("bulk-{i:02}")).unwrap();
            let version = Version::parse(&format!("1.{minor}.0")).unwrap();
            let mut r = ModelRecord::minimal(id.clone(), version.clone(), Kind::Model);
            r.license = "mit".to_string();
            let digest = registry.publish(&r).unwrap();
            expected.insert((id.to_string(), version.to_string(), digest));
        }
    }

    // A republish of an existing version must be refused.
    let mut again = ModelRecord::minimal(
        RecordId::parse("bulk-00").unwrap(),
        Version::parse("1.0.0").unwrap(),
        Kind::Model,
    );
    again.license = "apache-2.0".to_string();
    assert!(matches!(
        registry.publish(&again),
        Err(Error::Immutable { .. })
    ));

    // Reopen from disk and take a census: every entry present, every
    // stored file matching its indexed digest.
    let reopened = Registry::open_local(dir.path()).unwrap();
    assert_eq!(reopened.index().record_count(), 100);
    let mut seen = BTreeSet::new();
    for (id, versions) in &reopened.index().entries {
        for (version, entry) in versions {
            let bytes = std::fs::read(dir.path().join(&entry.path)).unwrap();
            assert_eq!(sha256_hex(&bytes), entry.digest, "{id}@{version}");
            let fetched = reopened.fetch(id, version).unwrap();
            assert_eq!(fetched.record.id, *id);
            assert_eq!(fetched.record.version, *version);
            seen.insert((id.to_string(), version.to_string(), entry.digest.clone()));
        }
    }
    assert_eq!(seen, expected);

    // Yank hides a version from selection without deleting it.
    let mut reopened = reopened;
    let bulk0 = RecordId::parse("bulk-00").unwrap();
    let top = Version::parse("1.4.0").unwrap();
    let any = VersionReq::parse("*").unwrap();
    assert_eq!(reopened.best_version(&bulk0, &any), Some(top.clone()));
    reopened.yank(&bulk0, &top).unwrap();
    assert_eq!(
        reopened.best_version(&bulk0, &any),
        Some(Version::parse("1.3.0").unwrap())
    );
    let fetched = reopened.fetch(&bulk0, &top).unwrap();
    assert!(fetched.yanked);
}
