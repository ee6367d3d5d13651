#![allow(dead_code)]

use std::path::{Path, PathBuf};

use umr_core::advisory::{load_advisories, AdvisoryDb};
use umr_core::record::{parse_record, ModelRecord};
use umr_core::registry::Registry;

pub const FIXTURE_IDS: [&str; 8] = [
    "laion-5b",
    "twitter-pathology-data",
    "clip",
    "plip",
    "r2t-mil",
    "breast-cancer-tumor-immune-phenotypes",
    "vlm-cpl",
    "pathldm",
];

pub const DOWNSTREAM_MODELS: [&str; 4] = [
    "r2t-mil",
    "breast-cancer-tumor-immune-phenotypes",
    "vlm-cpl",
    "pathldm",
];

pub fn fixture_dir() -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures")
}

pub fn fixture_record(id: &str) -> ModelRecord {
    let path = fixture_dir().join(format!("records/{id}.umr.yaml"));
    let bytes = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    parse_record(&bytes)
        .unwrap_or_else(|e| panic!("{}: {e}", path.display()))
        .0
}

pub fn fixture_records() -> Vec<ModelRecord> {
    FIXTURE_IDS.iter().map(|id| fixture_record(id)).collect()
}

pub fn fixture_advisories() -> AdvisoryDb {
    let path = fixture_dir().join("advisories.umr.yaml");
    let bytes = std::fs::read(&path).unwrap_or_else(|e| panic!("{}: {e}", path.display()));
    load_advisories(&bytes).expect("fixture advisories are well-formed")
}

/// Builds a populated local registry (all fixture records plus the
/// advisory database) under `dir`.
pub fn fixture_registry(dir: &Path) -> Registry {
    let mut registry = Registry::init_local(dir).expect("init fixture registry");
    for record in fixture_records() {
        registry.publish(&record).expect("publish fixture record");
    }
    registry
        .install_advisories(&fixture_advisories())
        .expect("install fixture advisories");
    registry
}
