//! Registry sources and merged views. A source is a directory or HTTP
//! mirror holding an index, record documents, and an advisory file; a view
//! merges sources with per-id overlay precedence.

use std::collections::BTreeMap;
use std::io::Write as _;
use std::path::{Path, PathBuf};
use std::time::Duration;

use crate::advisory::{load_advisories, Advisory, AdvisoryDb};
use crate::doc::{self, Value};
use crate::graph::Resolver;
use crate::record::{parse_record, sha256_hex, Kind, ModelRecord, RecordId, Violation};
use crate::version::{best_match, Version, VersionReq};
use crate::Error;

pub const INDEX_FILE: &str = "index.umr.yaml";
pub const ADVISORY_FILE: &str = "advisories.umr.yaml";
pub const RECORDS_DIR: &str = "records";
pub const INDEX_FORMAT_VERSION: i64 = 1;

const HTTP_ATTEMPTS: u32 = 3;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Trust {
    Public,
    Private,
}

impl Trust {
    pub fn as_str(self) -> &'static str {
        match self {
            Trust::Public => "public",
            Trust::Private => "private",
        }
    }

    pub fn parse(text: &str) -> Option<Trust> {
        match text {
            "public" => Some(Trust::Public),
            "private" => Some(Trust::Private),
            _ => None,
        }
    }
}

/// One line of a view configuration: where a source lives and what to call
/// it. Locations starting with http:// or https:// are remote.
#[derive(Debug, Clone)]
pub struct SourceSpec {
    pub name: String,
    pub location: String,
    pub trust: Trust,
}

#[derive(Debug, Clone, PartialEq)]
pub struct IndexEntry {
    pub digest: String,
    pub kind: Kind,
    pub yanked: bool,
    pub path: String,
}

#[derive(Debug, Clone, PartialEq)]
pub struct RegistryIndex {
    pub index_format_version: i64,
    pub entries: BTreeMap<RecordId, BTreeMap<Version, IndexEntry>>,
    pub advisories_digest: String,
    pub generated_at: String,
}

impl RegistryIndex {
    pub fn empty() -> RegistryIndex {
        RegistryIndex {
            index_format_version: INDEX_FORMAT_VERSION,
            entries: BTreeMap::new(),
            advisories_digest: AdvisoryDb::empty().digest().to_string(),
            generated_at: crate::now_utc(),
        }
    }

    pub fn entry(&self, id: &RecordId, version: &Version) -> Option<&IndexEntry> {
        self.entries.get(id).and_then(|m| m.get(version))
    }

    pub fn record_count(&self) -> usize {
        self.entries.values().map(BTreeMap::len).sum()
    }
}

pub fn serialize_index(index: &RegistryIndex) -> Vec<u8> {
    let entries = index
        .entries
        .iter()
        .map(|(id, versions)| {
            let per_version = versions
                .iter()
                .map(|(version, entry)| {
                    let fields = vec![
                        ("digest".to_string(), Value::Str(entry.digest.clone())),
                        ("kind".to_string(), Value::Str(entry.kind.as_str().to_string())),
                        ("path".to_string(), Value::Str(entry.path.clone())),
                        ("yanked".to_string(), Value::Bool(entry.yanked)),
                    ];
                    (version.to_string(), Value::Map(fields))
                })
                .collect();
            (id.to_string(), Value::Map(per_version))
        })
        .collect();
    let top = Value::Map(vec![
        (
            "advisories_digest".to_string(),
            Value::Str(index.advisories_digest.clone()),
        ),
        ("entries".to_string(), Value::Map(entries)),
        (
            "generated_at".to_string(),
            Value::Str(index.generated_at.clone()),
        ),
        (
            "index_format_version".to_string(),
            Value::Int(index.index_format_version),
        ),
    ]);
    doc::emit(&top).into_bytes()
}

fn hex_digest_ok(digest: &str) -> bool {
    digest.len() == 64
        && digest
            .chars()
            .all(|c| c.is_ascii_digit() || ('a'..='f').contains(&c))
}

pub fn parse_index(bytes: &[u8]) -> Result<RegistryIndex, Error> {
    let value = doc::parse_bytes(bytes)?;
    let schema = |path: &str, message: String| Error::Schema {
        path: path.to_string(),
        message,
    };
    let Value::Map(_) = value else {
        return Err(schema("(root)", format!("expected a map, found {}", value.type_name())));
    };
    let version = value
        .get("index_format_version")
        .and_then(Value::as_i64)
        .ok_or_else(|| schema("index_format_version", "missing or non-integer".to_string()))?;
    if version != INDEX_FORMAT_VERSION {
        return Err(schema(
            "index_format_version",
            format!("unsupported index format {version}"),
        ));
    }
    let advisories_digest = value
        .get("advisories_digest")
        .and_then(Value::as_str)
        .ok_or_else(|| schema("advisories_digest", "missing or non-string".to_string()))?
        .to_string();
    let generated_at = value
        .get("generated_at")
        .and_then(Value::as_str)
        .unwrap_or_default()
        .to_string();
    let mut entries: BTreeMap<RecordId, BTreeMap<Version, IndexEntry>> = BTreeMap::new();
    if let Some(raw) = value.get("entries") {
        let Some(ids) = raw.as_map() else {
            return Err(schema("entries", format!("expected a map, found {}", raw.type_name())));
        };
        for (id_text, versions_raw) in ids {
            let id = RecordId::parse(id_text).map_err(|e| {
                schema(&format!("entries.{id_text}"), crate::inner_message(&e))
            })?;
            let Some(versions) = versions_raw.as_map() else {
                return Err(schema(
                    &format!("entries.{id_text}"),
                    format!("expected a map, found {}", versions_raw.type_name()),
                ));
            };
            let mut per_version: BTreeMap<Version, IndexEntry> = BTreeMap::new();
            for (version_text, entry_raw) in versions {
                let at = format!("entries.{id_text}.{version_text}");
                let version = Version::parse(version_text)
                    .map_err(|e| schema(&at, crate::inner_message(&e)))?;
                let digest = entry_raw
                    .get("digest")
                    .and_then(Value::as_str)
                    .ok_or_else(|| schema(&at, "missing digest".to_string()))?;
                if !hex_digest_ok(digest) {
                    return Err(schema(&at, format!("malformed digest {digest:?}")));
                }
                let kind_text = entry_raw
                    .get("kind")
                    .and_then(Value::as_str)
                    .ok_or_else(|| schema(&at, "missing kind".to_string()))?;
                let kind = Kind::parse(kind_text)
                    .ok_or_else(|| schema(&at, format!("unknown kind {kind_text:?}")))?;
                let yanked = entry_raw
                    .get("yanked")
                    .and_then(Value::as_bool)
                    .unwrap_or(false);
                let path = entry_raw
                    .get("path")
                    .and_then(Value::as_str)
                    .ok_or_else(|| schema(&at, "missing path".to_string()))?
                    .to_string();
                per_version.insert(
                    version,
                    IndexEntry {
                        digest: digest.to_string(),
                        kind,
                        yanked,
                        path,
                    },
                );
            }
            entries.insert(id, per_version);
        }
    }
    Ok(RegistryIndex {
        index_format_version: version,
        entries,
        advisories_digest,
        generated_at,
    })
}

pub fn record_rel_path(id: &RecordId, version: &Version) -> String {
    match &id.namespace {
        Some(ns) => format!("{RECORDS_DIR}/{ns}/{}-{version}.umr.yaml", id.name),
        None => format!("{RECORDS_DIR}/{}-{version}.umr.yaml", id.name),
    }
}

#[derive(Debug)]
enum Backend {
    Local { dir: PathBuf },
    Http { base: String, client: reqwest::blocking::Client },
}

/// A record fetched from a source, digest-verified before parsing.
#[derive(Debug, Clone)]
pub struct Fetched {
    pub record: ModelRecord,
    pub yanked: bool,
    pub warnings: Vec<Violation>,
}

/// One registry source. Local directories are writable; HTTP mirrors are
/// read-only from the client side.
#[derive(Debug)]
pub struct Registry {
    name: String,
    trust: Trust,
    backend: Backend,
    index: RegistryIndex,
    index_bytes: Vec<u8>,
    advisories: AdvisoryDb,
}

impl Registry {
    pub fn name(&self) -> &str {
        &self.name
    }

    pub fn trust(&self) -> Trust {
        self.trust
    }

    pub fn location(&self) -> String {
        match &self.backend {
            Backend::Local { dir } => dir.display().to_string(),
            Backend::Http { base, .. } => base.clone(),
        }
    }

    pub fn is_local(&self) -> bool {
        matches!(self.backend, Backend::Local { .. })
    }

    pub fn index(&self) -> &RegistryIndex {
        &self.index
    }

    pub fn index_bytes(&self) -> &[u8] {
        &self.index_bytes
    }

    pub fn advisories(&self) -> &AdvisoryDb {
        &self.advisories
    }

    pub fn open(spec: &SourceSpec) -> Result<Registry, Error> {
        if spec.location.starts_with("http://") || spec.location.starts_with("https://") {
            Registry::open_http(&spec.name, &spec.location, spec.trust)
        } else {
            Registry::open_local_named(&spec.name, Path::new(&spec.location), spec.trust)
        }
    }

    pub fn open_local(dir: &Path) -> Result<Registry, Error> {
        Registry::open_local_named("local", dir, Trust::Private)
    }

    pub fn open_local_named(name: &str, dir: &Path, trust: Trust) -> Result<Registry, Error> {
        let index_path = dir.join(INDEX_FILE);
        let index_bytes = std::fs::read(&index_path).map_err(|_| Error::NotFound {
            what: "registry index".to_string(),
            name: index_path.display().to_string(),
        })?;
        let index = parse_index(&index_bytes)?;
        let advisory_path = dir.join(ADVISORY_FILE);
        let advisories = match std::fs::read(&advisory_path) {
            Ok(bytes) => load_advisories(&bytes)?,
            Err(_) => AdvisoryDb::empty(),
        };
        Ok(Registry {
            name: name.to_string(),
            trust,
            backend: Backend::Local {
                dir: dir.to_path_buf(),
            },
            index,
            index_bytes,
            advisories,
        })
    }

    pub fn open_http(name: &str, base: &str, trust: Trust) -> Result<Registry, Error> {
        let base = base.trim_end_matches('/').to_string();
        let client = reqwest::blocking::Client::builder()
            .timeout(Duration::from_secs(10))
            .build()
            .map_err(|e| Error::Transport {
                attempts: 0,
                message: e.to_string(),
            })?;
        let (status, index_bytes) = http_get(&client, &format!("{base}/v1/index"))?;
        if status != 200 {
            return Err(Error::Transport {
                attempts: HTTP_ATTEMPTS,
                message: format!("GET /v1/index returned status {status}"),
            });
        }
        let index = parse_index(&index_bytes)?;
        let advisories = match http_get(&client, &format!("{base}/v1/advisories")) {
            Ok((200, bytes)) => load_advisories(&bytes)?,
            Ok(_) => AdvisoryDb::empty(),
            Err(e) => return Err(e),
        };
        Ok(Registry {
            name: name.to_string(),
            trust,
            backend: Backend::Http { base, client },
            index,
            index_bytes,
            advisories,
        })
    }

    /// Creates an empty registry layout at `dir` (which may already exist
    /// as an empty or partial directory, but not hold an index).
    pub fn init_local(dir: &Path) -> Result<Registry, Error> {
        let index_path = dir.join(INDEX_FILE);
        if index_path.exists() {
            return Err(Error::Immutable {
                id: index_path.display().to_string(),
                version: "already initialized".to_string(),
            });
        }
        std::fs::create_dir_all(dir.join(RECORDS_DIR))?;
        let index = RegistryIndex::empty();
        let advisories = AdvisoryDb::empty();
        write_atomic(&dir.join(ADVISORY_FILE), &advisories.canonical_bytes())?;
        write_atomic(&index_path, &serialize_index(&index))?;
        Registry::open_local(dir)
    }

    pub fn open_or_init_local(dir: &Path) -> Result<Registry, Error> {
        if dir.join(INDEX_FILE).exists() {
            Registry::open_local(dir)
        } else {
            Registry::init_local(dir)
        }
    }

    pub fn versions(&self, id: &RecordId) -> impl Iterator<Item = (&Version, &IndexEntry)> {
        self.index
            .entries
            .get(id)
            .into_iter()
            .flat_map(BTreeMap::iter)
    }

    /// Best non-yanked version satisfying `req`, if any.
    pub fn best_version(&self, id: &RecordId, req: &VersionReq) -> Option<Version> {
        let candidates: Vec<Version> = self
            .versions(id)
            .filter(|(_, e)| !e.yanked)
            .map(|(v, _)| v.clone())
            .collect();
        best_match(req, candidates.iter())
    }

    /// Fetches one exact version. Bytes are digest-checked against the
    /// index entry before any parsing happens.
    pub fn fetch(&self, id: &RecordId, version: &Version) -> Result<Fetched, Error> {
        let display = format!("{id}@{version}");
        let entry = self.index.entry(id, version).ok_or_else(|| Error::NotFound {
            what: "record".to_string(),
            name: display.clone(),
        })?;
        let bytes = match &self.backend {
            Backend::Local { dir } => std::fs::read(dir.join(&entry.path))?,
            Backend::Http { base, client } => {
                let url = format!("{base}/v1/records/{id}/{version}");
                let (status, bytes) = http_get(client, &url)?;
                match status {
                    200 => bytes,
                    404 => {
                        return Err(Error::NotFound {
                            what: "record".to_string(),
                            name: display,
                        })
                    }
                    other => {
                        return Err(Error::Transport {
                            attempts: HTTP_ATTEMPTS,
                            message: format!("GET {url} returned status {other}"),
                        })
                    }
                }
            }
        };
        let actual = sha256_hex(&bytes);
        if actual != entry.digest {
            return Err(Error::DigestMismatch {
                name: display,
                expected: entry.digest.clone(),
                actual,
            });
        }
        let (record, warnings) = parse_record(&bytes)?;
        if record.id != *id || record.version != *version {
            return Err(Error::Schema {
                path: display,
                message: format!(
                    "stored document identifies itself as {}@{}",
                    record.id, record.version
                ),
            });
        }
        Ok(Fetched {
            record,
            yanked: entry.yanked,
            warnings,
        })
    }

    /// Publishes one record: canonical bytes written under records/, then
    /// the index is rewritten atomically. Versions are immutable.
    pub fn publish(&mut self, record: &ModelRecord) -> Result<String, Error> {
        let canonical = crate::record::canonicalize(record)?;
        let digest = sha256_hex(&canonical);
        if self.index.entry(&record.id, &record.version).is_some() {
            return Err(Error::Immutable {
                id: record.id.to_string(),
                version: record.version.to_string(),
            });
        }
        let dir = self.writable_dir()?;
        let rel = record_rel_path(&record.id, &record.version);
        let path = dir.join(&rel);
        if let Some(parent) = path.parent() {
            std::fs::create_dir_all(parent)?;
        }
        write_atomic(&path, &canonical)?;
        self.index
            .entries
            .entry(record.id.clone())
            .or_default()
            .insert(
                record.version.clone(),
                IndexEntry {
                    digest: digest.clone(),
                    kind: record.kind,
                    yanked: false,
                    path: rel,
                },
            );
        self.commit_index()?;
        Ok(digest)
    }

    /// Marks a version yanked. The record file stays in place and stays
    /// fetchable; only new resolution skips it.
    pub fn yank(&mut self, id: &RecordId, version: &Version) -> Result<(), Error> {
        self.writable_dir()?;
        let entry = self
            .index
            .entries
            .get_mut(id)
            .and_then(|m| m.get_mut(version))
            .ok_or_else(|| Error::NotFound {
                what: "record".to_string(),
                name: format!("{id}@{version}"),
            })?;
        entry.yanked = true;
        self.commit_index()
    }

    /// Replaces the advisory file and the digest recorded in the index.
    pub fn install_advisories(&mut self, db: &AdvisoryDb) -> Result<(), Error> {
        let dir = self.writable_dir()?.to_path_buf();
        write_atomic(&dir.join(ADVISORY_FILE), &db.canonical_bytes())?;
        self.index.advisories_digest = db.digest().to_string();
        self.commit_index()?;
        self.advisories = db.clone();
        Ok(())
    }

    fn writable_dir(&self) -> Result<&Path, Error> {
        match &self.backend {
            Backend::Local { dir } => Ok(dir),
            Backend::Http { base, .. } => Err(Error::Io(std::io::Error::other(format!(
                "{base} is an HTTP source; publish through its service endpoint"
            )))),
        }
    }

    fn commit_index(&mut self) -> Result<(), Error> {
        self.index.generated_at = crate::now_utc();
        let bytes = serialize_index(&self.index);
        let dir = match &self.backend {
            Backend::Local { dir } => dir.clone(),
            Backend::Http { .. } => unreachable!("writes are gated on writable_dir"),
        };
        write_atomic(&dir.join(INDEX_FILE), &bytes)?;
        self.index_bytes = bytes;
        Ok(())
    }
}

/// Write-temp-then-rename in the destination directory, so readers only
/// ever observe the old or the new content.
pub fn write_atomic(path: &Path, bytes: &[u8]) -> Result<(), Error> {
    let dir = path.parent().unwrap_or_else(|| Path::new("."));
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(bytes)?;
    tmp.flush()?;
    tmp.persist(path)
        .map_err(|e| Error::Io(e.error))?;
    Ok(())
}

fn http_get(client: &reqwest::blocking::Client, url: &str) -> Result<(u16, Vec<u8>), Error> {
    let mut last_error = String::new();
    for attempt in 1..=HTTP_ATTEMPTS {
        match client.get(url).send() {
            Ok(response) => {
                let status = response.status().as_u16();
                if response.status().is_server_error() && attempt < HTTP_ATTEMPTS {
                    last_error = format!("status {status}");
                } else {
                    let bytes = response.bytes().map_err(|e| Error::Transport {
                        attempts: attempt,
                        message: e.to_string(),
                    })?;
                    return Ok((status, bytes.to_vec()));
                }
            }
            Err(e) => last_error = e.to_string(),
        }
        if attempt < HTTP_ATTEMPTS {
            std::thread::sleep(Duration::from_millis(50 * u64::from(attempt)));
        }
    }
    Err(Error::Transport {
        attempts: HTTP_ATTEMPTS,
        message: format!("GET {url}: {last_error}"),
    })
}

/// Merged, ordered view over sources. The first source containing any
/// version of an id owns that id outright; later occurrences are shadowed
/// and reported.
pub struct View {
    sources: Vec<Registry>,
    owner: BTreeMap<RecordId, usize>,
    warnings: Vec<String>,
}

impl View {
    pub fn new(sources: Vec<Registry>) -> Result<View, Error> {
        if sources.is_empty() {
            return Err(Error::NotFound {
                what: "registry source".to_string(),
                name: "(view has no sources)".to_string(),
            });
        }
        let mut owner: BTreeMap<RecordId, usize> = BTreeMap::new();
        let mut warnings = Vec::new();
        for (i, source) in sources.iter().enumerate() {
            for id in source.index().entries.keys() {
                match owner.get(id) {
                    None => {
                        owner.insert(id.clone(), i);
                    }
                    Some(first) => warnings.push(format!(
                        "{id} in source {} is shadowed by {}",
                        source.name(),
                        sources[*first].name()
                    )),
                }
            }
        }
        Ok(View {
            sources,
            owner,
            warnings,
        })
    }

    pub fn sources(&self) -> &[Registry] {
        &self.sources
    }

    pub fn warnings(&self) -> &[String] {
        &self.warnings
    }

    pub fn owner_of(&self, id: &RecordId) -> Option<&Registry> {
        self.owner.get(id).map(|i| &self.sources[*i])
    }

    /// Resolves `req` within the owning source only; yanked versions are
    /// skipped.
    pub fn lookup(&self, id: &RecordId, req: &VersionReq) -> Result<Option<Fetched>, Error> {
        let Some(source) = self.owner_of(id) else {
            return Ok(None);
        };
        let Some(version) = source.best_version(id, req) else {
            return Ok(None);
        };
        source.fetch(id, &version).map(Some)
    }

    /// Fetches one exact version from the owning source, yanked or not.
    pub fn fetch(&self, id: &RecordId, version: &Version) -> Result<Fetched, Error> {
        let source = self.owner_of(id).ok_or_else(|| Error::NotFound {
            what: "record".to_string(),
            name: format!("{id}@{version}"),
        })?;
        source.fetch(id, version)
    }

    /// Every record the view can see, honoring ownership, yanked versions
    /// included. All fetches are digest-verified.
    pub fn all_records(&self) -> Result<Vec<ModelRecord>, Error> {
        let mut records = Vec::new();
        for (id, source_index) in &self.owner {
            let source = &self.sources[*source_index];
            for (version, _) in source.versions(id) {
                records.push(source.fetch(id, version)?.record);
            }
        }
        Ok(records)
    }

    /// Advisories merged across sources; on advisory_id collision the
    /// earliest source wins, mirroring record ownership.
    pub fn advisories(&self) -> Result<AdvisoryDb, Error> {
        let mut seen: BTreeMap<&str, ()> = BTreeMap::new();
        let mut merged: Vec<Advisory> = Vec::new();
        for source in &self.sources {
            for advisory in source.advisories().advisories() {
                if seen.insert(advisory.advisory_id.as_str(), ()).is_none() {
                    merged.push(advisory.clone());
                }
            }
        }
        AdvisoryDb::from_advisories(merged)
    }
}

impl Resolver for View {
    fn resolve(&self, id: &RecordId, req: &VersionReq) -> Result<Option<ModelRecord>, Error> {
        Ok(self.lookup(id, req)?.map(|f| f.record))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn record(text: &str) -> ModelRecord {
        parse_record(text.as_bytes()).unwrap().0
    }

    fn simple(id: &str, version: &str) -> ModelRecord {
        record(&format!(
            "id: {id}\nversion: {version}\nkind: model\nlicense: mit\nrecord_format_version: 1\n"
        ))
    }

    #[test]
    fn missing_index_names_expected_path() {
        let dir = tempfile::tempdir().unwrap();
        let err = Registry::open_local(dir.path()).unwrap_err();
        assert!(err.to_string().contains(INDEX_FILE), "{err}");
    }

    #[test]
    fn publish_fetch_round_trip() {
        let dir = tempfile::tempdir().unwrap();
        let mut reg = Registry::init_local(dir.path()).unwrap();
        let r = simple("alpha", "1.2.3");
        let digest = reg.publish(&r).unwrap();
        let fetched = reg.fetch(&r.id, &r.version).unwrap();
        assert_eq!(fetched.record, r);
        assert!(!fetched.yanked);
        assert_eq!(digest, crate::record::digest(&r).unwrap());
        assert!(matches!(
            reg.publish(&r),
            Err(Error::Immutable { .. })
        ));
    }

    #[test]
    fn yank_hides_from_resolution_not_from_fetch() {
        let dir = tempfile::tempdir().unwrap();
        let mut reg = Registry::init_local(dir.path()).unwrap();
        let old = simple("beta", "1.0.0");
        let new = simple("beta", "1.1.0");
        reg.publish(&old).unwrap();
        reg.publish(&new).unwrap();
        reg.yank(&new.id, &new.version).unwrap();
        let req = VersionReq::parse("^1.0.0").unwrap();
        assert_eq!(reg.best_version(&old.id, &req), Some(old.version.clone()));
        let fetched = reg.fetch(&new.id, &new.version).unwrap();
        assert!(fetched.yanked);
        let ghost = Version::parse("9.9.9").unwrap();
        assert!(matches!(
            reg.yank(&new.id, &ghost),
            Err(Error::NotFound { .. })
        ));
    }

    #[test]
    fn tampered_record_file_fails_digest_check() {
        let dir = tempfile::tempdir().unwrap();
        let mut reg = Registry::init_local(dir.path()).unwrap();
        let r = simple("gamma", "2.0.0");
        reg.publish(&r).unwrap();
        let path = dir.path().join(record_rel_path(&r.id, &r.version));
        let mut bytes = std::fs::read(&path).unwrap();
        bytes[10] ^= 0x01;
        std::fs::write(&path, &bytes).unwrap();
        assert!(matches!(
            reg.fetch(&r.id, &r.version),
            Err(Error::DigestMismatch { .. })
        ));
    }

    #[test]
    fn interrupted_publish_leaves_previous_index_intact() {
        let dir = tempfile::tempdir().unwrap();
        let mut reg = Registry::init_local(dir.path()).unwrap();
        reg.publish(&simple("delta", "1.0.0")).unwrap();
        let before = std::fs::read(dir.path().join(INDEX_FILE)).unwrap();
        // A crash after the record file lands but before the index rename:
        // stray record file plus an orphaned temp file.
        std::fs::write(
            dir.path().join("records/orphan-9.9.9.umr.yaml"),
            b"partial",
        )
        .unwrap();
        std::fs::write(dir.path().join(".tmpXYZ"), b"half-written index").unwrap();
        let reopened = Registry::open_local(dir.path()).unwrap();
        assert_eq!(reopened.index_bytes(), before.as_slice());
        assert_eq!(reopened.index().record_count(), 1);
    }

    #[test]
    fn private_source_shadows_public_with_one_warning() {
        let pub_dir = tempfile::tempdir().unwrap();
        let priv_dir = tempfile::tempdir().unwrap();
        let mut public = Registry::init_local(pub_dir.path()).unwrap();
        let mut private = Registry::init_local(priv_dir.path()).unwrap();
        public.publish(&simple("shared", "1.0.0")).unwrap();
        public.publish(&simple("only-public", "1.0.0")).unwrap();
        private.publish(&simple("shared", "2.0.0")).unwrap();

        let open = |dir: &Path, name: &str, trust| {
            Registry::open_local_named(name, dir, trust).unwrap()
        };
        let view = View::new(vec![
            open(priv_dir.path(), "private", Trust::Private),
            open(pub_dir.path(), "public", Trust::Public),
        ])
        .unwrap();
        assert_eq!(view.warnings().len(), 1);
        assert!(view.warnings()[0].contains("shared"));
        let id = RecordId::parse("shared").unwrap();
        let hit = view.lookup(&id, &VersionReq::any()).unwrap().unwrap();
        assert_eq!(hit.record.version.to_string(), "2.0.0");

        let public_only = View::new(vec![open(pub_dir.path(), "public", Trust::Public)]).unwrap();
        let hit = public_only.lookup(&id, &VersionReq::any()).unwrap().unwrap();
        assert_eq!(hit.record.version.to_string(), "1.0.0");
        assert!(public_only.warnings().is_empty());
    }

    #[test]
    fn index_round_trips_through_canonical_bytes() {
        let dir = tempfile::tempdir().unwrap();
        let mut reg = Registry::init_local(dir.path()).unwrap();
        reg.publish(&simple("one", "1.0.0")).unwrap();
        reg.publish(&simple("one", "1.1.0-alpha.1")).unwrap();
        reg.publish(&simple("two", "0.3.0")).unwrap();
        let bytes = serialize_index(reg.index());
        let parsed = parse_index(&bytes).unwrap();
        assert_eq!(&parsed, reg.index());
        assert_eq!(serialize_index(&parsed), bytes);
    }
}
