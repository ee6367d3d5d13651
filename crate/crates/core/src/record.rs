//! Unified model records: the manifest describing one version of a model or
//! dataset, with parsing, validation, canonical serialization, digesting,
//! and derivation of downstream records.

use std::collections::BTreeMap;
use std::fmt;

use sha2::{Digest, Sha256};

use crate::doc::{self, Value};
use crate::version::{Version, VersionReq};
use crate::Error;

/// Record identifier: an optional namespace and a name, both lowercase
/// tokens, rendered `namespace/name` or `name`.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct RecordId {
    pub namespace: Option<String>,
    pub name: String,
}

impl RecordId {
    pub fn new(name: &str) -> Result<RecordId, Error> {
        RecordId::parse(name)
    }

    pub fn parse(text: &str) -> Result<RecordId, Error> {
        RecordId::parse_at(text, "id")
    }

    pub fn parse_at(text: &str, path: &str) -> Result<RecordId, Error> {
        if text.len() > 160 {
            return Err(schema(path, "identifier longer than 160 characters"));
        }
        let (namespace, name) = match text.split_once('/') {
            Some((ns, rest)) => {
                if rest.contains('/') {
                    return Err(schema(path, "at most one namespace separator is allowed"));
                }
                (Some(ns), rest)
            }
            None => (None, text),
        };
        if let Some(ns) = namespace {
            if !valid_token(ns) {
                return Err(schema(
                    path,
                    &format!("invalid namespace {ns:?} (lowercase [a-z0-9._-], up to 128 chars)"),
                ));
            }
        }
        if !valid_token(name) {
            return Err(schema(
                path,
                &format!("invalid name {name:?} (lowercase [a-z0-9._-], up to 128 chars)"),
            ));
        }
        Ok(RecordId {
            namespace: namespace.map(str::to_string),
            name: name.to_string(),
        })
    }

    pub fn is_valid(&self) -> bool {
        RecordId::parse(&self.to_string()).is_ok()
    }
}

fn valid_token(s: &str) -> bool {
    if s.is_empty() || s.len() > 128 {
        return false;
    }
    let bytes = s.as_bytes();
    if !(bytes[0].is_ascii_lowercase() || bytes[0].is_ascii_digit()) {
        return false;
    }
    bytes
        .iter()
        .all(|&b| b.is_ascii_lowercase() || b.is_ascii_digit() || b == b'.' || b == b'_' || b == b'-')
}

impl fmt::Display for RecordId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match &self.namespace {
            Some(ns) => write!(f, "{ns}/{}", self.name),
            None => f.write_str(&self.name),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Kind {
    Model,
    Dataset,
}

impl Kind {
    pub fn as_str(self) -> &'static str {
        match self {
            Kind::Model => "model",
            Kind::Dataset => "dataset",
        }
    }

    pub fn parse(s: &str) -> Option<Kind> {
        match s {
            "model" => Some(Kind::Model),
            "dataset" => Some(Kind::Dataset),
            _ => None,
        }
    }
}

impl fmt::Display for Kind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

/// How a record uses its dependency target.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum Relation {
    FineTune,
    Adapter,
    Distillation,
    Component,
    TrainingData,
    RetrievalData,
    EvaluationData,
    DerivedFrom,
    Other,
}

impl Relation {
    pub const ALL: [Relation; 9] = [
        Relation::FineTune,
        Relation::Adapter,
        Relation::Distillation,
        Relation::Component,
        Relation::TrainingData,
        Relation::RetrievalData,
        Relation::EvaluationData,
        Relation::DerivedFrom,
        Relation::Other,
    ];

    pub fn as_str(self) -> &'static str {
        match self {
            Relation::FineTune => "fine_tune",
            Relation::Adapter => "adapter",
            Relation::Distillation => "distillation",
            Relation::Component => "component",
            Relation::TrainingData => "training_data",
            Relation::RetrievalData => "retrieval_data",
            Relation::EvaluationData => "evaluation_data",
            Relation::DerivedFrom => "derived_from",
            Relation::Other => "other",
        }
    }

    pub fn parse(s: &str) -> Option<Relation> {
        Relation::ALL.iter().copied().find(|r| r.as_str() == s)
    }

    /// Data relations require a dataset target.
    pub fn requires_dataset(self) -> bool {
        matches!(
            self,
            Relation::TrainingData | Relation::RetrievalData | Relation::EvaluationData
        )
    }

    /// Model-to-model relations require a model target.
    pub fn requires_model(self) -> bool {
        matches!(
            self,
            Relation::FineTune | Relation::Adapter | Relation::Distillation | Relation::Component
        )
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum ArtifactKind {
    Code,
    TrainingData,
    RetrievalData,
    Parameters,
}

impl ArtifactKind {
    pub fn as_str(self) -> &'static str {
        match self {
            ArtifactKind::Code => "code",
            ArtifactKind::TrainingData => "training_data",
            ArtifactKind::RetrievalData => "retrieval_data",
            ArtifactKind::Parameters => "parameters",
        }
    }

    pub fn parse(s: &str) -> Option<ArtifactKind> {
        match s {
            "code" => Some(ArtifactKind::Code),
            "training_data" => Some(ArtifactKind::TrainingData),
            "retrieval_data" => Some(ArtifactKind::RetrievalData),
            "parameters" => Some(ArtifactKind::Parameters),
            _ => None,
        }
    }
}

impl fmt::Display for ArtifactKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Availability {
    Open,
    Gated,
    ApiOnly,
    Closed,
}

impl Availability {
    pub fn as_str(self) -> &'static str {
        match self {
            Availability::Open => "open",
            Availability::Gated => "gated",
            Availability::ApiOnly => "api_only",
            Availability::Closed => "closed",
        }
    }

    pub fn parse(s: &str) -> Option<Availability> {
        match s {
            "open" => Some(Availability::Open),
            "gated" => Some(Availability::Gated),
            "api_only" => Some(Availability::ApiOnly),
            "closed" => Some(Availability::Closed),
            _ => None,
        }
    }
}

impl fmt::Display for Availability {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.as_str())
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct ArtifactEntry {
    pub availability: Availability,
    pub url: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct Maintainer {
    pub name: String,
    pub contact: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DependencyRef {
    pub target: RecordId,
    pub kind: Kind,
    pub req: VersionReq,
    pub relation: Relation,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvaluationResult {
    pub metric: String,
    pub dataset: Option<RecordId>,
    pub value: Option<f64>,
    pub higher_is_better: bool,
    pub qualitative: Option<String>,
    pub protocol: Option<String>,
}

/// The manifest for one version of a model or dataset. `unknown` preserves
/// unrecognized top-level keys verbatim for forward compatibility.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelRecord {
    pub id: RecordId,
    pub version: Version,
    pub kind: Kind,
    pub title: String,
    pub publisher: String,
    pub maintainers: Vec<Maintainer>,
    pub license: String,
    pub artifacts: BTreeMap<ArtifactKind, ArtifactEntry>,
    pub dependencies: Vec<DependencyRef>,
    pub evaluations: Vec<EvaluationResult>,
    pub intended_use: String,
    pub ethical_notes: String,
    pub references: Vec<String>,
    pub record_format_version: i64,
    pub unknown: Vec<(String, Value)>,
}

impl ModelRecord {
    /// A minimal valid record: mandatory fields set, everything else empty.
    pub fn minimal(id: RecordId, version: Version, kind: Kind) -> ModelRecord {
        ModelRecord {
            id,
            version,
            kind,
            title: String::new(),
            publisher: String::new(),
            maintainers: Vec::new(),
            license: "unknown".to_string(),
            artifacts: BTreeMap::new(),
            dependencies: Vec::new(),
            evaluations: Vec::new(),
            intended_use: String::new(),
            ethical_notes: String::new(),
            references: Vec::new(),
            record_format_version: 1,
            unknown: Vec::new(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Warning,
    Error,
}

impl fmt::Display for Severity {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Severity::Warning => "warning",
            Severity::Error => "error",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Violation {
    pub severity: Severity,
    pub path: String,
    pub message: String,
}

impl Violation {
    fn error(path: &str, message: String) -> Violation {
        Violation {
            severity: Severity::Error,
            path: path.to_string(),
            message,
        }
    }

    fn warning(path: &str, message: String) -> Violation {
        Violation {
            severity: Severity::Warning,
            path: path.to_string(),
            message,
        }
    }
}

impl fmt::Display for Violation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} at {}: {}", self.severity, self.path, self.message)
    }
}

fn schema(path: &str, message: &str) -> Error {
    Error::Schema {
        path: path.to_string(),
        message: message.to_string(),
    }
}

const KNOWN_KEYS: [&str; 14] = [
    "artifacts",
    "dependencies",
    "ethical_notes",
    "evaluations",
    "id",
    "intended_use",
    "kind",
    "license",
    "maintainers",
    "publisher",
    "record_format_version",
    "references",
    "title",
    "version",
];

/// Parses manifest bytes into a record. The record is guaranteed to carry no
/// error-severity violations; warnings (including preserved unknown keys)
/// are returned alongside it.
pub fn parse_record(bytes: &[u8]) -> Result<(ModelRecord, Vec<Violation>), Error> {
    let value = doc::parse_bytes(bytes)?;
    let record = from_value(&value)?;
    let violations = validate(&record);
    if violations.iter().any(|v| v.severity == Severity::Error) {
        return Err(Error::Validation(violations));
    }
    Ok((record, violations))
}

/// Builds a record from a parsed document without running validation.
pub fn from_value(value: &Value) -> Result<ModelRecord, Error> {
    let entries = value
        .as_map()
        .ok_or_else(|| schema("record", "expected a mapping at the top level"))?;

    let id_text = require_str(value, "id")?;
    let id = RecordId::parse_at(&id_text, "id")?;
    let version =
        Version::parse(&require_str(value, "version")?).map_err(|e| schema("version", &crate::inner_message(&e)))?;
    let kind_text = require_str(value, "kind")?;
    let kind = Kind::parse(&kind_text)
        .ok_or_else(|| schema("kind", &format!("expected model or dataset, found {kind_text:?}")))?;
    let license = require_str(value, "license")?;
    let record_format_version = match value.get("record_format_version") {
        None => return Err(schema("record_format_version", "missing mandatory field")),
        Some(v) => v.as_i64().ok_or_else(|| {
            schema(
                "record_format_version",
                &format!("expected an integer, found {}", v.type_name()),
            )
        })?,
    };

    let title = optional_str(value, "title")?;
    let publisher = optional_str(value, "publisher")?;
    let intended_use = optional_str(value, "intended_use")?;
    let ethical_notes = optional_str(value, "ethical_notes")?;

    let maintainers = parse_maintainers(value)?;
    let artifacts = parse_artifacts(value)?;
    let dependencies = parse_dependencies(value)?;
    let evaluations = parse_evaluations(value)?;
    let references = parse_references(value)?;

    let mut unknown = Vec::new();
    for (key, v) in entries {
        if !KNOWN_KEYS.contains(&key.as_str()) {
            unknown.push((key.clone(), v.clone()));
        }
    }

    Ok(ModelRecord {
        id,
        version,
        kind,
        title,
        publisher,
        maintainers,
        license,
        artifacts,
        dependencies,
        evaluations,
        intended_use,
        ethical_notes,
        references,
        record_format_version,
        unknown,
    })
}

fn require_str(value: &Value, key: &str) -> Result<String, Error> {
    match value.get(key) {
        None => Err(schema(key, "missing mandatory field")),
        Some(v) => v
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| schema(key, &format!("expected a string, found {}", v.type_name()))),
    }
}

fn optional_str(value: &Value, key: &str) -> Result<String, Error> {
    match value.get(key) {
        None | Some(Value::Null) => Ok(String::new()),
        Some(v) => v
            .as_str()
            .map(str::to_string)
            .ok_or_else(|| schema(key, &format!("expected a string, found {}", v.type_name()))),
    }
}

fn sub_str(entry: &Value, path: &str, key: &str) -> Result<Option<String>, Error> {
    match entry.get(key) {
        None | Some(Value::Null) => Ok(None),
        Some(v) => v.as_str().map(str::to_string).map(Some).ok_or_else(|| {
            schema(
                &format!("{path}.{key}"),
                &format!("expected a string, found {}", v.type_name()),
            )
        }),
    }
}

fn parse_maintainers(value: &Value) -> Result<Vec<Maintainer>, Error> {
    let list = match value.get("maintainers") {
        None | Some(Value::Null) => return Ok(Vec::new()),
        Some(v) => v
            .as_list()
            .ok_or_else(|| schema("maintainers", &format!("expected a list, found {}", v.type_name())))?,
    };
    let mut out = Vec::new();
    for (i, entry) in list.iter().enumerate() {
        let path = format!("maintainers[{i}]");
        if entry.as_map().is_none() {
            return Err(schema(&path, "expected a map with name and optional contact"));
        }
        let name = sub_str(entry, &path, "name")?
            .ok_or_else(|| schema(&format!("{path}.name"), "missing mandatory field"))?;
        let contact = sub_str(entry, &path, "contact")?;
        out.push(Maintainer { name, contact });
    }
    Ok(out)
}

fn parse_artifacts(value: &Value) -> Result<BTreeMap<ArtifactKind, ArtifactEntry>, Error> {
    let entries = match value.get("artifacts") {
        None | Some(Value::Null) => return Ok(BTreeMap::new()),
        Some(v) => v
            .as_map()
            .ok_or_else(|| schema("artifacts", &format!("expected a map, found {}", v.type_name())))?,
    };
    let mut out = BTreeMap::new();
    for (key, v) in entries {
        let path = format!("artifacts.{key}");
        let kind = ArtifactKind::parse(key).ok_or_else(|| {
            schema(
                &path,
                "expected one of code, training_data, retrieval_data, parameters",
            )
        })?;
        let entry = match v {
            // Shorthand: the availability alone.
            Value::Str(s) => ArtifactEntry {
                availability: parse_availability(s, &path)?,
                url: None,
            },
            Value::Map(_) => {
                let availability_text = sub_str(v, &path, "availability")?
                    .ok_or_else(|| schema(&format!("{path}.availability"), "missing mandatory field"))?;
                ArtifactEntry {
                    availability: parse_availability(&availability_text, &format!("{path}.availability"))?,
                    url: sub_str(v, &path, "url")?,
                }
            }
            other => {
                return Err(schema(
                    &path,
                    &format!("expected an availability or a map, found {}", other.type_name()),
                ))
            }
        };
        out.insert(kind, entry);
    }
    Ok(out)
}

fn parse_availability(s: &str, path: &str) -> Result<Availability, Error> {
    Availability::parse(s).ok_or_else(|| {
        schema(
            path,
            &format!("expected one of open, gated, api_only, closed, found {s:?}"),
        )
    })
}

fn parse_dependencies(value: &Value) -> Result<Vec<DependencyRef>, Error> {
    let list = match value.get("dependencies") {
        None | Some(Value::Null) => return Ok(Vec::new()),
        Some(v) => v
            .as_list()
            .ok_or_else(|| schema("dependencies", &format!("expected a list, found {}", v.type_name())))?,
    };
    let mut out = Vec::new();
    for (i, entry) in list.iter().enumerate() {
        let path = format!("dependencies[{i}]");
        if entry.as_map().is_none() {
            return Err(schema(&path, "expected a map describing the dependency"));
        }
        let target_text = sub_str(entry, &path, "target")?
            .ok_or_else(|| schema(&format!("{path}.target"), "missing mandatory field"))?;
        let target = RecordId::parse_at(&target_text, &format!("{path}.target"))?;
        let kind_text = sub_str(entry, &path, "kind")?
            .ok_or_else(|| schema(&format!("{path}.kind"), "missing mandatory field"))?;
        let kind = Kind::parse(&kind_text).ok_or_else(|| {
            schema(
                &format!("{path}.kind"),
                &format!("expected model or dataset, found {kind_text:?}"),
            )
        })?;
        let req_text = sub_str(entry, &path, "req")?
            .ok_or_else(|| schema(&format!("{path}.req"), "missing mandatory field"))?;
        let req = VersionReq::parse(&req_text)
            .map_err(|e| schema(&format!("{path}.req"), &crate::inner_message(&e)))?;
        let relation_text = sub_str(entry, &path, "relation")?
            .ok_or_else(|| schema(&format!("{path}.relation"), "missing mandatory field"))?;
        let relation = Relation::parse(&relation_text).ok_or_else(|| {
            schema(
                &format!("{path}.relation"),
                &format!("unknown relation {relation_text:?}"),
            )
        })?;
        let note = sub_str(entry, &path, "note")?;
        out.push(DependencyRef {
            target,
            kind,
            req,
            relation,
            note,
        });
    }
    Ok(out)
}

fn parse_evaluations(value: &Value) -> Result<Vec<EvaluationResult>, Error> {
    let list = match value.get("evaluations") {
        None | Some(Value::Null) => return Ok(Vec::new()),
        Some(v) => v
            .as_list()
            .ok_or_else(|| schema("evaluations", &format!("expected a list, found {}", v.type_name())))?,
    };
    let mut out = Vec::new();
    for (i, entry) in list.iter().enumerate() {
        let path = format!("evaluations[{i}]");
        if entry.as_map().is_none() {
            return Err(schema(&path, "expected a map describing the evaluation"));
        }
        let metric = sub_str(entry, &path, "metric")?
            .ok_or_else(|| schema(&format!("{path}.metric"), "missing mandatory field"))?;
        let dataset = match sub_str(entry, &path, "dataset")? {
            None => None,
            Some(text) => Some(RecordId::parse_at(&text, &format!("{path}.dataset"))?),
        };
        let value_field = match entry.get("value") {
            None | Some(Value::Null) => None,
            Some(v) => Some(v.as_f64().ok_or_else(|| {
                schema(
                    &format!("{path}.value"),
                    &format!("expected a number, found {}", v.type_name()),
                )
            })?),
        };
        let higher_is_better = match entry.get("higher_is_better") {
            None | Some(Value::Null) => true,
            Some(v) => v.as_bool().ok_or_else(|| {
                schema(
                    &format!("{path}.higher_is_better"),
                    &format!("expected a boolean, found {}", v.type_name()),
                )
            })?,
        };
        out.push(EvaluationResult {
            metric,
            dataset,
            value: value_field,
            higher_is_better,
            qualitative: sub_str(entry, &path, "qualitative")?,
            protocol: sub_str(entry, &path, "protocol")?,
        });
    }
    Ok(out)
}

fn parse_references(value: &Value) -> Result<Vec<String>, Error> {
    let list = match value.get("references") {
        None | Some(Value::Null) => return Ok(Vec::new()),
        Some(v) => v
            .as_list()
            .ok_or_else(|| schema("references", &format!("expected a list, found {}", v.type_name())))?,
    };
    let mut out = Vec::new();
    for (i, entry) in list.iter().enumerate() {
        let s = entry.as_str().ok_or_else(|| {
            schema(
                &format!("references[{i}]"),
                &format!("expected a string, found {}", entry.type_name()),
            )
        })?;
        out.push(s.to_string());
    }
    Ok(out)
}

/// Checks every record invariant. Errors block publication; warnings flag
/// under-specified but acceptable records.
pub fn validate(record: &ModelRecord) -> Vec<Violation> {
    let mut out = Vec::new();

    if record.record_format_version != 1 {
        out.push(Violation::error(
            "record_format_version",
            format!(
                "unsupported record format version {}",
                record.record_format_version
            ),
        ));
    }
    if !record.id.is_valid() {
        out.push(Violation::error("id", format!("invalid identifier {:?}", record.id.to_string())));
    }
    if record.license.is_empty() {
        out.push(Violation::error(
            "license",
            "license must be present (use \"unknown\" when unclear)".to_string(),
        ));
    } else if record.license == "unknown" {
        out.push(Violation::warning("license", "license is unknown".to_string()));
    }

    for (field, text) in [
        ("title", &record.title),
        ("publisher", &record.publisher),
        ("intended_use", &record.intended_use),
        ("ethical_notes", &record.ethical_notes),
    ] {
        if text.is_empty() {
            out.push(Violation::warning(field, format!("{field} is empty")));
        }
    }
    if record.maintainers.is_empty() {
        out.push(Violation::warning(
            "maintainers",
            "no maintainers listed".to_string(),
        ));
    }
    if record.artifacts.is_empty() {
        out.push(Violation::warning(
            "artifacts",
            "no artifact availability declared".to_string(),
        ));
    }
    if record.evaluations.is_empty() {
        out.push(Violation::warning(
            "evaluations",
            "no evaluations recorded".to_string(),
        ));
    }

    for (i, m) in record.maintainers.iter().enumerate() {
        if m.name.is_empty() {
            out.push(Violation::error(
                &format!("maintainers[{i}].name"),
                "maintainer name must be non-empty".to_string(),
            ));
        }
    }
    for (kind, entry) in &record.artifacts {
        if let Some(url) = &entry.url {
            if url.is_empty() {
                out.push(Violation::error(
                    &format!("artifacts.{kind}.url"),
                    "url must be non-empty when present".to_string(),
                ));
            }
        }
    }

    let mut seen = Vec::new();
    for (i, dep) in record.dependencies.iter().enumerate() {
        let triple = (dep.target.clone(), dep.kind, dep.relation);
        if seen.contains(&triple) {
            out.push(Violation::error(
                "dependencies",
                format!(
                    "duplicate dependency on {} ({}, {})",
                    dep.target, dep.kind, dep.relation
                ),
            ));
        } else {
            seen.push(triple);
        }
        if dep.relation.requires_dataset() && dep.kind != Kind::Dataset {
            out.push(Violation::error(
                &format!("dependencies[{i}].relation"),
                format!("relation {} requires a dataset target", dep.relation),
            ));
        }
        if dep.relation.requires_model() && dep.kind != Kind::Model {
            out.push(Violation::error(
                &format!("dependencies[{i}].relation"),
                format!("relation {} requires a model target", dep.relation),
            ));
        }
        if record.kind == Kind::Dataset && dep.relation != Relation::DerivedFrom {
            out.push(Violation::error(
                &format!("dependencies[{i}].relation"),
                "dataset records may only declare derived_from dependencies".to_string(),
            ));
        }
        if dep.req.is_empty() {
            out.push(Violation::error(
                &format!("dependencies[{i}].req"),
                format!("requirement {} matches no versions", dep.req),
            ));
        }
    }

    for (i, e) in record.evaluations.iter().enumerate() {
        if e.metric.is_empty() {
            out.push(Violation::error(
                &format!("evaluations[{i}].metric"),
                "metric must be non-empty".to_string(),
            ));
        }
        if let Some(x) = e.value {
            if !x.is_finite() {
                out.push(Violation::error(
                    &format!("evaluations[{i}].value"),
                    "value must be finite".to_string(),
                ));
            }
        }
        if e.value.is_none() && e.qualitative.is_none() {
            out.push(Violation::error(
                &format!("evaluations[{i}]"),
                "an evaluation needs a value or a qualitative note".to_string(),
            ));
        }
    }

    for (key, _) in &record.unknown {
        out.push(Violation::warning(
            key,
            format!("unknown key {key:?} preserved for forward compatibility"),
        ));
    }

    out
}

/// The record as a document value, shaped exactly like its canonical form.
pub fn to_value(record: &ModelRecord) -> Value {
    let mut top: Vec<(String, Value)> = Vec::new();
    top.push(("id".to_string(), Value::Str(record.id.to_string())));
    top.push(("version".to_string(), Value::Str(record.version.to_string())));
    top.push(("kind".to_string(), Value::Str(record.kind.to_string())));
    top.push(("title".to_string(), Value::Str(record.title.clone())));
    top.push(("publisher".to_string(), Value::Str(record.publisher.clone())));
    top.push((
        "maintainers".to_string(),
        Value::List(
            record
                .maintainers
                .iter()
                .map(|m| {
                    let mut entry = vec![("name".to_string(), Value::Str(m.name.clone()))];
                    if let Some(contact) = &m.contact {
                        entry.push(("contact".to_string(), Value::Str(contact.clone())));
                    }
                    Value::Map(entry)
                })
                .collect(),
        ),
    ));
    top.push(("license".to_string(), Value::Str(record.license.clone())));
    top.push((
        "artifacts".to_string(),
        Value::Map(
            record
                .artifacts
                .iter()
                .map(|(kind, entry)| {
                    let mut fields = vec![(
                        "availability".to_string(),
                        Value::Str(entry.availability.to_string()),
                    )];
                    if let Some(url) = &entry.url {
                        fields.push(("url".to_string(), Value::Str(url.clone())));
                    }
                    (kind.to_string(), Value::Map(fields))
                })
                .collect(),
        ),
    ));

    let mut deps: Vec<&DependencyRef> = record.dependencies.iter().collect();
    deps.sort_by_key(|d| (d.target.to_string(), d.relation.as_str()));
    top.push((
        "dependencies".to_string(),
        Value::List(
            deps.iter()
                .map(|d| {
                    let mut fields = vec![
                        ("target".to_string(), Value::Str(d.target.to_string())),
                        ("kind".to_string(), Value::Str(d.kind.to_string())),
                        ("req".to_string(), Value::Str(d.req.to_string())),
                        ("relation".to_string(), Value::Str(d.relation.to_string())),
                    ];
                    if let Some(note) = &d.note {
                        fields.push(("note".to_string(), Value::Str(note.clone())));
                    }
                    Value::Map(fields)
                })
                .collect(),
        ),
    ));

    top.push((
        "evaluations".to_string(),
        Value::List(
            record
                .evaluations
                .iter()
                .map(|e| {
                    let mut fields = vec![("metric".to_string(), Value::Str(e.metric.clone()))];
                    if let Some(dataset) = &e.dataset {
                        fields.push(("dataset".to_string(), Value::Str(dataset.to_string())));
                    }
                    if let Some(x) = e.value {
                        fields.push(("value".to_string(), Value::Float(x)));
                    }
                    fields.push((
                        "higher_is_better".to_string(),
                        Value::Bool(e.higher_is_better),
                    ));
                    if let Some(q) = &e.qualitative {
                        fields.push(("qualitative".to_string(), Value::Str(q.clone())));
                    }
                    if let Some(p) = &e.protocol {
                        fields.push(("protocol".to_string(), Value::Str(p.clone())));
                    }
                    Value::Map(fields)
                })
                .collect(),
        ),
    ));
    top.push((
        "intended_use".to_string(),
        Value::Str(record.intended_use.clone()),
    ));
    top.push((
        "ethical_notes".to_string(),
        Value::Str(record.ethical_notes.clone()),
    ));
    top.push((
        "references".to_string(),
        Value::List(record.references.iter().map(|r| Value::Str(r.clone())).collect()),
    ));
    top.push((
        "record_format_version".to_string(),
        Value::Int(record.record_format_version),
    ));
    for (key, v) in &record.unknown {
        top.push((key.clone(), v.clone()));
    }
    Value::Map(top)
}

/// Deterministic canonical bytes. Refuses records with error-severity
/// violations so digests only ever cover valid records.
pub fn canonicalize(record: &ModelRecord) -> Result<Vec<u8>, Error> {
    let violations = validate(record);
    if violations.iter().any(|v| v.severity == Severity::Error) {
        return Err(Error::Validation(violations));
    }
    Ok(doc::emit(&to_value(record)).into_bytes())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    let mut hasher = Sha256::new();
    hasher.update(bytes);
    hex::encode(hasher.finalize())
}

/// SHA-256 of the canonical bytes, 64 lowercase hex characters.
pub fn digest(record: &ModelRecord) -> Result<String, Error> {
    Ok(sha256_hex(&canonicalize(record)?))
}

/// Fields a derived record must or may override.
#[derive(Debug, Clone)]
pub struct DeriveOverrides {
    pub id: RecordId,
    pub version: Version,
    pub title: Option<String>,
    pub license: Option<String>,
}

/// Builds a new model record downstream of `upstream`: descriptive fields
/// carry over as defaults, while license, publisher, maintainers, and
/// evaluations deliberately do not. The one dependency added pins the exact
/// upstream version.
pub fn derive_record(
    upstream: &ModelRecord,
    overrides: DeriveOverrides,
    relation: Relation,
) -> Result<ModelRecord, Error> {
    if !relation.requires_model() {
        return Err(schema(
            "relation",
            &format!("derivation requires a model-to-model relation, not {relation}"),
        ));
    }
    if upstream.kind != Kind::Model {
        return Err(schema(
            "relation",
            &format!("cannot derive with {relation} from a dataset record"),
        ));
    }
    let title = overrides.title.unwrap_or_else(|| {
        if upstream.title.is_empty() {
            format!("Derived from {}", upstream.id)
        } else {
            format!("Derived from {}", upstream.title)
        }
    });
    let artifacts = upstream
        .artifacts
        .iter()
        .map(|(kind, entry)| {
            (
                *kind,
                ArtifactEntry {
                    availability: entry.availability,
                    url: None,
                },
            )
        })
        .collect();
    Ok(ModelRecord {
        id: overrides.id,
        version: overrides.version,
        kind: Kind::Model,
        title,
        publisher: String::new(),
        maintainers: Vec::new(),
        license: overrides.license.unwrap_or_else(|| "unknown".to_string()),
        artifacts,
        dependencies: vec![DependencyRef {
            target: upstream.id.clone(),
            kind: Kind::Model,
            req: VersionReq::exact(&upstream.version),
            relation,
            note: None,
        }],
        evaluations: Vec::new(),
        intended_use: upstream.intended_use.clone(),
        ethical_notes: upstream.ethical_notes.clone(),
        references: vec![format!(
            "derived from {}@{} ({})",
            upstream.id, upstream.version, relation
        )],
        record_format_version: 1,
        unknown: Vec::new(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    const MINIMAL: &str = "id: my-model\nversion: 1.0.0\nkind: model\nlicense: unknown\nrecord_format_version: 1\n";

    #[test]
    fn minimal_manifest_parses() {
        let (record, warnings) = parse_record(MINIMAL.as_bytes()).unwrap();
        assert_eq!(record.id.to_string(), "my-model");
        assert!(record.dependencies.is_empty());
        assert!(warnings.iter().all(|v| v.severity == Severity::Warning));
    }

    #[test]
    fn relation_kind_mismatch_rejected() {
        let text = format!(
            "{MINIMAL}dependencies:\n  - target: d\n    kind: model\n    req: \"*\"\n    relation: training_data\n"
        );
        let err = parse_record(text.as_bytes()).unwrap_err();
        let Error::Validation(violations) = err else {
            panic!("expected validation failure, got {err}");
        };
        assert!(violations
            .iter()
            .any(|v| v.severity == Severity::Error && v.path == "dependencies[0].relation"));
    }

    #[test]
    fn unknown_keys_preserved_and_warned() {
        let text = format!("{MINIMAL}future_field: hello\n");
        let (record, warnings) = parse_record(text.as_bytes()).unwrap();
        assert_eq!(record.unknown.len(), 1);
        assert!(warnings.iter().any(|v| v.path == "future_field"));
        let bytes = canonicalize(&record).unwrap();
        let (back, _) = parse_record(&bytes).unwrap();
        assert_eq!(back, record);
    }

    #[test]
    fn canonicalize_is_idempotent() {
        let (record, _) = parse_record(MINIMAL.as_bytes()).unwrap();
        let once = canonicalize(&record).unwrap();
        let (again, _) = parse_record(&once).unwrap();
        assert_eq!(canonicalize(&again).unwrap(), once);
    }

    #[test]
    fn derive_pins_exact_upstream_version() {
        let (upstream, _) = parse_record(MINIMAL.as_bytes()).unwrap();
        let derived = derive_record(
            &upstream,
            DeriveOverrides {
                id: RecordId::parse("my-finetune").unwrap(),
                version: Version::parse("0.1.0").unwrap(),
                title: None,
                license: None,
            },
            Relation::FineTune,
        )
        .unwrap();
        assert_eq!(derived.dependencies.len(), 1);
        assert_eq!(derived.dependencies[0].req.to_string(), "=1.0.0");
        let violations = validate(&derived);
        assert!(violations.iter().all(|v| v.severity == Severity::Warning));
    }

    #[test]
    fn derive_with_dataset_relation_rejected() {
        let (upstream, _) = parse_record(MINIMAL.as_bytes()).unwrap();
        let result = derive_record(
            &upstream,
            DeriveOverrides {
                id: RecordId::parse("x").unwrap(),
                version: Version::parse("0.1.0").unwrap(),
                title: None,
                license: None,
            },
            Relation::TrainingData,
        );
        assert!(result.is_err());
    }
}
