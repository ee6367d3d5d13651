//! Advisories and audits: published disclosures matched against provenance
//! graphs, with inheritance paths for every hit.

use std::collections::BTreeSet;

use chrono::NaiveDate;

use crate::doc::{self, Value};
use crate::graph::{build_graph, downstream_impact, ImpactTarget, NodeKey, ProvenanceGraph, Resolver};
use crate::record::{Kind, Maintainer, ModelRecord, RecordId};
use crate::version::VersionReq;
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Category {
    Csam,
    Privacy,
    LicenseChange,
    Legal,
    Bias,
    Toxicity,
    Security,
    Other,
}

impl Category {
    pub fn as_str(self) -> &'static str {
        match self {
            Category::Csam => "csam",
            Category::Privacy => "privacy",
            Category::LicenseChange => "license_change",
            Category::Legal => "legal",
            Category::Bias => "bias",
            Category::Toxicity => "toxicity",
            Category::Security => "security",
            Category::Other => "other",
        }
    }

    pub fn parse(text: &str) -> Option<Category> {
        Some(match text {
            "csam" => Category::Csam,
            "privacy" => Category::Privacy,
            "license_change" => Category::LicenseChange,
            "legal" => Category::Legal,
            "bias" => Category::Bias,
            "toxicity" => Category::Toxicity,
            "security" => Category::Security,
            "other" => Category::Other,
            _ => return None,
        })
    }
}

/// Ordered so that `Critical` sorts above `High` and so on down.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
pub enum Severity {
    Low,
    Medium,
    High,
    Critical,
}

impl Severity {
    pub fn as_str(self) -> &'static str {
        match self {
            Severity::Low => "low",
            Severity::Medium => "medium",
            Severity::High => "high",
            Severity::Critical => "critical",
        }
    }

    pub fn parse(text: &str) -> Option<Severity> {
        Some(match text {
            "low" => Severity::Low,
            "medium" => Severity::Medium,
            "high" => Severity::High,
            "critical" => Severity::Critical,
            _ => return None,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Advisory {
    pub advisory_id: String,
    pub target_id: RecordId,
    pub target_kind: Kind,
    pub affected: VersionReq,
    pub category: Category,
    pub severity: Severity,
    pub published: NaiveDate,
    pub withdrawn: Option<NaiveDate>,
    pub summary: String,
    pub references: Vec<String>,
}

impl Advisory {
    pub fn is_active(&self) -> bool {
        self.withdrawn.is_none()
    }

    pub fn to_value(&self) -> Value {
        let mut entries = vec![
            ("advisory_id".to_string(), Value::Str(self.advisory_id.clone())),
            ("affected".to_string(), Value::Str(self.affected.to_string())),
            ("category".to_string(), Value::Str(self.category.as_str().to_string())),
            ("published".to_string(), Value::Str(self.published.to_string())),
            (
                "references".to_string(),
                Value::List(self.references.iter().cloned().map(Value::Str).collect()),
            ),
            ("severity".to_string(), Value::Str(self.severity.as_str().to_string())),
            ("summary".to_string(), Value::Str(self.summary.clone())),
            ("target_id".to_string(), Value::Str(self.target_id.to_string())),
            ("target_kind".to_string(), Value::Str(self.target_kind.as_str().to_string())),
        ];
        if let Some(withdrawn) = self.withdrawn {
            entries.push(("withdrawn".to_string(), Value::Str(withdrawn.to_string())));
        }
        Value::Map(entries)
    }
}

/// Immutable advisory collection with a content digest over its canonical
/// serialization.
#[derive(Debug, Clone)]
pub struct AdvisoryDb {
    advisories: Vec<Advisory>,
    digest: String,
}

impl AdvisoryDb {
    pub fn empty() -> AdvisoryDb {
        AdvisoryDb::from_advisories(Vec::new()).expect("empty database is well-formed")
    }

    pub fn from_advisories(mut advisories: Vec<Advisory>) -> Result<AdvisoryDb, Error> {
        advisories.sort_by(|a, b| a.advisory_id.cmp(&b.advisory_id));
        let mut seen: BTreeSet<&str> = BTreeSet::new();
        for advisory in &advisories {
            if !valid_advisory_id(&advisory.advisory_id) {
                return Err(Error::Schema {
                    path: "advisory_id".to_string(),
                    message: format!(
                        "{:?} does not match UMR-YYYY-NNNN",
                        advisory.advisory_id
                    ),
                });
            }
            if !seen.insert(&advisory.advisory_id) {
                return Err(Error::Schema {
                    path: "advisory_id".to_string(),
                    message: format!("duplicate advisory {}", advisory.advisory_id),
                });
            }
            if advisory.summary.trim().is_empty() {
                return Err(Error::Schema {
                    path: format!("{}.summary", advisory.advisory_id),
                    message: "summary must be non-empty".to_string(),
                });
            }
            if let Some(withdrawn) = advisory.withdrawn {
                if withdrawn < advisory.published {
                    return Err(Error::Schema {
                        path: format!("{}.withdrawn", advisory.advisory_id),
                        message: format!(
                            "withdrawn {} predates published {}",
                            withdrawn, advisory.published
                        ),
                    });
                }
            }
        }
        let canonical = canonical_bytes(&advisories);
        let digest = crate::record::sha256_hex(&canonical);
        Ok(AdvisoryDb { advisories, digest })
    }

    pub fn advisories(&self) -> &[Advisory] {
        &self.advisories
    }

    pub fn active(&self) -> impl Iterator<Item = &Advisory> {
        self.advisories.iter().filter(|a| a.is_active())
    }

    pub fn digest(&self) -> &str {
        &self.digest
    }

    pub fn canonical_bytes(&self) -> Vec<u8> {
        canonical_bytes(&self.advisories)
    }
}

fn canonical_bytes(advisories: &[Advisory]) -> Vec<u8> {
    let list = Value::List(advisories.iter().map(Advisory::to_value).collect());
    doc::emit(&list).into_bytes()
}

fn valid_advisory_id(id: &str) -> bool {
    let Some(rest) = id.strip_prefix("UMR-") else {
        return false;
    };
    let parts: Vec<&str> = rest.split('-').collect();
    parts.len() == 2
        && parts[0].len() == 4
        && parts[1].len() == 4
        && parts
            .iter()
            .all(|p| p.chars().all(|c| c.is_ascii_digit()))
}

/// Parses `advisories.umr.yaml` content: one top-level list of advisory
/// documents in the manifest subset syntax.
pub fn load_advisories(bytes: &[u8]) -> Result<AdvisoryDb, Error> {
    let value = doc::parse_bytes(bytes)?;
    let Value::List(items) = value else {
        return Err(Error::Schema {
            path: "(root)".to_string(),
            message: format!("expected a list of advisories, found {}", value.type_name()),
        });
    };
    let mut advisories = Vec::with_capacity(items.len());
    for (i, item) in items.iter().enumerate() {
        advisories.push(advisory_from_value(item, &format!("advisories[{i}]"))?);
    }
    AdvisoryDb::from_advisories(advisories)
}

fn advisory_from_value(value: &Value, at: &str) -> Result<Advisory, Error> {
    let Value::Map(_) = value else {
        return Err(Error::Schema {
            path: at.to_string(),
            message: format!("expected a map, found {}", value.type_name()),
        });
    };
    let field = |name: &str| -> Result<&Value, Error> {
        value.get(name).ok_or_else(|| Error::Schema {
            path: format!("{at}.{name}"),
            message: "missing mandatory field".to_string(),
        })
    };
    let text = |name: &str| -> Result<String, Error> {
        let v = field(name)?;
        v.as_str().map(str::to_string).ok_or_else(|| Error::Schema {
            path: format!("{at}.{name}"),
            message: format!("expected a string, found {}", v.type_name()),
        })
    };

    let advisory_id = text("advisory_id")?;
    let target_id = RecordId::parse(&text("target_id")?).map_err(|e| Error::Schema {
        path: format!("{at}.target_id"),
        message: crate::inner_message(&e),
    })?;
    let kind_text = text("target_kind")?;
    let target_kind = Kind::parse(&kind_text).ok_or_else(|| Error::Schema {
        path: format!("{at}.target_kind"),
        message: format!("unknown kind {kind_text:?}"),
    })?;
    let affected = VersionReq::parse(&text("affected")?).map_err(|e| Error::Schema {
        path: format!("{at}.affected"),
        message: crate::inner_message(&e),
    })?;
    let category_text = text("category")?;
    let category = Category::parse(&category_text).ok_or_else(|| Error::Schema {
        path: format!("{at}.category"),
        message: format!("unknown category {category_text:?}"),
    })?;
    let severity_text = text("severity")?;
    let severity = Severity::parse(&severity_text).ok_or_else(|| Error::Schema {
        path: format!("{at}.severity"),
        message: format!("unknown severity {severity_text:?}"),
    })?;
    let published = parse_date(&text("published")?, &format!("{at}.published"))?;
    let withdrawn = match value.get("withdrawn") {
        None | Some(Value::Null) => None,
        Some(v) => {
            let s = v.as_str().ok_or_else(|| Error::Schema {
                path: format!("{at}.withdrawn"),
                message: format!("expected a date string, found {}", v.type_name()),
            })?;
            Some(parse_date(s, &format!("{at}.withdrawn"))?)
        }
    };
    let summary = text("summary")?;
    let references = match value.get("references") {
        None | Some(Value::Null) => Vec::new(),
        Some(Value::List(items)) => {
            let mut refs = Vec::with_capacity(items.len());
            for (i, item) in items.iter().enumerate() {
                let s = item.as_str().ok_or_else(|| Error::Schema {
                    path: format!("{at}.references[{i}]"),
                    message: format!("expected a string, found {}", item.type_name()),
                })?;
                refs.push(s.to_string());
            }
            refs
        }
        Some(v) => {
            return Err(Error::Schema {
                path: format!("{at}.references"),
                message: format!("expected a list, found {}", v.type_name()),
            })
        }
    };

    Ok(Advisory {
        advisory_id,
        target_id,
        target_kind,
        affected,
        category,
        severity,
        published,
        withdrawn,
        summary,
        references,
    })
}

fn parse_date(text: &str, at: &str) -> Result<NaiveDate, Error> {
    NaiveDate::parse_from_str(text, "%Y-%m-%d").map_err(|_| Error::Schema {
        path: at.to_string(),
        message: format!("{text:?} is not an ISO-8601 date"),
    })
}

/// True when the advisory applies to the node: same id and kind, version
/// in the affected range, and not withdrawn. Unresolved nodes carry no
/// trustworthy version, so id and kind alone decide.
pub fn matches_advisory(advisory: &Advisory, node: &NodeKey, unresolved: bool) -> bool {
    advisory.is_active()
        && advisory.target_id == node.id
        && advisory.target_kind == node.kind
        && (unresolved || advisory.affected.matches(&node.version))
}

pub const MAX_PATHS_PER_FINDING: usize = 64;

#[derive(Debug, Clone)]
pub struct AuditFinding {
    pub advisory: Advisory,
    pub matched_node: NodeKey,
    /// Simple paths from the audited root to the matched node, each
    /// starting at the root and following graph edges.
    pub paths: Vec<Vec<NodeKey>>,
    /// Set when more simple paths exist than the per-finding cap.
    pub truncated: bool,
}

#[derive(Debug, Clone)]
pub struct AuditReport {
    pub root: NodeKey,
    pub findings: Vec<AuditFinding>,
    pub generated_at: String,
    pub advisory_db_digest: String,
}

impl AuditReport {
    pub fn clean(&self) -> bool {
        self.findings.is_empty()
    }
}

/// Audits one record: builds its provenance graph with missing targets
/// allowed, then tests every node (root included) against every active
/// advisory.
pub fn audit(
    root: &ModelRecord,
    resolver: &dyn Resolver,
    db: &AdvisoryDb,
) -> Result<AuditReport, Error> {
    let graph = build_graph(root, resolver, true)?;
    let report = audit_graph(&graph, db);
    Ok(report)
}

pub fn audit_graph(graph: &ProvenanceGraph, db: &AdvisoryDb) -> AuditReport {
    let mut findings: Vec<AuditFinding> = Vec::new();
    for advisory in db.active() {
        for (node, _) in graph.nodes() {
            if !matches_advisory(advisory, node, graph.is_unresolved(node)) {
                continue;
            }
            let (paths, truncated) =
                simple_paths(graph, &graph.root, node, MAX_PATHS_PER_FINDING);
            findings.push(AuditFinding {
                advisory: advisory.clone(),
                matched_node: node.clone(),
                paths,
                truncated,
            });
        }
    }
    findings.sort_by(|a, b| {
        b.advisory
            .severity
            .cmp(&a.advisory.severity)
            .then_with(|| a.advisory.advisory_id.cmp(&b.advisory.advisory_id))
            .then_with(|| a.matched_node.cmp(&b.matched_node))
    });
    AuditReport {
        root: graph.root.clone(),
        findings,
        generated_at: crate::now_utc(),
        advisory_db_digest: db.digest().to_string(),
    }
}

/// All simple paths from `from` to `to`, in lexicographic edge order,
/// stopping once `cap` paths are found. The second component reports
/// whether at least one further path was cut off.
pub fn simple_paths(
    graph: &ProvenanceGraph,
    from: &NodeKey,
    to: &NodeKey,
    cap: usize,
) -> (Vec<Vec<NodeKey>>, bool) {
    let mut adj: std::collections::BTreeMap<&NodeKey, BTreeSet<&NodeKey>> =
        std::collections::BTreeMap::new();
    for (a, b, _) in graph.edges() {
        adj.entry(a).or_default().insert(b);
    }
    let mut paths: Vec<Vec<NodeKey>> = Vec::new();
    let mut truncated = false;
    let mut stack: Vec<&NodeKey> = vec![from];
    let mut on_path: BTreeSet<&NodeKey> = BTreeSet::new();
    on_path.insert(from);

    fn walk<'a>(
        node: &'a NodeKey,
        to: &NodeKey,
        adj: &std::collections::BTreeMap<&'a NodeKey, BTreeSet<&'a NodeKey>>,
        stack: &mut Vec<&'a NodeKey>,
        on_path: &mut BTreeSet<&'a NodeKey>,
        paths: &mut Vec<Vec<NodeKey>>,
        truncated: &mut bool,
        cap: usize,
    ) {
        if node == to {
            if paths.len() < cap {
                paths.push(stack.iter().map(|n| (*n).clone()).collect());
            } else {
                *truncated = true;
            }
            return;
        }
        if *truncated {
            return;
        }
        if let Some(children) = adj.get(node) {
            for child in children {
                if *truncated {
                    return;
                }
                if on_path.contains(child) {
                    continue;
                }
                stack.push(child);
                on_path.insert(child);
                walk(child, to, adj, stack, on_path, paths, truncated, cap);
                on_path.remove(child);
                stack.pop();
            }
        }
    }

    walk(
        from,
        to,
        &adj,
        &mut stack,
        &mut on_path,
        &mut paths,
        &mut truncated,
        cap,
    );
    (paths, truncated)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord)]
pub struct NotifyEntry {
    pub id: RecordId,
    pub version: crate::version::Version,
    pub maintainers: Vec<Maintainer>,
}

/// The early-warning audience for an advisory: every record downstream of
/// the target, plus the target itself when the view holds it. Records
/// without maintainers still appear, with an empty contact list.
pub fn notify_set(all_records: &[ModelRecord], advisory: &Advisory) -> Vec<NotifyEntry> {
    let target = ImpactTarget::IdRange {
        id: advisory.target_id.clone(),
        kind: Some(advisory.target_kind),
        req: advisory.affected.clone(),
    };
    let mut keys = downstream_impact(all_records, &target);
    for record in all_records {
        let key = NodeKey::of(record);
        if advisory.target_id == key.id
            && advisory.target_kind == key.kind
            && advisory.affected.matches(&key.version)
        {
            keys.insert(key);
        }
    }
    let mut entries: Vec<NotifyEntry> = Vec::with_capacity(keys.len());
    for key in keys {
        let maintainers = all_records
            .iter()
            .find(|r| NodeKey::of(r) == key)
            .map(|r| r.maintainers.clone())
            .unwrap_or_default();
        entries.push(NotifyEntry {
            id: key.id,
            version: key.version,
            maintainers,
        });
    }
    entries.sort();
    entries
}
