//! Unified model records: semantically versioned manifests for ML models and
//! datasets, provenance graphs over their dependencies, risk advisories with
//! downstream impact queries, digest-verified registries, and renderers for
//! Markdown, HTML, LaTeX, and GraphViz DOT.

pub mod advisory;
pub mod doc;
pub mod graph;
pub mod record;
pub mod registry;
pub mod render;
pub mod version;

use graph::NodeKey;
use record::Violation;

/// Unified error type for the whole crate. Variants map onto the CLI exit
/// code classes: parse and validation problems, resolution failures,
/// integrity failures, and transport failures.
#[derive(Debug, thiserror::Error)]
pub enum Error {
    #[error("invalid version {text:?}: {message}")]
    VersionParse { text: String, message: String },
    #[error("invalid requirement {text:?}: {message}")]
    ReqParse { text: String, message: String },
    #[error("line {line}, column {column}: {message}")]
    Syntax {
        line: usize,
        column: usize,
        message: String,
    },
    #[error("{path}: {message}")]
    Schema { path: String, message: String },
    #[error("validation failed:\n{}", join_violations(.0))]
    Validation(Vec<Violation>),
    #[error("dependency cycle: {}", join_cycle(.0))]
    Cycle(Vec<NodeKey>),
    #[error("cannot resolve {id} matching {req}")]
    Unresolved { id: String, req: String },
    #[error("{what} not found: {name}")]
    NotFound { what: String, name: String },
    #[error("{id}@{version} is already published and versions are immutable")]
    Immutable { id: String, version: String },
    #[error("digest mismatch for {name}: expected {expected}, got {actual}")]
    DigestMismatch {
        name: String,
        expected: String,
        actual: String,
    },
    #[error("transport failure after {attempts} attempt(s): {message}")]
    Transport { attempts: u32, message: String },
    #[error("{0}")]
    Io(#[from] std::io::Error),
}

/// The message half of a parse error, for embedding inside schema
/// violations that already carry a field path.
pub(crate) fn inner_message(e: &Error) -> String {
    match e {
        Error::VersionParse { message, text } | Error::ReqParse { message, text } => {
            format!("{message} in {text:?}")
        }
        Error::Schema { message, .. } => message.clone(),
        other => other.to_string(),
    }
}

pub(crate) fn now_utc() -> String {
    chrono::Utc::now().to_rfc3339_opts(chrono::SecondsFormat::Secs, true)
}

fn join_violations(violations: &[Violation]) -> String {
    violations
        .iter()
        .map(|v| format!("  {v}"))
        .collect::<Vec<_>>()
        .join("\n")
}

fn join_cycle(path: &[NodeKey]) -> String {
    path.iter()
        .map(|k| k.to_string())
        .collect::<Vec<_>>()
        .join(" -> ")
}
