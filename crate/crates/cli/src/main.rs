//! The `umr` command. Subcommands map one-to-one onto the library layers;
//! the shell contract is the exit code table: 0 success, 1 audit findings,
//! 2 usage, 3 validation, 4 resolution, 5 integrity, 6 transport.

use std::path::{Path, PathBuf};

use clap::{Parser, Subcommand};
use umr_core::advisory::{audit_graph, load_advisories, AdvisoryDb};
use umr_core::doc::{self, Value};
use umr_core::graph::{build_graph, downstream_impact, topo_order, ImpactTarget, NodeKey};
use umr_core::record::{
    canonicalize, derive_record, parse_record, validate, DeriveOverrides, Kind, ModelRecord,
    RecordId, Relation, Severity,
};
use umr_core::registry::{Registry, SourceSpec, Trust, View};
use umr_core::render::{node_label, render_record, render_report, Format, RenderTarget};
use umr_core::version::{Version, VersionReq};
use umr_core::Error;
use umr_service::ServiceConfig;

const CONFIG_FILE: &str = "umr-config.yaml";
const ENV_SOURCE: &str = "UMR_REGISTRY";
const DEFAULT_DIR: &str = "./registry";

#[derive(Parser)]
#[command(name = "umr", version, about = "Unified model records: publish, resolve, audit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Write a scaffold manifest, optionally derived from an upstream model
    Init {
        id: String,
        version: String,
        /// Upstream record as <id>@<version>
        #[arg(long)]
        from: Option<String>,
        /// Dependency relation for --from (default fine_tune)
        #[arg(long)]
        relation: Option<String>,
    },
    /// Check a manifest and print its violations
    Validate {
        file: PathBuf,
        /// Treat warnings as failures
        #[arg(long)]
        strict: bool,
    },
    /// Print the provenance graph of <id>@<version> in dependency order
    Resolve {
        spec: String,
        /// Keep going when upstream targets cannot be resolved
        #[arg(long)]
        allow_missing: bool,
    },
    /// Audit a record against the advisory database
    Audit {
        spec: String,
        /// Advisory document to use instead of the registry's (path or URL)
        #[arg(long)]
        advisories: Option<String>,
        #[arg(long, value_parser = ["md", "markdown", "html", "latex"], default_value = "md")]
        format: String,
        /// Exit 0 even when findings exist
        #[arg(long)]
        warn_only: bool,
    },
    /// List every record downstream of <id>[@<range>] with its maintainers
    Impact { spec: String },
    /// Render a record to a document
    Render {
        spec: String,
        #[arg(long, value_parser = ["markdown", "md", "html", "latex", "dot"])]
        format: String,
        /// Output path; - writes to standard output
        #[arg(short, long, default_value = "-")]
        output: String,
    },
    /// Publish a manifest to a registry source
    Publish {
        file: PathBuf,
        /// Target source name (or a directory/URL); default: first writable source
        #[arg(long)]
        to: Option<String>,
    },
    /// Mark a published version as withdrawn without deleting it
    Yank { spec: String },
    /// Serve the first local source over HTTP
    Serve {
        #[arg(long)]
        read_only: bool,
        #[arg(long, default_value = "127.0.0.1:8414")]
        bind: String,
    },
}

fn main() {
    let cli = Cli::parse();
    let code = match run(cli.command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            exit_code_for(&e)
        }
    };
    std::process::exit(code);
}

fn exit_code_for(e: &Error) -> i32 {
    match e {
        Error::VersionParse { .. }
        | Error::ReqParse { .. }
        | Error::Syntax { .. }
        | Error::Schema { .. }
        | Error::Validation(_)
        | Error::Immutable { .. } => 3,
        Error::Cycle(_) | Error::Unresolved { .. } | Error::NotFound { .. } | Error::Io(_) => 4,
        Error::DigestMismatch { .. } => 5,
        Error::Transport { .. } => 6,
    }
}

/// Invocation-shape problems share clap's exit code.
fn usage_bail(message: &str) -> ! {
    eprintln!("error: {message}");
    std::process::exit(2);
}

fn parse_id_version(spec: &str) -> (RecordId, Version) {
    let Some((id, version)) = spec.split_once('@') else {
        usage_bail(&format!("expected <id>@<version>, got {spec:?}"));
    };
    match (RecordId::parse(id), Version::parse(version)) {
        (Ok(id), Ok(version)) => (id, version),
        (Err(e), _) | (_, Err(e)) => {
            eprintln!("error: {e}");
            std::process::exit(3);
        }
    }
}

fn run(command: Command) -> Result<i32, Error> {
    match command {
        Command::Init {
            id,
            version,
            from,
            relation,
        } => init(&id, &version, from.as_deref(), relation.as_deref()),
        Command::Validate { file, strict } => validate_file(&file, strict),
        Command::Resolve {
            spec,
            allow_missing,
        } => resolve(&spec, allow_missing),
        Command::Audit {
            spec,
            advisories,
            format,
            warn_only,
        } => run_audit(&spec, advisories.as_deref(), &format, warn_only),
        Command::Impact { spec } => impact(&spec),
        Command::Render {
            spec,
            format,
            output,
        } => render(&spec, &format, &output),
        Command::Publish { file, to } => publish(&file, to.as_deref()),
        Command::Yank { spec } => yank(&spec),
        Command::Serve { read_only, bind } => serve(read_only, &bind),
    }
}

// Source order: UMR_REGISTRY first, then umr-config.yaml entries, then
// ./registry as a last resort. Earlier sources own their identifiers.
fn configured_sources() -> Result<Vec<SourceSpec>, Error> {
    let mut sources = Vec::new();
    if let Ok(location) = std::env::var(ENV_SOURCE) {
        if !location.is_empty() {
            sources.push(SourceSpec {
                name: "env".to_string(),
                location,
                trust: Trust::Private,
            });
        }
    }
    let config = Path::new(CONFIG_FILE);
    if config.exists() {
        sources.extend(parse_config(&std::fs::read(config)?)?);
    }
    if sources.is_empty() {
        sources.push(SourceSpec {
            name: "local".to_string(),
            location: DEFAULT_DIR.to_string(),
            trust: Trust::Public,
        });
    }
    Ok(sources)
}

fn parse_config(bytes: &[u8]) -> Result<Vec<SourceSpec>, Error> {
    let schema = |path: &str, message: &str| Error::Schema {
        path: path.to_string(),
        message: message.to_string(),
    };
    let value = doc::parse_bytes(bytes)?;
    let Value::Map(entries) = &value else {
        return Err(schema(CONFIG_FILE, "expected a map with a sources list"));
    };
    let Some((_, Value::List(items))) = entries.iter().find(|(k, _)| k == "sources") else {
        return Err(schema(CONFIG_FILE, "missing sources list"));
    };
    let mut sources = Vec::new();
    for (i, item) in items.iter().enumerate() {
        let at = format!("sources[{i}]");
        let Value::Map(fields) = item else {
            return Err(schema(&at, "expected a map with name, location, trust"));
        };
        let text = |key: &str| -> Result<String, Error> {
            match fields.iter().find(|(k, _)| k == key) {
                Some((_, Value::Str(s))) => Ok(s.clone()),
                _ => Err(schema(&format!("{at}.{key}"), "expected a string")),
            }
        };
        let trust_text = text("trust")?;
        let trust = Trust::parse(&trust_text).ok_or_else(|| {
            schema(
                &format!("{at}.trust"),
                &format!("unknown trust level {trust_text:?} (public or private)"),
            )
        })?;
        sources.push(SourceSpec {
            name: text("name")?,
            location: text("location")?,
            trust,
        });
    }
    if sources.is_empty() {
        return Err(schema("sources", "at least one source is required"));
    }
    Ok(sources)
}

fn load_view() -> Result<View, Error> {
    let mut registries = Vec::new();
    for spec in configured_sources()? {
        registries.push(Registry::open(&spec)?);
    }
    let view = View::new(registries)?;
    for warning in view.warnings() {
        eprintln!("warning: {warning}");
    }
    Ok(view)
}

fn init(
    id: &str,
    version: &str,
    from: Option<&str>,
    relation: Option<&str>,
) -> Result<i32, Error> {
    let id = RecordId::parse(id)?;
    let version = Version::parse(version)?;
    let record = match from {
        None => ModelRecord::minimal(id, version, Kind::Model),
        Some(spec) => {
            let relation = match relation {
                None => Relation::FineTune,
                Some(text) => Relation::parse(text).unwrap_or_else(|| {
                    usage_bail(&format!("unknown relation {text:?}"));
                }),
            };
            if !relation.requires_model() {
                usage_bail(&format!(
                    "--relation {relation} does not describe deriving one model from another"
                ));
            }
            let (from_id, from_version) = parse_id_version(spec);
            let view = load_view()?;
            let upstream = view.fetch(&from_id, &from_version)?.record;
            if upstream.kind != Kind::Model {
                usage_bail(&format!("{from_id} is a dataset; models derive from models"));
            }
            derive_record(
                &upstream,
                DeriveOverrides {
                    id,
                    version,
                    title: None,
                    license: None,
                },
                relation,
            )?
        }
    };
    let path = format!("{}-{}.umr.yaml", record.id.name, record.version);
    if Path::new(&path).exists() {
        usage_bail(&format!("{path} already exists; refusing to overwrite"));
    }
    std::fs::write(&path, canonicalize(&record)?)?;
    println!("{path}");
    Ok(0)
}

fn validate_file(file: &Path, strict: bool) -> Result<i32, Error> {
    let bytes = std::fs::read(file)?;
    let value = doc::parse_bytes(&bytes)?;
    let record = umr_core::record::from_value(&value)?;
    let violations = validate(&record);
    for v in &violations {
        println!("{v}");
    }
    let errors = violations
        .iter()
        .filter(|v| v.severity == Severity::Error)
        .count();
    if errors > 0 || (strict && !violations.is_empty()) {
        return Ok(3);
    }
    println!("{}@{} is valid", record.id, record.version);
    Ok(0)
}

fn resolve(spec: &str, allow_missing: bool) -> Result<i32, Error> {
    let (id, version) = parse_id_version(spec);
    let view = load_view()?;
    let root = view.fetch(&id, &version)?.record;
    let graph = build_graph(&root, &view, allow_missing)?;
    for key in topo_order(&graph) {
        println!("{}", node_label(&graph, &key));
    }
    Ok(0)
}

fn advisory_db(view: &View, source: Option<&str>) -> Result<AdvisoryDb, Error> {
    match source {
        None => view.advisories(),
        Some(location) if location.starts_with("http://") || location.starts_with("https://") => {
            let failed = |message: String| Error::Transport {
                attempts: 1,
                message,
            };
            let response = reqwest::blocking::get(location)
                .map_err(|e| failed(format!("GET {location}: {e}")))?;
            if !response.status().is_success() {
                return Err(failed(format!("GET {location}: HTTP {}", response.status())));
            }
            let bytes = response
                .bytes()
                .map_err(|e| failed(format!("GET {location}: {e}")))?;
            load_advisories(&bytes)
        }
        Some(path) => load_advisories(&std::fs::read(path)?),
    }
}

fn run_audit(
    spec: &str,
    advisories: Option<&str>,
    format: &str,
    warn_only: bool,
) -> Result<i32, Error> {
    let (id, version) = parse_id_version(spec);
    let view = load_view()?;
    let db = advisory_db(&view, advisories)?;
    let root = view.fetch(&id, &version)?.record;
    let graph = build_graph(&root, &view, true)?;
    let report = audit_graph(&graph, &db);
    let format = Format::parse(format).expect("clap restricts the choices");
    let text = render_report(&report, &graph, &RenderTarget::new(format))?;
    println!("{text}");
    if report.clean() || warn_only {
        Ok(0)
    } else {
        Ok(1)
    }
}

fn impact(spec: &str) -> Result<i32, Error> {
    let (id_text, req) = match spec.split_once('@') {
        Some((id, range)) => (id, VersionReq::parse(range)?),
        None => (spec, VersionReq::parse("*")?),
    };
    let id = RecordId::parse(id_text)?;
    let view = load_view()?;
    let records = view.all_records()?;
    let target = ImpactTarget::IdRange {
        id,
        kind: None,
        req,
    };
    for key in downstream_impact(&records, &target) {
        let maintainers = records
            .iter()
            .find(|r| NodeKey::of(r) == key)
            .map(|r| r.maintainers.as_slice())
            .unwrap_or_default();
        let contacts: Vec<String> = maintainers
            .iter()
            .map(|m| match &m.contact {
                Some(contact) => format!("{} <{}>", m.name, contact),
                None => m.name.clone(),
            })
            .collect();
        if contacts.is_empty() {
            println!("{key}");
        } else {
            println!("{key}\t{}", contacts.join("; "));
        }
    }
    Ok(0)
}

fn render(spec: &str, format: &str, output: &str) -> Result<i32, Error> {
    let (id, version) = parse_id_version(spec);
    let view = load_view()?;
    let record = view.fetch(&id, &version)?.record;
    let graph = build_graph(&record, &view, true)?;
    let format = Format::parse(format).expect("clap restricts the choices");
    let text = render_record(&record, Some(&graph), &RenderTarget::new(format))?;
    if output == "-" {
        print!("{text}");
    } else {
        std::fs::write(output, text)?;
    }
    Ok(0)
}

fn publish(file: &Path, to: Option<&str>) -> Result<i32, Error> {
    let bytes = std::fs::read(file)?;
    let (record, warnings) = parse_record(&bytes)?;
    for w in &warnings {
        eprintln!("{w}");
    }
    let sources = configured_sources()?;
    let target = match to {
        None => sources
            .iter()
            .find(|s| !s.is_http())
            .cloned()
            .unwrap_or_else(|| {
                usage_bail("no writable source configured; pass --to <directory>");
            }),
        Some(name) => sources
            .iter()
            .find(|s| s.name == name)
            .cloned()
            .unwrap_or_else(|| SourceSpec {
                name: "target".to_string(),
                location: name.to_string(),
                trust: Trust::Private,
            }),
    };
    if target.is_http() {
        let digest = publish_http(&target.location, &record)?;
        println!("{digest}");
    } else {
        let mut registry = Registry::open_or_init_local(Path::new(&target.location))?;
        let digest = registry.publish(&record)?;
        println!("{digest}");
    }
    Ok(0)
}

fn publish_http(base: &str, record: &ModelRecord) -> Result<String, Error> {
    let failed = |message: String| Error::Transport {
        attempts: 1,
        message,
    };
    let url = format!("{}/v1/records", base.trim_end_matches('/'));
    let response = reqwest::blocking::Client::new()
        .post(&url)
        .header("content-type", "application/x-umr+yaml")
        .body(canonicalize(record)?)
        .send()
        .map_err(|e| failed(format!("POST {url}: {e}")))?;
    let status = response.status();
    let body = response
        .text()
        .map_err(|e| failed(format!("POST {url}: {e}")))?;
    match status.as_u16() {
        201 => {
            let value = doc::parse_bytes(body.as_bytes())?;
            if let Value::Map(entries) = &value {
                if let Some((_, Value::Str(digest))) =
                    entries.iter().find(|(k, _)| k == "digest")
                {
                    return Ok(digest.clone());
                }
            }
            Err(failed(format!("POST {url}: malformed publish receipt")))
        }
        409 => Err(Error::Immutable {
            id: record.id.to_string(),
            version: record.version.to_string(),
        }),
        403 | 422 => Err(Error::Schema {
            path: "publish".to_string(),
            message: format!("{url} rejected the record (HTTP {status}): {}", body.trim()),
        }),
        _ => Err(failed(format!("POST {url}: HTTP {status}"))),
    }
}

fn yank(spec: &str) -> Result<i32, Error> {
    let (id, version) = parse_id_version(spec);
    let sources = configured_sources()?;
    let Some(target) = sources.iter().find(|s| !s.is_http()) else {
        usage_bail("no writable source configured");
    };
    let mut registry = Registry::open_local(Path::new(&target.location))?;
    registry.yank(&id, &version)?;
    println!("yanked {id}@{version}");
    Ok(0)
}

fn serve(read_only: bool, bind: &str) -> Result<i32, Error> {
    let sources = configured_sources()?;
    let Some(target) = sources.iter().find(|s| !s.is_http()) else {
        usage_bail("no local source to serve");
    };
    let mut config = ServiceConfig::new(&target.location);
    config.read_only = read_only;
    umr_service::run_blocking(&config, bind, |addr| {
        println!("serving {} on http://{addr}", target.location);
    })?;
    Ok(0)
}
