//! Renderers: records, provenance graphs, and audit reports to Markdown,
//! HTML, LaTeX, and GraphViz DOT. All output is deterministic for a given
//! input; free text is escaped per format.

use crate::advisory::AuditReport;
use crate::graph::{topo_order, NodeKey, ProvenanceGraph};
use crate::record::{ModelRecord, Relation, Severity};
use crate::Error;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Format {
    Markdown,
    Html,
    Latex,
    Dot,
}

impl Format {
    pub fn as_str(self) -> &'static str {
        match self {
            Format::Markdown => "markdown",
            Format::Html => "html",
            Format::Latex => "latex",
            Format::Dot => "dot",
        }
    }

    pub fn parse(text: &str) -> Option<Format> {
        match text {
            "markdown" | "md" => Some(Format::Markdown),
            "html" => Some(Format::Html),
            "latex" => Some(Format::Latex),
            "dot" => Some(Format::Dot),
            _ => None,
        }
    }
}

#[derive(Debug, Clone)]
pub struct RenderTarget {
    pub format: Format,
    pub include_graph: bool,
    /// Maximum edge distance from the root when rendering graphs; ≥ 1.
    pub max_depth: Option<usize>,
    /// Display arrows upstream→downstream instead of the stored
    /// dependency direction.
    pub flip_arrows: bool,
}

impl RenderTarget {
    pub fn new(format: Format) -> RenderTarget {
        RenderTarget {
            format,
            include_graph: false,
            max_depth: None,
            flip_arrows: false,
        }
    }

    fn check(&self) -> Result<(), Error> {
        if self.max_depth == Some(0) {
            return Err(Error::Schema {
                path: "max_depth".to_string(),
                message: "must be at least 1 when present".to_string(),
            });
        }
        Ok(())
    }
}

pub fn escape_html(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '&' => out.push_str("&amp;"),
            '<' => out.push_str("&lt;"),
            '>' => out.push_str("&gt;"),
            '"' => out.push_str("&quot;"),
            '\'' => out.push_str("&#39;"),
            _ => out.push(c),
        }
    }
    out
}

pub fn escape_latex(text: &str) -> String {
    let mut out = String::with_capacity(text.len());
    for c in text.chars() {
        match c {
            '\\' => out.push_str("\\textbackslash{}"),
            '&' | '%' | '$' | '#' | '_' | '{' | '}' => {
                out.push('\\');
                out.push(c);
            }
            '~' => out.push_str("\\textasciitilde{}"),
            '^' => out.push_str("\\textasciicircum{}"),
            _ => out.push(c),
        }
    }
    out
}

fn escape_dot(text: &str) -> String {
    text.replace('\\', "\\\\").replace('"', "\\\"")
}

/// The display form of a node: `id@version`, with `id@?` for unresolved
/// placeholders.
pub fn node_label(graph: &ProvenanceGraph, key: &NodeKey) -> String {
    if graph.is_unresolved(key) {
        format!("{}@?", key.id)
    } else {
        key.to_string()
    }
}

fn chain_label(graph: &ProvenanceGraph, key: &NodeKey) -> String {
    if graph.is_unresolved(key) {
        format!("{}@?", key.id)
    } else {
        key.id.to_string()
    }
}

/// Nodes in topological order plus edges, both restricted to `max_depth`
/// hops from the root when a depth is set.
fn graph_slice(
    graph: &ProvenanceGraph,
    max_depth: Option<usize>,
) -> (Vec<NodeKey>, Vec<(NodeKey, NodeKey, Relation)>) {
    use std::collections::{BTreeMap, VecDeque};
    let mut depth: BTreeMap<&NodeKey, usize> = BTreeMap::new();
    let mut adj: BTreeMap<&NodeKey, Vec<&NodeKey>> = BTreeMap::new();
    for (from, to, _) in graph.edges() {
        adj.entry(from).or_default().push(to);
    }
    depth.insert(&graph.root, 0);
    let mut queue: VecDeque<&NodeKey> = VecDeque::new();
    queue.push_back(&graph.root);
    while let Some(node) = queue.pop_front() {
        let d = depth[node];
        if let Some(children) = adj.get(node) {
            for child in children {
                if !depth.contains_key(child) {
                    depth.insert(child, d + 1);
                    queue.push_back(child);
                }
            }
        }
    }
    let keep = |key: &NodeKey| -> bool {
        match (max_depth, depth.get(key)) {
            (None, Some(_)) => true,
            (Some(limit), Some(d)) => *d <= limit,
            (_, None) => false,
        }
    };
    let nodes: Vec<NodeKey> = topo_order(graph).into_iter().filter(|k| keep(k)).collect();
    let position: BTreeMap<&NodeKey, usize> = nodes.iter().enumerate().map(|(i, k)| (k, i)).collect();
    let mut edges: Vec<(NodeKey, NodeKey, Relation)> = graph
        .edges()
        .filter(|(a, b, _)| keep(a) && keep(b))
        .cloned()
        .collect();
    edges.sort_by_key(|(a, b, r)| (position[a], position[b], r.as_str()));
    (nodes, edges)
}

/// GraphViz DOT for a provenance graph: one node statement per node in
/// topological order, shape by kind, unresolved nodes dashed, edges
/// labeled with their relation.
pub fn render_dot(graph: &ProvenanceGraph, target: &RenderTarget) -> Result<String, Error> {
    target.check()?;
    if graph.node_count() == 0 {
        return Err(Error::Schema {
            path: "graph".to_string(),
            message: "refusing to render an empty graph".to_string(),
        });
    }
    let (nodes, edges) = graph_slice(graph, target.max_depth);
    let mut out = String::new();
    out.push_str("digraph provenance {\n");
    out.push_str("  rankdir=LR;\n");
    for key in &nodes {
        let shape = match key.kind {
            crate::record::Kind::Model => "box",
            crate::record::Kind::Dataset => "ellipse",
        };
        let mut attrs = format!("shape={shape}");
        if graph.is_unresolved(key) {
            attrs.push_str(", style=dashed");
        }
        out.push_str(&format!(
            "  \"{}\" [{attrs}];\n",
            escape_dot(&node_label(graph, key))
        ));
    }
    for (from, to, relation) in &edges {
        let (tail, head) = if target.flip_arrows {
            (to, from)
        } else {
            (from, to)
        };
        out.push_str(&format!(
            "  \"{}\" -> \"{}\" [label=\"{}\"];\n",
            escape_dot(&node_label(graph, tail)),
            escape_dot(&node_label(graph, head)),
            relation.as_str()
        ));
    }
    out.push_str("}\n");
    Ok(out)
}

struct Section {
    heading: String,
    body: Body,
}

enum Body {
    /// Key/value pairs rendered as a definition list.
    Fields(Vec<(String, String)>),
    /// Header row plus data rows rendered as a table; the fallback line
    /// is used when there are no rows.
    Table {
        header: Vec<String>,
        rows: Vec<Vec<String>>,
        empty: String,
    },
    Text(String),
    Items(Vec<String>),
}

fn float_text(value: f64) -> String {
    format!("{value:?}")
}

/// Shared section model for all record formats: identity, artifacts,
/// dependencies, evaluations, intended use, ethical notes, references.
fn record_sections(record: &ModelRecord) -> Vec<Section> {
    let mut identity = vec![
        ("id".to_string(), record.id.to_string()),
        ("version".to_string(), record.version.to_string()),
        ("kind".to_string(), record.kind.as_str().to_string()),
    ];
    if !record.title.is_empty() {
        identity.push(("title".to_string(), record.title.clone()));
    }
    if !record.publisher.is_empty() {
        identity.push(("publisher".to_string(), record.publisher.clone()));
    }
    identity.push(("license".to_string(), record.license.clone()));
    if !record.maintainers.is_empty() {
        let joined = record
            .maintainers
            .iter()
            .map(|m| match &m.contact {
                Some(contact) => format!("{} <{}>", m.name, contact),
                None => m.name.clone(),
            })
            .collect::<Vec<_>>()
            .join(", ");
        identity.push(("maintainers".to_string(), joined));
    }

    let artifact_rows: Vec<Vec<String>> = record
        .artifacts
        .iter()
        .map(|(kind, entry)| {
            vec![
                kind.as_str().to_string(),
                entry.availability.as_str().to_string(),
                entry.url.clone().unwrap_or_default(),
            ]
        })
        .collect();

    let dependency_rows: Vec<Vec<String>> = record
        .dependencies
        .iter()
        .map(|dep| {
            vec![
                dep.target.to_string(),
                dep.kind.as_str().to_string(),
                dep.req.to_string(),
                dep.relation.as_str().to_string(),
                dep.note.clone().unwrap_or_default(),
            ]
        })
        .collect();

    let evaluation_rows: Vec<Vec<String>> = record
        .evaluations
        .iter()
        .map(|e| {
            let value = match e.value {
                Some(v) => float_text(v),
                None => e.qualitative.clone().unwrap_or_default(),
            };
            vec![
                e.metric.clone(),
                e.dataset.as_ref().map(ToString::to_string).unwrap_or_default(),
                value,
                if e.higher_is_better { "yes" } else { "no" }.to_string(),
                e.protocol.clone().unwrap_or_default(),
            ]
        })
        .collect();

    vec![
        Section {
            heading: "Identity".to_string(),
            body: Body::Fields(identity),
        },
        Section {
            heading: "Artifacts".to_string(),
            body: Body::Table {
                header: vec!["artifact".into(), "availability".into(), "url".into()],
                rows: artifact_rows,
                empty: "No artifacts listed.".to_string(),
            },
        },
        Section {
            heading: "Dependencies".to_string(),
            body: Body::Table {
                header: vec![
                    "target".into(),
                    "kind".into(),
                    "requirement".into(),
                    "relation".into(),
                    "note".into(),
                ],
                rows: dependency_rows,
                empty: "No dependencies declared.".to_string(),
            },
        },
        Section {
            heading: "Evaluations".to_string(),
            body: Body::Table {
                header: vec![
                    "metric".into(),
                    "dataset".into(),
                    "value".into(),
                    "higher is better".into(),
                    "protocol".into(),
                ],
                rows: evaluation_rows,
                empty: "No evaluations reported.".to_string(),
            },
        },
        Section {
            heading: "Intended use".to_string(),
            body: Body::Text(if record.intended_use.is_empty() {
                "Not stated.".to_string()
            } else {
                record.intended_use.clone()
            }),
        },
        Section {
            heading: "Ethical notes".to_string(),
            body: Body::Text(if record.ethical_notes.is_empty() {
                "Not stated.".to_string()
            } else {
                record.ethical_notes.clone()
            }),
        },
        Section {
            heading: "References".to_string(),
            body: Body::Items(record.references.clone()),
        },
    ]
}

fn provenance_section(graph: &ProvenanceGraph, target: &RenderTarget) -> Section {
    let (_, edges) = graph_slice(graph, target.max_depth);
    let items: Vec<String> = edges
        .iter()
        .map(|(from, to, relation)| {
            let (tail, head) = if target.flip_arrows {
                (to, from)
            } else {
                (from, to)
            };
            format!(
                "{} -> {} ({})",
                node_label(graph, tail),
                node_label(graph, head),
                relation.as_str()
            )
        })
        .collect();
    Section {
        heading: "Provenance".to_string(),
        body: if items.is_empty() {
            Body::Text("No resolvable provenance edges.".to_string())
        } else {
            Body::Items(items)
        },
    }
}

/// Renders one record to the target format. The record must validate with
/// zero errors; when `include_graph` is set, `graph` must be rooted at it.
pub fn render_record(
    record: &ModelRecord,
    graph: Option<&ProvenanceGraph>,
    target: &RenderTarget,
) -> Result<String, Error> {
    target.check()?;
    let violations = crate::record::validate(record);
    if violations.iter().any(|v| v.severity == Severity::Error) {
        return Err(Error::Validation(violations));
    }
    let mut sections = record_sections(record);
    if target.include_graph {
        let graph = graph.ok_or_else(|| Error::Schema {
            path: "graph".to_string(),
            message: "include_graph set but no graph supplied".to_string(),
        })?;
        if graph.root.id != record.id || graph.root.version != record.version {
            return Err(Error::Schema {
                path: "graph".to_string(),
                message: format!(
                    "graph is rooted at {} but the record is {}@{}",
                    graph.root, record.id, record.version
                ),
            });
        }
        sections.push(provenance_section(graph, target));
    }
    let title = format!("{}@{}", record.id, record.version);
    let subtitle = (!record.title.is_empty()).then(|| record.title.clone());
    match target.format {
        Format::Markdown => Ok(markdown_document(&title, subtitle.as_deref(), &sections)),
        Format::Html => Ok(html_document(&title, subtitle.as_deref(), &sections)),
        Format::Latex => Ok(latex_document(&title, subtitle.as_deref(), &sections)),
        Format::Dot => {
            let graph = graph.ok_or_else(|| Error::Schema {
                path: "graph".to_string(),
                message: "dot output requires a provenance graph".to_string(),
            })?;
            render_dot(graph, target)
        }
    }
}

fn markdown_document(title: &str, subtitle: Option<&str>, sections: &[Section]) -> String {
    let mut out = format!("# {title}\n");
    if let Some(subtitle) = subtitle {
        out.push_str(&format!("\n{subtitle}\n"));
    }
    for section in sections {
        out.push_str(&format!("\n## {}\n\n", section.heading));
        match &section.body {
            Body::Fields(fields) => {
                for (key, value) in fields {
                    out.push_str(&format!("- {key}: {value}\n"));
                }
            }
            Body::Table { header, rows, empty } => {
                if rows.is_empty() {
                    out.push_str(empty);
                    out.push('\n');
                } else {
                    out.push_str(&format!("| {} |\n", header.join(" | ")));
                    out.push_str(&format!(
                        "|{}|\n",
                        header.iter().map(|_| " --- ").collect::<Vec<_>>().join("|")
                    ));
                    for row in rows {
                        let cells: Vec<String> =
                            row.iter().map(|c| c.replace('|', "\\|")).collect();
                        out.push_str(&format!("| {} |\n", cells.join(" | ")));
                    }
                }
            }
            Body::Text(text) => {
                out.push_str(text);
                out.push('\n');
            }
            Body::Items(items) => {
                if items.is_empty() {
                    out.push_str("None.\n");
                } else {
                    for item in items {
                        out.push_str(&format!("- {item}\n"));
                    }
                }
            }
        }
    }
    out
}

fn html_document(title: &str, subtitle: Option<&str>, sections: &[Section]) -> String {
    let mut out = String::new();
    out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
    out.push_str(&format!("<title>{}</title>\n", escape_html(title)));
    out.push_str("</head>\n<body>\n");
    out.push_str(&format!("<h1>{}</h1>\n", escape_html(title)));
    if let Some(subtitle) = subtitle {
        out.push_str(&format!("<p>{}</p>\n", escape_html(subtitle)));
    }
    for section in sections {
        out.push_str(&format!("<h2>{}</h2>\n", escape_html(&section.heading)));
        match &section.body {
            Body::Fields(fields) => {
                out.push_str("<dl>\n");
                for (key, value) in fields {
                    out.push_str(&format!(
                        "<dt>{}</dt><dd>{}</dd>\n",
                        escape_html(key),
                        escape_html(value)
                    ));
                }
                out.push_str("</dl>\n");
            }
            Body::Table { header, rows, empty } => {
                if rows.is_empty() {
                    out.push_str(&format!("<p>{}</p>\n", escape_html(empty)));
                } else {
                    out.push_str("<table>\n<thead>\n<tr>");
                    for cell in header {
                        out.push_str(&format!("<th>{}</th>", escape_html(cell)));
                    }
                    out.push_str("</tr>\n</thead>\n<tbody>\n");
                    for row in rows {
                        out.push_str("<tr>");
                        for cell in row {
                            out.push_str(&format!("<td>{}</td>", escape_html(cell)));
                        }
                        out.push_str("</tr>\n");
                    }
                    out.push_str("</tbody>\n</table>\n");
                }
            }
            Body::Text(text) => {
                out.push_str(&format!("<p>{}</p>\n", escape_html(text)));
            }
            Body::Items(items) => {
                if items.is_empty() {
                    out.push_str("<p>None.</p>\n");
                } else {
                    out.push_str("<ul>\n");
                    for item in items {
                        out.push_str(&format!("<li>{}</li>\n", escape_html(item)));
                    }
                    out.push_str("</ul>\n");
                }
            }
        }
    }
    out.push_str("</body>\n</html>\n");
    out
}

fn latex_document(title: &str, subtitle: Option<&str>, sections: &[Section]) -> String {
    let mut out = String::new();
    out.push_str("\\documentclass{article}\n\\begin{document}\n");
    out.push_str(&format!("\\section*{{{}}}\n", escape_latex(title)));
    if let Some(subtitle) = subtitle {
        out.push_str(&format!("{}\n", escape_latex(subtitle)));
    }
    for section in sections {
        out.push_str(&format!(
            "\\subsection*{{{}}}\n",
            escape_latex(&section.heading)
        ));
        match &section.body {
            Body::Fields(fields) => {
                out.push_str("\\begin{itemize}\n");
                for (key, value) in fields {
                    out.push_str(&format!(
                        "\\item {}: {}\n",
                        escape_latex(key),
                        escape_latex(value)
                    ));
                }
                out.push_str("\\end{itemize}\n");
            }
            Body::Table { header, rows, empty } => {
                if rows.is_empty() {
                    out.push_str(&format!("{}\n", escape_latex(empty)));
                } else {
                    let spec = vec!["l"; header.len()].join("");
                    out.push_str(&format!("\\begin{{tabular}}{{{spec}}}\n"));
                    out.push_str(&format!(
                        "{} \\\\\n\\hline\n",
                        header
                            .iter()
                            .map(|c| escape_latex(c))
                            .collect::<Vec<_>>()
                            .join(" & ")
                    ));
                    for row in rows {
                        out.push_str(&format!(
                            "{} \\\\\n",
                            row.iter()
                                .map(|c| escape_latex(c))
                                .collect::<Vec<_>>()
                                .join(" & ")
                        ));
                    }
                    out.push_str("\\end{tabular}\n");
                }
            }
            Body::Text(text) => {
                out.push_str(&format!("{}\n", escape_latex(text)));
            }
            Body::Items(items) => {
                if items.is_empty() {
                    out.push_str("None.\n");
                } else {
                    out.push_str("\\begin{itemize}\n");
                    for item in items {
                        out.push_str(&format!("\\item {}\n", escape_latex(item)));
                    }
                    out.push_str("\\end{itemize}\n");
                }
            }
        }
    }
    out.push_str("\\end{document}\n");
    out
}

const NO_FINDINGS: &str = "No advisories affect this record.";

/// Renders an audit report with findings grouped by severity, highest
/// first, and every inheritance path as an arrow chain.
pub fn render_report(
    report: &AuditReport,
    graph: &ProvenanceGraph,
    target: &RenderTarget,
) -> Result<String, Error> {
    target.check()?;
    let title = format!("Audit report for {}", report.root);
    let preamble = vec![
        ("generated".to_string(), report.generated_at.clone()),
        (
            "advisory database digest".to_string(),
            report.advisory_db_digest.clone(),
        ),
    ];
    let arrow = match target.format {
        Format::Latex => " $\\rightarrow$ ",
        _ => " \u{2192} ",
    };
    // Chains use bare ids; the matched-node line carries the version.
    let chain = |path: &[NodeKey]| -> String {
        path.iter()
            .map(|k| chain_label(graph, k))
            .collect::<Vec<_>>()
            .join(arrow)
    };

    let mut groups: Vec<(crate::advisory::Severity, Vec<&crate::advisory::AuditFinding>)> =
        Vec::new();
    for finding in &report.findings {
        match groups.last_mut() {
            Some((severity, members)) if *severity == finding.advisory.severity => {
                members.push(finding)
            }
            _ => groups.push((finding.advisory.severity, vec![finding])),
        }
    }

    match target.format {
        Format::Markdown => {
            let mut out = format!("# {title}\n\n");
            for (key, value) in &preamble {
                out.push_str(&format!("- {key}: {value}\n"));
            }
            if report.findings.is_empty() {
                out.push_str(&format!("\n{NO_FINDINGS}\n"));
                return Ok(out);
            }
            for (severity, findings) in &groups {
                out.push_str(&format!("\n## {}\n", severity.as_str()));
                for finding in findings {
                    let a = &finding.advisory;
                    out.push_str(&format!(
                        "\n### {}: {}\n\n",
                        a.advisory_id,
                        node_label(graph, &finding.matched_node)
                    ));
                    out.push_str(&format!("- category: {}\n", a.category.as_str()));
                    out.push_str(&format!("- affected: {}\n", a.affected));
                    out.push_str(&format!("- published: {}\n", a.published));
                    out.push_str(&format!("- summary: {}\n", a.summary));
                    out.push_str("- paths:\n");
                    for path in &finding.paths {
                        out.push_str(&format!("  - {}\n", chain(path)));
                    }
                    if finding.truncated {
                        out.push_str(&format!(
                            "  - (more paths exist; list capped at {})\n",
                            crate::advisory::MAX_PATHS_PER_FINDING
                        ));
                    }
                }
            }
            Ok(out)
        }
        Format::Html => {
            let mut out = String::new();
            out.push_str("<!DOCTYPE html>\n<html lang=\"en\">\n<head>\n<meta charset=\"utf-8\">\n");
            out.push_str(&format!("<title>{}</title>\n", escape_html(&title)));
            out.push_str("</head>\n<body>\n");
            out.push_str(&format!("<h1>{}</h1>\n", escape_html(&title)));
            out.push_str("<dl>\n");
            for (key, value) in &preamble {
                out.push_str(&format!(
                    "<dt>{}</dt><dd>{}</dd>\n",
                    escape_html(key),
                    escape_html(value)
                ));
            }
            out.push_str("</dl>\n");
            if report.findings.is_empty() {
                out.push_str(&format!("<p>{}</p>\n", escape_html(NO_FINDINGS)));
            }
            for (severity, findings) in &groups {
                out.push_str(&format!("<h2>{}</h2>\n", severity.as_str()));
                for finding in findings {
                    let a = &finding.advisory;
                    out.push_str(&format!(
                        "<h3>{}: {}</h3>\n<ul>\n",
                        escape_html(&a.advisory_id),
                        escape_html(&node_label(graph, &finding.matched_node))
                    ));
                    out.push_str(&format!("<li>category: {}</li>\n", a.category.as_str()));
                    out.push_str(&format!(
                        "<li>affected: {}</li>\n",
                        escape_html(&a.affected.to_string())
                    ));
                    out.push_str(&format!("<li>published: {}</li>\n", a.published));
                    out.push_str(&format!("<li>summary: {}</li>\n", escape_html(&a.summary)));
                    out.push_str("<li>paths:<ul>\n");
                    for path in &finding.paths {
                        out.push_str(&format!("<li>{}</li>\n", escape_html(&chain(path))));
                    }
                    if finding.truncated {
                        out.push_str(&format!(
                            "<li>(more paths exist; list capped at {})</li>\n",
                            crate::advisory::MAX_PATHS_PER_FINDING
                        ));
                    }
                    out.push_str("</ul></li>\n</ul>\n");
                }
            }
            out.push_str("</body>\n</html>\n");
            Ok(out)
        }
        Format::Latex => {
            let mut out = String::new();
            out.push_str("\\documentclass{article}\n\\begin{document}\n");
            out.push_str(&format!("\\section*{{{}}}\n", escape_latex(&title)));
            for (key, value) in &preamble {
                out.push_str(&format!(
                    "\\noindent {}: {}\\\\\n",
                    escape_latex(key),
                    escape_latex(value)
                ));
            }
            if report.findings.is_empty() {
                out.push_str(&format!("{}\n", escape_latex(NO_FINDINGS)));
            }
            for (severity, findings) in &groups {
                out.push_str(&format!("\\subsection*{{{}}}\n", severity.as_str()));
                for finding in findings {
                    let a = &finding.advisory;
                    out.push_str(&format!(
                        "\\subsubsection*{{{}: {}}}\n",
                        escape_latex(&a.advisory_id),
                        escape_latex(&node_label(graph, &finding.matched_node))
                    ));
                    out.push_str("\\begin{itemize}\n");
                    out.push_str(&format!("\\item category: {}\n", a.category.as_str()));
                    out.push_str(&format!(
                        "\\item affected: {}\n",
                        escape_latex(&a.affected.to_string())
                    ));
                    out.push_str(&format!("\\item published: {}\n", a.published));
                    out.push_str(&format!("\\item summary: {}\n", escape_latex(&a.summary)));
                    out.push_str("\\item paths:\n\\begin{itemize}\n");
                    for path in &finding.paths {
                        out.push_str(&format!("\\item {}\n", chain(path)));
                    }
                    if finding.truncated {
                        out.push_str(&format!(
                            "\\item (more paths exist; list capped at {})\n",
                            crate::advisory::MAX_PATHS_PER_FINDING
                        ));
                    }
                    out.push_str("\\end{itemize}\n\\end{itemize}\n");
                }
            }
            out.push_str("\\end{document}\n");
            Ok(out)
        }
        Format::Dot => Err(Error::Schema {
            path: "format".to_string(),
            message: "audit reports render to markdown, html, or latex".to_string(),
        }),
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::advisory::{audit, load_advisories};
    use crate::graph::{build_graph, SetResolver};
    use crate::record::parse_record;

    fn record(text: &str) -> ModelRecord {
        parse_record(text.as_bytes()).unwrap().0
    }

    fn minimal() -> ModelRecord {
        record("id: solo\nversion: 1.0.0\nkind: model\nlicense: mit\nrecord_format_version: 1\n")
    }

    #[test]
    fn markdown_contains_id_version_and_empty_dependency_line() {
        let r = minimal();
        let out = render_record(&r, None, &RenderTarget::new(Format::Markdown)).unwrap();
        assert!(out.contains("solo"));
        assert!(out.contains("1.0.0"));
        assert!(out.contains("No dependencies declared"));
    }

    #[test]
    fn identical_inputs_render_identical_bytes() {
        let r = minimal();
        let t = RenderTarget::new(Format::Html);
        assert_eq!(
            render_record(&r, None, &t).unwrap(),
            render_record(&r, None, &t).unwrap()
        );
    }

    #[test]
    fn html_escapes_hostile_text() {
        let r = record(
            "id: solo\nversion: 1.0.0\nkind: model\nlicense: mit\nrecord_format_version: 1\n\
             title: \"<script>alert(1)</script>\"\n",
        );
        let out = render_record(&r, None, &RenderTarget::new(Format::Html)).unwrap();
        assert!(!out.contains("<script>alert"));
        assert!(out.contains("&lt;script&gt;"));
    }

    #[test]
    fn latex_environments_balance() {
        let r = record(
            "id: solo\nversion: 1.0.0\nkind: model\nlicense: mit\nrecord_format_version: 1\n\
             title: \"50%_of & #1\"\nreferences:\n  - https://example.org/a\n",
        );
        let out = render_record(&r, None, &RenderTarget::new(Format::Latex)).unwrap();
        assert_eq!(out.matches("\\begin{").count(), out.matches("\\end{").count());
        assert!(out.contains("50\\%\\_of \\& \\#1"));
    }

    #[test]
    fn dot_single_node_and_edge_shapes() {
        let base = record(
            "id: base\nversion: 1.0.0\nkind: dataset\nlicense: mit\nrecord_format_version: 1\n",
        );
        let top = record(
            "id: top\nversion: 1.0.0\nkind: model\nlicense: mit\nrecord_format_version: 1\n\
             dependencies:\n  - target: base\n    kind: dataset\n    req: \"*\"\n    relation: training_data\n",
        );
        let records = vec![base, top.clone()];
        let g = build_graph(&top, &SetResolver::new(&records), false).unwrap();
        let out = render_dot(&g, &RenderTarget::new(Format::Dot)).unwrap();
        assert!(out.contains("\"top@1.0.0\" [shape=box]"));
        assert!(out.contains("\"base@1.0.0\" [shape=ellipse]"));
        assert!(out.contains("\"top@1.0.0\" -> \"base@1.0.0\" [label=\"training_data\"]"));

        let solo = build_graph(&minimal(), &SetResolver::new(&[]), false).unwrap();
        let out = render_dot(&solo, &RenderTarget::new(Format::Dot)).unwrap();
        assert_eq!(out.matches(" -> ").count(), 0);
        assert_eq!(out.matches("shape=").count(), 1);
    }

    #[test]
    fn clean_report_states_no_findings() {
        let r = minimal();
        let g = build_graph(&r, &SetResolver::new(&[]), false).unwrap();
        let report = audit(&r, &SetResolver::new(&[]), &crate::advisory::AdvisoryDb::empty()).unwrap();
        let out = render_report(&report, &g, &RenderTarget::new(Format::Markdown)).unwrap();
        assert!(out.contains("No advisories affect this record."));
    }

    #[test]
    fn report_renders_arrow_chain() {
        let base = record(
            "id: base\nversion: 1.0.0\nkind: dataset\nlicense: mit\nrecord_format_version: 1\n",
        );
        let mid = record(
            "id: mid\nversion: 1.0.0\nkind: model\nlicense: mit\nrecord_format_version: 1\n\
             dependencies:\n  - target: base\n    kind: dataset\n    req: \"*\"\n    relation: training_data\n",
        );
        let top = record(
            "id: top\nversion: 1.0.0\nkind: model\nlicense: mit\nrecord_format_version: 1\n\
             dependencies:\n  - target: mid\n    kind: model\n    req: \"*\"\n    relation: component\n",
        );
        let records = vec![base, mid, top.clone()];
        let db = load_advisories(
            b"- advisory_id: UMR-2024-0001\n  target_id: base\n  target_kind: dataset\n  affected: \"*\"\n  category: privacy\n  severity: high\n  published: 2024-01-01\n  summary: scraped data\n",
        )
        .unwrap();
        let resolver = SetResolver::new(&records);
        let g = build_graph(&top, &resolver, true).unwrap();
        let report = audit(&top, &resolver, &db).unwrap();
        let out = render_report(&report, &g, &RenderTarget::new(Format::Markdown)).unwrap();
        assert!(out.contains("top \u{2192} mid \u{2192} base"), "{out}");
    }
}
