//! Provenance graphs: the DAG of records reachable from a root through its
//! dependencies. Edges point downstream to upstream, from a record toward
//! the inputs it was built from.

use std::collections::{BTreeMap, BTreeSet, VecDeque};

use crate::record::{Kind, ModelRecord, RecordId, Relation};
use crate::version::{best_match, Version, VersionReq};
use crate::Error;

/// Identity of a graph node: one version of one record.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct NodeKey {
    pub id: RecordId,
    pub version: Version,
    pub kind: Kind,
}

impl NodeKey {
    pub fn of(record: &ModelRecord) -> NodeKey {
        NodeKey {
            id: record.id.clone(),
            version: record.version.clone(),
            kind: record.kind,
        }
    }
}

impl std::fmt::Display for NodeKey {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{}@{}", self.id, self.version)
    }
}

/// Sentinel version for dependency targets no source could resolve.
pub fn unresolved_version() -> Version {
    Version {
        major: 0,
        minor: 0,
        patch: 0,
        prerelease: Vec::new(),
        build: "unresolved".to_string(),
    }
}

#[derive(Debug, Clone)]
pub enum NodeData {
    Resolved(Box<ModelRecord>),
    Unresolved { req: VersionReq },
}

impl NodeData {
    pub fn record(&self) -> Option<&ModelRecord> {
        match self {
            NodeData::Resolved(r) => Some(r),
            NodeData::Unresolved { .. } => None,
        }
    }
}

type Edge = (NodeKey, NodeKey, Relation);

/// The dependency DAG rooted at one record. Construction resolves every
/// requirement, shares diamond nodes, and fails on cycles.
#[derive(Debug, Clone)]
pub struct ProvenanceGraph {
    pub root: NodeKey,
    nodes: BTreeMap<NodeKey, NodeData>,
    edges: BTreeSet<Edge>,
}

impl ProvenanceGraph {
    pub fn nodes(&self) -> impl Iterator<Item = (&NodeKey, &NodeData)> {
        self.nodes.iter()
    }

    pub fn node(&self, key: &NodeKey) -> Option<&NodeData> {
        self.nodes.get(key)
    }

    pub fn contains(&self, key: &NodeKey) -> bool {
        self.nodes.contains_key(key)
    }

    pub fn is_unresolved(&self, key: &NodeKey) -> bool {
        matches!(self.nodes.get(key), Some(NodeData::Unresolved { .. }))
    }

    pub fn edges(&self) -> impl Iterator<Item = &Edge> {
        self.edges.iter()
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    /// Downstream-to-upstream adjacency with parallel edges collapsed.
    fn adjacency(&self) -> BTreeMap<&NodeKey, BTreeSet<&NodeKey>> {
        let mut adj: BTreeMap<&NodeKey, BTreeSet<&NodeKey>> = BTreeMap::new();
        for key in self.nodes.keys() {
            adj.entry(key).or_default();
        }
        for (from, to, _) in &self.edges {
            adj.entry(from).or_default().insert(to);
        }
        adj
    }
}

/// Maps a dependency requirement to the record it resolves to, or `None`
/// when no source can satisfy it.
pub trait Resolver {
    fn resolve(&self, id: &RecordId, req: &VersionReq) -> Result<Option<ModelRecord>, Error>;
}

/// Resolver over an in-memory record set; picks the best match by version
/// precedence.
pub struct SetResolver<'a> {
    by_id: BTreeMap<&'a RecordId, Vec<&'a ModelRecord>>,
}

impl<'a> SetResolver<'a> {
    pub fn new(records: &'a [ModelRecord]) -> SetResolver<'a> {
        let mut by_id: BTreeMap<&'a RecordId, Vec<&'a ModelRecord>> = BTreeMap::new();
        for record in records {
            by_id.entry(&record.id).or_default().push(record);
        }
        SetResolver { by_id }
    }

    pub fn lookup(&self, id: &RecordId, req: &VersionReq) -> Option<&'a ModelRecord> {
        let candidates = self.by_id.get(id)?;
        let versions: Vec<Version> = candidates.iter().map(|r| r.version.clone()).collect();
        let chosen = best_match(req, versions.iter())?;
        candidates.iter().find(|r| r.version == chosen).copied()
    }
}

impl Resolver for SetResolver<'_> {
    fn resolve(&self, id: &RecordId, req: &VersionReq) -> Result<Option<ModelRecord>, Error> {
        Ok(self.lookup(id, req).cloned())
    }
}

/// Builds the provenance graph under `root`. Each distinct (id, version)
/// is visited once; with `allow_missing`, unresolvable targets become
/// unresolved leaf nodes instead of failing.
pub fn build_graph(
    root: &ModelRecord,
    resolver: &dyn Resolver,
    allow_missing: bool,
) -> Result<ProvenanceGraph, Error> {
    let root_key = NodeKey::of(root);
    let mut nodes: BTreeMap<NodeKey, NodeData> = BTreeMap::new();
    let mut edges: BTreeSet<Edge> = BTreeSet::new();
    let mut resolved_cache: BTreeMap<(String, String), Option<ModelRecord>> = BTreeMap::new();
    let mut queue: VecDeque<NodeKey> = VecDeque::new();

    nodes.insert(root_key.clone(), NodeData::Resolved(Box::new(root.clone())));
    queue.push_back(root_key.clone());

    while let Some(key) = queue.pop_front() {
        let record = match nodes.get(&key) {
            Some(NodeData::Resolved(r)) => (**r).clone(),
            _ => continue,
        };
        for dep in &record.dependencies {
            let cache_key = (dep.target.to_string(), dep.req.to_string());
            let resolved = match resolved_cache.get(&cache_key) {
                Some(hit) => hit.clone(),
                None => {
                    let fresh = resolver.resolve(&dep.target, &dep.req)?;
                    resolved_cache.insert(cache_key, fresh.clone());
                    fresh
                }
            };
            let child_key = match resolved {
                Some(child) => {
                    if child.kind != dep.kind {
                        return Err(Error::Schema {
                            path: format!("{}:dependencies", record.id),
                            message: format!(
                                "{} resolved to a {} record but the dependency declares {}",
                                dep.target, child.kind, dep.kind
                            ),
                        });
                    }
                    let child_key = NodeKey::of(&child);
                    if !nodes.contains_key(&child_key) {
                        nodes.insert(child_key.clone(), NodeData::Resolved(Box::new(child)));
                        queue.push_back(child_key.clone());
                    }
                    child_key
                }
                None => {
                    if !allow_missing {
                        return Err(Error::Unresolved {
                            id: dep.target.to_string(),
                            req: dep.req.to_string(),
                        });
                    }
                    let child_key = NodeKey {
                        id: dep.target.clone(),
                        version: unresolved_version(),
                        kind: dep.kind,
                    };
                    nodes
                        .entry(child_key.clone())
                        .or_insert(NodeData::Unresolved {
                            req: dep.req.clone(),
                        });
                    child_key
                }
            };
            edges.insert((key.clone(), child_key, dep.relation));
        }
    }

    if let Some(cycle) = detect_cycles(&edges) {
        return Err(Error::Cycle(cycle));
    }
    Ok(ProvenanceGraph {
        root: root_key,
        nodes,
        edges,
    })
}

/// Returns one witness cycle as a node path (first node repeated at the
/// end), or `None` when the edge set is acyclic.
pub fn detect_cycles(edges: &BTreeSet<Edge>) -> Option<Vec<NodeKey>> {
    let mut adj: BTreeMap<&NodeKey, BTreeSet<&NodeKey>> = BTreeMap::new();
    for (from, to, _) in edges {
        adj.entry(from).or_default().insert(to);
        adj.entry(to).or_default();
    }
    // 0 unvisited, 1 on the current path, 2 finished.
    let mut color: BTreeMap<&NodeKey, u8> = adj.keys().map(|k| (*k, 0u8)).collect();
    let mut path: Vec<&NodeKey> = Vec::new();

    fn visit<'a>(
        node: &'a NodeKey,
        adj: &BTreeMap<&'a NodeKey, BTreeSet<&'a NodeKey>>,
        color: &mut BTreeMap<&'a NodeKey, u8>,
        path: &mut Vec<&'a NodeKey>,
    ) -> Option<Vec<NodeKey>> {
        color.insert(node, 1);
        path.push(node);
        if let Some(children) = adj.get(node) {
            for child in children {
                match color.get(child).copied().unwrap_or(0) {
                    1 => {
                        let start = path
                            .iter()
                            .position(|n| *n == *child)
                            .expect("node on the current path");
                        let mut cycle: Vec<NodeKey> =
                            path[start..].iter().map(|n| (*n).clone()).collect();
                        cycle.push((*child).clone());
                        return Some(cycle);
                    }
                    0 => {
                        if let Some(cycle) = visit(child, adj, color, path) {
                            return Some(cycle);
                        }
                    }
                    _ => {}
                }
            }
        }
        path.pop();
        color.insert(node, 2);
        None
    }

    let keys: Vec<&NodeKey> = adj.keys().copied().collect();
    for node in keys {
        if color.get(node).copied().unwrap_or(0) == 0 {
            if let Some(cycle) = visit(node, &adj, &mut color, &mut path) {
                return Some(cycle);
            }
        }
    }
    None
}

/// Every node reachable from `n` through dependency edges, excluding `n`.
pub fn upstream_closure(g: &ProvenanceGraph, n: &NodeKey) -> Result<BTreeSet<NodeKey>, Error> {
    if !g.contains(n) {
        return Err(Error::NotFound {
            what: "graph node".to_string(),
            name: n.to_string(),
        });
    }
    let adj = g.adjacency();
    let mut seen: BTreeSet<&NodeKey> = BTreeSet::new();
    let mut queue: VecDeque<&NodeKey> = VecDeque::new();
    queue.push_back(g.nodes.keys().find(|k| *k == n).expect("checked above"));
    while let Some(node) = queue.pop_front() {
        if let Some(children) = adj.get(node) {
            for child in children {
                if seen.insert(child) {
                    queue.push_back(child);
                }
            }
        }
    }
    Ok(seen.into_iter().filter(|k| *k != n).cloned().collect())
}

/// What an impact query is looking for: an exact node, or every version of
/// an id within a range.
#[derive(Debug, Clone)]
pub enum ImpactTarget {
    Key(NodeKey),
    IdRange {
        id: RecordId,
        kind: Option<Kind>,
        req: VersionReq,
    },
}

impl ImpactTarget {
    /// Unresolved nodes have no meaningful version; they match by id (and
    /// kind, when constrained).
    fn matches(&self, node: &NodeKey, unresolved: bool) -> bool {
        match self {
            ImpactTarget::Key(key) => key == node,
            ImpactTarget::IdRange { id, kind, req } => {
                *id == node.id
                    && kind.is_none_or(|k| k == node.kind)
                    && (unresolved || req.matches(&node.version))
            }
        }
    }
}

/// Reverse transitive closure: every record in the set whose provenance
/// graph contains a node matching `target`.
pub fn downstream_impact(
    all_records: &[ModelRecord],
    target: &ImpactTarget,
) -> BTreeSet<NodeKey> {
    let resolver = SetResolver::new(all_records);
    let mut reverse: BTreeMap<NodeKey, BTreeSet<NodeKey>> = BTreeMap::new();
    let mut unresolved: BTreeSet<NodeKey> = BTreeSet::new();
    let mut all_nodes: BTreeSet<NodeKey> = BTreeSet::new();

    for record in all_records {
        let from = NodeKey::of(record);
        all_nodes.insert(from.clone());
        for dep in &record.dependencies {
            let to = match resolver.lookup(&dep.target, &dep.req) {
                Some(child) => NodeKey::of(child),
                None => {
                    let key = NodeKey {
                        id: dep.target.clone(),
                        version: unresolved_version(),
                        kind: dep.kind,
                    };
                    unresolved.insert(key.clone());
                    key
                }
            };
            all_nodes.insert(to.clone());
            reverse.entry(to).or_default().insert(from.clone());
        }
    }

    let mut queue: VecDeque<NodeKey> = all_nodes
        .iter()
        .filter(|n| target.matches(n, unresolved.contains(n)))
        .cloned()
        .collect();
    let mut impacted: BTreeSet<NodeKey> = BTreeSet::new();
    while let Some(node) = queue.pop_front() {
        if let Some(dependents) = reverse.get(&node) {
            for dependent in dependents {
                if impacted.insert(dependent.clone()) {
                    queue.push_back(dependent.clone());
                }
            }
        }
    }
    impacted
}

/// Deterministic topological order: every edge (a, b) places a before b;
/// ties resolve by node key order.
pub fn topo_order(g: &ProvenanceGraph) -> Vec<NodeKey> {
    let adj = g.adjacency();
    let mut indegree: BTreeMap<&NodeKey, usize> = g.nodes.keys().map(|k| (k, 0)).collect();
    for (_, children) in adj.iter() {
        for child in children {
            *indegree.get_mut(child).expect("child registered") += 1;
        }
    }
    let mut ready: BTreeSet<&NodeKey> = indegree
        .iter()
        .filter(|(_, d)| **d == 0)
        .map(|(k, _)| *k)
        .collect();
    let mut out: Vec<NodeKey> = Vec::with_capacity(g.node_count());
    while let Some(node) = ready.iter().next().copied() {
        ready.remove(node);
        out.push(node.clone());
        if let Some(children) = adj.get(node) {
            for child in children {
                let d = indegree.get_mut(child).expect("child registered");
                *d -= 1;
                if *d == 0 {
                    ready.insert(child);
                }
            }
        }
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::record::parse_record;

    fn record(text: &str) -> ModelRecord {
        parse_record(text.as_bytes()).unwrap().0
    }

    fn leaf(id: &str, kind: &str) -> ModelRecord {
        record(&format!(
            "id: {id}\nversion: 1.0.0\nkind: {kind}\nlicense: mit\nrecord_format_version: 1\n"
        ))
    }

    fn with_dep(id: &str, target: &str, target_kind: &str, relation: &str) -> ModelRecord {
        record(&format!(
            "id: {id}\nversion: 1.0.0\nkind: model\nlicense: mit\nrecord_format_version: 1\n\
             dependencies:\n  - target: {target}\n    kind: {target_kind}\n    req: \"*\"\n    relation: {relation}\n"
        ))
    }

    #[test]
    fn leaf_record_gives_single_node() {
        let root = leaf("solo", "model");
        let g = build_graph(&root, &SetResolver::new(&[]), false).unwrap();
        assert_eq!(g.node_count(), 1);
        assert_eq!(g.edge_count(), 0);
        assert!(upstream_closure(&g, &g.root).unwrap().is_empty());
    }

    #[test]
    fn missing_dependency_fails_unless_allowed() {
        let root = with_dep("top", "gone", "model", "component");
        let records: Vec<ModelRecord> = Vec::new();
        assert!(matches!(
            build_graph(&root, &SetResolver::new(&records), false),
            Err(Error::Unresolved { .. })
        ));
        let g = build_graph(&root, &SetResolver::new(&records), true).unwrap();
        assert_eq!(g.node_count(), 2);
        let missing = g
            .nodes()
            .find(|(k, _)| k.id.to_string() == "gone")
            .map(|(k, _)| k.clone())
            .unwrap();
        assert!(g.is_unresolved(&missing));
    }

    #[test]
    fn two_record_cycle_detected() {
        let a = with_dep("a", "b", "model", "component");
        let b = with_dep("b", "a", "model", "component");
        let records = vec![a.clone(), b];
        let err = build_graph(&a, &SetResolver::new(&records), false).unwrap_err();
        let Error::Cycle(path) = err else {
            panic!("expected a cycle error");
        };
        assert!(path.len() >= 3);
        assert_eq!(path.first(), path.last());
    }

    #[test]
    fn diamond_shared_not_duplicated() {
        let base = leaf("base", "model");
        let left = with_dep("left", "base", "model", "component");
        let right = with_dep("right", "base", "model", "component");
        let mut top = with_dep("top", "left", "model", "component");
        top.dependencies
            .push(crate::record::DependencyRef {
                target: RecordId::parse("right").unwrap(),
                kind: Kind::Model,
                req: VersionReq::any(),
                relation: Relation::Component,
                note: None,
            });
        let records = vec![base, left, right, top.clone()];
        let g = build_graph(&top, &SetResolver::new(&records), false).unwrap();
        assert_eq!(g.node_count(), 4);
        let order = topo_order(&g);
        assert_eq!(order.len(), 4);
        assert_eq!(order[0].id.to_string(), "top");
    }

    #[test]
    fn impact_is_reverse_closure() {
        let base = leaf("base", "dataset");
        let mid = with_dep("mid", "base", "dataset", "training_data");
        let top = with_dep("top", "mid", "model", "component");
        let records = vec![base.clone(), mid, top];
        let target = ImpactTarget::Key(NodeKey::of(&base));
        let impacted = downstream_impact(&records, &target);
        let names: Vec<String> = impacted.iter().map(|k| k.id.to_string()).collect();
        assert_eq!(names, vec!["mid", "top"]);
    }
}
