//! In-memory provenance audit trail.
//!
//! Entities, activities and agents linked by six PROV relations. The trail is
//! ingested from JSON Lines, one node or edge record per line:
//!
//! ```text
//! {"rec":"node","id":"records/70551","kind":"entity","types":["late_payment"],"attrs":{"value":{"v":"late payment","pii":false,"cat":"credit history"}},"ts":"2020-09-01T01:00:00Z"}
//! {"rec":"edge","rel":"was_derived_from","from":"applications_no/437/credit_score","to":"records/70551"}
//! ```

use std::collections::{BTreeMap, BTreeSet, HashMap, VecDeque};
use std::fmt;

use chrono::{DateTime, FixedOffset, SecondsFormat};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum NodeKind {
    Entity,
    Activity,
    Agent,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    Used,
    WasGeneratedBy,
    WasAssociatedWith,
    WasDerivedFrom,
    WasAttributedTo,
    WasInformedBy,
}

impl Relation {
    /// Required (from, to) node kinds.
    pub fn endpoint_kinds(self) -> (NodeKind, NodeKind) {
        use NodeKind::*;
        match self {
            Relation::Used => (Activity, Entity),
            Relation::WasGeneratedBy => (Entity, Activity),
            Relation::WasAssociatedWith => (Activity, Agent),
            Relation::WasDerivedFrom => (Entity, Entity),
            Relation::WasAttributedTo => (Entity, Agent),
            Relation::WasInformedBy => (Activity, Activity),
        }
    }
}

impl fmt::Display for Relation {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        fmt::Debug::fmt(self, f)
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Attribute {
    #[serde(rename = "v")]
    pub value: String,
    #[serde(rename = "pii", default)]
    pub identifiable: bool,
    #[serde(rename = "cat", default)]
    pub category: String,
}

impl Attribute {
    pub fn plain(value: impl Into<String>) -> Self {
        Self { value: value.into(), identifiable: false, category: String::new() }
    }

    pub fn personal(value: impl Into<String>, category: impl Into<String>) -> Self {
        Self { value: value.into(), identifiable: true, category: category.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ProvNode {
    pub id: String,
    pub kind: NodeKind,
    pub types: BTreeSet<String>,
    pub attrs: BTreeMap<String, Attribute>,
    pub timestamp: Option<DateTime<FixedOffset>>,
}

impl ProvNode {
    pub fn has_type(&self, t: &str) -> bool {
        self.types.contains(t)
    }

    pub fn has_types(&self, types: &[String]) -> bool {
        types.iter().all(|t| self.types.contains(t))
    }

    /// Timestamp in the `2021-02-18T10:25:45.000Z` form.
    pub fn timestamp_text(&self) -> Option<String> {
        self.timestamp.map(format_instant)
    }

    fn sort_key(&self) -> (Option<DateTime<FixedOffset>>, &str) {
        (self.timestamp, self.id.as_str())
    }
}

pub fn format_instant(t: DateTime<FixedOffset>) -> String {
    t.to_utc().to_rfc3339_opts(SecondsFormat::Millis, true)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ProvEdge {
    pub relation: Relation,
    pub from: String,
    pub to: String,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum ProvError {
    #[error("line {line}: {reason}")]
    MalformedLine { line: usize, reason: String },
    #[error("duplicate node `{0}`")]
    DuplicateNode(String),
    #[error("edge {from} -> {to} references a missing node")]
    DanglingEdge { from: String, to: String },
    #[error("{relation} cannot link {from} ({from_kind:?}) to {to} ({to_kind:?})")]
    KindViolation { relation: Relation, from: String, to: String, from_kind: NodeKind, to_kind: NodeKind },
    #[error("unknown subject `{0}`")]
    UnknownSubject(String),
    #[error("selector has a relation path but no anchor node")]
    UnanchoredPath,
}

/// Immutable provenance graph with adjacency indexes.
#[derive(Debug, Clone, Default)]
pub struct ProvGraph {
    nodes: BTreeMap<String, ProvNode>,
    edges: BTreeSet<ProvEdge>,
    outgoing: HashMap<String, Vec<usize>>,
    incoming: HashMap<String, Vec<usize>>,
    edge_list: Vec<ProvEdge>,
}

impl PartialEq for ProvGraph {
    fn eq(&self, other: &Self) -> bool {
        self.nodes == other.nodes && self.edges == other.edges
    }
}

impl Eq for ProvGraph {}

/// Type label marking activities whose outputs are decisions.
pub const DECISION_ACTIVITY_TYPE: &str = "decision";

impl ProvGraph {
    /// Assemble a graph, checking referential integrity and relation kinds.
    pub fn from_parts(nodes: Vec<ProvNode>, edges: Vec<ProvEdge>) -> Result<Self, ProvError> {
        let mut map = BTreeMap::new();
        for node in nodes {
            if map.contains_key(&node.id) {
                return Err(ProvError::DuplicateNode(node.id));
            }
            map.insert(node.id.clone(), node);
        }
        for e in &edges {
            if !map.contains_key(&e.from) || !map.contains_key(&e.to) {
                return Err(ProvError::DanglingEdge { from: e.from.clone(), to: e.to.clone() });
            }
        }
        for e in &edges {
            let (want_from, want_to) = e.relation.endpoint_kinds();
            let (from_kind, to_kind) = (map[&e.from].kind, map[&e.to].kind);
            if from_kind != want_from || to_kind != want_to {
                return Err(ProvError::KindViolation {
                    relation: e.relation,
                    from: e.from.clone(),
                    to: e.to.clone(),
                    from_kind,
                    to_kind,
                });
            }
        }
        let edges: BTreeSet<ProvEdge> = edges.into_iter().collect();
        let edge_list: Vec<ProvEdge> = edges.iter().cloned().collect();
        let mut outgoing: HashMap<String, Vec<usize>> = HashMap::new();
        let mut incoming: HashMap<String, Vec<usize>> = HashMap::new();
        for (i, e) in edge_list.iter().enumerate() {
            outgoing.entry(e.from.clone()).or_default().push(i);
            incoming.entry(e.to.clone()).or_default().push(i);
        }
        Ok(Self { nodes: map, edges, outgoing, incoming, edge_list })
    }

    pub fn node_count(&self) -> usize {
        self.nodes.len()
    }

    pub fn edge_count(&self) -> usize {
        self.edges.len()
    }

    pub fn node(&self, id: &str) -> Option<&ProvNode> {
        self.nodes.get(id)
    }

    pub fn nodes(&self) -> impl Iterator<Item = &ProvNode> {
        self.nodes.values()
    }

    pub fn edges(&self) -> impl Iterator<Item = &ProvEdge> {
        self.edges.iter()
    }

    /// Nodes one `relation` hop away from `id`, following or reversing the edge.
    pub fn neighbours<'a>(&'a self, id: &str, relation: Relation, dir: Direction) -> impl Iterator<Item = &'a str> + 'a {
        let index = match dir {
            Direction::Out => self.outgoing.get(id),
            Direction::In => self.incoming.get(id),
        };
        index.into_iter().flatten().filter_map(move |&i| {
            let e = &self.edge_list[i];
            (e.relation == relation).then_some(match dir {
                Direction::Out => e.to.as_str(),
                Direction::In => e.from.as_str(),
            })
        })
    }

    /// The subject and every node transitively derived from it.
    pub fn subject_index(&self, subject: &str) -> Result<BTreeSet<&str>, ProvError> {
        let start = self.nodes.get_key_value(subject).ok_or_else(|| ProvError::UnknownSubject(subject.into()))?.0;
        let mut seen = BTreeSet::from([start.as_str()]);
        let mut queue = VecDeque::from([start.as_str()]);
        while let Some(id) = queue.pop_front() {
            for next in self.neighbours(id, Relation::WasDerivedFrom, Direction::In) {
                if seen.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        Ok(seen)
    }

    fn generated_by_decision(&self, id: &str) -> bool {
        self.neighbours(id, Relation::WasGeneratedBy, Direction::Out)
            .any(|a| self.nodes[a].has_type(DECISION_ACTIVITY_TYPE))
    }

    /// Decision entities about `subject`: derived from it and generated by a
    /// decision-typed activity.
    pub fn decision_nodes(&self, subject: &str) -> Result<Vec<&ProvNode>, ProvError> {
        let index = self.subject_index(subject)?;
        Ok(index.into_iter().filter(|id| self.generated_by_decision(id)).map(|id| &self.nodes[id]).collect())
    }

    /// The graph as it stood before any decision: every entity generated by a
    /// decision-typed activity, and everything derived from one, is removed
    /// together with its edges.
    pub fn pre_decision_view(&self) -> ProvGraph {
        let mut dropped: BTreeSet<&str> =
            self.nodes.keys().map(String::as_str).filter(|id| self.generated_by_decision(id)).collect();
        let mut queue: VecDeque<&str> = dropped.iter().copied().collect();
        while let Some(id) = queue.pop_front() {
            for next in self.neighbours(id, Relation::WasDerivedFrom, Direction::In) {
                if dropped.insert(next) {
                    queue.push_back(next);
                }
            }
        }
        let nodes: Vec<ProvNode> =
            self.nodes.values().filter(|n| !dropped.contains(n.id.as_str())).cloned().collect();
        let keep: BTreeSet<&str> = nodes.iter().map(|n| n.id.as_str()).collect();
        let edges: Vec<ProvEdge> = self
            .edges
            .iter()
            .filter(|e| keep.contains(e.from.as_str()) && keep.contains(e.to.as_str()))
            .cloned()
            .collect();
        ProvGraph::from_parts(nodes, edges).expect("subgraph of a valid graph is valid")
    }

    /// All nodes satisfying the selector, ordered by (timestamp, id).
    pub fn query(&self, sel: &NodeSelector) -> Result<Vec<&ProvNode>, ProvError> {
        let candidates: Vec<&ProvNode> = match &sel.path {
            None => self.nodes.values().collect(),
            Some(steps) => {
                let anchor = sel.anchor.as_deref().ok_or(ProvError::UnanchoredPath)?;
                if !self.nodes.contains_key(anchor) {
                    return Err(ProvError::UnknownSubject(anchor.to_string()));
                }
                let mut frontier: BTreeSet<&str> = BTreeSet::from([anchor]);
                for step in steps {
                    frontier = self.step(&frontier, step);
                }
                frontier.into_iter().map(|id| &self.nodes[id]).collect()
            }
        };
        let mut out: Vec<&ProvNode> = candidates.into_iter().filter(|n| sel.admits(n)).collect();
        out.sort_by(|a, b| a.sort_key().cmp(&b.sort_key()));
        Ok(out)
    }

    fn step<'a>(&'a self, frontier: &BTreeSet<&'a str>, step: &PathStep) -> BTreeSet<&'a str> {
        let mut reached = BTreeSet::new();
        let mut queue: VecDeque<&str> = frontier.iter().copied().collect();
        let mut visited: BTreeSet<&str> = BTreeSet::new();
        while let Some(id) = queue.pop_front() {
            for next in self.neighbours(id, step.rel, step.dir) {
                if !visited.insert(next) {
                    continue;
                }
                reached.insert(next);
                if step.transitive {
                    queue.push_back(next);
                }
            }
        }
        reached.into_iter().filter(|id| self.nodes[*id].has_types(&step.types)).collect()
    }

    /// JSON Lines form: nodes sorted by id, then edges sorted.
    pub fn to_jsonl(&self) -> String {
        let mut out = String::new();
        for node in self.nodes.values() {
            let rec = Record::Node(NodeRecord {
                id: node.id.clone(),
                kind: node.kind,
                types: node.types.iter().cloned().collect(),
                attrs: node.attrs.clone(),
                ts: node.timestamp.map(format_instant),
            });
            out.push_str(&serde_json::to_string(&rec).expect("node record serializes"));
            out.push('\n');
        }
        for edge in &self.edges {
            let rec = Record::Edge(EdgeRecord { rel: edge.relation, from: edge.from.clone(), to: edge.to.clone() });
            out.push_str(&serde_json::to_string(&rec).expect("edge record serializes"));
            out.push('\n');
        }
        out
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Direction {
    /// Follow edges from their `from` end to their `to` end.
    Out,
    /// Follow edges backwards.
    In,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PathStep {
    pub rel: Relation,
    pub dir: Direction,
    /// Nodes reached by this step must carry all of these type labels.
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub types: Vec<String>,
    /// Follow the relation one or more times instead of exactly once.
    #[serde(default, skip_serializing_if = "std::ops::Not::not")]
    pub transitive: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AttrPredicate {
    pub key: String,
    /// Required value; absent means the attribute only has to exist.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub eq: Option<String>,
}

/// Node filter: kind, type labels, attribute predicates and an optional
/// relation path walked from an anchor node.
#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NodeSelector {
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub kind: Option<NodeKind>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub types: Vec<String>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub attrs: Vec<AttrPredicate>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub path: Option<Vec<PathStep>>,
    /// Start node for `path`; normally filled in with the explanation subject.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub anchor: Option<String>,
}

impl NodeSelector {
    pub fn anchored(mut self, anchor: impl Into<String>) -> Self {
        self.anchor = Some(anchor.into());
        self
    }

    fn admits(&self, node: &ProvNode) -> bool {
        self.kind.is_none_or(|k| node.kind == k)
            && node.has_types(&self.types)
            && self.attrs.iter().all(|p| match (node.attrs.get(&p.key), &p.eq) {
                (None, _) => false,
                (Some(_), None) => true,
                (Some(a), Some(v)) => a.value == *v,
            })
    }
}

// ---------------------------------------------------------------------------
// JSONL ingest
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(tag = "rec", rename_all = "snake_case")]
enum Record {
    Node(NodeRecord),
    Edge(EdgeRecord),
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct NodeRecord {
    id: String,
    kind: NodeKind,
    #[serde(default)]
    types: Vec<String>,
    #[serde(default)]
    attrs: BTreeMap<String, Attribute>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    ts: Option<String>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct EdgeRecord {
    rel: Relation,
    from: String,
    to: String,
}

/// Ingest one batch of JSON Lines. Edges may precede the nodes they reference;
/// references are resolved once the whole batch has been read.
pub fn ingest(text: &str) -> Result<ProvGraph, ProvError> {
    let mut nodes = Vec::new();
    let mut edges = Vec::new();
    let mut seen = BTreeSet::new();
    for (i, line) in text.lines().enumerate() {
        let n = i + 1;
        if line.trim().is_empty() {
            continue;
        }
        let rec: Record = serde_json::from_str(line)
            .map_err(|e| ProvError::MalformedLine { line: n, reason: e.to_string() })?;
        match rec {
            Record::Node(r) => {
                if r.id.is_empty() {
                    return Err(ProvError::MalformedLine { line: n, reason: "empty node id".into() });
                }
                if let Some((key, _)) =
                    r.attrs.iter().find(|(_, a)| a.identifiable && a.category.trim().is_empty())
                {
                    return Err(ProvError::MalformedLine {
                        line: n,
                        reason: format!("identifiable attribute `{key}` has no category label"),
                    });
                }
                let timestamp = r
                    .ts
                    .map(|ts| {
                        DateTime::parse_from_rfc3339(&ts).map_err(|e| ProvError::MalformedLine {
                            line: n,
                            reason: format!("bad timestamp `{ts}`: {e}"),
                        })
                    })
                    .transpose()?;
                if !seen.insert(r.id.clone()) {
                    return Err(ProvError::DuplicateNode(r.id));
                }
                nodes.push(ProvNode {
                    id: r.id,
                    kind: r.kind,
                    types: r.types.into_iter().collect(),
                    attrs: r.attrs,
                    timestamp,
                });
            }
            Record::Edge(r) => edges.push(ProvEdge { relation: r.rel, from: r.from, to: r.to }),
        }
    }
    ProvGraph::from_parts(nodes, edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    const SMALL: &str = r#"{"rec":"edge","rel":"was_generated_by","from":"e1","to":"a1"}
{"rec":"node","id":"e1","kind":"entity","types":["late_payment"],"attrs":{"name":{"v":"Alex","pii":true,"cat":"personal identifiers"}},"ts":"2020-10-01T01:00:00Z"}
{"rec":"node","id":"a1","kind":"activity","types":["scoring"]}
"#;

    #[test]
    fn edges_may_precede_nodes() {
        let g = ingest(SMALL).unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (2, 1));
        assert_eq!(g.node("e1").unwrap().attrs["name"].category, "personal identifiers");
    }

    #[test]
    fn empty_stream() {
        let g = ingest("").unwrap();
        assert_eq!((g.node_count(), g.edge_count()), (0, 0));
    }

    #[test]
    fn generated_by_from_activity_is_kind_violation() {
        let text = SMALL.replace(r#""from":"e1","to":"a1""#, r#""from":"a1","to":"e1""#);
        assert!(matches!(ingest(&text).unwrap_err(), ProvError::KindViolation { relation: Relation::WasGeneratedBy, .. }));
    }

    #[test]
    fn dangling_and_duplicate() {
        let text = format!("{SMALL}{{\"rec\":\"edge\",\"rel\":\"used\",\"from\":\"a1\",\"to\":\"ghost\"}}\n");
        assert_eq!(ingest(&text).unwrap_err(), ProvError::DanglingEdge { from: "a1".into(), to: "ghost".into() });
        let dup = format!("{SMALL}{{\"rec\":\"node\",\"id\":\"a1\",\"kind\":\"agent\"}}\n");
        assert_eq!(ingest(&dup).unwrap_err(), ProvError::DuplicateNode("a1".into()));
    }

    #[test]
    fn malformed_lines() {
        assert!(matches!(ingest("{\"rec\":\"node\"}").unwrap_err(), ProvError::MalformedLine { line: 1, .. }));
        let no_cat = r#"{"rec":"node","id":"x","kind":"entity","attrs":{"name":{"v":"Alex","pii":true}}}"#;
        assert!(matches!(ingest(no_cat).unwrap_err(), ProvError::MalformedLine { line: 1, .. }));
        let bad_ts = r#"{"rec":"node","id":"x","kind":"entity","ts":"yesterday"}"#;
        assert!(matches!(ingest(bad_ts).unwrap_err(), ProvError::MalformedLine { line: 1, .. }));
    }

    #[test]
    fn reserialized_graph_is_identical() {
        let g = ingest(SMALL).unwrap();
        let again = ingest(&g.to_jsonl()).unwrap();
        assert_eq!(g, again);
        assert_eq!(g.to_jsonl(), again.to_jsonl());
    }

    #[test]
    fn selector_without_anchor_rejects_path() {
        let g = ingest(SMALL).unwrap();
        let sel = NodeSelector { path: Some(vec![]), ..Default::default() };
        assert_eq!(g.query(&sel).unwrap_err(), ProvError::UnanchoredPath);
        assert_eq!(g.query(&sel.anchored("nope")).unwrap_err(), ProvError::UnknownSubject("nope".into()));
    }

    #[test]
    fn query_filters_and_orders() {
        let g = ingest(SMALL).unwrap();
        let sel = NodeSelector { kind: Some(NodeKind::Entity), types: vec!["late_payment".into()], ..Default::default() };
        let ids: Vec<_> = g.query(&sel).unwrap().iter().map(|n| n.id.clone()).collect();
        assert_eq!(ids, vec!["e1"]);
        let none = NodeSelector { types: vec!["missing".into()], ..Default::default() };
        assert!(g.query(&none).unwrap().is_empty());
        let attr = NodeSelector { attrs: vec![AttrPredicate { key: "name".into(), eq: Some("Alex".into()) }], ..Default::default() };
        assert_eq!(g.query(&attr).unwrap().len(), 1);
    }

    #[test]
    fn millisecond_timestamp_format() {
        let t = DateTime::parse_from_rfc3339("2021-02-18T10:25:45.000Z").unwrap();
        assert_eq!(format_instant(t), "2021-02-18T10:25:45.000Z");
    }
}
