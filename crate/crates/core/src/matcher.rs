//! Minimum-content patterns and their binding against a provenance graph.
//!
//! A pattern mapping file assigns every minimum-content item of a requirement a
//! node selector and the attribute keys to extract from each match:
//!
//! ```text
//! {"key_decisions": {"key_data": {"selector": {"kind": "entity", "types": ["score_factor"]},
//!                                 "extract": ["value", "weight"], "required": true}}}
//! ```

use std::collections::BTreeMap;

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize};

use crate::prov::{Attribute, NodeSelector, ProvError, ProvGraph};
use crate::registry::ExplanationRequirement;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct PatternSpec {
    pub selector: NodeSelector,
    pub extract: Vec<String>,
    #[serde(default = "default_required")]
    pub required: bool,
}

fn default_required() -> bool {
    true
}

/// requirement id -> item id -> pattern.
pub type PatternMapping = BTreeMap<String, BTreeMap<String, PatternSpec>>;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentPattern {
    pub item_id: String,
    pub selector: NodeSelector,
    pub extract: Vec<String>,
    pub required: bool,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum MatchError {
    #[error("pattern mapping: {0}")]
    Parse(String),
    #[error("no pattern for minimum-content item `{0}`")]
    UnmappedItem(String),
    #[error("bad selector for `{item}`: {reason}")]
    BadSelector { item: String, reason: String },
    #[error("unknown subject `{0}`")]
    UnknownSubject(String),
}

pub fn load_mapping(text: &str) -> Result<PatternMapping, MatchError> {
    serde_json::from_str(text).map_err(|e| MatchError::Parse(e.to_string()))
}

/// One pattern per minimum-content item, in the requirement's item order.
pub fn compile_patterns(
    req: &ExplanationRequirement,
    mapping: &PatternMapping,
) -> Result<Vec<ContentPattern>, MatchError> {
    let items = &req.classification.content.minimum;
    let specs = mapping.get(&req.id);
    let mut out = Vec::with_capacity(items.len());
    for item in items {
        let spec = specs
            .and_then(|m| m.get(&item.id))
            .ok_or_else(|| MatchError::UnmappedItem(item.id.clone()))?;
        let bad = |reason: &str| MatchError::BadSelector { item: item.id.clone(), reason: reason.into() };
        if spec.extract.is_empty() {
            return Err(bad("extract list is empty"));
        }
        if spec.extract.iter().any(|k| k.trim().is_empty()) {
            return Err(bad("extract key is empty"));
        }
        if spec.selector.types.iter().any(|t| t.is_empty())
            || spec.selector.path.iter().flatten().any(|s| s.types.iter().any(|t| t.is_empty()))
        {
            return Err(bad("empty type label"));
        }
        if spec.selector.attrs.iter().any(|p| p.key.is_empty()) {
            return Err(bad("attribute predicate without key"));
        }
        if spec.selector.anchor.is_some() && spec.selector.path.is_none() {
            return Err(bad("anchor given without a path"));
        }
        out.push(ContentPattern {
            item_id: item.id.clone(),
            selector: spec.selector.clone(),
            extract: spec.extract.clone(),
            required: spec.required,
        });
    }
    if let Some(extra) = specs.and_then(|m| m.keys().find(|k| req.classification.content.item(k).is_none())) {
        return Err(MatchError::BadSelector {
            item: extra.clone(),
            reason: format!("not a minimum-content item of `{}`", req.id),
        });
    }
    Ok(out)
}

/// One matched node with the extracted attributes it carries.
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct BoundNode {
    pub node_id: String,
    pub types: Vec<String>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub timestamp: Option<DateTime<FixedOffset>>,
    pub values: BTreeMap<String, Attribute>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ContentBindings {
    pub requirement_id: String,
    pub subject_id: String,
    pub bindings: BTreeMap<String, Vec<BoundNode>>,
    pub missing: Vec<String>,
}

impl ContentBindings {
    pub fn is_complete(&self) -> bool {
        self.missing.is_empty()
    }

    pub fn nodes(&self, item: &str) -> &[BoundNode] {
        self.bindings.get(item).map_or(&[], Vec::as_slice)
    }
}

/// Query every pattern against `g` for `subject`. Path selectors without an
/// explicit anchor start at the subject.
pub fn bind(
    requirement_id: &str,
    patterns: &[ContentPattern],
    g: &ProvGraph,
    subject: &str,
) -> Result<ContentBindings, MatchError> {
    if g.node(subject).is_none() {
        return Err(MatchError::UnknownSubject(subject.to_string()));
    }
    let mut bindings = BTreeMap::new();
    let mut missing = Vec::new();
    for p in patterns {
        let mut sel = p.selector.clone();
        if sel.path.is_some() && sel.anchor.is_none() {
            sel.anchor = Some(subject.to_string());
        }
        let nodes = g.query(&sel).map_err(|e| match e {
            ProvError::UnknownSubject(id) => MatchError::UnknownSubject(id),
            other => MatchError::BadSelector { item: p.item_id.clone(), reason: other.to_string() },
        })?;
        let bound: Vec<BoundNode> = nodes
            .into_iter()
            .map(|n| BoundNode {
                node_id: n.id.clone(),
                types: n.types.iter().cloned().collect(),
                timestamp: n.timestamp,
                values: p
                    .extract
                    .iter()
                    .filter_map(|k| n.attrs.get(k).map(|a| (k.clone(), a.clone())))
                    .collect(),
            })
            .collect();
        if bound.is_empty() && p.required {
            missing.push(p.item_id.clone());
        } else {
            bindings.insert(p.item_id.clone(), bound);
        }
    }
    Ok(ContentBindings {
        requirement_id: requirement_id.to_string(),
        subject_id: subject.to_string(),
        bindings,
        missing,
    })
}
