//! Coverage of an external minimum-content checklist by bound content items.
//!
//! The checklist file lists numbered items and the requirement content items
//! meant to satisfy each one:
//!
//! ```text
//! {"items": [{"number": 1, "text": "which information were taken into account",
//!             "content": [{"requirement": "how_reached", "item": "data_used"}]}]}
//! ```

use std::collections::BTreeSet;
use std::fmt;

use serde::{Deserialize, Serialize};

use crate::delivery::DeliveryAction;
use crate::registry::Registry;
use crate::taxonomy::Perspective;

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ContentRef {
    pub requirement: String,
    pub item: String,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ChecklistItem {
    pub number: u32,
    pub text: String,
    pub content: Vec<ContentRef>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Checklist {
    pub items: Vec<ChecklistItem>,
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum CoverageError {
    #[error("checklist: {0}")]
    Parse(String),
    #[error("checklist item {number} names unknown content `{requirement}/{item}`")]
    UnknownContent { number: u32, requirement: String, item: String },
}

pub fn load_checklist(text: &str, registry: &Registry) -> Result<Checklist, CoverageError> {
    let list: Checklist = serde_json::from_str(text).map_err(|e| CoverageError::Parse(e.to_string()))?;
    for entry in &list.items {
        for r in &entry.content {
            let known = registry.get(&r.requirement).is_some_and(|req| req.classification.content.item(&r.item).is_some());
            if !known {
                return Err(CoverageError::UnknownContent {
                    number: entry.number,
                    requirement: r.requirement.clone(),
                    item: r.item.clone(),
                });
            }
        }
    }
    Ok(list)
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageRow {
    pub number: u32,
    pub text: String,
    /// Mapped content items that were bound to at least one node.
    pub bound: Vec<ContentRef>,
}

impl CoverageRow {
    pub fn covered(&self) -> bool {
        !self.bound.is_empty()
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct CoverageReport {
    pub rows: Vec<CoverageRow>,
}

impl CoverageReport {
    pub fn is_complete(&self) -> bool {
        self.rows.iter().all(CoverageRow::covered)
    }

    pub fn uncovered(&self) -> Vec<u32> {
        self.rows.iter().filter(|r| !r.covered()).map(|r| r.number).collect()
    }
}

impl fmt::Display for CoverageReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.rows {
            let refs: Vec<String> = row.bound.iter().map(|r| format!("{}/{}", r.requirement, r.item)).collect();
            let mark = if row.covered() { "covered" } else { "UNCOVERED" };
            writeln!(f, "{}. {} [{mark}] {}", row.number, row.text, refs.join(", "))?;
        }
        Ok(())
    }
}

/// Check which checklist items are met by content that ex-post explanations
/// in `actions` actually bound.
pub fn coverage_report(list: &Checklist, registry: &Registry, actions: &[DeliveryAction]) -> CoverageReport {
    let bound: BTreeSet<ContentRef> = actions
        .iter()
        .filter(|a| registry.get(&a.requirement_id).is_some_and(|r| r.classification.perspective == Perspective::ExPost))
        .filter_map(|a| a.explanation.instance())
        .flat_map(|inst| {
            inst.bindings
                .bindings
                .iter()
                .filter(|(_, nodes)| !nodes.is_empty())
                .map(|(item, _)| ContentRef { requirement: inst.requirement_id.clone(), item: item.clone() })
        })
        .collect();
    CoverageReport {
        rows: list
            .items
            .iter()
            .map(|entry| CoverageRow {
                number: entry.number,
                text: entry.text.clone(),
                bound: entry.content.iter().filter(|r| bound.contains(*r)).cloned().collect(),
            })
            .collect(),
    }
}
