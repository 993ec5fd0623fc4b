//! Corpus of classified explanation requirements.
//!
//! The registry file is JSON. Loading is all-or-nothing: a document either
//! yields a fully validated [`Registry`] or the first error found.

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::taxonomy::{
    core_recipient_facing, validate_classification, Autonomy, Classification, Confidentiality,
    ContentItem, ContentSpec, Facing, Goal, GoalFamily, Perspective, Priority, RecipientClass,
    Scope, Sensitivity, SourceKind, SourceRank, TriggerKind, TriggerSpec, ValidationReport,
    Violation, ViolationCode, CONCISENESS_LIMIT,
};

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ExplanationRequirement {
    pub id: String,
    pub label: String,
    pub parent: Option<String>,
    pub classification: Classification,
    pub example: Option<String>,
}

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum RegistryError {
    #[error("parse error at {location}: {message}")]
    Parse { location: String, message: String },
    #[error("unknown goal `{0}`")]
    UnknownGoal(String),
    #[error("unknown recipient `{0}`")]
    UnknownRecipient(String),
    #[error("duplicate requirement id `{0}`")]
    DuplicateId(String),
    #[error("requirement `{id}` names missing parent `{parent}`")]
    DanglingParent { id: String, parent: String },
    #[error("cyclic parent chain: {}", .0.join(" -> "))]
    CyclicParent(Vec<String>),
    #[error("requirement `{id}` has an invalid classification: {report}")]
    InvalidClassification { id: String, report: ValidationReport },
}

impl RegistryError {
    /// Stable machine-readable name of the error variant.
    pub fn code(&self) -> &'static str {
        match self {
            RegistryError::Parse { .. } => "ParseError",
            RegistryError::UnknownGoal(_) => "UnknownGoal",
            RegistryError::UnknownRecipient(_) => "UnknownRecipient",
            RegistryError::DuplicateId(_) => "DuplicateId",
            RegistryError::DanglingParent { .. } => "DanglingParent",
            RegistryError::CyclicParent(_) => "CyclicParent",
            RegistryError::InvalidClassification { .. } => "InvalidClassification",
        }
    }
}

/// Validated, immutable corpus of requirements in authored order.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct Registry {
    requirements: Vec<ExplanationRequirement>,
    index: HashMap<String, usize>,
    recipient_extensions: Vec<RecipientClass>,
}

impl Registry {
    /// Validate and assemble a registry from already-typed requirements.
    pub fn new(
        requirements: Vec<ExplanationRequirement>,
        recipient_extensions: Vec<RecipientClass>,
    ) -> Result<Self, RegistryError> {
        let mut index = HashMap::new();
        for (i, req) in requirements.iter().enumerate() {
            if index.insert(req.id.clone(), i).is_some() {
                return Err(RegistryError::DuplicateId(req.id.clone()));
            }
        }

        let extensions: HashMap<&str, Facing> =
            recipient_extensions.iter().map(|r| (r.name.as_str(), r.facing)).collect();
        for req in &requirements {
            for r in &req.classification.recipients {
                if core_recipient_facing(&r.name).is_none() && !extensions.contains_key(r.name.as_str()) {
                    return Err(RegistryError::UnknownRecipient(r.name.clone()));
                }
            }
            let mut report = validate_classification(&req.classification);
            for r in &req.classification.recipients {
                if let Some(declared) = extensions.get(r.name.as_str()) {
                    if *declared != r.facing {
                        report.violations.push(Violation {
                            code: ViolationCode::RecipientFacingMismatch,
                            message: format!("extension recipient {} is declared {declared}", r.name),
                        });
                    }
                }
            }
            if !report.is_valid() {
                return Err(RegistryError::InvalidClassification { id: req.id.clone(), report });
            }
        }

        for req in &requirements {
            if let Some(parent) = &req.parent {
                if !index.contains_key(parent) {
                    return Err(RegistryError::DanglingParent {
                        id: req.id.clone(),
                        parent: parent.clone(),
                    });
                }
            }
        }
        check_acyclic(&requirements, &index)?;

        Ok(Self { requirements, index, recipient_extensions })
    }

    pub fn empty() -> Self {
        Self::default()
    }

    pub fn len(&self) -> usize {
        self.requirements.len()
    }

    pub fn is_empty(&self) -> bool {
        self.requirements.is_empty()
    }

    pub fn get(&self, id: &str) -> Option<&ExplanationRequirement> {
        self.index.get(id).map(|&i| &self.requirements[i])
    }

    pub fn iter(&self) -> impl Iterator<Item = &ExplanationRequirement> {
        self.requirements.iter()
    }

    pub fn requirements(&self) -> &[ExplanationRequirement] {
        &self.requirements
    }

    pub fn recipient_extensions(&self) -> &[RecipientClass] {
        &self.recipient_extensions
    }

    pub fn find_by_label(&self, label: &str) -> Option<&ExplanationRequirement> {
        self.requirements.iter().find(|r| r.label == label)
    }

    pub fn children_of<'a>(&'a self, id: &'a str) -> impl Iterator<Item = &'a ExplanationRequirement> {
        self.requirements.iter().filter(move |r| r.parent.as_deref() == Some(id))
    }
}

fn check_acyclic(
    requirements: &[ExplanationRequirement],
    index: &HashMap<String, usize>,
) -> Result<(), RegistryError> {
    // 0 = unvisited, 1 = on current chain, 2 = known to reach a root
    let mut state = vec![0u8; requirements.len()];
    for start in 0..requirements.len() {
        let mut chain = Vec::new();
        let mut cur = Some(start);
        while let Some(i) = cur {
            match state[i] {
                2 => break,
                1 => {
                    let pos = chain.iter().position(|&c| c == i).unwrap_or(0);
                    let mut path: Vec<String> =
                        chain[pos..].iter().map(|&c: &usize| requirements[c].id.clone()).collect();
                    path.push(requirements[i].id.clone());
                    return Err(RegistryError::CyclicParent(path));
                }
                _ => {}
            }
            state[i] = 1;
            chain.push(i);
            cur = requirements[i].parent.as_ref().and_then(|p| index.get(p).copied());
        }
        for i in chain {
            state[i] = 2;
        }
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// File format
// ---------------------------------------------------------------------------

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RegistryFile {
    #[serde(default)]
    requirements: Vec<RequirementRecord>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    recipient_extensions: Vec<RecipientRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RequirementRecord {
    id: String,
    label: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    parent: Option<String>,
    source: Vec<SourceRecord>,
    perspective: String,
    autonomy: String,
    trigger: TriggerRecord,
    content: ContentRecord,
    scope: String,
    goals: Vec<String>,
    recipients: Vec<RecipientRecord>,
    priority: String,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    example: Option<String>,
}

/// A source is either a bare rank token or a rank with a citation note.
#[derive(Debug, Serialize, Deserialize)]
#[serde(untagged)]
enum SourceRecord {
    Bare(String),
    Cited { rank: String, citation: String },
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TriggerRecord {
    kind: String,
    event: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ContentRecord {
    sensitivity: String,
    confidentiality: String,
    minimum: Vec<ItemRecord>,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct ItemRecord {
    id: String,
    description: String,
}

#[derive(Debug, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RecipientRecord {
    facing: String,
    name: String,
}

fn token<T>(id: &str, field: &str, raw: &str) -> Result<T, RegistryError>
where
    T: std::str::FromStr<Err = crate::taxonomy::UnknownToken>,
{
    raw.parse().map_err(|e: crate::taxonomy::UnknownToken| RegistryError::Parse {
        location: format!("requirement `{id}`, field `{field}`"),
        message: e.to_string(),
    })
}

impl RequirementRecord {
    fn into_requirement(self) -> Result<ExplanationRequirement, RegistryError> {
        let id = self.id;
        let sources = self
            .source
            .into_iter()
            .map(|s| match s {
                SourceRecord::Bare(rank) => Ok(SourceRank::new(token(&id, "source", &rank)?, "")),
                SourceRecord::Cited { rank, citation } => {
                    Ok(SourceRank::new(token(&id, "source", &rank)?, citation))
                }
            })
            .collect::<Result<Vec<_>, RegistryError>>()?;
        let goals = self
            .goals
            .into_iter()
            .map(|g| g.parse::<Goal>().map_err(|_| RegistryError::UnknownGoal(g)))
            .collect::<Result<Vec<_>, _>>()?;
        let recipients = self
            .recipients
            .into_iter()
            .map(|r| Ok(RecipientClass::new(token(&id, "recipients.facing", &r.facing)?, r.name)))
            .collect::<Result<Vec<_>, RegistryError>>()?;

        let classification = Classification {
            sources,
            perspective: token::<Perspective>(&id, "perspective", &self.perspective)?,
            autonomy: token::<Autonomy>(&id, "autonomy", &self.autonomy)?,
            trigger: TriggerSpec {
                kind: token::<TriggerKind>(&id, "trigger.kind", &self.trigger.kind)?,
                event: self.trigger.event,
            },
            content: ContentSpec {
                sensitivity: token::<Sensitivity>(&id, "content.sensitivity", &self.content.sensitivity)?,
                confidentiality: token::<Confidentiality>(
                    &id,
                    "content.confidentiality",
                    &self.content.confidentiality,
                )?,
                minimum: self
                    .content
                    .minimum
                    .into_iter()
                    .map(|i| ContentItem::new(i.id, i.description))
                    .collect(),
            },
            scope: token::<Scope>(&id, "scope", &self.scope)?,
            goals,
            recipients,
            priority: token::<Priority>(&id, "priority", &self.priority)?,
        };
        Ok(ExplanationRequirement {
            id,
            label: self.label,
            parent: self.parent,
            classification,
            example: self.example,
        })
    }

    fn from_requirement(req: &ExplanationRequirement) -> Self {
        let c = &req.classification;
        RequirementRecord {
            id: req.id.clone(),
            label: req.label.clone(),
            parent: req.parent.clone(),
            source: c
                .sources
                .iter()
                .map(|s| {
                    if s.citation.is_empty() {
                        SourceRecord::Bare(s.kind.token().to_string())
                    } else {
                        SourceRecord::Cited { rank: s.kind.token().to_string(), citation: s.citation.clone() }
                    }
                })
                .collect(),
            perspective: c.perspective.token().into(),
            autonomy: c.autonomy.token().into(),
            trigger: TriggerRecord { kind: c.trigger.kind.token().into(), event: c.trigger.event.clone() },
            content: ContentRecord {
                sensitivity: c.content.sensitivity.token().into(),
                confidentiality: c.content.confidentiality.token().into(),
                minimum: c
                    .content
                    .minimum
                    .iter()
                    .map(|i| ItemRecord { id: i.id.clone(), description: i.description.clone() })
                    .collect(),
            },
            scope: c.scope.token().into(),
            goals: c.goals.iter().map(|g| g.token().to_string()).collect(),
            recipients: c.recipients.iter().map(RecipientRecord::from_class).collect(),
            priority: c.priority.token().into(),
            example: req.example.clone(),
        }
    }
}

impl RecipientRecord {
    fn from_class(r: &RecipientClass) -> Self {
        RecipientRecord { facing: r.facing.token().into(), name: r.name.clone() }
    }
}

/// Parse and validate a registry document.
pub fn load_registry(document: &str) -> Result<Registry, RegistryError> {
    let file: RegistryFile = serde_json::from_str(document).map_err(|e| RegistryError::Parse {
        location: format!("line {}, column {}", e.line(), e.column()),
        message: e.to_string(),
    })?;
    let extensions = file
        .recipient_extensions
        .into_iter()
        .map(|r| {
            let facing = r.facing.parse::<Facing>().map_err(|e| RegistryError::Parse {
                location: format!("recipient extension `{}`", r.name),
                message: e.to_string(),
            })?;
            Ok(RecipientClass::new(facing, r.name))
        })
        .collect::<Result<Vec<_>, RegistryError>>()?;
    let requirements = file
        .requirements
        .into_iter()
        .map(RequirementRecord::into_requirement)
        .collect::<Result<Vec<_>, _>>()?;
    Registry::new(requirements, extensions)
}

/// Render a registry back to its JSON file form.
pub fn serialize_registry(registry: &Registry) -> String {
    let file = RegistryFile {
        requirements: registry.iter().map(RequirementRecord::from_requirement).collect(),
        recipient_extensions: registry.recipient_extensions.iter().map(RecipientRecord::from_class).collect(),
    };
    let mut out = serde_json::to_string_pretty(&file).expect("registry records always serialize");
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// Lint
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct RankWarning {
    pub child: String,
    pub parent: String,
    pub child_rank: SourceKind,
    pub parent_rank: SourceKind,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ConcisenessWarning {
    pub sub_property: String,
    pub value_count: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize)]
pub struct LintReport {
    /// Requirements whose classifications coincide once minimum content is set aside.
    pub streamline_groups: Vec<Vec<String>>,
    pub rank_warnings: Vec<RankWarning>,
    pub conciseness_warnings: Vec<ConcisenessWarning>,
}

impl LintReport {
    pub fn is_empty(&self) -> bool {
        self.streamline_groups.is_empty()
            && self.rank_warnings.is_empty()
            && self.conciseness_warnings.is_empty()
    }
}

/// Classification with minimum content removed; requirements sharing a key
/// can be served by the same explanation.
fn streamline_key(c: &Classification) -> String {
    let n = c.normalized();
    format!(
        "{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}|{:?}",
        n.sources,
        n.perspective,
        n.autonomy,
        n.trigger,
        n.content.sensitivity,
        n.content.confidentiality,
        n.scope,
        n.goals,
        n.recipients,
        n.priority
    )
}

pub fn lint_registry(registry: &Registry) -> LintReport {
    let mut report = LintReport::default();

    let mut groups: BTreeMap<String, Vec<String>> = BTreeMap::new();
    let mut order = Vec::new();
    for req in registry.iter() {
        let key = streamline_key(&req.classification);
        if !groups.contains_key(&key) {
            order.push(key.clone());
        }
        groups.entry(key).or_default().push(req.id.clone());
    }
    report.streamline_groups = order
        .into_iter()
        .filter_map(|k| groups.remove(&k))
        .filter(|g| g.len() >= 2)
        .collect();

    for req in registry.iter() {
        let Some(parent) = req.parent.as_deref().and_then(|p| registry.get(p)) else { continue };
        if let (Some(child_rank), Some(parent_rank)) =
            (req.classification.most_primary(), parent.classification.most_primary())
        {
            if child_rank.rank() < parent_rank.rank() {
                report.rank_warnings.push(RankWarning {
                    child: req.id.clone(),
                    parent: parent.id.clone(),
                    child_rank,
                    parent_rank,
                });
            }
        }
    }

    for facing in [Facing::OutwardFacing, Facing::InwardFacing] {
        let core = crate::taxonomy::CORE_RECIPIENTS.iter().filter(|(_, f)| *f == facing).count();
        let ext: HashSet<&str> = registry
            .recipient_extensions
            .iter()
            .filter(|r| r.facing == facing)
            .map(|r| r.name.as_str())
            .collect();
        let count = core + ext.len();
        if !ext.is_empty() && count > CONCISENESS_LIMIT {
            report.conciseness_warnings.push(ConcisenessWarning {
                sub_property: facing.token().to_string(),
                value_count: count,
            });
        }
    }
    report
}

// ---------------------------------------------------------------------------
// Classification matrix
// ---------------------------------------------------------------------------

pub const MATRIX_COLUMNS: &[&str] = &[
    "Explanation requirement",
    "Source",
    "Perspective",
    "Autonomy",
    "Trigger",
    "Sensitivity",
    "Confidentiality",
    "Minimum content",
    "Scope",
    "Understandability",
    "Intervenability",
    "Outward-facing",
    "Inward-facing",
    "Priority",
];

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassificationMatrix {
    pub rows: Vec<Vec<String>>,
}

impl ClassificationMatrix {
    pub fn header(&self) -> &'static [&'static str] {
        MATRIX_COLUMNS
    }

    pub fn row(&self, label: &str) -> Option<&[String]> {
        self.rows.iter().find(|r| r[0] == label).map(|r| r.as_slice())
    }

    pub fn cell(&self, label: &str, column: &str) -> Option<&str> {
        let col = MATRIX_COLUMNS.iter().position(|c| *c == column)?;
        self.row(label).map(|r| r[col].as_str())
    }

    pub fn to_csv(&self) -> String {
        let mut writer = csv::Writer::from_writer(Vec::new());
        writer.write_record(MATRIX_COLUMNS).expect("in-memory write");
        for row in &self.rows {
            writer.write_record(row).expect("in-memory write");
        }
        String::from_utf8(writer.into_inner().expect("in-memory flush")).expect("csv output is utf-8")
    }
}

/// Human-readable form of a snake_case token: `data_subject` -> `Data subject`.
pub fn display_token(token: &str) -> String {
    let spaced = token.replace('_', " ");
    let mut chars = spaced.chars();
    match chars.next() {
        Some(first) => first.to_uppercase().chain(chars).collect(),
        None => String::new(),
    }
}

fn display_source(kind: SourceKind) -> &'static str {
    match kind {
        SourceKind::PrimaryExplicit => "Primary:explicit",
        SourceKind::PrimaryImplicit => "Primary:implicit",
        SourceKind::Secondary => "Secondary",
        SourceKind::Tertiary => "Tertiary",
    }
}

fn join<I: IntoIterator<Item = String>>(items: I) -> String {
    items.into_iter().collect::<Vec<_>>().join(", ")
}

pub fn matrix(registry: &Registry) -> ClassificationMatrix {
    let rows = registry
        .iter()
        .map(|req| {
            let c = &req.classification;
            let goals_of = |family: GoalFamily| {
                join(c.goals.iter().filter(|g| g.family() == family).map(|g| display_token(g.token())))
            };
            let recipients_of = |facing: Facing| {
                join(c.recipients.iter().filter(|r| r.facing == facing).map(|r| display_token(&r.name)))
            };
            vec![
                req.label.clone(),
                c.sources.iter().map(|s| display_source(s.kind)).collect::<Vec<_>>().join(" "),
                display_token(c.perspective.token()),
                display_token(c.autonomy.token()),
                display_token(c.trigger.kind.token()),
                display_token(c.content.sensitivity.token()),
                display_token(c.content.confidentiality.token()),
                c.content.minimum_text(),
                display_token(c.scope.token()),
                goals_of(GoalFamily::Understandability),
                goals_of(GoalFamily::Intervenability),
                recipients_of(Facing::OutwardFacing),
                recipients_of(Facing::InwardFacing),
                display_token(c.priority.token()),
            ]
        })
        .collect();
    ClassificationMatrix { rows }
}
