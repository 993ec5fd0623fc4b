//! The nine-dimension explanation taxonomy.
//!
//! Every dimension is modelled as a closed enum except the intended recipient,
//! which is open behind the outward/inward facing split. A [`Classification`]
//! assigns one requirement a value in every dimension; [`validate_classification`]
//! reports every invariant the assignment breaks.

use std::collections::HashSet;
use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

/// Error returned when a token does not name a member of a closed vocabulary.
#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
#[error("unknown {dimension} value `{token}`")]
pub struct UnknownToken {
    pub dimension: &'static str,
    pub token: String,
}

macro_rules! token_enum {
    (
        $(#[$meta:meta])*
        $name:ident, $dim:literal { $($variant:ident => $token:literal),+ $(,)? }
    ) => {
        $(#[$meta])*
        #[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
        #[serde(rename_all = "snake_case")]
        pub enum $name {
            $($variant),+
        }

        impl $name {
            pub const ALL: &'static [$name] = &[$($name::$variant),+];

            pub fn token(self) -> &'static str {
                match self {
                    $($name::$variant => $token),+
                }
            }
        }

        impl FromStr for $name {
            type Err = UnknownToken;

            fn from_str(s: &str) -> Result<Self, Self::Err> {
                match s {
                    $($token => Ok($name::$variant),)+
                    _ => Err(UnknownToken { dimension: $dim, token: s.to_string() }),
                }
            }
        }

        impl fmt::Display for $name {
            fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str(self.token())
            }
        }
    };
}

token_enum! {
    /// Origin of a requirement, from hard law down to internal policy.
    SourceKind, "source" {
        PrimaryExplicit => "primary_explicit",
        PrimaryImplicit => "primary_implicit",
        Secondary => "secondary",
        Tertiary => "tertiary",
    }
}

impl SourceKind {
    /// Smaller is more primary.
    pub fn rank(self) -> u8 {
        match self {
            SourceKind::PrimaryExplicit => 0,
            SourceKind::PrimaryImplicit => 1,
            SourceKind::Secondary => 2,
            SourceKind::Tertiary => 3,
        }
    }
}

token_enum! {
    Perspective, "perspective" {
        ExAnte => "ex_ante",
        ExPost => "ex_post",
    }
}

token_enum! {
    Autonomy, "autonomy" {
        Proactive => "proactive",
        Reactive => "reactive",
    }
}

token_enum! {
    TriggerKind, "trigger" {
        Action => "action",
        Processing => "processing",
        Decision => "decision",
    }
}

token_enum! {
    Sensitivity, "sensitivity" {
        Aggregated => "aggregated",
        Identifiable => "identifiable",
    }
}

token_enum! {
    Confidentiality, "confidentiality" {
        Disclosable => "disclosable",
        Confidential => "confidential",
    }
}

token_enum! {
    Scope, "scope" {
        Local => "local",
        Universal => "universal",
    }
}

token_enum! {
    Priority, "priority" {
        Mandatory => "mandatory",
        Discretionary => "discretionary",
    }
}

token_enum! {
    Facing, "facing" {
        OutwardFacing => "outward_facing",
        InwardFacing => "inward_facing",
    }
}

token_enum! {
    GoalFamily, "goal family" {
        Understandability => "understandability",
        Intervenability => "intervenability",
    }
}

token_enum! {
    /// Explainability goals. The set is closed.
    Goal, "goal" {
        Accountability => "accountability",
        Accuracy => "accuracy",
        Consequences => "consequences",
        DataMinimisation => "data_minimisation",
        Fairness => "fairness",
        Information => "information",
        Reassurance => "reassurance",
        Satisfaction => "satisfaction",
        Persuasiveness => "persuasiveness",
        Transparency => "transparency",
        Trust => "trust",
        Access => "access",
        ContestingADecision => "contesting_a_decision",
        Efficiency => "efficiency",
        Erasure => "erasure",
        MakingAComplaint => "making_a_complaint",
        ModifyingABehaviour => "modifying_a_behaviour",
        HumanIntervention => "human_intervention",
        Portability => "portability",
        Rectification => "rectification",
        FurtherInformation => "further_information",
        Restriction => "restriction",
        Scrutability => "scrutability",
    }
}

impl Goal {
    pub fn family(self) -> GoalFamily {
        goal_family(self)
    }
}

/// Family a goal belongs to. Total over [`Goal`].
pub fn goal_family(goal: Goal) -> GoalFamily {
    use Goal::*;
    match goal {
        Accountability | Accuracy | Consequences | DataMinimisation | Fairness | Information
        | Reassurance | Satisfaction | Persuasiveness | Transparency | Trust => {
            GoalFamily::Understandability
        }
        Access | ContestingADecision | Efficiency | Erasure | MakingAComplaint
        | ModifyingABehaviour | HumanIntervention | Portability | Rectification
        | FurtherInformation | Restriction | Scrutability => GoalFamily::Intervenability,
    }
}

/// One origin of a requirement. The citation is free text such as `Art. 22`.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct SourceRank {
    pub kind: SourceKind,
    pub citation: String,
}

impl SourceRank {
    pub fn new(kind: SourceKind, citation: impl Into<String>) -> Self {
        Self { kind, citation: citation.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct TriggerSpec {
    pub kind: TriggerKind,
    /// Concrete triggering event, e.g. `loan_application`.
    pub event: String,
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct ContentItem {
    pub id: String,
    pub description: String,
}

impl ContentItem {
    pub fn new(id: impl Into<String>, description: impl Into<String>) -> Self {
        Self { id: id.into(), description: description.into() }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ContentSpec {
    pub sensitivity: Sensitivity,
    pub confidentiality: Confidentiality,
    pub minimum: Vec<ContentItem>,
}

impl ContentSpec {
    pub fn item(&self, id: &str) -> Option<&ContentItem> {
        self.minimum.iter().find(|i| i.id == id)
    }

    /// Item descriptions joined the way the classification matrix shows them.
    pub fn minimum_text(&self) -> String {
        self.minimum.iter().map(|i| i.description.as_str()).collect::<Vec<_>>().join("; ")
    }
}

/// Recipient names whose facing is fixed by the taxonomy.
pub const CORE_RECIPIENTS: &[(&str, Facing)] = &[
    ("data_subject", Facing::OutwardFacing),
    ("supervisory_authority", Facing::OutwardFacing),
    ("third_party", Facing::OutwardFacing),
    ("administrator", Facing::InwardFacing),
    ("business_analyst", Facing::InwardFacing),
    ("legal_engineer", Facing::InwardFacing),
    ("data_engineer", Facing::InwardFacing),
    ("manager", Facing::InwardFacing),
];

pub fn core_recipient_facing(name: &str) -> Option<Facing> {
    CORE_RECIPIENTS.iter().find(|(n, _)| *n == name).map(|(_, f)| *f)
}

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct RecipientClass {
    pub facing: Facing,
    pub name: String,
}

impl RecipientClass {
    pub fn new(facing: Facing, name: impl Into<String>) -> Self {
        Self { facing, name: name.into() }
    }

    /// Core recipient with its fixed facing. Panics on a non-core name.
    pub fn core(name: &str) -> Self {
        let facing = core_recipient_facing(name)
            .unwrap_or_else(|| panic!("`{name}` is not a core recipient"));
        Self::new(facing, name)
    }

    pub fn is_extension(&self) -> bool {
        core_recipient_facing(&self.name).is_none()
    }

    pub fn is_outward(&self) -> bool {
        self.facing == Facing::OutwardFacing
    }
}

impl fmt::Display for RecipientClass {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{} ({})", self.name, self.facing)
    }
}

/// One requirement's values across all nine dimensions.
///
/// Multi-valued dimensions are kept as ordered lists so that malformed input
/// (duplicates, empty sets) stays representable and can be reported.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Classification {
    pub sources: Vec<SourceRank>,
    pub perspective: Perspective,
    pub autonomy: Autonomy,
    pub trigger: TriggerSpec,
    pub content: ContentSpec,
    pub scope: Scope,
    pub goals: Vec<Goal>,
    pub recipients: Vec<RecipientClass>,
    pub priority: Priority,
}

impl Classification {
    /// Copy with every set-valued dimension sorted, for order-insensitive comparison.
    /// Minimum content keeps its authored order.
    pub fn normalized(&self) -> Classification {
        let mut c = self.clone();
        c.sources.sort();
        c.goals.sort();
        c.recipients.sort();
        c
    }

    /// Most primary source rank, if any source is present.
    pub fn most_primary(&self) -> Option<SourceKind> {
        self.sources.iter().map(|s| s.kind).min_by_key(|k| k.rank())
    }

    pub fn is_confidential(&self) -> bool {
        self.content.confidentiality == Confidentiality::Confidential
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub enum ViolationCode {
    MissingSources,
    MissingGoals,
    MissingRecipients,
    EmptyMinimumContent,
    DuplicateSource,
    DuplicateGoal,
    DuplicateRecipient,
    DuplicateContentItem,
    EmptyContentItemId,
    EmptyTriggerEvent,
    EmptyRecipientName,
    RecipientFacingMismatch,
    ConfidentialOutwardRecipient,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Violation {
    pub code: ViolationCode,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub violations: Vec<Violation>,
}

impl ValidationReport {
    pub fn is_valid(&self) -> bool {
        self.violations.is_empty()
    }

    pub fn has(&self, code: ViolationCode) -> bool {
        self.violations.iter().any(|v| v.code == code)
    }

    fn push(&mut self, code: ViolationCode, message: impl Into<String>) {
        self.violations.push(Violation { code, message: message.into() });
    }
}

impl fmt::Display for ValidationReport {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let parts: Vec<String> =
            self.violations.iter().map(|v| format!("{:?}: {}", v.code, v.message)).collect();
        f.write_str(&parts.join("; "))
    }
}

fn first_duplicate<'a, T: Eq + std::hash::Hash>(items: impl IntoIterator<Item = &'a T>) -> Option<&'a T> {
    let mut seen = HashSet::new();
    items.into_iter().find(|item| !seen.insert(*item))
}

/// Check every classification invariant. Violations are data, never errors.
pub fn validate_classification(c: &Classification) -> ValidationReport {
    use ViolationCode::*;
    let mut report = ValidationReport::default();

    if c.sources.is_empty() {
        report.push(MissingSources, "at least one source is required");
    }
    if c.goals.is_empty() {
        report.push(MissingGoals, "at least one explainability goal is required");
    }
    if c.recipients.is_empty() {
        report.push(MissingRecipients, "at least one intended recipient is required");
    }
    if c.content.minimum.is_empty() {
        report.push(EmptyMinimumContent, "minimum content must list at least one item");
    }
    if c.trigger.event.trim().is_empty() {
        report.push(EmptyTriggerEvent, "trigger event name is empty");
    }

    if let Some(dup) = first_duplicate(&c.sources) {
        report.push(DuplicateSource, format!("source {} `{}` listed twice", dup.kind, dup.citation));
    }
    if let Some(dup) = first_duplicate(&c.goals) {
        report.push(DuplicateGoal, format!("goal {dup} listed twice"));
    }
    if let Some(dup) = first_duplicate(c.recipients.iter().map(|r| &r.name)) {
        report.push(DuplicateRecipient, format!("recipient {dup} listed twice"));
    }
    if c.content.minimum.iter().any(|i| i.id.trim().is_empty()) {
        report.push(EmptyContentItemId, "minimum content item with empty id");
    }
    if let Some(dup) = first_duplicate(c.content.minimum.iter().map(|i| &i.id)) {
        report.push(DuplicateContentItem, format!("content item id {dup} listed twice"));
    }

    for r in &c.recipients {
        if r.name.trim().is_empty() {
            report.push(EmptyRecipientName, "recipient with empty name");
        }
        if let Some(facing) = core_recipient_facing(&r.name) {
            if facing != r.facing {
                report.push(
                    RecipientFacingMismatch,
                    format!("core recipient {} is {facing}, not {}", r.name, r.facing),
                );
            }
        }
    }

    if c.is_confidential() {
        for r in c.recipients.iter().filter(|r| r.is_outward()) {
            report.push(
                ConfidentialOutwardRecipient,
                format!("confidential content cannot go to outward-facing recipient {}", r.name),
            );
        }
    }
    report
}

/// A sub-property of a dimension and its enumerated values. `values` is empty
/// for free-form sub-properties (minimum content).
#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct SubProperty {
    pub name: &'static str,
    pub values: Vec<&'static str>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct Dimension {
    pub name: &'static str,
    pub sub_properties: Vec<SubProperty>,
}

impl Dimension {
    pub fn values(&self) -> impl Iterator<Item = &'static str> + '_ {
        self.sub_properties.iter().flat_map(|s| s.values.iter().copied())
    }
}

/// Upper end of the 7 ± 2 conciseness bound.
pub const CONCISENESS_LIMIT: usize = 9;

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct TaxonomyVocabulary {
    pub dimensions: Vec<Dimension>,
}

impl TaxonomyVocabulary {
    pub fn dimension(&self, name: &str) -> Option<&Dimension> {
        self.dimensions.iter().find(|d| d.name == name)
    }

    pub fn is_concise(&self) -> bool {
        self.dimensions.len() <= CONCISENESS_LIMIT
    }

    pub fn goals_in(&self, family: GoalFamily) -> Vec<Goal> {
        Goal::ALL.iter().copied().filter(|g| g.family() == family).collect()
    }
}

fn tokens<T: Copy>(all: &[T], token: fn(T) -> &'static str) -> Vec<&'static str> {
    all.iter().map(|v| token(*v)).collect()
}

/// The full closed vocabulary.
pub fn vocabulary() -> TaxonomyVocabulary {
    let sub = |name, values| SubProperty { name, values };
    let dim = |name, sub_properties| Dimension { name, sub_properties };
    let family_goals = |family| {
        Goal::ALL.iter().filter(|g| g.family() == family).map(|g| g.token()).collect::<Vec<_>>()
    };
    let facing_names = |facing| {
        CORE_RECIPIENTS.iter().filter(|(_, f)| *f == facing).map(|(n, _)| *n).collect::<Vec<_>>()
    };

    TaxonomyVocabulary {
        dimensions: vec![
            dim(
                "source",
                vec![
                    sub("primary", vec!["primary_explicit", "primary_implicit"]),
                    sub("secondary", vec!["secondary"]),
                    sub("tertiary", vec!["tertiary"]),
                ],
            ),
            dim("perspective", vec![sub("perspective", tokens(Perspective::ALL, Perspective::token))]),
            dim("autonomy", vec![sub("autonomy", tokens(Autonomy::ALL, Autonomy::token))]),
            dim("trigger", vec![sub("trigger", tokens(TriggerKind::ALL, TriggerKind::token))]),
            dim(
                "content",
                vec![
                    sub("sensitivity", tokens(Sensitivity::ALL, Sensitivity::token)),
                    sub("confidentiality", tokens(Confidentiality::ALL, Confidentiality::token)),
                    sub("minimum_content", vec![]),
                ],
            ),
            dim("scope", vec![sub("scope", tokens(Scope::ALL, Scope::token))]),
            dim(
                "explainability_goal",
                vec![
                    sub("understandability", family_goals(GoalFamily::Understandability)),
                    sub("intervenability", family_goals(GoalFamily::Intervenability)),
                ],
            ),
            dim(
                "intended_recipient",
                vec![
                    sub("outward_facing", facing_names(Facing::OutwardFacing)),
                    sub("inward_facing", facing_names(Facing::InwardFacing)),
                ],
            ),
            dim("priority", vec![sub("priority", tokens(Priority::ALL, Priority::token))]),
        ],
    }
}
