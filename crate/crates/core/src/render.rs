//! Slot templates that turn content bindings into explanation text.
//!
//! Body syntax:
//!
//! - `{item}`: ids of every node bound to `item`, comma separated
//! - `{item.attr}`: `attr` of the first bound node carrying it; `id` and `ts`
//!   are pseudo-attributes for the node id and timestamp
//! - `{item:type.attr}`: as above, restricted to nodes with type label `type`
//! - `{#each item[:type] sep=", "}...{/each}`: repeat the block per bound node;
//!   inside it `{item.attr}` refers to the current node
//! - `{{` and `}}` for literal braces

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::matcher::{BoundNode, ContentBindings};
use crate::prov::{format_instant, Attribute};
use crate::registry::ExplanationRequirement;
use crate::taxonomy::{Goal, RecipientClass, Sensitivity};

pub const GAP_OPEN: &str = "⟨unavailable: ";
pub const GAP_CLOSE: &str = "⟩";

pub fn gap_marker(item: &str) -> String {
    format!("{GAP_OPEN}{item}{GAP_CLOSE}")
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum RenderError {
    #[error("template file: {0}")]
    Parse(String),
    #[error("template `{template}`: {reason}")]
    TemplateSyntax { template: String, reason: String },
    #[error("no template for `{requirement}` and recipient `{recipient}`")]
    NoTemplate { requirement: String, recipient: String },
    #[error("missing content: {}", .0.join(", "))]
    MissingContent(Vec<String>),
    #[error("confidential content cannot go to outward-facing recipient `{0}`")]
    ConfidentialOutward(String),
    #[error("slot `{0}` has nothing to bind to")]
    UnboundSlot(String),
    #[error("identifiable attribute has no category label")]
    MissingCategoryLabel,
}

/// Either every value (`"*"`) or an explicit set.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Selector<T> {
    Any,
    Only(BTreeSet<T>),
}

impl<T: Ord> Selector<T> {
    pub fn is_wildcard(&self) -> bool {
        matches!(self, Selector::Any)
    }
}

impl<T: Serialize> Serialize for Selector<T> {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        match self {
            Selector::Any => s.serialize_str("*"),
            Selector::Only(set) => set.serialize(s),
        }
    }
}

impl<'de, T: Deserialize<'de> + Ord> Deserialize<'de> for Selector<T> {
    fn deserialize<D: Deserializer<'de>>(d: D) -> Result<Self, D::Error> {
        #[derive(Deserialize)]
        #[serde(untagged)]
        enum Raw<T> {
            Star(String),
            List(Vec<T>),
        }
        match Raw::<T>::deserialize(d)? {
            Raw::Star(s) if s == "*" => Ok(Selector::Any),
            Raw::Star(s) => Err(serde::de::Error::custom(format!("expected \"*\" or a list, found \"{s}\""))),
            Raw::List(v) => Ok(Selector::Only(v.into_iter().collect())),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
enum Segment {
    Text(String),
    Slot(SlotRef),
    Each { item: String, filter: Option<String>, sep: String, body: Vec<Segment> },
}

#[derive(Debug, Clone, PartialEq, Eq)]
struct SlotRef {
    raw: String,
    item: String,
    filter: Option<String>,
    attr: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct TemplateRecord {
    id: String,
    requirement: String,
    recipients: Selector<String>,
    goals: Selector<Goal>,
    body: String,
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Template {
    pub id: String,
    pub requirement_id: String,
    pub recipients: Selector<String>,
    pub goals: Selector<Goal>,
    pub body: String,
    segments: Vec<Segment>,
}

impl Template {
    pub fn new(
        id: impl Into<String>,
        requirement_id: impl Into<String>,
        recipients: Selector<String>,
        goals: Selector<Goal>,
        body: impl Into<String>,
    ) -> Result<Self, RenderError> {
        let id = id.into();
        let body = body.into();
        if body.trim().is_empty() {
            return Err(RenderError::TemplateSyntax { template: id, reason: "empty body".into() });
        }
        let segments = parse_body(&body)
            .map_err(|reason| RenderError::TemplateSyntax { template: id.clone(), reason })?;
        Ok(Self { id, requirement_id: requirement_id.into(), recipients, goals, body, segments })
    }

    /// Number of non-wildcard selectors.
    pub fn specificity(&self) -> usize {
        usize::from(!self.recipients.is_wildcard()) + usize::from(!self.goals.is_wildcard())
    }

    pub fn admits(&self, recipient: &RecipientClass, goals: &[Goal]) -> bool {
        let recipient_ok = match &self.recipients {
            Selector::Any => true,
            Selector::Only(names) => names.contains(&recipient.name),
        };
        let goals_ok = match &self.goals {
            Selector::Any => true,
            Selector::Only(set) => goals.iter().any(|g| set.contains(g)),
        };
        recipient_ok && goals_ok
    }

    /// Item ids referenced anywhere in the body.
    pub fn referenced_items(&self) -> BTreeSet<String> {
        let mut out = BTreeSet::new();
        collect_items(&self.segments, &mut out);
        out
    }

    /// Every slot must name a minimum-content item of `req`.
    pub fn check_against(&self, req: &ExplanationRequirement) -> Result<(), RenderError> {
        for item in self.referenced_items() {
            if req.classification.content.item(&item).is_none() {
                return Err(RenderError::UnboundSlot(item));
            }
        }
        Ok(())
    }
}

fn collect_items(segments: &[Segment], out: &mut BTreeSet<String>) {
    for s in segments {
        match s {
            Segment::Text(_) => {}
            Segment::Slot(r) => {
                out.insert(r.item.clone());
            }
            Segment::Each { item, body, .. } => {
                out.insert(item.clone());
                collect_items(body, out);
            }
        }
    }
}

pub fn load_templates(text: &str) -> Result<Vec<Template>, RenderError> {
    let records: Vec<TemplateRecord> = serde_json::from_str(text).map_err(|e| RenderError::Parse(e.to_string()))?;
    let mut seen = BTreeSet::new();
    records
        .into_iter()
        .map(|r| {
            if !seen.insert(r.id.clone()) {
                return Err(RenderError::Parse(format!("duplicate template id `{}`", r.id)));
            }
            Template::new(r.id, r.requirement, r.recipients, r.goals, r.body)
        })
        .collect()
}

pub fn serialize_templates(templates: &[Template]) -> String {
    let records: Vec<TemplateRecord> = templates
        .iter()
        .map(|t| TemplateRecord {
            id: t.id.clone(),
            requirement: t.requirement_id.clone(),
            recipients: t.recipients.clone(),
            goals: t.goals.clone(),
            body: t.body.clone(),
        })
        .collect();
    let mut out = serde_json::to_string_pretty(&records).expect("templates serialize");
    out.push('\n');
    out
}

// ---------------------------------------------------------------------------
// Body parser
// ---------------------------------------------------------------------------

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

fn parse_ref(raw: &str) -> Result<SlotRef, String> {
    let (head, attr) = match raw.split_once('.') {
        Some((h, a)) => (h, Some(a)),
        None => (raw, None),
    };
    let (item, filter) = match head.split_once(':') {
        Some((i, f)) => (i, Some(f)),
        None => (head, None),
    };
    let valid = |s: &str| !s.is_empty() && s.chars().all(is_name_char);
    if !valid(item) || !filter.is_none_or(valid) || !attr.is_none_or(valid) {
        return Err(format!("malformed slot `{{{raw}}}`"));
    }
    Ok(SlotRef {
        raw: raw.to_string(),
        item: item.to_string(),
        filter: filter.map(str::to_string),
        attr: attr.map(str::to_string),
    })
}

fn parse_each_header(header: &str) -> Result<EachHead, String> {
    let rest = header.trim();
    let (target, opts) = match rest.find(char::is_whitespace) {
        Some(i) => (&rest[..i], rest[i..].trim()),
        None => (rest, ""),
    };
    let r = parse_ref(target)?;
    if r.attr.is_some() {
        return Err(format!("`#each {target}` cannot name an attribute"));
    }
    let sep = if opts.is_empty() {
        String::new()
    } else {
        let value = opts
            .strip_prefix("sep=\"")
            .and_then(|v| v.strip_suffix('"'))
            .ok_or_else(|| format!("unsupported `#each` option `{opts}`"))?;
        value.to_string()
    };
    Ok((r.item, r.filter, sep))
}

/// Item, type filter and separator of an open `#each` block.
type EachHead = (String, Option<String>, String);

fn parse_body(body: &str) -> Result<Vec<Segment>, String> {
    let mut stack: Vec<(Vec<Segment>, Option<EachHead>)> = vec![(Vec::new(), None)];
    let mut text = String::new();
    let mut chars = body.char_indices().peekable();
    let flush = |text: &mut String, out: &mut Vec<Segment>| {
        if !text.is_empty() {
            out.push(Segment::Text(std::mem::take(text)));
        }
    };
    while let Some((i, c)) = chars.next() {
        match c {
            '{' if chars.peek().map(|&(_, n)| n) == Some('{') => {
                chars.next();
                text.push('{');
            }
            '}' if chars.peek().map(|&(_, n)| n) == Some('}') => {
                chars.next();
                text.push('}');
            }
            '}' => return Err(format!("unmatched `}}` at byte {i}")),
            '{' => {
                let close = body[i..].find('}').ok_or_else(|| format!("unclosed `{{` at byte {i}"))? + i;
                let inner = &body[i + 1..close];
                while chars.peek().is_some_and(|&(j, _)| j <= close) {
                    chars.next();
                }
                let top = &mut stack.last_mut().expect("stack never empty").0;
                flush(&mut text, top);
                if let Some(header) = inner.strip_prefix("#each") {
                    if stack.len() > 1 {
                        return Err("nested `#each` blocks are not supported".into());
                    }
                    if !header.starts_with(char::is_whitespace) {
                        return Err(format!("malformed block `{{{inner}}}`"));
                    }
                    stack.push((Vec::new(), Some(parse_each_header(header)?)));
                } else if inner == "/each" {
                    let (segments, header) = stack.pop().expect("stack never empty");
                    let (item, filter, sep) = header.ok_or("`{/each}` without `{#each}`")?;
                    stack.last_mut().expect("outer frame").0.push(Segment::Each { item, filter, sep, body: segments });
                } else {
                    top.push(Segment::Slot(parse_ref(inner)?));
                }
            }
            _ => text.push(c),
        }
    }
    if stack.len() > 1 {
        return Err("unclosed `#each` block".into());
    }
    let mut out = stack.pop().expect("stack never empty").0;
    flush(&mut text, &mut out);
    Ok(out)
}

// ---------------------------------------------------------------------------
// Selection and rendering
// ---------------------------------------------------------------------------

/// Highest-specificity template for `req` admitting `recipient`; ties go to
/// the lexicographically smallest id.
pub fn select_template<'a>(
    templates: &'a [Template],
    req: &ExplanationRequirement,
    recipient: &RecipientClass,
) -> Result<&'a Template, RenderError> {
    templates
        .iter()
        .filter(|t| t.requirement_id == req.id && t.admits(recipient, &req.classification.goals))
        .min_by(|a, b| b.specificity().cmp(&a.specificity()).then_with(|| a.id.cmp(&b.id)))
        .ok_or_else(|| RenderError::NoTemplate { requirement: req.id.clone(), recipient: recipient.name.clone() })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RenderMode {
    /// Any referenced item without content is an error.
    Strict,
    /// Referenced items without content render as gap markers.
    GapMarked,
}

impl std::str::FromStr for RenderMode {
    type Err = String;
    fn from_str(s: &str) -> Result<Self, String> {
        match s {
            "strict" => Ok(RenderMode::Strict),
            "gapmarked" | "gap_marked" => Ok(RenderMode::GapMarked),
            other => Err(format!("unknown render mode `{other}`")),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ExplanationInstance {
    pub requirement_id: String,
    pub subject_id: String,
    pub recipient: RecipientClass,
    pub template_id: String,
    pub text: String,
    pub bindings: ContentBindings,
    #[serde(serialize_with = "serialize_instant")]
    pub generated_at: DateTime<FixedOffset>,
    pub gaps: Vec<String>,
}

fn serialize_instant<S: Serializer>(t: &DateTime<FixedOffset>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_instant(*t))
}

impl fmt::Display for ExplanationInstance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(&self.text)
    }
}

/// Category label for identifiable values, the value itself otherwise.
pub fn redact(attr: &Attribute) -> Result<String, RenderError> {
    if !attr.identifiable {
        return Ok(attr.value.clone());
    }
    if attr.category.trim().is_empty() {
        return Err(RenderError::MissingCategoryLabel);
    }
    Ok(attr.category.clone())
}

struct RenderCtx<'a> {
    bindings: &'a ContentBindings,
    aggregated: bool,
    mode: RenderMode,
    gaps: BTreeSet<String>,
}

impl<'a> RenderCtx<'a> {
    fn gap(&mut self, item: &str) -> String {
        self.gaps.insert(item.to_string());
        gap_marker(item)
    }

    fn filtered(&self, item: &str, filter: &Option<String>) -> Vec<&'a BoundNode> {
        self.bindings
            .nodes(item)
            .iter()
            .filter(|n| filter.as_ref().is_none_or(|t| n.types.iter().any(|x| x == t)))
            .collect()
    }

    fn attr_text(&self, node: &BoundNode, attr: &str) -> Result<Option<String>, RenderError> {
        match attr {
            "id" => Ok(Some(node.node_id.clone())),
            "ts" => Ok(node.timestamp.map(format_instant)),
            key => match node.values.get(key) {
                None => Ok(None),
                Some(a) if self.aggregated => redact(a).map(Some),
                Some(a) => Ok(Some(a.value.clone())),
            },
        }
    }

    fn slot(&mut self, r: &SlotRef, current: Option<(&str, &BoundNode)>) -> Result<String, RenderError> {
        if self.bindings.missing.contains(&r.item) {
            return Ok(self.gap(&r.item));
        }
        if let Some((loop_item, node)) = current {
            let same_filter = r.filter.as_ref().is_none_or(|t| node.types.iter().any(|x| x == t));
            if loop_item == r.item && same_filter {
                let attr = r.attr.as_deref().unwrap_or("id");
                return self.attr_text(node, attr)?.ok_or_else(|| RenderError::UnboundSlot(r.raw.clone()));
            }
        }
        if !self.bindings.bindings.contains_key(&r.item) {
            return Err(RenderError::UnboundSlot(r.raw.clone()));
        }
        let nodes = self.filtered(&r.item, &r.filter);
        match &r.attr {
            None => Ok(nodes.iter().map(|n| n.node_id.as_str()).collect::<Vec<_>>().join(", ")),
            Some(attr) => {
                for n in &nodes {
                    if let Some(text) = self.attr_text(n, attr)? {
                        return Ok(text);
                    }
                }
                if self.bindings.nodes(&r.item).is_empty() {
                    Ok(String::new())
                } else {
                    Err(RenderError::UnboundSlot(r.raw.clone()))
                }
            }
        }
    }

    fn segments(&mut self, segments: &[Segment], current: Option<(&str, &BoundNode)>) -> Result<String, RenderError> {
        let mut out = String::new();
        for s in segments {
            match s {
                Segment::Text(t) => out.push_str(t),
                Segment::Slot(r) => out.push_str(&self.slot(r, current)?),
                Segment::Each { item, filter, sep, body } => {
                    if self.bindings.missing.contains(item) {
                        out.push_str(&self.gap(item));
                        continue;
                    }
                    if !self.bindings.bindings.contains_key(item) {
                        return Err(RenderError::UnboundSlot(item.clone()));
                    }
                    let parts = self
                        .filtered(item, filter)
                        .into_iter()
                        .map(|n| self.segments(body, Some((item, n))))
                        .collect::<Result<Vec<_>, _>>()?;
                    out.push_str(&parts.join(sep));
                }
            }
        }
        Ok(out)
    }
}

/// Fill `t` from `b` for `recipient`.
pub fn render(
    t: &Template,
    b: &ContentBindings,
    req: &ExplanationRequirement,
    recipient: &RecipientClass,
    mode: RenderMode,
    generated_at: DateTime<FixedOffset>,
) -> Result<ExplanationInstance, RenderError> {
    let content = &req.classification.content;
    if req.classification.is_confidential() && recipient.is_outward() {
        return Err(RenderError::ConfidentialOutward(recipient.name.clone()));
    }
    t.check_against(req)?;
    let referenced = t.referenced_items();
    if mode == RenderMode::Strict {
        let missing: Vec<String> = b.missing.iter().filter(|m| referenced.contains(*m)).cloned().collect();
        if !missing.is_empty() {
            return Err(RenderError::MissingContent(missing));
        }
    }
    let mut ctx = RenderCtx {
        bindings: b,
        aggregated: content.sensitivity == Sensitivity::Aggregated,
        mode,
        gaps: BTreeSet::new(),
    };
    let text = ctx.segments(&t.segments, None)?;
    debug_assert!(ctx.mode == RenderMode::GapMarked || ctx.gaps.is_empty());
    Ok(ExplanationInstance {
        requirement_id: req.id.clone(),
        subject_id: b.subject_id.clone(),
        recipient: recipient.clone(),
        template_id: t.id.clone(),
        text,
        bindings: b.clone(),
        generated_at,
        gaps: ctx.gaps.into_iter().collect(),
    })
}

/// Raw values of identifiable attributes in `b`, for leak scans.
pub fn identifiable_values(b: &ContentBindings) -> BTreeMap<String, String> {
    b.bindings
        .values()
        .flatten()
        .flat_map(|n| n.values.values())
        .filter(|a| a.identifiable)
        .map(|a| (a.value.clone(), a.category.clone()))
        .collect()
}
