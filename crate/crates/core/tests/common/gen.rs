//! Random requirement sets, synthetic audit trails and the property checks
//! shared by the proptest suite and the acceptance report.

use std::collections::BTreeMap;

use chrono::{DateTime, FixedOffset, TimeZone, Utc};
use proptest::prelude::*;
use proptest::sample::{select, subsequence, Index};
use proptest::test_runner::TestCaseError;
use xbd_core::delivery::{on_event, DeliveryContext, Event, EventKind};
use xbd_core::matcher::{bind, compile_patterns, load_mapping, PatternMapping};
use xbd_core::ontology::{requirements_from_turtle, to_turtle};
use xbd_core::prov::{ingest, ProvGraph};
use xbd_core::render::{render, RenderError, RenderMode, Selector, Template};
use xbd_core::taxonomy::{
    Autonomy, Confidentiality, ContentItem, ContentSpec, Facing, Perspective, Priority, Scope, Sensitivity,
    SourceKind, SourceRank, TriggerKind, TriggerSpec, ViolationCode, CORE_RECIPIENTS,
};
use xbd_core::turtle::parse_turtle;
use xbd_core::{load_registry, serialize_registry, Classification, ExplanationRequirement, Goal, RecipientClass, Registry, RegistryError};

const LABEL_WORDS: &[&str] = &["Alpha", "Bravo", "Charlie", "Delta", "Echo", "Foxtrot"];
const CITATIONS: &[&str] = &["", "Art. 22", "Recital 71", "Guidance 4.2 ü"];
const CATEGORIES: &[&str] = &["salary data", "personal identifiers", "credit score", "contact details"];

/// Extension recipients declared by every generated registry.
pub fn extensions() -> Vec<RecipientClass> {
    vec![
        RecipientClass::new(Facing::OutwardFacing, "external_auditor"),
        RecipientClass::new(Facing::InwardFacing, "ethics_board"),
    ]
}

fn recipient_pool() -> Vec<RecipientClass> {
    CORE_RECIPIENTS.iter().map(|(n, f)| RecipientClass::new(*f, *n)).chain(extensions()).collect()
}

fn source_pool() -> Vec<SourceRank> {
    SourceKind::ALL.iter().flat_map(|k| CITATIONS.iter().map(|c| SourceRank::new(*k, *c))).collect()
}

/// Free text exercising quoting and escaping.
pub fn text() -> impl Strategy<Value = String> {
    "[A-Za-z0-9 .,;:'\"\\\\£€ü\n\t-]{1,24}"
}

#[derive(Debug, Clone)]
pub struct ReqSeed {
    label: String,
    parent: Option<Index>,
    sources: Vec<SourceRank>,
    perspective: Perspective,
    autonomy: Autonomy,
    trigger: TriggerKind,
    event_variant: bool,
    scope: Scope,
    priority: Priority,
    sensitivity: Sensitivity,
    confidentiality: Confidentiality,
    minimum: Vec<String>,
    goals: Vec<Goal>,
    recipients: Vec<RecipientClass>,
    example: Option<String>,
}

prop_compose! {
    pub fn req_seed()(
        label in text(),
        parent in proptest::option::of(any::<Index>()),
        sources in subsequence(source_pool(), 1..4),
        dims in (
            select(Perspective::ALL),
            select(Autonomy::ALL),
            select(TriggerKind::ALL),
            any::<bool>(),
            select(Scope::ALL),
            select(Priority::ALL),
        ),
        content in (select(Sensitivity::ALL), select(Confidentiality::ALL), proptest::collection::vec(text(), 1..4)),
        goals in subsequence(Goal::ALL.to_vec(), 1..5),
        recipients in subsequence(recipient_pool(), 1..4),
        example in proptest::option::of(text()),
    ) -> ReqSeed {
        let (perspective, autonomy, trigger, event_variant, scope, priority) = dims;
        let (sensitivity, confidentiality, minimum) = content;
        ReqSeed {
            label, parent, sources, perspective, autonomy, trigger, event_variant, scope, priority,
            sensitivity, confidentiality, minimum, goals, recipients, example,
        }
    }
}

pub fn event_name(kind: TriggerKind, variant: bool) -> String {
    format!("{}_{}", kind.token(), if variant { "x" } else { "y" })
}

/// Turn seeds into requirements. With `repair`, confidential requirements
/// lose their outward recipients so the result always validates.
pub fn assemble(seeds: &[ReqSeed], repair: bool) -> Vec<ExplanationRequirement> {
    seeds
        .iter()
        .enumerate()
        .map(|(i, s)| {
            let mut recipients = s.recipients.clone();
            if repair && s.confidentiality == Confidentiality::Confidential {
                recipients.retain(|r| !r.is_outward());
                if recipients.is_empty() {
                    recipients.push(RecipientClass::core("administrator"));
                }
            }
            ExplanationRequirement {
                id: format!("req{i}"),
                label: format!("Requirement {} {}", LABEL_WORDS[i], s.label),
                parent: if i == 0 { None } else { s.parent.map(|p| format!("req{}", p.index(i))) },
                classification: Classification {
                    sources: s.sources.clone(),
                    perspective: s.perspective,
                    autonomy: s.autonomy,
                    trigger: TriggerSpec { kind: s.trigger, event: event_name(s.trigger, s.event_variant) },
                    content: ContentSpec {
                        sensitivity: s.sensitivity,
                        confidentiality: s.confidentiality,
                        minimum: s
                            .minimum
                            .iter()
                            .enumerate()
                            .map(|(k, d)| ContentItem::new(format!("c{k}"), d.clone()))
                            .collect(),
                    },
                    scope: s.scope,
                    goals: s.goals.clone(),
                    recipients,
                    priority: s.priority,
                },
                example: s.example.clone(),
            }
        })
        .collect()
}

pub fn requirements(max: usize) -> impl Strategy<Value = Vec<ExplanationRequirement>> {
    proptest::collection::vec(req_seed(), 1..=max.min(LABEL_WORDS.len())).prop_map(|s| assemble(&s, true))
}

pub fn registry(max: usize) -> impl Strategy<Value = Registry> {
    requirements(max).prop_map(|r| Registry::new(r, extensions()).expect("repaired requirements validate"))
}

// ---------------------------------------------------------------------------
// Independent canonical form
// ---------------------------------------------------------------------------

fn tok<T: serde::Serialize>(v: &T) -> String {
    serde_json::to_value(v).unwrap().as_str().unwrap().to_string()
}

/// Order-insensitive text form of a requirement built directly from its
/// fields, without the crate's own normalisation.
pub fn canonical(r: &ExplanationRequirement) -> Vec<String> {
    let c = &r.classification;
    let mut sets: Vec<String> = c
        .sources
        .iter()
        .map(|s| format!("source={}|{}", tok(&s.kind), s.citation))
        .chain(c.goals.iter().map(|g| format!("goal={}", tok(g))))
        .chain(c.recipients.iter().map(|x| format!("recipient={}|{}", x.name, tok(&x.facing))))
        .collect();
    sets.sort();
    let mut out = vec![
        format!("id={}", r.id),
        format!("label={}", r.label),
        format!("parent={:?}", r.parent),
        format!("example={:?}", r.example),
        format!("perspective={}", tok(&c.perspective)),
        format!("autonomy={}", tok(&c.autonomy)),
        format!("trigger={}|{}", tok(&c.trigger.kind), c.trigger.event),
        format!("sensitivity={}", tok(&c.content.sensitivity)),
        format!("confidentiality={}", tok(&c.content.confidentiality)),
        format!("scope={}", tok(&c.scope)),
        format!("priority={}", tok(&c.priority)),
    ];
    out.extend(c.content.minimum.iter().enumerate().map(|(k, i)| format!("min{k}={}|{}", i.id, i.description)));
    out.extend(sets);
    out
}

pub fn check_registry_round_trip(reg: &Registry) -> Result<(), TestCaseError> {
    let text = serialize_registry(reg);
    let back = load_registry(&text).map_err(|e| TestCaseError::fail(format!("reload: {e}")))?;
    prop_assert_eq!(back.len(), reg.len());
    for (a, b) in reg.iter().zip(back.iter()) {
        prop_assert_eq!(canonical(a), canonical(b));
    }
    prop_assert_eq!(serialize_registry(&back), text);
    Ok(())
}

pub fn check_turtle_round_trip(reqs: &[ExplanationRequirement]) -> Result<(), TestCaseError> {
    let ttl = to_turtle(reqs).map_err(|e| TestCaseError::fail(format!("export: {e}")))?;
    let set = parse_turtle(&ttl).map_err(|e| TestCaseError::fail(format!("parse: {e}")))?;
    prop_assert_eq!(parse_turtle(&set.to_turtle()).unwrap(), set);
    let back = requirements_from_turtle(&ttl).map_err(|e| TestCaseError::fail(format!("import: {e}")))?;
    prop_assert_eq!(back.len(), reqs.len());
    for (a, b) in reqs.iter().zip(&back) {
        prop_assert_eq!(canonical(a), canonical(b));
    }
    Ok(())
}

// ---------------------------------------------------------------------------
// Synthetic scenario
// ---------------------------------------------------------------------------

/// One attribute value on a synthetic trail node.
#[derive(Debug, Clone)]
pub struct Value {
    pub raw: String,
    pub pii: bool,
    pub category: &'static str,
}

pub fn values() -> impl Strategy<Value = Vec<Value>> {
    proptest::collection::vec(
        ("RAW[0-9]{4,9}", any::<bool>(), select(CATEGORIES))
            .prop_map(|(raw, pii, category)| Value { raw, pii, category }),
        1..5,
    )
}

pub const SUBJECT: &str = "s";

/// Trail: subject `s`, value nodes derived from it, and a decision entity
/// generated by a decision activity.
pub fn trail(values: &[Value]) -> ProvGraph {
    let mut lines = vec![
        serde_json::json!({"rec": "node", "id": SUBJECT, "kind": "entity", "types": ["subject"]}),
        serde_json::json!({"rec": "node", "id": "act", "kind": "activity", "types": ["decision"]}),
        serde_json::json!({"rec": "node", "id": "d", "kind": "entity", "types": ["decision"]}),
        serde_json::json!({"rec": "edge", "rel": "was_generated_by", "from": "d", "to": "act"}),
        serde_json::json!({"rec": "edge", "rel": "was_derived_from", "from": "d", "to": SUBJECT}),
    ];
    for (i, v) in values.iter().enumerate() {
        let attr = if v.pii {
            serde_json::json!({"v": v.raw, "pii": true, "cat": v.category})
        } else {
            serde_json::json!({"v": v.raw})
        };
        lines.push(serde_json::json!({"rec": "node", "id": format!("v{i}"), "kind": "entity", "types": ["val"], "attrs": {"value": attr}}));
        lines.push(serde_json::json!({"rec": "edge", "rel": "was_derived_from", "from": format!("v{i}"), "to": SUBJECT}));
    }
    let text: Vec<String> = lines.iter().map(|l| l.to_string()).collect();
    ingest(&text.join("\n")).expect("synthetic trail is well formed")
}

pub fn patterns(reqs: &[ExplanationRequirement]) -> PatternMapping {
    let map: BTreeMap<&str, BTreeMap<&str, serde_json::Value>> = reqs
        .iter()
        .map(|r| {
            let items = r
                .classification
                .content
                .minimum
                .iter()
                .map(|i| (i.id.as_str(), serde_json::json!({"selector": {"types": ["val"]}, "extract": ["value"]})))
                .collect();
            (r.id.as_str(), items)
        })
        .collect();
    load_mapping(&serde_json::to_string(&map).unwrap()).unwrap()
}

/// Wildcard template listing every value of every item.
pub fn template(r: &ExplanationRequirement) -> Template {
    let body: String = r
        .classification
        .content
        .minimum
        .iter()
        .map(|i| format!("{0}: {{#each {0} sep=\", \"}}{{{0}.value}}{{/each}}. ", i.id))
        .collect();
    Template::new(format!("t_{}", r.id), &r.id, Selector::Any, Selector::Any, body).unwrap()
}

pub struct World {
    pub registry: Registry,
    pub graph: ProvGraph,
    pub patterns: PatternMapping,
    pub templates: Vec<Template>,
}

impl World {
    pub fn new(registry: Registry, values: &[Value]) -> Self {
        let patterns = patterns(registry.requirements());
        let templates = registry.iter().map(template).collect();
        World { graph: trail(values), registry, patterns, templates }
    }

    pub fn ctx(&self) -> DeliveryContext<'_> {
        DeliveryContext {
            registry: &self.registry,
            graph: &self.graph,
            patterns: &self.patterns,
            templates: &self.templates,
            clock: None,
        }
    }
}

pub fn at() -> DateTime<FixedOffset> {
    Utc.with_ymd_and_hms(2024, 1, 1, 0, 0, 0).unwrap().fixed_offset()
}

prop_compose! {
    pub fn event()(
        kind in select(EventKind::ALL),
        trigger in select(TriggerKind::ALL),
        variant in any::<bool>(),
        requester in proptest::option::of(select(recipient_pool())),
        requirement in proptest::option::of(0..LABEL_WORDS.len()),
    ) -> Event {
        Event {
            kind,
            event: event_name(trigger, variant),
            subject: SUBJECT.into(),
            at: at(),
            requester: requester.map(|r| r.name),
            requirement: requirement.map(|i| format!("req{i}")),
        }
    }
}

// ---------------------------------------------------------------------------
// Property checks
// ---------------------------------------------------------------------------

/// Confidential content never reaches an outward recipient: the registry
/// refuses such classifications, the renderer refuses such pairs, and no
/// delivered explanation carries one.
pub fn check_confidentiality(seeds: &[ReqSeed], values: &[Value], e: &Event) -> Result<(), TestCaseError> {
    let raw = assemble(seeds, false);
    let leaky = raw
        .iter()
        .any(|r| r.classification.content.confidentiality == Confidentiality::Confidential && r.classification.recipients.iter().any(RecipientClass::is_outward));
    match Registry::new(raw.clone(), extensions()) {
        Err(RegistryError::InvalidClassification { report, .. }) => {
            prop_assert!(leaky);
            prop_assert!(report.violations.iter().all(|v| v.code == ViolationCode::ConfidentialOutwardRecipient));
        }
        Err(other) => return Err(TestCaseError::fail(format!("unexpected registry error {other}"))),
        Ok(_) => prop_assert!(!leaky),
    }

    let world = World::new(Registry::new(assemble(seeds, true), extensions()).unwrap(), values);
    for req in &raw {
        if req.classification.content.confidentiality != Confidentiality::Confidential {
            continue;
        }
        let pats = compile_patterns(req, &world.patterns).unwrap();
        let b = bind(&req.id, &pats, &world.graph, SUBJECT).unwrap();
        let t = template(req);
        for r in recipient_pool().iter().filter(|r| r.is_outward()) {
            for mode in [RenderMode::Strict, RenderMode::GapMarked] {
                prop_assert_eq!(
                    render(&t, &b, req, r, mode, at()).unwrap_err(),
                    RenderError::ConfidentialOutward(r.name.clone())
                );
            }
        }
    }

    let actions = on_event(&world.ctx(), e).map_err(|err| TestCaseError::fail(err.to_string()))?;
    for a in &actions {
        let req = world.registry.get(&a.requirement_id).unwrap();
        if req.classification.content.confidentiality == Confidentiality::Confidential {
            prop_assert!(a.recipients.iter().all(|r| !r.is_outward()));
            if let Some(inst) = a.explanation.instance() {
                prop_assert!(!inst.recipient.is_outward());
            }
        }
    }
    Ok(())
}

/// Aggregated explanations never show a pii-flagged raw value.
pub fn check_sensitivity(reqs: &[ExplanationRequirement], values: &[Value]) -> Result<(), TestCaseError> {
    let mut reqs = reqs.to_vec();
    for r in &mut reqs {
        r.classification.content.sensitivity = Sensitivity::Aggregated;
    }
    let world = World::new(Registry::new(reqs, extensions()).unwrap(), values);
    let mut texts = Vec::new();
    for kind in EventKind::ALL {
        for trigger in TriggerKind::ALL {
            for variant in [true, false] {
                for req in world.registry.iter() {
                    for r in &req.classification.recipients {
                        let e = Event {
                            kind: *kind,
                            event: event_name(*trigger, variant),
                            subject: SUBJECT.into(),
                            at: at(),
                            requester: Some(r.name.clone()),
                            requirement: Some(req.id.clone()),
                        };
                        for a in on_event(&world.ctx(), &e).map_err(|err| TestCaseError::fail(err.to_string()))? {
                            texts.extend(a.text().map(str::to_string));
                        }
                    }
                }
            }
        }
    }
    prop_assert!(!texts.is_empty());
    for text in &texts {
        for v in values {
            if v.pii {
                prop_assert!(!text.contains(&v.raw), "{} leaked in {:?}", v.raw, text);
                prop_assert!(text.contains(v.category));
            } else {
                prop_assert!(text.contains(&v.raw));
            }
        }
    }
    Ok(())
}

/// Requirement and recipient pairs expected for `e`, computed from the
/// classification alone.
pub fn brute_force(reg: &Registry, e: &Event) -> Vec<(String, String)> {
    let mut out = Vec::new();
    for req in reg.iter() {
        let c = &req.classification;
        if c.trigger.event != e.event {
            continue;
        }
        let proactive_kind = match e.kind {
            EventKind::ProcessingAnnounced => Some(TriggerKind::Processing),
            EventKind::DecisionMade => Some(TriggerKind::Decision),
            EventKind::ActionPerformed => Some(TriggerKind::Action),
            EventKind::RequestReceived => None,
        };
        match c.autonomy {
            Autonomy::Proactive if proactive_kind == Some(c.trigger.kind) => {
                out.extend(c.recipients.iter().map(|r| (req.id.clone(), r.name.clone())));
            }
            Autonomy::Reactive
                if e.kind == EventKind::RequestReceived && e.requirement.as_deref() == Some(req.id.as_str()) =>
            {
                out.extend(
                    c.recipients
                        .iter()
                        .filter(|r| Some(&r.name) == e.requester.as_ref())
                        .map(|r| (req.id.clone(), r.name.clone())),
                );
            }
            _ => {}
        }
    }
    out
}

/// Engine output equals the brute-force filter; reactive requirements only
/// fire on requests.
pub fn check_delivery(reg: Registry, values: &[Value], e: &Event) -> Result<(), TestCaseError> {
    let world = World::new(reg, values);
    let actions = on_event(&world.ctx(), e).map_err(|err| TestCaseError::fail(err.to_string()))?;
    let got: Vec<(String, String)> = actions
        .iter()
        .flat_map(|a| a.recipients.iter().map(|r| (a.requirement_id.clone(), r.name.clone())))
        .collect();
    prop_assert_eq!(got, brute_force(&world.registry, e));
    for a in &actions {
        if world.registry.get(&a.requirement_id).unwrap().classification.autonomy == Autonomy::Reactive {
            prop_assert_eq!(e.kind, EventKind::RequestReceived);
        }
        prop_assert!(a.explanation.instance().is_some());
    }
    Ok(())
}
