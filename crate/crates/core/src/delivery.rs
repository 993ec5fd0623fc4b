//! Delivery rules: which explanations fire for an event, to whom, and when.
//!
//! Event log lines:
//!
//! ```text
//! {"kind":"decision_made","event":"loan_decision","subject":"applications_no/437","at":"2021-02-12T09:00:00Z"}
//! {"kind":"request_received","event":"loan_decision","subject":"applications_no/437","at":"2021-02-13T09:00:00Z",
//!  "requester":"data_subject","requirement":"why_reached"}
//! ```

use std::collections::BTreeSet;

use chrono::{DateTime, FixedOffset};
use serde::{Deserialize, Serialize, Serializer};

use crate::matcher::{bind, compile_patterns, MatchError, PatternMapping};
use crate::prov::{format_instant, ProvError, ProvGraph};
use crate::registry::{ExplanationRequirement, Registry};
use crate::render::{render, select_template, ExplanationInstance, RenderError, RenderMode, Template};
use crate::taxonomy::{Autonomy, Perspective, Priority, RecipientClass, TriggerKind};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum EventKind {
    ProcessingAnnounced,
    DecisionMade,
    RequestReceived,
    ActionPerformed,
}

impl EventKind {
    pub const ALL: &'static [EventKind] = &[
        EventKind::ProcessingAnnounced,
        EventKind::DecisionMade,
        EventKind::RequestReceived,
        EventKind::ActionPerformed,
    ];

    /// Trigger kind this event stands for; requests have none.
    pub fn trigger_kind(self) -> Option<TriggerKind> {
        match self {
            EventKind::ProcessingAnnounced => Some(TriggerKind::Processing),
            EventKind::DecisionMade => Some(TriggerKind::Decision),
            EventKind::ActionPerformed => Some(TriggerKind::Action),
            EventKind::RequestReceived => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Event {
    pub kind: EventKind,
    /// Matched against the requirement's trigger event name.
    pub event: String,
    pub subject: String,
    #[serde(serialize_with = "serialize_instant")]
    pub at: DateTime<FixedOffset>,
    /// Recipient class name of whoever asked.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requester: Option<String>,
    /// Requirement id a request asks for.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub requirement: Option<String>,
}

fn serialize_instant<S: Serializer>(t: &DateTime<FixedOffset>, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_str(&format_instant(*t))
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum DeliveryError {
    #[error("event line {line}: {reason}")]
    MalformedEvent { line: usize, reason: String },
    #[error("ex-post explanation for `{0}` fired but the graph holds no decision for it")]
    StaleGraph(String),
    #[error("expected a processing announcement, got {0:?}")]
    NotAnAnnouncement(EventKind),
    #[error("requirement `{requirement}`: {source}")]
    Match { requirement: String, source: MatchError },
    #[error("requirement `{requirement}`: {source}")]
    Render { requirement: String, source: RenderError },
}

impl Event {
    fn check(&self) -> Result<(), String> {
        if self.event.is_empty() || self.subject.is_empty() {
            return Err("event and subject must be nonempty".into());
        }
        if self.kind == EventKind::RequestReceived && (self.requester.is_none() || self.requirement.is_none()) {
            return Err("a request must carry `requester` and `requirement`".into());
        }
        Ok(())
    }
}

pub fn parse_events(text: &str) -> Result<Vec<Event>, DeliveryError> {
    let mut out = Vec::new();
    for (i, line) in text.lines().enumerate() {
        if line.trim().is_empty() {
            continue;
        }
        let malformed = |reason: String| DeliveryError::MalformedEvent { line: i + 1, reason };
        let e: Event = serde_json::from_str(line).map_err(|e| malformed(e.to_string()))?;
        e.check().map_err(malformed)?;
        out.push(e);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Timing {
    Immediate,
    OnRequestFulfilment,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
#[serde(tag = "status", rename_all = "snake_case")]
pub enum Delivered {
    Rendered(Box<ExplanationInstance>),
    /// Outward delivery withheld until the missing items can be bound.
    Deferred { missing: Vec<String> },
}

impl Delivered {
    pub fn instance(&self) -> Option<&ExplanationInstance> {
        match self {
            Delivered::Rendered(i) => Some(i),
            Delivered::Deferred { .. } => None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct DeliveryAction {
    pub requirement_id: String,
    pub subject_id: String,
    pub event: EventKind,
    pub recipients: Vec<RecipientClass>,
    pub timing: Timing,
    pub priority: Priority,
    /// Same requirement, subject and recipient were already served.
    pub duplicate: bool,
    pub explanation: Delivered,
}

impl DeliveryAction {
    pub fn text(&self) -> Option<&str> {
        self.explanation.instance().map(|i| i.text.as_str())
    }
}

/// Everything an event is evaluated against.
#[derive(Debug, Clone, Copy)]
pub struct DeliveryContext<'a> {
    pub registry: &'a Registry,
    pub graph: &'a ProvGraph,
    pub patterns: &'a PatternMapping,
    pub templates: &'a [Template],
    /// Overrides the event time as `generated_at`.
    pub clock: Option<DateTime<FixedOffset>>,
}

/// Whether `req` fires for `e`, ignoring graph state.
pub fn fires(req: &ExplanationRequirement, e: &Event) -> bool {
    let c = &req.classification;
    if c.trigger.event != e.event {
        return false;
    }
    match c.autonomy {
        Autonomy::Proactive => e.kind.trigger_kind() == Some(c.trigger.kind),
        Autonomy::Reactive => {
            e.kind == EventKind::RequestReceived
                && e.requirement.as_deref() == Some(req.id.as_str())
                && e.requester.as_ref().is_some_and(|r| c.recipients.iter().any(|x| &x.name == r))
        }
    }
}

/// Recipients served when `req` fires for `e`.
fn recipients_for<'r>(req: &'r ExplanationRequirement, e: &Event) -> Vec<&'r RecipientClass> {
    let all = req.classification.recipients.iter();
    match req.classification.autonomy {
        Autonomy::Proactive => all.collect(),
        Autonomy::Reactive => all.filter(|r| Some(&r.name) == e.requester.as_ref()).collect(),
    }
}

fn actions_for(
    ctx: &DeliveryContext<'_>,
    e: &Event,
    req: &ExplanationRequirement,
    pre_decision: &mut Option<ProvGraph>,
) -> Result<Vec<DeliveryAction>, DeliveryError> {
    let c = &req.classification;
    let graph = match c.perspective {
        Perspective::ExAnte => &*pre_decision.get_or_insert_with(|| ctx.graph.pre_decision_view()),
        Perspective::ExPost => {
            match ctx.graph.decision_nodes(&e.subject) {
                Ok(nodes) if !nodes.is_empty() => {}
                Ok(_) | Err(ProvError::UnknownSubject(_)) => return Err(DeliveryError::StaleGraph(e.subject.clone())),
                Err(other) => unreachable!("decision lookup only fails on unknown subjects: {other}"),
            }
            ctx.graph
        }
    };
    let match_err = |source| DeliveryError::Match { requirement: req.id.clone(), source };
    let patterns = compile_patterns(req, ctx.patterns).map_err(match_err)?;
    let bindings = bind(&req.id, &patterns, graph, &e.subject).map_err(match_err)?;
    let timing = match c.autonomy {
        Autonomy::Proactive => Timing::Immediate,
        Autonomy::Reactive => Timing::OnRequestFulfilment,
    };
    let at = ctx.clock.unwrap_or(e.at);
    let mut out = Vec::new();
    for recipient in recipients_for(req, e) {
        let render_err = |source| DeliveryError::Render { requirement: req.id.clone(), source };
        let template = select_template(ctx.templates, req, recipient).map_err(render_err)?;
        let mode = if recipient.is_outward() { RenderMode::Strict } else { RenderMode::GapMarked };
        let explanation = match render(template, &bindings, req, recipient, mode, at) {
            Ok(instance) => Delivered::Rendered(Box::new(instance)),
            Err(RenderError::MissingContent(missing)) => Delivered::Deferred { missing },
            Err(other) => return Err(render_err(other)),
        };
        out.push(DeliveryAction {
            requirement_id: req.id.clone(),
            subject_id: e.subject.clone(),
            event: e.kind,
            recipients: vec![recipient.clone()],
            timing,
            priority: c.priority,
            duplicate: false,
            explanation,
        });
    }
    Ok(out)
}

/// Actions for one event, in registry order then recipient order.
pub fn on_event(ctx: &DeliveryContext<'_>, e: &Event) -> Result<Vec<DeliveryAction>, DeliveryError> {
    let mut pre_decision = None;
    let mut out = Vec::new();
    for req in ctx.registry.iter().filter(|r| fires(r, e)) {
        out.extend(actions_for(ctx, e, req, &mut pre_decision)?);
    }
    Ok(out)
}

/// Ex-ante proactive explanations for a processing announcement.
pub fn schedule_ex_ante(ctx: &DeliveryContext<'_>, announce: &Event) -> Result<Vec<DeliveryAction>, DeliveryError> {
    if announce.kind != EventKind::ProcessingAnnounced {
        return Err(DeliveryError::NotAnAnnouncement(announce.kind));
    }
    let mut pre_decision = None;
    let mut out = Vec::new();
    for req in ctx.registry.iter().filter(|r| {
        r.classification.perspective == Perspective::ExAnte
            && r.classification.autonomy == Autonomy::Proactive
            && fires(r, announce)
    }) {
        out.extend(actions_for(ctx, announce, req, &mut pre_decision)?);
    }
    Ok(out)
}

/// Serial event processor with an append-only action log.
#[derive(Debug)]
pub struct DeliveryEngine<'a> {
    ctx: DeliveryContext<'a>,
    served: BTreeSet<(String, String, String)>,
    log: Vec<DeliveryAction>,
}

impl<'a> DeliveryEngine<'a> {
    pub fn new(ctx: DeliveryContext<'a>) -> Self {
        Self { ctx, served: BTreeSet::new(), log: Vec::new() }
    }

    /// Process one event; returned actions are also appended to the log.
    pub fn handle(&mut self, e: &Event) -> Result<&[DeliveryAction], DeliveryError> {
        let start = self.log.len();
        for mut action in on_event(&self.ctx, e)? {
            for r in &action.recipients {
                let key = (action.requirement_id.clone(), action.subject_id.clone(), r.name.clone());
                if !self.served.insert(key) {
                    action.duplicate = true;
                }
            }
            self.log.push(action);
        }
        Ok(&self.log[start..])
    }

    pub fn replay(&mut self, events: &[Event]) -> Result<&[DeliveryAction], DeliveryError> {
        for e in events {
            self.handle(e)?;
        }
        Ok(&self.log)
    }

    pub fn log(&self) -> &[DeliveryAction] {
        &self.log
    }
}

/// Action log as JSON Lines.
pub fn action_log_jsonl(actions: &[DeliveryAction]) -> String {
    actions
        .iter()
        .map(|a| serde_json::to_string(a).expect("action serializes") + "\n")
        .collect()
}
