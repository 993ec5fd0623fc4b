//! Shared loaders for the shipped loan-scenario fixtures.
#![allow(dead_code)]

pub mod gen;

use std::path::PathBuf;

use chrono::{DateTime, FixedOffset};
use xbd_core::delivery::{parse_events, DeliveryContext, Event};
use xbd_core::matcher::{load_mapping, PatternMapping};
use xbd_core::prov::{ingest, ProvGraph};
use xbd_core::render::{load_templates, Template};
use xbd_core::{load_registry, Registry};

pub fn fixture_path(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("fixtures").join(name)
}

pub fn fixture(name: &str) -> String {
    std::fs::read_to_string(fixture_path(name)).unwrap_or_else(|e| panic!("reading {name}: {e}"))
}

pub fn instant(s: &str) -> DateTime<FixedOffset> {
    DateTime::parse_from_rfc3339(s).expect("valid instant")
}

pub const SUBJECT: &str = "applications_no/437";

pub struct Scenario {
    pub registry: Registry,
    pub graph: ProvGraph,
    pub patterns: PatternMapping,
    pub templates: Vec<Template>,
    pub events: Vec<Event>,
}

impl Scenario {
    pub fn load() -> Self {
        Scenario {
            registry: load_registry(&fixture("gdpr_registry.json")).expect("registry fixture"),
            graph: ingest(&fixture("loan_trail.jsonl")).expect("trail fixture"),
            patterns: load_mapping(&fixture("loan_patterns.json")).expect("pattern fixture"),
            templates: load_templates(&fixture("loan_templates.json")).expect("template fixture"),
            events: parse_events(&fixture("loan_events.jsonl")).expect("event fixture"),
        }
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

    pub fn event(&self, kind: xbd_core::delivery::EventKind) -> &Event {
        self.events.iter().find(|e| e.kind == kind).expect("event kind present in fixture log")
    }
}
