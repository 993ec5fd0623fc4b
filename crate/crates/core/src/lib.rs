//! Explainability-by-design toolkit.
//!
//! Classifies explanation requirements along a nine-dimension taxonomy,
//! exchanges them as RDF (Turtle), and turns them into concrete explanations by
//! matching each requirement's minimum content against a provenance audit trail.
//!
//! Pipeline: [`registry`] loads classified requirements, [`prov`] ingests the
//! audit trail, [`matcher`] binds minimum-content items to trail nodes,
//! [`render`] fills templates, and [`delivery`] decides when and to whom each
//! explanation goes.

pub mod coverage;
pub mod delivery;
pub mod matcher;
pub mod ontology;
pub mod prov;
pub mod registry;
pub mod render;
pub mod taxonomy;
pub mod turtle;

pub use registry::{load_registry, serialize_registry, ExplanationRequirement, Registry, RegistryError};
pub use taxonomy::{validate_classification, vocabulary, Classification, Goal, GoalFamily, RecipientClass};
