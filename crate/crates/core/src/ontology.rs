//! RDF encoding of the taxonomy vocabulary and of requirement instances.
//!
//! Each requirement becomes an `owl:NamedIndividual` linked to its dimension
//! values through nine object properties. Two-valued dimensions use shared
//! individuals (`plead:proactive`, `plead:ex_ante`, ...); goals, recipients and
//! minimum-content items get per-instance individuals suffixed with the
//! instance's 1-based position (`plead:fairness1`, `plead:consumer1`,
//! `plead:minimum1`). Those individuals also carry `rdfs:label` / `rdf:value`
//! annotations so that a full classification can be decoded again.

use std::collections::{BTreeMap, HashMap};

use crate::registry::ExplanationRequirement;
use crate::taxonomy::{
    Autonomy, Classification, Confidentiality, ContentItem, ContentSpec, Facing, Goal, Perspective,
    Priority, RecipientClass, Scope, Sensitivity, SourceKind, SourceRank, TriggerKind, TriggerSpec,
};
use crate::turtle::{parse_turtle, Term, TripleSet, TurtleError, OWL_NS, PLEAD_NS, RDFS_NS, RDF_NS, RDF_TYPE};

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum OntologyError {
    #[error("syntax error at line {line}, column {column}: expected {expected}")]
    Syntax { line: usize, column: usize, expected: String },
    #[error("unknown prefix `{0}`")]
    UnknownPrefix(String),
    #[error("`{subject}` has more than one `{property}`")]
    CardinalityViolation { subject: String, property: String },
    #[error("`{0}` cannot form a valid prefixed name")]
    UnserializableName(String),
    #[error("cannot decode `{subject}`: {message}")]
    Decode { subject: String, message: String },
}

impl From<TurtleError> for OntologyError {
    fn from(e: TurtleError) -> Self {
        match e {
            TurtleError::Syntax { line, column, expected } => OntologyError::Syntax { line, column, expected },
            TurtleError::UnknownPrefix(p) => OntologyError::UnknownPrefix(p),
        }
    }
}

/// The nine object properties, in taxonomy order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum DimensionProperty {
    Source,
    Perspective,
    Autonomy,
    Trigger,
    Content,
    Scope,
    Goal,
    IntendedRecipient,
    Priority,
}

impl DimensionProperty {
    pub const ALL: [DimensionProperty; 9] = [
        DimensionProperty::Source,
        DimensionProperty::Perspective,
        DimensionProperty::Autonomy,
        DimensionProperty::Trigger,
        DimensionProperty::Content,
        DimensionProperty::Scope,
        DimensionProperty::Goal,
        DimensionProperty::IntendedRecipient,
        DimensionProperty::Priority,
    ];

    pub fn property(self) -> &'static str {
        match self {
            DimensionProperty::Source => "hasSource",
            DimensionProperty::Perspective => "hasPerspective",
            DimensionProperty::Autonomy => "hasAutonomy",
            DimensionProperty::Trigger => "hasTrigger",
            DimensionProperty::Content => "hasContent",
            DimensionProperty::Scope => "hasScope",
            DimensionProperty::Goal => "hasGoal",
            DimensionProperty::IntendedRecipient => "hasIntendedRecipient",
            DimensionProperty::Priority => "hasPriority",
        }
    }

    pub fn class(self) -> &'static str {
        match self {
            DimensionProperty::Source => "Source",
            DimensionProperty::Perspective => "Perspective",
            DimensionProperty::Autonomy => "Autonomy",
            DimensionProperty::Trigger => "Trigger",
            DimensionProperty::Content => "Content",
            DimensionProperty::Scope => "Scope",
            DimensionProperty::Goal => "ExplainabilityGoal",
            DimensionProperty::IntendedRecipient => "IntendedRecipient",
            DimensionProperty::Priority => "Priority",
        }
    }

    pub fn is_single_valued(self) -> bool {
        matches!(
            self,
            DimensionProperty::Perspective
                | DimensionProperty::Autonomy
                | DimensionProperty::Scope
                | DimensionProperty::Priority
        )
    }

    pub fn iri(self) -> String {
        plead(self.property())
    }

    fn from_iri(iri: &str) -> Option<Self> {
        let local = iri.strip_prefix(PLEAD_NS)?;
        Self::ALL.into_iter().find(|d| d.property() == local)
    }
}

pub const EXPLANATION_CLASS: &str = "Explanation";
pub const EXAMPLE_PROPERTY: &str = "example";

pub fn plead(local: &str) -> String {
    format!("{PLEAD_NS}{local}")
}

fn rdf(local: &str) -> String {
    format!("{RDF_NS}{local}")
}

fn rdfs(local: &str) -> String {
    format!("{RDFS_NS}{local}")
}

fn owl(local: &str) -> String {
    format!("{OWL_NS}{local}")
}

/// A set of triples holding vocabulary declarations and/or instances.
#[derive(Debug, Clone, PartialEq, Eq, Default)]
pub struct OntologyDoc {
    pub triples: TripleSet,
}

impl OntologyDoc {
    fn typed(&self, class: &str) -> Vec<String> {
        let class = Term::iri(owl(class));
        let mut out: Vec<String> =
            self.triples.subjects_with(RDF_TYPE, &class).into_iter().map(str::to_string).collect();
        out.sort();
        out
    }

    pub fn classes(&self) -> Vec<String> {
        self.typed("Class")
    }

    pub fn object_properties(&self) -> Vec<String> {
        self.typed("ObjectProperty")
    }

    pub fn to_turtle(&self) -> String {
        self.triples.to_turtle()
    }
}

/// The taxonomy as an OWL vocabulary: `Explanation`, the nine dimension
/// classes, the nine object properties and the `example` string property.
pub fn emit_vocabulary() -> OntologyDoc {
    let mut t = TripleSet::new();
    let ontology = PLEAD_NS.trim_end_matches('#');
    t.add(ontology, RDF_TYPE, Term::iri(owl("Ontology")));

    let explanation = plead(EXPLANATION_CLASS);
    t.add(&explanation, RDF_TYPE, Term::iri(owl("Class")));
    t.add(&explanation, &rdfs("label"), Term::literal("Explanation"));

    for dim in DimensionProperty::ALL {
        let class = plead(dim.class());
        t.add(&class, RDF_TYPE, Term::iri(owl("Class")));
        t.add(&class, &rdfs("label"), Term::literal(dim.class()));

        let prop = dim.iri();
        t.add(&prop, RDF_TYPE, Term::iri(owl("ObjectProperty")));
        t.add(&prop, &rdfs("domain"), Term::iri(&explanation));
        t.add(&prop, &rdfs("range"), Term::iri(&class));
    }

    let example = plead(EXAMPLE_PROPERTY);
    t.add(&example, RDF_TYPE, Term::iri(owl("DatatypeProperty")));
    t.add(&example, &rdfs("domain"), Term::iri(&explanation));
    OntologyDoc { triples: t }
}

// ---------------------------------------------------------------------------
// Serialization of requirements
// ---------------------------------------------------------------------------

/// Local name of the individual shared by a two-valued dimension value.
fn shared_token(token: &str) -> String {
    token.to_string()
}

/// Lower-snake slug: `Art. 22` -> `art_22`.
pub fn slug(text: &str) -> String {
    let mut out = String::new();
    for c in text.chars() {
        if c.is_ascii_alphanumeric() {
            out.push(c.to_ascii_lowercase());
        } else if !out.ends_with('_') {
            out.push('_');
        }
    }
    out.trim_matches('_').to_string()
}

fn source_kind_token(kind: SourceKind) -> &'static str {
    match kind {
        SourceKind::PrimaryExplicit => "explicit",
        SourceKind::PrimaryImplicit => "implicit",
        SourceKind::Secondary => "secondary",
        SourceKind::Tertiary => "tertiary",
    }
}

pub fn source_individual(source: &SourceRank) -> String {
    let base = source_kind_token(source.kind);
    let s = slug(&source.citation);
    if s.is_empty() {
        base.to_string()
    } else {
        format!("{base}_{s}")
    }
}

fn recipient_base(name: &str) -> &str {
    if name == "data_subject" {
        "consumer"
    } else {
        name
    }
}

const CLASS_STOPWORDS: &[&str] = &["of", "the", "a", "an"];

/// Requirement-specific class name derived from its label:
/// `Existence of automated decision-making` -> `ExistenceAutomatedDecisionMaking`.
pub fn requirement_class_name(label: &str) -> String {
    label
        .split(|c: char| !c.is_ascii_alphanumeric())
        .filter(|w| !w.is_empty() && !CLASS_STOPWORDS.contains(&w.to_ascii_lowercase().as_str()))
        .map(|w| {
            let mut cs = w.chars();
            let first = cs.next().map(|c| c.to_ascii_uppercase()).unwrap_or_default();
            std::iter::once(first).chain(cs).collect::<String>()
        })
        .collect()
}

/// Tracks every individual emitted so that two different meanings never
/// share one name.
#[derive(Default)]
struct NameTable {
    owners: HashMap<String, String>,
}

impl NameTable {
    fn claim(&mut self, name: &str, meaning: String) -> Result<(), OntologyError> {
        if !crate::turtle::is_local_name(name) {
            return Err(OntologyError::UnserializableName(name.to_string()));
        }
        match self.owners.get(name) {
            Some(existing) if *existing != meaning => Err(OntologyError::UnserializableName(name.to_string())),
            Some(_) => Ok(()),
            None => {
                self.owners.insert(name.to_string(), meaning);
                Ok(())
            }
        }
    }
}

fn content_individual(position: usize, k: usize) -> String {
    if k == 1 {
        format!("minimum{position}")
    } else {
        format!("minimum{position}_{k}")
    }
}

/// Triples for a list of requirements, without vocabulary declarations.
pub fn requirement_triples(reqs: &[ExplanationRequirement]) -> Result<TripleSet, OntologyError> {
    let mut t = TripleSet::new();
    let mut names = NameTable::default();
    let named = Term::iri(owl("NamedIndividual"));
    let label = rdfs("label");
    let value = rdf("value");

    let class_of: HashMap<&str, String> =
        reqs.iter().map(|r| (r.id.as_str(), requirement_class_name(&r.label))).collect();

    for (i, req) in reqs.iter().enumerate() {
        let n = i + 1;
        let c = &req.classification;
        names.claim(&req.id, format!("requirement {}", req.id))?;
        let subject = plead(&req.id);

        let class_name = &class_of[req.id.as_str()];
        if class_name.is_empty() {
            return Err(OntologyError::UnserializableName(req.label.clone()));
        }
        names.claim(class_name, format!("class of {}", req.id))?;
        let class = plead(class_name);
        t.add(&class, RDF_TYPE, Term::iri(owl("Class")));
        t.add(&class, &label, Term::literal(&req.label));
        let superclass = match req.parent.as_deref().and_then(|p| class_of.get(p)) {
            Some(parent_class) => plead(parent_class),
            None => plead(EXPLANATION_CLASS),
        };
        t.add(&class, &rdfs("subClassOf"), Term::iri(superclass));

        t.add(&subject, RDF_TYPE, named.clone());
        t.add(&subject, RDF_TYPE, Term::iri(&class));

        let link = |t: &mut TripleSet, dim: DimensionProperty, local: &str| {
            t.add(&subject, &dim.iri(), Term::iri(plead(local)));
        };

        for source in &c.sources {
            let ind = source_individual(source);
            names.claim(&ind, format!("source {:?} {}", source.kind, source.citation))?;
            link(&mut t, DimensionProperty::Source, &ind);
            let iri = plead(&ind);
            t.add(&iri, RDF_TYPE, named.clone());
            t.add(&iri, RDF_TYPE, Term::iri(plead(DimensionProperty::Source.class())));
            if !source.citation.is_empty() {
                t.add(&iri, &label, Term::literal(&source.citation));
            }
        }

        for (dim, token) in [
            (DimensionProperty::Perspective, c.perspective.token()),
            (DimensionProperty::Autonomy, c.autonomy.token()),
            (DimensionProperty::Scope, c.scope.token()),
            (DimensionProperty::Priority, c.priority.token()),
            (DimensionProperty::Content, c.content.sensitivity.token()),
            (DimensionProperty::Content, c.content.confidentiality.token()),
        ] {
            let ind = shared_token(token);
            names.claim(&ind, format!("{dim:?} {token}"))?;
            link(&mut t, dim, &ind);
        }

        let trigger = &c.trigger.event;
        names.claim(trigger, format!("trigger {} {}", c.trigger.kind, trigger))?;
        link(&mut t, DimensionProperty::Trigger, trigger);
        let trigger_iri = plead(trigger);
        t.add(&trigger_iri, RDF_TYPE, named.clone());
        t.add(&trigger_iri, RDF_TYPE, Term::iri(plead(DimensionProperty::Trigger.class())));
        t.add(&trigger_iri, &value, Term::literal(c.trigger.kind.token()));

        for (k, item) in c.content.minimum.iter().enumerate() {
            let ind = content_individual(n, k + 1);
            names.claim(&ind, format!("content {} of {}", item.id, req.id))?;
            link(&mut t, DimensionProperty::Content, &ind);
            let iri = plead(&ind);
            t.add(&iri, RDF_TYPE, named.clone());
            t.add(&iri, RDF_TYPE, Term::iri(plead(DimensionProperty::Content.class())));
            t.add(&iri, &label, Term::literal(&item.description));
            t.add(&iri, &value, Term::literal(&item.id));
        }

        for goal in &c.goals {
            let ind = format!("{}{n}", goal.token());
            names.claim(&ind, format!("goal {goal} of {}", req.id))?;
            link(&mut t, DimensionProperty::Goal, &ind);
            let iri = plead(&ind);
            t.add(&iri, RDF_TYPE, named.clone());
            t.add(&iri, RDF_TYPE, Term::iri(plead(DimensionProperty::Goal.class())));
        }

        for r in &c.recipients {
            let ind = format!("{}{n}", recipient_base(&r.name));
            names.claim(&ind, format!("recipient {} of {}", r.name, req.id))?;
            link(&mut t, DimensionProperty::IntendedRecipient, &ind);
            let iri = plead(&ind);
            t.add(&iri, RDF_TYPE, named.clone());
            t.add(&iri, RDF_TYPE, Term::iri(plead(DimensionProperty::IntendedRecipient.class())));
            t.add(&iri, &label, Term::literal(&r.name));
            t.add(&iri, &value, Term::literal(r.facing.token()));
        }

        if let Some(example) = &req.example {
            t.add(&subject, &plead(EXAMPLE_PROPERTY), Term::literal(example));
        }
    }
    Ok(t)
}

/// Turtle text for a list of requirements. Output is byte-identical for
/// identical input.
pub fn to_turtle(reqs: &[ExplanationRequirement]) -> Result<String, OntologyError> {
    Ok(requirement_triples(reqs)?.to_turtle())
}

// ---------------------------------------------------------------------------
// Parsing instances
// ---------------------------------------------------------------------------

/// One named individual carrying at least one dimension property.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ParsedInstance {
    /// Local name within the `plead:` namespace (or the full IRI otherwise).
    pub name: String,
    /// Local names of the individuals linked through each dimension property,
    /// sorted.
    pub values: BTreeMap<DimensionProperty, Vec<String>>,
    pub example: Option<String>,
}

impl ParsedInstance {
    pub fn values_of(&self, dim: DimensionProperty) -> &[String] {
        self.values.get(&dim).map(Vec::as_slice).unwrap_or(&[])
    }
}

fn local(iri: &str) -> String {
    iri.strip_prefix(PLEAD_NS).unwrap_or(iri).to_string()
}

/// Extract requirement instances from an already parsed triple set.
pub fn instances_from_triples(set: &TripleSet) -> Result<Vec<ParsedInstance>, OntologyError> {
    let named = Term::iri(owl("NamedIndividual"));
    let example_iri = plead(EXAMPLE_PROPERTY);
    let mut subjects: Vec<&str> = set.subjects_with(RDF_TYPE, &named);
    subjects.sort();
    subjects.dedup();

    let mut out = Vec::new();
    for subject in subjects {
        let mut values: BTreeMap<DimensionProperty, Vec<String>> = BTreeMap::new();
        let mut examples = Vec::new();
        for triple in set.iter().filter(|t| t.subject == subject) {
            if let Some(dim) = DimensionProperty::from_iri(&triple.predicate) {
                let token = match &triple.object {
                    Term::Iri(iri) => local(iri),
                    Term::Literal(s) => s.clone(),
                };
                values.entry(dim).or_default().push(token);
            } else if triple.predicate == example_iri {
                if let Term::Literal(s) = &triple.object {
                    examples.push(s.clone());
                }
            }
        }
        if values.is_empty() {
            continue;
        }
        for (dim, vals) in &values {
            if dim.is_single_valued() && vals.len() > 1 {
                return Err(OntologyError::CardinalityViolation {
                    subject: local(subject),
                    property: format!("plead:{}", dim.property()),
                });
            }
        }
        for vals in values.values_mut() {
            vals.sort();
        }
        out.push(ParsedInstance { name: local(subject), values, example: examples.into_iter().next() });
    }
    Ok(out)
}

/// Parse Turtle text into requirement instances. Individuals not known to the
/// taxonomy are kept as opaque local names.
pub fn from_turtle(text: &str) -> Result<Vec<ParsedInstance>, OntologyError> {
    let set = parse_turtle(text)?;
    instances_from_triples(&set)
}

// ---------------------------------------------------------------------------
// Decoding instances back into requirements
// ---------------------------------------------------------------------------

fn decode_err(subject: &str, message: impl Into<String>) -> OntologyError {
    OntologyError::Decode { subject: subject.to_string(), message: message.into() }
}

fn literal_of(set: &TripleSet, local_name: &str, predicate: &str) -> Option<String> {
    set.objects(&plead(local_name), predicate).into_iter().find_map(|o| o.as_literal().map(str::to_string))
}

fn strip_suffix_digits(s: &str) -> &str {
    s.trim_end_matches(|c: char| c.is_ascii_digit())
}

fn single(inst: &ParsedInstance, dim: DimensionProperty) -> Result<&str, OntologyError> {
    match inst.values_of(dim) {
        [one] => Ok(one),
        [] => Err(decode_err(&inst.name, format!("missing plead:{}", dim.property()))),
        _ => Err(OntologyError::CardinalityViolation {
            subject: inst.name.clone(),
            property: format!("plead:{}", dim.property()),
        }),
    }
}

fn parse_token<T: std::str::FromStr>(inst: &ParsedInstance, token: &str) -> Result<T, OntologyError> {
    token.parse().map_err(|_| decode_err(&inst.name, format!("unknown value `{token}`")))
}

/// Minimum-content individual position: `minimum3` -> (3, 1), `minimum3_2` -> (3, 2).
fn content_position(name: &str) -> Option<(usize, usize)> {
    let rest = name.strip_prefix("minimum")?;
    match rest.split_once('_') {
        Some((n, k)) => Some((n.parse().ok()?, k.parse().ok()?)),
        None => Some((rest.parse().ok()?, 1)),
    }
}

fn decode_classification(inst: &ParsedInstance, set: &TripleSet) -> Result<Classification, OntologyError> {
    let label = rdfs("label");
    let value = rdf("value");

    let sources = inst
        .values_of(DimensionProperty::Source)
        .iter()
        .map(|ind| {
            let (kind_token, rest) = ind.split_once('_').unwrap_or((ind.as_str(), ""));
            let kind = match kind_token {
                "explicit" => SourceKind::PrimaryExplicit,
                "implicit" => SourceKind::PrimaryImplicit,
                "secondary" => SourceKind::Secondary,
                "tertiary" => SourceKind::Tertiary,
                other => return Err(decode_err(&inst.name, format!("unknown source `{other}`"))),
            };
            let citation = literal_of(set, ind, &label).unwrap_or_else(|| rest.to_string());
            Ok(SourceRank::new(kind, citation))
        })
        .collect::<Result<Vec<_>, _>>()?;

    let trigger_name = inst
        .values_of(DimensionProperty::Trigger)
        .first()
        .ok_or_else(|| decode_err(&inst.name, "missing plead:hasTrigger"))?;
    let trigger_kind = literal_of(set, trigger_name, &value)
        .ok_or_else(|| decode_err(trigger_name, "trigger kind (rdf:value) missing"))?;
    let trigger = TriggerSpec { kind: parse_token::<TriggerKind>(inst, &trigger_kind)?, event: trigger_name.clone() };

    let mut sensitivity = None;
    let mut confidentiality = None;
    let mut items: Vec<((usize, usize), ContentItem)> = Vec::new();
    for ind in inst.values_of(DimensionProperty::Content) {
        if let Ok(s) = ind.parse::<Sensitivity>() {
            sensitivity = Some(s);
        } else if let Ok(c) = ind.parse::<Confidentiality>() {
            confidentiality = Some(c);
        } else {
            let pos = content_position(ind)
                .ok_or_else(|| decode_err(&inst.name, format!("unrecognised content value `{ind}`")))?;
            let id = literal_of(set, ind, &value).unwrap_or_else(|| ind.clone());
            let description = literal_of(set, ind, &label).unwrap_or_default();
            items.push((pos, ContentItem::new(id, description)));
        }
    }
    items.sort_by_key(|(pos, _)| *pos);

    let goals = inst
        .values_of(DimensionProperty::Goal)
        .iter()
        .map(|ind| parse_token::<Goal>(inst, strip_suffix_digits(ind)))
        .collect::<Result<Vec<_>, _>>()?;

    let recipients = inst
        .values_of(DimensionProperty::IntendedRecipient)
        .iter()
        .map(|ind| {
            let name = literal_of(set, ind, &label).unwrap_or_else(|| {
                match strip_suffix_digits(ind) {
                    "consumer" => "data_subject".to_string(),
                    other => other.to_string(),
                }
            });
            let facing = match literal_of(set, ind, &value) {
                Some(f) => parse_token::<Facing>(inst, &f)?,
                None => crate::taxonomy::core_recipient_facing(&name)
                    .ok_or_else(|| decode_err(ind, "recipient facing missing"))?,
            };
            Ok(RecipientClass::new(facing, name))
        })
        .collect::<Result<Vec<_>, OntologyError>>()?;

    Ok(Classification {
        sources,
        perspective: parse_token::<Perspective>(inst, single(inst, DimensionProperty::Perspective)?)?,
        autonomy: parse_token::<Autonomy>(inst, single(inst, DimensionProperty::Autonomy)?)?,
        trigger,
        content: ContentSpec {
            sensitivity: sensitivity.ok_or_else(|| decode_err(&inst.name, "sensitivity missing"))?,
            confidentiality: confidentiality.ok_or_else(|| decode_err(&inst.name, "confidentiality missing"))?,
            minimum: items.into_iter().map(|(_, item)| item).collect(),
        },
        scope: parse_token::<Scope>(inst, single(inst, DimensionProperty::Scope)?)?,
        goals,
        recipients,
        priority: parse_token::<Priority>(inst, single(inst, DimensionProperty::Priority)?)?,
    })
}

/// Rebuild requirements from Turtle written by [`to_turtle`]. Instances are
/// returned in the order of their minimum-content position suffix.
pub fn requirements_from_turtle(text: &str) -> Result<Vec<ExplanationRequirement>, OntologyError> {
    let set = parse_turtle(text)?;
    let instances = instances_from_triples(&set)?;
    let named = owl("NamedIndividual");
    let class_label = rdfs("label");
    let sub_class = rdfs("subClassOf");

    // requirement class IRI -> requirement id
    let mut class_owner: HashMap<String, String> = HashMap::new();
    let mut decoded = Vec::new();
    for inst in &instances {
        let classification = decode_classification(inst, &set)?;
        let class = set
            .objects(&plead(&inst.name), RDF_TYPE)
            .into_iter()
            .filter_map(Term::as_iri)
            .find(|c| *c != named)
            .map(str::to_string)
            .ok_or_else(|| decode_err(&inst.name, "requirement class missing"))?;
        let label = set
            .objects(&class, &class_label)
            .into_iter()
            .find_map(|o| o.as_literal().map(str::to_string))
            .unwrap_or_else(|| local(&class));
        let position = inst
            .values_of(DimensionProperty::Content)
            .iter()
            .filter_map(|v| content_position(v))
            .map(|(n, _)| n)
            .min()
            .unwrap_or(usize::MAX);
        class_owner.insert(class.clone(), inst.name.clone());
        decoded.push((position, inst, class, label, classification));
    }
    decoded.sort_by(|a, b| a.0.cmp(&b.0).then_with(|| a.1.name.cmp(&b.1.name)));

    let explanation = plead(EXPLANATION_CLASS);
    Ok(decoded
        .into_iter()
        .map(|(_, inst, class, label, classification)| {
            let parent = set
                .objects(&class, &sub_class)
                .into_iter()
                .filter_map(Term::as_iri)
                .find(|c| *c != explanation)
                .and_then(|c| class_owner.get(c).cloned());
            ExplanationRequirement {
                id: inst.name.clone(),
                label,
                parent,
                classification,
                example: inst.example.clone(),
            }
        })
        .collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn vocabulary_counts() {
        let doc = emit_vocabulary();
        assert_eq!(doc.classes().len(), 10);
        assert_eq!(doc.object_properties().len(), 9);
    }

    #[test]
    fn every_property_has_explanation_domain_and_dimension_range() {
        let doc = emit_vocabulary();
        for dim in DimensionProperty::ALL {
            let domain: Vec<_> = doc.triples.objects(&dim.iri(), &rdfs("domain"));
            let range: Vec<_> = doc.triples.objects(&dim.iri(), &rdfs("range"));
            assert_eq!(domain, vec![&Term::iri(plead("Explanation"))]);
            assert_eq!(range, vec![&Term::iri(plead(dim.class()))]);
        }
    }

    #[test]
    fn class_names_from_labels() {
        assert_eq!(
            requirement_class_name("Existence of automated decision-making"),
            "ExistenceAutomatedDecisionMaking"
        );
        assert_eq!(requirement_class_name("Were there alternatives & why they weren't preferred"),
            "WereThereAlternativesWhyTheyWerenTPreferred");
    }

    #[test]
    fn source_names() {
        assert_eq!(source_individual(&SourceRank::new(SourceKind::PrimaryImplicit, "Art. 22")), "implicit_art_22");
        assert_eq!(source_individual(&SourceRank::new(SourceKind::Secondary, "")), "secondary");
    }

    #[test]
    fn content_positions() {
        assert_eq!(content_position("minimum3"), Some((3, 1)));
        assert_eq!(content_position("minimum12_4"), Some((12, 4)));
        assert_eq!(content_position("aggregated"), None);
    }

    #[test]
    fn repeated_single_valued_property() {
        let text = "plead:x rdf:type owl:NamedIndividual ; plead:hasPerspective plead:ex_ante , plead:ex_post .";
        assert_eq!(
            from_turtle(text).unwrap_err(),
            OntologyError::CardinalityViolation { subject: "x".into(), property: "plead:hasPerspective".into() }
        );
    }

    #[test]
    fn individuals_without_dimension_properties_are_not_instances() {
        let text = "plead:fairness1 rdf:type owl:NamedIndividual , plead:ExplainabilityGoal .";
        assert!(from_turtle(text).unwrap().is_empty());
    }

    #[test]
    fn empty_list_is_prefixes_only() {
        let text = to_turtle(&[]).unwrap();
        assert!(text.lines().all(|l| l.starts_with("@prefix")));
    }
}
