//! A small Turtle reader and writer.
//!
//! Supported: `@prefix` directives, prefixed names, `<IRI>` references, the
//! `a` keyword, predicate lists (`;`), object lists (`,`), plain quoted string
//! literals with `\"`, `\\`, `\n`, `\r` and `\t` escapes, and `#` comments.
//! Blank nodes, collections, numeric shorthand and typed or tagged literals are
//! rejected with a syntax error.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt::Write as _;

pub const RDF_NS: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#";
pub const RDFS_NS: &str = "http://www.w3.org/2000/01/rdf-schema#";
pub const OWL_NS: &str = "http://www.w3.org/2002/07/owl#";
pub const PLEAD_NS: &str = "https://openprovenance.org/ns/plead#";
pub const RDF_TYPE: &str = "http://www.w3.org/1999/02/22-rdf-syntax-ns#type";

#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Term {
    Iri(String),
    Literal(String),
}

impl Term {
    pub fn iri(s: impl Into<String>) -> Self {
        Term::Iri(s.into())
    }

    pub fn literal(s: impl Into<String>) -> Self {
        Term::Literal(s.into())
    }

    pub fn as_iri(&self) -> Option<&str> {
        match self {
            Term::Iri(s) => Some(s),
            Term::Literal(_) => None,
        }
    }

    pub fn as_literal(&self) -> Option<&str> {
        match self {
            Term::Literal(s) => Some(s),
            Term::Iri(_) => None,
        }
    }
}

/// A triple with fully expanded IRIs.
#[derive(Debug, Clone, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub struct Triple {
    pub subject: String,
    pub predicate: String,
    pub object: Term,
}

impl Triple {
    pub fn new(subject: impl Into<String>, predicate: impl Into<String>, object: Term) -> Self {
        Self { subject: subject.into(), predicate: predicate.into(), object }
    }
}

#[derive(Debug, Clone, PartialEq, Eq, thiserror::Error)]
pub enum TurtleError {
    #[error("syntax error at line {line}, column {column}: expected {expected}")]
    Syntax { line: usize, column: usize, expected: String },
    #[error("unknown prefix `{0}`")]
    UnknownPrefix(String),
}

/// Set of triples plus the prefix map used to abbreviate them.
///
/// Equality is triple-set equality; prefixes are presentation only.
#[derive(Debug, Clone)]
pub struct TripleSet {
    prefixes: BTreeMap<String, String>,
    triples: BTreeSet<Triple>,
}

impl PartialEq for TripleSet {
    fn eq(&self, other: &Self) -> bool {
        self.triples == other.triples
    }
}

impl Eq for TripleSet {}

impl Default for TripleSet {
    fn default() -> Self {
        Self::new()
    }
}

pub fn default_prefixes() -> BTreeMap<String, String> {
    [("plead", PLEAD_NS), ("rdf", RDF_NS), ("rdfs", RDFS_NS), ("owl", OWL_NS)]
        .into_iter()
        .map(|(p, ns)| (p.to_string(), ns.to_string()))
        .collect()
}

impl TripleSet {
    pub fn new() -> Self {
        Self { prefixes: default_prefixes(), triples: BTreeSet::new() }
    }

    /// Returns false when the triple was already present.
    pub fn insert(&mut self, triple: Triple) -> bool {
        self.triples.insert(triple)
    }

    pub fn add(&mut self, subject: &str, predicate: &str, object: Term) {
        self.triples.insert(Triple::new(subject, predicate, object));
    }

    pub fn add_prefix(&mut self, prefix: impl Into<String>, namespace: impl Into<String>) {
        self.prefixes.insert(prefix.into(), namespace.into());
    }

    pub fn prefixes(&self) -> &BTreeMap<String, String> {
        &self.prefixes
    }

    pub fn len(&self) -> usize {
        self.triples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.triples.is_empty()
    }

    pub fn iter(&self) -> impl Iterator<Item = &Triple> {
        self.triples.iter()
    }

    pub fn contains(&self, triple: &Triple) -> bool {
        self.triples.contains(triple)
    }

    pub fn extend(&mut self, other: TripleSet) {
        self.prefixes.extend(other.prefixes);
        self.triples.extend(other.triples);
    }

    pub fn objects(&self, subject: &str, predicate: &str) -> Vec<&Term> {
        self.triples.iter().filter(|t| t.subject == subject && t.predicate == predicate).map(|t| &t.object).collect()
    }

    pub fn subjects_with(&self, predicate: &str, object: &Term) -> Vec<&str> {
        self.triples.iter().filter(|t| t.predicate == predicate && &t.object == object).map(|t| t.subject.as_str()).collect()
    }

    /// Abbreviate an IRI with the longest matching namespace, if the remainder
    /// is a valid local name.
    pub fn compact(&self, iri: &str) -> Option<String> {
        self.prefixes
            .iter()
            .filter(|(_, ns)| iri.starts_with(ns.as_str()))
            .max_by_key(|(_, ns)| ns.len())
            .and_then(|(p, ns)| {
                let local = &iri[ns.len()..];
                is_local_name(local).then(|| format!("{p}:{local}"))
            })
    }

    fn write_iri(&self, out: &mut String, iri: &str) {
        match self.compact(iri) {
            Some(short) => out.push_str(&short),
            None => {
                let _ = write!(out, "<{iri}>");
            }
        }
    }

    fn write_term(&self, out: &mut String, term: &Term) {
        match term {
            Term::Iri(iri) => self.write_iri(out, iri),
            Term::Literal(s) => write_literal(out, s),
        }
    }

    /// Deterministic Turtle text: subjects sorted, `rdf:type` first, then
    /// predicates with IRI objects, then literal-valued predicates.
    pub fn to_turtle(&self) -> String {
        let mut out = String::new();
        for (p, ns) in &self.prefixes {
            let _ = writeln!(out, "@prefix {p}: <{ns}> .");
        }

        let mut by_subject: BTreeMap<&str, BTreeMap<&str, Vec<&Term>>> = BTreeMap::new();
        for t in &self.triples {
            by_subject.entry(&t.subject).or_default().entry(&t.predicate).or_default().push(&t.object);
        }

        for (subject, predicates) in by_subject {
            out.push('\n');
            let _ = writeln!(out, "### {subject}");
            self.write_iri(&mut out, subject);
            let mut preds: Vec<(&str, Vec<&Term>)> = predicates.into_iter().collect();
            preds.sort_by_key(|(p, objs)| {
                let literal = objs.iter().any(|o| matches!(o, Term::Literal(_)));
                (*p != RDF_TYPE, literal, *p)
            });
            for (pi, (predicate, objects)) in preds.iter().enumerate() {
                if pi == 0 {
                    out.push(' ');
                } else {
                    out.push_str(" ;\n    ");
                }
                self.write_iri(&mut out, predicate);
                for (oi, object) in objects.iter().enumerate() {
                    if oi == 0 {
                        out.push(' ');
                    } else {
                        out.push_str(" ,\n        ");
                    }
                    self.write_term(&mut out, object);
                }
            }
            out.push_str(" .\n");
        }
        out
    }
}

fn write_literal(out: &mut String, s: &str) {
    out.push('"');
    for c in s.chars() {
        match c {
            '"' => out.push_str("\\\""),
            '\\' => out.push_str("\\\\"),
            '\n' => out.push_str("\\n"),
            '\r' => out.push_str("\\r"),
            '\t' => out.push_str("\\t"),
            c => out.push(c),
        }
    }
    out.push('"');
}

fn is_name_start(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_'
}

fn is_name_char(c: char) -> bool {
    c.is_ascii_alphanumeric() || c == '_' || c == '-'
}

/// Local names accepted by this reader: `[A-Za-z0-9_][A-Za-z0-9_-]*`.
pub fn is_local_name(s: &str) -> bool {
    let mut chars = s.chars();
    matches!(chars.next(), Some(c) if is_name_start(c)) && chars.all(is_name_char)
}

fn is_prefix_name(s: &str) -> bool {
    s.is_empty() || (s.starts_with(|c: char| c.is_ascii_alphabetic()) && s.chars().all(is_name_char))
}

// ---------------------------------------------------------------------------
// Reader
// ---------------------------------------------------------------------------

#[derive(Debug, Clone, PartialEq)]
enum Tok {
    PrefixDirective,
    Iri(String),
    PName(String, String),
    A,
    Literal(String),
    Dot,
    Semi,
    Comma,
}

#[derive(Debug, Clone)]
struct Spanned {
    tok: Tok,
    line: usize,
    column: usize,
}

struct Lexer<'a> {
    chars: std::iter::Peekable<std::str::Chars<'a>>,
    line: usize,
    column: usize,
}

impl<'a> Lexer<'a> {
    fn new(text: &'a str) -> Self {
        Self { chars: text.chars().peekable(), line: 1, column: 1 }
    }

    fn bump(&mut self) -> Option<char> {
        let c = self.chars.next()?;
        if c == '\n' {
            self.line += 1;
            self.column = 1;
        } else {
            self.column += 1;
        }
        Some(c)
    }

    fn err(&self, expected: &str) -> TurtleError {
        TurtleError::Syntax { line: self.line, column: self.column, expected: expected.to_string() }
    }

    fn tokens(mut self) -> Result<Vec<Spanned>, TurtleError> {
        let mut out = Vec::new();
        loop {
            while let Some(&c) = self.chars.peek() {
                if c.is_whitespace() {
                    self.bump();
                } else if c == '#' {
                    while let Some(&c) = self.chars.peek() {
                        if c == '\n' {
                            break;
                        }
                        self.bump();
                    }
                } else {
                    break;
                }
            }
            let (line, column) = (self.line, self.column);
            let Some(&c) = self.chars.peek() else { break };
            let tok = match c {
                '.' => {
                    self.bump();
                    Tok::Dot
                }
                ';' => {
                    self.bump();
                    Tok::Semi
                }
                ',' => {
                    self.bump();
                    Tok::Comma
                }
                '<' => {
                    self.bump();
                    let mut iri = String::new();
                    loop {
                        match self.bump() {
                            Some('>') => break,
                            Some(c) if !c.is_whitespace() && c != '<' && c != '"' => iri.push(c),
                            _ => return Err(self.err("`>` closing the IRI")),
                        }
                    }
                    Tok::Iri(iri)
                }
                '"' => {
                    self.bump();
                    let s = self.string_body()?;
                    if matches!(self.chars.peek(), Some('@') | Some('^')) {
                        return Err(self.err("plain string literal (language tags and datatypes are unsupported)"));
                    }
                    Tok::Literal(s)
                }
                '@' => {
                    self.bump();
                    let word = self.word();
                    if word != "prefix" {
                        return Err(TurtleError::Syntax { line, column, expected: "`@prefix`".into() });
                    }
                    Tok::PrefixDirective
                }
                c if is_name_start(c) || c == ':' => {
                    let word = self.word();
                    if word == "a" && self.chars.peek() != Some(&':') {
                        Tok::A
                    } else {
                        match word.split_once(':') {
                            Some((p, l)) if is_prefix_name(p) && (l.is_empty() || is_local_name(l)) => {
                                Tok::PName(p.to_string(), l.to_string())
                            }
                            _ => {
                                return Err(TurtleError::Syntax {
                                    line,
                                    column,
                                    expected: "prefixed name".into(),
                                })
                            }
                        }
                    }
                }
                _ => return Err(self.err("term, `.`, `;` or `,`")),
            };
            out.push(Spanned { tok, line, column });
        }
        Ok(out)
    }

    /// Name-ish run. A `.` is part of the word only when followed by a name char.
    fn word(&mut self) -> String {
        let mut s = String::new();
        while let Some(&c) = self.chars.peek() {
            if is_name_char(c) || c == ':' {
                s.push(c);
                self.bump();
            } else if c == '.' {
                let mut ahead = self.chars.clone();
                ahead.next();
                if matches!(ahead.peek(), Some(&n) if is_name_char(n)) {
                    s.push(c);
                    self.bump();
                } else {
                    break;
                }
            } else {
                break;
            }
        }
        s
    }

    fn string_body(&mut self) -> Result<String, TurtleError> {
        let mut s = String::new();
        loop {
            match self.bump() {
                Some('"') => return Ok(s),
                Some('\\') => match self.bump() {
                    Some('"') => s.push('"'),
                    Some('\\') => s.push('\\'),
                    Some('n') => s.push('\n'),
                    Some('r') => s.push('\r'),
                    Some('t') => s.push('\t'),
                    _ => return Err(self.err("escape sequence (\\\", \\\\, \\n, \\r, \\t)")),
                },
                Some('\n') | None => return Err(self.err("`\"` closing the string")),
                Some(c) => s.push(c),
            }
        }
    }
}

struct Parser {
    toks: Vec<Spanned>,
    pos: usize,
    end: (usize, usize),
    set: TripleSet,
}

impl Parser {
    fn peek(&self) -> Option<&Tok> {
        self.toks.get(self.pos).map(|s| &s.tok)
    }

    fn err(&self, expected: &str) -> TurtleError {
        let (line, column) =
            self.toks.get(self.pos).map(|s| (s.line, s.column)).unwrap_or(self.end);
        TurtleError::Syntax { line, column, expected: expected.to_string() }
    }

    fn next(&mut self) -> Option<Tok> {
        let t = self.toks.get(self.pos).map(|s| s.tok.clone());
        self.pos += 1;
        t
    }

    fn expect(&mut self, tok: Tok, what: &str) -> Result<(), TurtleError> {
        if self.peek() == Some(&tok) {
            self.pos += 1;
            Ok(())
        } else {
            Err(self.err(what))
        }
    }

    fn expand(&self, prefix: &str, local: &str) -> Result<String, TurtleError> {
        self.set
            .prefixes
            .get(prefix)
            .map(|ns| format!("{ns}{local}"))
            .ok_or_else(|| TurtleError::UnknownPrefix(prefix.to_string()))
    }

    fn iri_term(&mut self, what: &str) -> Result<String, TurtleError> {
        match self.peek().cloned() {
            Some(Tok::Iri(iri)) => {
                self.pos += 1;
                Ok(iri)
            }
            Some(Tok::PName(p, l)) => {
                let iri = self.expand(&p, &l)?;
                self.pos += 1;
                Ok(iri)
            }
            _ => Err(self.err(what)),
        }
    }

    fn parse(mut self) -> Result<TripleSet, TurtleError> {
        while let Some(tok) = self.peek().cloned() {
            if tok == Tok::PrefixDirective {
                self.pos += 1;
                let prefix = match self.next() {
                    Some(Tok::PName(p, l)) if l.is_empty() => p,
                    _ => {
                        self.pos -= 1;
                        return Err(self.err("prefix name such as `plead:`"));
                    }
                };
                let ns = match self.next() {
                    Some(Tok::Iri(iri)) => iri,
                    _ => {
                        self.pos -= 1;
                        return Err(self.err("namespace IRI"));
                    }
                };
                self.expect(Tok::Dot, "`.` after prefix declaration")?;
                self.set.prefixes.insert(prefix, ns);
            } else {
                self.statement()?;
            }
        }
        Ok(self.set)
    }

    fn statement(&mut self) -> Result<(), TurtleError> {
        let subject = self.iri_term("subject")?;
        loop {
            let predicate = if self.peek() == Some(&Tok::A) {
                self.pos += 1;
                RDF_TYPE.to_string()
            } else {
                self.iri_term("predicate")?
            };
            loop {
                let object = match self.peek().cloned() {
                    Some(Tok::Literal(s)) => {
                        self.pos += 1;
                        Term::Literal(s)
                    }
                    _ => Term::Iri(self.iri_term("object")?),
                };
                self.set.insert(Triple::new(subject.clone(), predicate.clone(), object));
                if self.peek() == Some(&Tok::Comma) {
                    self.pos += 1;
                } else {
                    break;
                }
            }
            match self.peek() {
                Some(Tok::Semi) => {
                    while self.peek() == Some(&Tok::Semi) {
                        self.pos += 1;
                    }
                    if self.peek() == Some(&Tok::Dot) {
                        self.pos += 1;
                        return Ok(());
                    }
                }
                Some(Tok::Dot) => {
                    self.pos += 1;
                    return Ok(());
                }
                _ => return Err(self.err("`;`, `,` or `.`")),
            }
        }
    }
}

/// Parse Turtle text. `plead:`, `rdf:`, `rdfs:` and `owl:` are predeclared.
pub fn parse_turtle(text: &str) -> Result<TripleSet, TurtleError> {
    let toks = Lexer::new(text).tokens()?;
    let end = text.lines().enumerate().last().map(|(i, l)| (i + 1, l.chars().count() + 1)).unwrap_or((1, 1));
    Parser { toks, pos: 0, end, set: TripleSet::new() }.parse()
}
