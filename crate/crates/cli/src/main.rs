//! `xbd`: validate requirement corpora, export artifacts, ingest audit trails
//! and replay explanation scenarios.
//!
//! Exit codes: 0 success, 1 validation failure, 2 usage error, 3 I/O error.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use chrono::{DateTime, FixedOffset};
use clap::{Args, Parser, Subcommand, ValueEnum};
use serde_json::{json, Value};

use xbd_core::coverage::{coverage_report, load_checklist};
use xbd_core::delivery::{action_log_jsonl, parse_events, DeliveryContext, DeliveryEngine, Delivered};
use xbd_core::matcher::{bind, compile_patterns, load_mapping, PatternMapping};
use xbd_core::ontology::{emit_vocabulary, to_turtle};
use xbd_core::prov::{ingest, ProvGraph};
use xbd_core::registry::{lint_registry, matrix};
use xbd_core::render::{load_templates, render, select_template, RenderMode, Template};
use xbd_core::taxonomy::Perspective;
use xbd_core::{load_registry, Registry};

#[derive(Parser)]
#[command(name = "xbd", version, about = "Explanation requirements toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Load and validate a registry.
    Validate(RegistryArgs),
    /// Report streamlining groups, source-rank and conciseness warnings.
    Lint(RegistryArgs),
    /// Write the ontology (ttl) or the classification matrix (csv).
    Export(ExportArgs),
    /// Ingest an audit trail and report its size.
    Ingest(IngestArgs),
    /// Render one explanation for a requirement, subject and recipient.
    Explain(ExplainArgs),
    /// Replay an event log and write the action log and rendered texts.
    Simulate(SimulateArgs),
}

#[derive(Args)]
struct RegistryArgs {
    #[arg(long)]
    registry: PathBuf,
    /// Machine-readable output.
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Format {
    Ttl,
    Csv,
}

#[derive(Args)]
struct ExportArgs {
    #[arg(long)]
    registry: PathBuf,
    #[arg(long, value_enum)]
    format: Format,
    /// Output directory.
    #[arg(long)]
    out: PathBuf,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct IngestArgs {
    #[arg(long)]
    trail: PathBuf,
    /// Write the canonical JSONL form of the trail here.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(long)]
    json: bool,
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Strict,
    Gapmarked,
}

#[derive(Args)]
struct Inputs {
    #[arg(long)]
    registry: PathBuf,
    #[arg(long)]
    patterns: PathBuf,
    #[arg(long)]
    templates: PathBuf,
    #[arg(long)]
    trail: PathBuf,
    /// Fixed `generated_at` instant (RFC 3339).
    #[arg(long, value_parser = parse_instant)]
    at: Option<DateTime<FixedOffset>>,
    #[arg(long)]
    json: bool,
}

#[derive(Args)]
struct ExplainArgs {
    requirement: String,
    subject: String,
    recipient: String,
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long, value_enum, default_value = "strict")]
    mode: Mode,
}

#[derive(Args)]
struct SimulateArgs {
    #[command(flatten)]
    inputs: Inputs,
    #[arg(long)]
    events: PathBuf,
    /// Output directory for `actions.jsonl` and `explanations/`.
    #[arg(long)]
    out: PathBuf,
    /// Minimum-content checklist; writes `coverage.txt` when given.
    #[arg(long)]
    checklist: Option<PathBuf>,
}

fn parse_instant(s: &str) -> Result<DateTime<FixedOffset>, String> {
    DateTime::parse_from_rfc3339(s).map_err(|e| format!("expected an RFC 3339 instant: {e}"))
}

/// A failed command: exit code plus structured errors.
struct Failure {
    code: u8,
    errors: Vec<(String, String)>,
}

impl Failure {
    fn invalid(kind: &str, message: impl ToString) -> Self {
        Failure { code: 1, errors: vec![(kind.to_string(), message.to_string())] }
    }

    fn io(path: &Path, err: std::io::Error) -> Self {
        Failure { code: 3, errors: vec![("Io".into(), format!("{}: {err}", path.display()))] }
    }
}

type Outcome = Result<(String, Value), Failure>;

fn read(path: &Path) -> Result<String, Failure> {
    fs::read_to_string(path).map_err(|e| Failure::io(path, e))
}

fn write(path: &Path, contents: &str) -> Result<(), Failure> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Failure::io(dir, e))?;
    }
    fs::write(path, contents).map_err(|e| Failure::io(path, e))
}

fn with_file<T, E: std::fmt::Display>(path: &Path, kind: &str, r: Result<T, E>) -> Result<T, Failure> {
    r.map_err(|e| Failure::invalid(kind, format!("{}: {e}", path.display())))
}

fn registry_from(path: &Path) -> Result<Registry, Failure> {
    let text = read(path)?;
    load_registry(&text).map_err(|e| Failure::invalid(e.code(), format!("{}: {e}", path.display())))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let json = match &cli.command {
        Command::Validate(a) | Command::Lint(a) => a.json,
        Command::Export(a) => a.json,
        Command::Ingest(a) => a.json,
        Command::Explain(a) => a.inputs.json,
        Command::Simulate(a) => a.inputs.json,
    };
    let outcome = match cli.command {
        Command::Validate(a) => cmd_validate(&a),
        Command::Lint(a) => cmd_lint(&a),
        Command::Export(a) => cmd_export(&a),
        Command::Ingest(a) => cmd_ingest(&a),
        Command::Explain(a) => cmd_explain(&a),
        Command::Simulate(a) => cmd_simulate(&a),
    };
    match outcome {
        Ok((text, value)) => {
            if json {
                println!("{}", serde_json::to_string_pretty(&value).expect("json output"));
            } else {
                print!("{text}");
            }
            ExitCode::SUCCESS
        }
        Err(f) => {
            if json {
                let errors: Vec<Value> = f.errors.iter().map(|(k, m)| json!({"code": k, "message": m})).collect();
                println!("{}", serde_json::to_string_pretty(&json!({"ok": false, "errors": errors})).expect("json output"));
            } else {
                for (k, m) in &f.errors {
                    eprintln!("error[{k}]: {m}");
                }
            }
            ExitCode::from(f.code)
        }
    }
}

fn cmd_validate(a: &RegistryArgs) -> Outcome {
    let reg = registry_from(&a.registry)?;
    let lint = lint_registry(&reg);
    let text = format!("{} requirements valid\n", reg.len());
    Ok((text, json!({"ok": true, "requirements": reg.len(), "lint": lint})))
}

fn cmd_lint(a: &RegistryArgs) -> Outcome {
    let reg = registry_from(&a.registry)?;
    let lint = lint_registry(&reg);
    let mut text = String::new();
    for g in &lint.streamline_groups {
        text += &format!("streamline: {}\n", g.join(", "));
    }
    for w in &lint.rank_warnings {
        text += &format!("rank: `{}` ({}) is more primary than its parent `{}` ({})\n", w.child, w.child_rank, w.parent, w.parent_rank);
    }
    for w in &lint.conciseness_warnings {
        text += &format!("conciseness: {} has {} values\n", w.sub_property, w.value_count);
    }
    if lint.is_empty() {
        text += "no findings\n";
    }
    Ok((text, json!({"ok": true, "lint": lint})))
}

fn cmd_export(a: &ExportArgs) -> Outcome {
    let reg = registry_from(&a.registry)?;
    let mut written = Vec::new();
    match a.format {
        Format::Ttl => {
            let instances = to_turtle(reg.requirements()).map_err(|e| Failure::invalid("Ontology", e))?;
            for (name, body) in [("vocabulary.ttl", emit_vocabulary().to_turtle()), ("instances.ttl", instances)] {
                let path = a.out.join(name);
                write(&path, &body)?;
                written.push(path);
            }
        }
        Format::Csv => {
            let path = a.out.join("matrix.csv");
            write(&path, &matrix(&reg).to_csv())?;
            written.push(path);
        }
    }
    let names: Vec<String> = written.iter().map(|p| p.display().to_string()).collect();
    let text = names.iter().map(|n| format!("wrote {n}\n")).collect();
    Ok((text, json!({"ok": true, "written": names})))
}

fn cmd_ingest(a: &IngestArgs) -> Outcome {
    let g = with_file(&a.trail, "Ingest", ingest(&read(&a.trail)?))?;
    if let Some(out) = &a.out {
        write(out, &g.to_jsonl())?;
    }
    let text = format!("{} nodes, {} edges\n", g.node_count(), g.edge_count());
    Ok((text, json!({"ok": true, "nodes": g.node_count(), "edges": g.edge_count()})))
}

struct Loaded {
    registry: Registry,
    patterns: PatternMapping,
    templates: Vec<Template>,
    graph: ProvGraph,
}

fn load_inputs(i: &Inputs) -> Result<Loaded, Failure> {
    let registry = registry_from(&i.registry)?;
    let patterns = with_file(&i.patterns, "Patterns", load_mapping(&read(&i.patterns)?))?;
    let templates = with_file(&i.templates, "Templates", load_templates(&read(&i.templates)?))?;
    for t in &templates {
        let req = registry.get(&t.requirement_id).ok_or_else(|| {
            Failure::invalid("Templates", format!("template `{}` names unknown requirement `{}`", t.id, t.requirement_id))
        })?;
        with_file(&i.templates, "Templates", t.check_against(req))?;
    }
    let graph = with_file(&i.trail, "Ingest", ingest(&read(&i.trail)?))?;
    Ok(Loaded { registry, patterns, templates, graph })
}

fn cmd_explain(a: &ExplainArgs) -> Outcome {
    let l = load_inputs(&a.inputs)?;
    let req = l
        .registry
        .get(&a.requirement)
        .ok_or_else(|| Failure::invalid("UnknownRequirement", &a.requirement))?;
    let recipient = req
        .classification
        .recipients
        .iter()
        .find(|r| r.name == a.recipient)
        .ok_or_else(|| Failure::invalid("UnknownRecipient", format!("`{}` is not a recipient of `{}`", a.recipient, req.id)))?;
    let view;
    let graph = match req.classification.perspective {
        Perspective::ExAnte => {
            view = l.graph.pre_decision_view();
            &view
        }
        Perspective::ExPost => &l.graph,
    };
    let patterns = compile_patterns(req, &l.patterns).map_err(|e| Failure::invalid("Match", e))?;
    let bindings = bind(&req.id, &patterns, graph, &a.subject).map_err(|e| Failure::invalid("Match", e))?;
    let template = select_template(&l.templates, req, recipient).map_err(|e| Failure::invalid("Render", e))?;
    let mode = match a.mode {
        Mode::Strict => RenderMode::Strict,
        Mode::Gapmarked => RenderMode::GapMarked,
    };
    let at = a.inputs.at.unwrap_or_else(|| chrono::Utc::now().fixed_offset());
    let instance = render(template, &bindings, req, recipient, mode, at).map_err(|e| Failure::invalid("Render", e))?;
    let text = format!("{}\n", instance.text);
    Ok((text, json!({"ok": true, "explanation": instance})))
}

fn cmd_simulate(a: &SimulateArgs) -> Outcome {
    let l = load_inputs(&a.inputs)?;
    let events = with_file(&a.events, "Events", parse_events(&read(&a.events)?))?;
    let ctx = DeliveryContext {
        registry: &l.registry,
        graph: &l.graph,
        patterns: &l.patterns,
        templates: &l.templates,
        clock: a.inputs.at,
    };
    let mut engine = DeliveryEngine::new(ctx);
    let actions = with_file(&a.events, "Delivery", engine.replay(&events))?;

    write(&a.out.join("actions.jsonl"), &action_log_jsonl(actions))?;
    let dir = a.out.join("explanations");
    if dir.exists() {
        fs::remove_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;
    }
    fs::create_dir_all(&dir).map_err(|e| Failure::io(&dir, e))?;
    let mut text = String::new();
    for (n, action) in actions.iter().enumerate() {
        let recipient = action.recipients.iter().map(|r| r.name.as_str()).collect::<Vec<_>>().join("+");
        let dup = if action.duplicate { " (duplicate)" } else { "" };
        match &action.explanation {
            Delivered::Rendered(inst) => {
                let file = dir.join(format!("{:03}_{}_{}.txt", n + 1, action.requirement_id, recipient));
                write(&file, &format!("{}\n", inst.text))?;
                text += &format!("[{}] {} -> {}{dup}: {}\n", n + 1, action.requirement_id, recipient, inst.text);
            }
            Delivered::Deferred { missing } => {
                text += &format!(
                    "[{}] {} -> {}{dup}: deferred, missing {}\n",
                    n + 1,
                    action.requirement_id,
                    recipient,
                    missing.join(", ")
                );
            }
        }
    }
    let mut value = json!({"ok": true, "events": events.len(), "actions": actions.len()});
    if let Some(path) = &a.checklist {
        let list = with_file(path, "Checklist", load_checklist(&read(path)?, &l.registry))?;
        let report = coverage_report(&list, &l.registry, actions);
        write(&a.out.join("coverage.txt"), &report.to_string())?;
        text += &report.to_string();
        value["coverage"] = serde_json::to_value(&report).expect("report serializes");
    }
    Ok((text, value))
}
