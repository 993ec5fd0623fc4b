//! End-to-end runs of the `xbd` binary.

use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use xbd_core::load_registry;
use xbd_core::ontology::requirements_from_turtle;

fn fixture(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("../core/fixtures").join(name)
}

fn xbd(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xbd")).args(args).output().expect("binary runs")
}

fn path(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn corpus_with(edit: impl FnOnce(&mut serde_json::Value)) -> tempfile::NamedTempFile {
    let mut doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(fixture("gdpr_registry.json")).unwrap()).unwrap();
    edit(&mut doc);
    let file = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(file.path(), doc.to_string()).unwrap();
    file
}

fn simulate(out: &Path, events: &Path, extra: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_xbd"))
        .arg("simulate")
        .arg("--registry").arg(fixture("gdpr_registry.json"))
        .arg("--patterns").arg(fixture("loan_patterns.json"))
        .arg("--templates").arg(fixture("loan_templates.json"))
        .arg("--trail").arg(fixture("loan_trail.jsonl"))
        .arg("--events").arg(events)
        .arg("--out").arg(out)
        .args(extra)
        .output()
        .expect("binary runs")
}

#[test]
fn validate_corpus() {
    let o = xbd(&["validate", "--registry", path(&fixture("gdpr_registry.json"))]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(stdout(&o), "19 requirements valid\n");
}

#[test]
fn validate_rejects_duplicate_id() {
    let file = corpus_with(|d| {
        let reqs = d["requirements"].as_array_mut().unwrap();
        let copy = reqs[0].clone();
        reqs.push(copy);
    });
    let o = xbd(&["validate", "--registry", path(file.path()), "--json"]);
    assert_eq!(o.status.code(), Some(1));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["ok"], false);
    assert_eq!(v["errors"][0]["code"], "DuplicateId");
}

#[test]
fn validate_rejects_confidential_outward() {
    let file = corpus_with(|d| {
        d["requirements"][0]["content"]["confidentiality"] = "confidential".into();
    });
    let o = xbd(&["validate", "--registry", path(file.path())]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("data_subject"));
}

#[test]
fn lint_reports_no_rank_warnings() {
    let o = xbd(&["lint", "--registry", path(&fixture("gdpr_registry.json")), "--json"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["lint"]["rank_warnings"].as_array().unwrap().len(), 0);
}

#[test]
fn export_csv_matrix() {
    let dir = tempfile::tempdir().unwrap();
    let o = xbd(&["export", "--registry", path(&fixture("gdpr_registry.json")), "--format", "csv", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let csv = std::fs::read_to_string(dir.path().join("matrix.csv")).unwrap();
    assert_eq!(csv.lines().count(), 20);
}

#[test]
fn export_ttl_reimports() {
    let dir = tempfile::tempdir().unwrap();
    let o = xbd(&["export", "--registry", path(&fixture("gdpr_registry.json")), "--format", "ttl", "--out", path(dir.path())]);
    assert_eq!(o.status.code(), Some(0));
    let ttl = std::fs::read_to_string(dir.path().join("instances.ttl")).unwrap();
    let back = requirements_from_turtle(&ttl).unwrap();
    let reg = load_registry(&std::fs::read_to_string(fixture("gdpr_registry.json")).unwrap()).unwrap();
    assert_eq!(back.len(), 19);
    for (a, b) in reg.iter().zip(&back) {
        assert_eq!(a.classification.normalized(), b.classification.normalized());
    }
    assert!(dir.path().join("vocabulary.ttl").exists());
}

#[test]
fn ingest_reports_counts() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trail.jsonl");
    let o = xbd(&["ingest", "--trail", path(&fixture("loan_trail.jsonl")), "--out", path(&out)]);
    assert_eq!(stdout(&o), "33 nodes, 52 edges\n");
    let again = xbd(&["ingest", "--trail", path(&out)]);
    assert_eq!(stdout(&again), "33 nodes, 52 edges\n");
}

#[test]
fn explain_customer_decision() {
    let o = xbd(&[
        "explain", "decision_reached", "applications_no/437", "data_subject",
        "--registry", path(&fixture("gdpr_registry.json")),
        "--patterns", path(&fixture("loan_patterns.json")),
        "--templates", path(&fixture("loan_templates.json")),
        "--trail", path(&fixture("loan_trail.jsonl")),
        "--at", "2021-02-12T09:00:00Z",
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).contains("This is because of negative credit history."));
}

#[test]
fn simulate_goldens_and_determinism() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let events = fixture("loan_events.jsonl");
    let checklist = fixture("ico_map.json");
    let fixed = ["--at", "2021-03-01T00:00:00Z", "--checklist", path(&checklist)];
    assert_eq!(simulate(a.path(), &events, &fixed).status.code(), Some(0));
    assert_eq!(simulate(b.path(), &events, &fixed).status.code(), Some(0));

    let log_a = std::fs::read(a.path().join("actions.jsonl")).unwrap();
    assert_eq!(log_a, std::fs::read(b.path().join("actions.jsonl")).unwrap());
    assert_eq!(log_a.iter().filter(|&&c| c == b'\n').count(), 24);

    let mut texts = String::new();
    for entry in std::fs::read_dir(a.path().join("explanations")).unwrap() {
        let p = entry.unwrap().path();
        let other = b.path().join("explanations").join(p.file_name().unwrap());
        assert_eq!(std::fs::read(&p).unwrap(), std::fs::read(other).unwrap());
        texts += &std::fs::read_to_string(p).unwrap();
    }
    for golden in [
        "This is because of negative credit history.",
        "below the acceptance threshold of 750",
        "The current score of 715",
        "records/70551",
        "records/70552",
        "records/70553",
    ] {
        assert!(texts.contains(golden), "missing {golden}");
    }
    let coverage = std::fs::read_to_string(a.path().join("coverage.txt")).unwrap();
    assert_eq!(coverage.lines().count(), 6);
    assert!(!coverage.contains("UNCOVERED"));
}

#[test]
fn simulate_empty_event_log() {
    let dir = tempfile::tempdir().unwrap();
    let events = tempfile::NamedTempFile::new().unwrap();
    let o = simulate(dir.path(), events.path(), &[]);
    assert_eq!(o.status.code(), Some(0));
    assert_eq!(std::fs::read_to_string(dir.path().join("actions.jsonl")).unwrap(), "");
}

#[test]
fn usage_errors_exit_two() {
    assert_eq!(xbd(&[]).status.code(), Some(2));
    assert_eq!(xbd(&["validate"]).status.code(), Some(2));
    assert_eq!(xbd(&["export", "--registry", "x", "--format", "xml", "--out", "y"]).status.code(), Some(2));
    assert_eq!(xbd(&["frobnicate"]).status.code(), Some(2));
}

#[test]
fn missing_file_exits_three() {
    let o = xbd(&["validate", "--registry", "/nonexistent/registry.json", "--json"]);
    assert_eq!(o.status.code(), Some(3));
    let v: serde_json::Value = serde_json::from_str(&stdout(&o)).unwrap();
    assert_eq!(v["errors"][0]["code"], "Io");
}

#[test]
fn malformed_trail_exits_one() {
    let trail = tempfile::NamedTempFile::new().unwrap();
    std::fs::write(trail.path(), "{not json}\n").unwrap();
    let o = xbd(&["ingest", "--trail", path(trail.path())]);
    assert_eq!(o.status.code(), Some(1));
}
