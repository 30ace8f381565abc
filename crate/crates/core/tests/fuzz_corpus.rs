//! Replays the checked-in fuzz seeds through the fuzz target bodies.

use std::fs;
use std::path::Path;

#[path = "../../../fuzz/src/targets.rs"]
mod targets;

fn replay(name: &str, body: fn(&[u8])) {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../fuzz/corpus")
        .join(name);
    let mut seen = 0;
    for entry in fs::read_dir(&dir).unwrap_or_else(|e| panic!("{}: {e}", dir.display())) {
        let path = entry.unwrap().path();
        body(&fs::read(&path).unwrap());
        seen += 1;
    }
    assert!(seen > 0, "no seeds for {name}");
}

#[test]
fn repertoire_jsonl() {
    replay("repertoire_jsonl", targets::repertoire_jsonl);
}

#[test]
fn domain_config() {
    replay("domain_config", targets::domain_config);
}

#[test]
fn gap_config() {
    replay("gap_config", targets::gap_config);
}

#[test]
fn experiment_config() {
    replay("experiment_config", targets::experiment_config);
}

#[test]
fn qd_config() {
    replay("qd_config", targets::qd_config);
}

#[test]
fn target() {
    replay("target", targets::target);
}

#[test]
fn report_csv() {
    replay("report_csv", targets::report_csv);
}

#[test]
fn trace_json() {
    replay("trace_json", targets::trace_json);
}

#[test]
fn valid_seeds_parse() {
    let corpus = Path::new(env!("CARGO_MANIFEST_DIR")).join("../../fuzz/corpus");
    let read = |p: &str| fs::read_to_string(corpus.join(p)).unwrap();
    let rep = qd_reach::archive::Repertoire::from_jsonl(&read("repertoire_jsonl/seed_small")).unwrap();
    assert_eq!(rep.len(), 2);
    qd_reach::bench::ExperimentConfig::from_json(
        &read("experiment_config/seed_full"),
        qd_reach::sim::DomainKind::Throw,
    )
    .unwrap();
    qd_reach::adapt::AdaptTrace::from_json(&read("trace_json/seed_invalid_step")).unwrap();
    qd_reach::evolve::RunReport::from_csv(&read("report_csv/seed_one_generation")).unwrap();
}
