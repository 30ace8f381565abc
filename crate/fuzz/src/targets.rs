//! Fuzz target bodies. Shared by the cargo-fuzz binaries and by the corpus
//! replay test in the core crate, so both exercise the same checks.

#![allow(dead_code)]

use qd_reach::adapt::AdaptTrace;
use qd_reach::archive::Repertoire;
use qd_reach::bench::cli::parse_target;
use qd_reach::bench::ExperimentConfig;
use qd_reach::evolve::{QdConfig, RunReport};
use qd_reach::sim::{DomainConfig, DomainKind, GapConfig};

fn text(data: &[u8]) -> Option<&str> {
    std::str::from_utf8(data).ok()
}

/// Parsed repertoires re-serialize to a fixed point.
pub fn repertoire_jsonl(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(rep) = Repertoire::from_jsonl(s) {
        let out = rep.to_jsonl();
        let back = Repertoire::from_jsonl(&out).expect("saved repertoire parses");
        assert_eq!(back.to_jsonl(), out);
    }
}

pub fn domain_config(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(cfg) = DomainConfig::from_json(s) {
        let out = serde_json::to_string(&cfg).expect("config serializes");
        assert_eq!(DomainConfig::from_json(&out).expect("serialized config parses"), cfg);
    }
}

pub fn gap_config(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(gap) = GapConfig::from_json(s) {
        let _ = gap.validate_for(4);
        let out = serde_json::to_string(&gap).expect("gap serializes");
        assert_eq!(GapConfig::from_json(&out).expect("serialized gap parses"), gap);
    }
}

pub fn experiment_config(data: &[u8]) {
    let Some(s) = text(data) else { return };
    for kind in [DomainKind::Throw, DomainKind::Lever] {
        if let Ok(cfg) = ExperimentConfig::from_json(s, kind) {
            cfg.validate().expect("parsed configs are valid");
        }
    }
}

pub fn qd_config(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(cfg) = QdConfig::from_json(s) {
        cfg.validate().expect("parsed configs are valid");
    }
}

/// Goals are finite and have the requested length.
pub fn target(data: &[u8]) {
    let Some(s) = text(data) else { return };
    for dims in 1..4 {
        if let Ok(t) = parse_target(s, dims) {
            assert_eq!(t.len(), dims);
            assert!(t.iter().all(|v| v.is_finite()));
        }
    }
}

pub fn report_csv(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(report) = RunReport::from_csv(s) {
        let out = report.to_csv();
        assert_eq!(RunReport::from_csv(&out).expect("written report parses").to_csv(), out);
    }
}

pub fn trace_json(data: &[u8]) {
    let Some(s) = text(data) else { return };
    if let Ok(trace) = AdaptTrace::from_json(s) {
        let _ = trace.to_csv();
        let _ = (trace.initial_error(), trace.final_error(), trace.best_error_within(4));
        let out = trace.to_json();
        assert_eq!(
            AdaptTrace::from_json(&out).expect("written trace parses").to_json(),
            out
        );
    }
}
