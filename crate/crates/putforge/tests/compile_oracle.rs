//! Compiler-oracle checks for emission edge cases: these drive the real
//! system compilers and skip silently without one.

use std::time::Duration;

use putforge::batch::build_put;
use putforge::emit::EmitOptions;
use putforge::instantiate::{ArgvPolicy, Ranges};
use putforge::verify::{build_configs, discover_compilers, verify_put, PutCase, PutVerdict};

fn verify_line(line: &str) -> Option<putforge::verify::PutReport> {
    let configs = build_configs(&discover_compilers(None));
    if configs.is_empty() {
        eprintln!("skipped: no system C compiler");
        return None;
    }
    let seq = putforge::dsl::parse(line).unwrap();
    let put = build_put(&seq, &Ranges::default(), 7, ArgvPolicy::Distinct, &EmitOptions::default())
        .unwrap();
    let dir = tempfile::tempdir().unwrap();
    let source_path = dir.path().join("put.c");
    std::fs::write(&source_path, &put.source).unwrap();
    let case = PutCase {
        index: 0,
        source_path,
        expected_sha256: None,
        trigger: put.trigger,
        non_trigger: put.non_trigger,
        bug_kind: put.bug_kind,
    };
    Some(verify_put(&case, &configs, Duration::from_secs(10)).unwrap())
}

#[test]
fn pc_with_minimum_bound_is_warning_free_and_aborts() {
    let Some(report) = verify_line("PC(argv[1], 1, FAIL)") else {
        return;
    };
    assert_eq!(report.verdict, PutVerdict::Pass, "{:?}", report.reasons);
    for config in &report.configs {
        assert_eq!(config.warning_count, 0, "{}", config.config);
    }
}

#[test]
fn fl_loop_worker_is_warning_free_at_o1() {
    let Some(report) = verify_line("FL(3, FAIL)") else {
        return;
    };
    assert_eq!(report.verdict, PutVerdict::Pass, "{:?}", report.reasons);
    let o1 = report
        .configs
        .iter()
        .find(|c| c.config.contains("-O1"))
        .expect("an -O1 config exists");
    assert_eq!(o1.warning_count, 0);
    assert_eq!(
        o1.trigger_outcome,
        Some(putforge::verify::RunOutcome::Abort)
    );
}

#[test]
fn oob_bug_is_confirmed_by_the_sanitizer() {
    let Some(report) = verify_line("CC(argv[1], 'z', 2, FAIL_OOB, SKIP)") else {
        return;
    };
    assert_eq!(report.verdict, PutVerdict::Pass, "{:?}", report.reasons);
    let sanitized = report
        .configs
        .iter()
        .find(|c| c.config.contains("fsanitize"))
        .expect("a sanitizer config exists");
    let findings = sanitized.sanitizer_findings.unwrap_or(0);
    let aborted = sanitized.trigger_outcome == Some(putforge::verify::RunOutcome::Abort);
    assert!(
        findings > 0 || aborted,
        "sanitizer must surface the seeded out-of-bounds write"
    );
}
