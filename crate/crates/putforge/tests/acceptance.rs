//! Acceptance suite: one test per criterion, each printing a final
//! PASS/FAIL line. Run with `cargo test --test acceptance -- --nocapture`
//! to see every line; criteria that need a system C compiler or an external
//! complexity tool report a skip note when the host lacks one.

use std::collections::BTreeMap;
use std::path::{Path, PathBuf};
use std::process::Command;
use std::sync::OnceLock;
use std::time::{Duration, Instant};

use putforge::batch::B10_HISTOGRAM;
use putforge::dsl;
use putforge::emit::{emit, EmitOptions};
use putforge::instantiate::{instantiate, ArgvPolicy, Ranges, Rng};
use putforge::manifest::{self, Manifest, Record};
use putforge::model::{BugKind, TransformationKind, ALL_KINDS};
use putforge::oracle::{
    brute_force_check, derive_inputs, derive_leaf_input, interpret, BruteForceBudget, Outcome,
};
use putforge::verify;

fn criterion(number: u32, name: &str, body: impl FnOnce() + std::panic::UnwindSafe) {
    let result = std::panic::catch_unwind(body);
    match &result {
        Ok(()) => println!("ACCEPTANCE {number} ({name}): PASS"),
        Err(_) => println!("ACCEPTANCE {number} ({name}): FAIL"),
    }
    if let Err(payload) = result {
        std::panic::resume_unwind(payload);
    }
}

struct Fixture {
    dir: tempfile::TempDir,
    manifests: BTreeMap<String, Manifest>,
    b1000_elapsed: Duration,
}

impl Fixture {
    fn batch_dir(&self, name: &str) -> PathBuf {
        self.dir.path().join(name)
    }
}

fn run_generate(preset: &str, seed: u64, out: &Path) -> Duration {
    let started = Instant::now();
    let status = Command::new(env!("CARGO_BIN_EXE_putforge"))
        .args(["generate", "--preset", preset, "--seed", &seed.to_string(), "--out"])
        .arg(out)
        .stdout(std::process::Stdio::null())
        .status()
        .expect("generate runs");
    assert!(status.success(), "generate --preset {preset} failed");
    started.elapsed()
}

/// One shared generation run of the five reproduction batches (seed 7),
/// produced through the real CLI binary.
fn fixture() -> &'static Fixture {
    static FIXTURE: OnceLock<Fixture> = OnceLock::new();
    FIXTURE.get_or_init(|| {
        let dir = tempfile::tempdir().expect("tempdir");
        let mut manifests = BTreeMap::new();
        let mut b1000_elapsed = Duration::ZERO;
        for preset in ["B1", "B2", "B10", "B100", "B1000"] {
            let elapsed = run_generate(preset, 7, dir.path());
            if preset == "B1000" {
                b1000_elapsed = elapsed;
            }
            let m = manifest::read(&dir.path().join(preset).join("manifest.json")).unwrap();
            manifests.insert(preset.to_string(), m);
        }
        Fixture {
            dir,
            manifests,
            b1000_elapsed,
        }
    })
}

fn ok_records(m: &Manifest) -> Vec<&Record> {
    m.records.iter().filter(|r| r.is_ok()).collect()
}

#[test]
fn criterion_1_batch_reproduction() {
    criterion(1, "batch reproduction", || {
        let fx = fixture();
        let expected = [("B1", 10), ("B2", 45), ("B10", 200), ("B100", 100), ("B1000", 100)];
        for (name, count) in expected {
            let m = &fx.manifests[name];
            assert_eq!(m.records.len(), count, "{name} record count");
            assert_eq!(ok_records(m).len(), count, "{name} all records ok");
            let sources = std::fs::read_dir(fx.batch_dir(name))
                .unwrap()
                .filter(|e| {
                    e.as_ref()
                        .unwrap()
                        .path()
                        .extension()
                        .is_some_and(|x| x == "c")
                })
                .count();
            assert_eq!(sources, count, "{name} source file count");
        }
        let mut histogram: BTreeMap<u64, usize> = BTreeMap::new();
        for record in ok_records(&fx.manifests["B10"]) {
            let size = record.metrics.as_ref().unwrap().transformation_count;
            *histogram.entry(size).or_insert(0) += 1;
        }
        let expected_histogram: BTreeMap<u64, usize> = B10_HISTOGRAM
            .iter()
            .map(|&(size, count)| (size as u64, count))
            .collect();
        assert_eq!(histogram, expected_histogram, "B10 size histogram");
        assert!(
            fx.b1000_elapsed < Duration::from_secs(300),
            "B1000 took {:?}",
            fx.b1000_elapsed
        );
        println!(
            "  counts 10/45/200/100/100 exact; B10 histogram exact; B1000 in {:?}",
            fx.b1000_elapsed
        );
    });
}

const EQ1: &str =
    r#"SC(argv[2], "hello", SKIP, NEXT) IC(atoll(argv[1]), 69, FAIL, { return 0; })"#;

#[test]
fn criterion_2_reference_program_golden() {
    criterion(2, "reference-program golden test", || {
        let seq = dsl::parse(EQ1).unwrap();
        let inst = instantiate(
            &seq,
            &Ranges::default(),
            &mut Rng::new(7),
            ArgvPolicy::Distinct,
        )
        .unwrap();
        let emitted = emit(&inst, &EmitOptions::default()).unwrap();
        // The transformation body: a string comparison whose else-branch
        // nests the integer comparison guarding the bug.
        let body: Vec<&str> = emitted
            .source
            .lines()
            .skip_while(|l| !l.contains("if (argc"))
            .skip(1)
            .map(str::trim)
            .collect();
        let expected = [
            "if (strcmp(argv[2], \"hello\") == 0) {",
            ";",
            "} else {",
            "if (atoll(argv[1]) == 69) {",
            "assert(0 == 1);",
            "} else {",
            "return 0;",
            "}",
            "}",
            "}",
        ];
        assert_eq!(body, expected, "transformation body structure");

        let leaf_skip = derive_leaf_input(&inst, 0, 0).unwrap();
        let leaf_bug = derive_leaf_input(&inst, 1, 0).unwrap();
        let leaf_return = derive_leaf_input(&inst, 1, 1).unwrap();
        assert_eq!(leaf_skip, vec!["".to_string(), "hello".to_string()]);
        assert_eq!(leaf_bug, vec!["69".to_string(), "".to_string()]);
        assert_eq!(leaf_return, vec!["".to_string(), "".to_string()]);
        let inputs = derive_inputs(&inst).unwrap();
        assert_eq!(inputs.trigger, leaf_bug);
        println!("  leaf inputs (\"\",\"hello\"), (\"69\",\"\"), (\"\",\"\"); trigger (\"69\",\"\")");
    });
}

#[test]
fn criterion_3_oracle_soundness() {
    criterion(3, "oracle soundness", || {
        let started = Instant::now();

        // 1,000 random sequences of length <= 6 over all five kinds.
        let mut rng = Rng::new(0x5EED);
        let mut without_clean_input = 0;
        for _ in 0..1000 {
            let len = 1 + (rng.below(6) as usize);
            let seq = putforge::random_sequence(len, &ALL_KINDS, &mut rng).unwrap();
            let inst = instantiate(
                &seq,
                &Ranges::default(),
                &mut rng,
                ArgvPolicy::Distinct,
            )
            .unwrap();
            let inputs = derive_inputs(&inst).unwrap();
            assert_eq!(
                interpret(&inst, &inputs.trigger),
                Outcome::FailReached,
                "trigger must reach the bug: {}",
                dsl::print(&seq).unwrap()
            );
            match &inputs.non_trigger {
                Some(v) => assert_eq!(
                    interpret(&inst, v),
                    Outcome::CleanExit,
                    "non-trigger must exit cleanly: {}",
                    dsl::print(&seq).unwrap()
                ),
                None => {
                    // Only unconditionally failing chains (every item an
                    // FL loop) have no clean input of the right arity.
                    assert!(
                        inst.items.iter().all(|i| i.kind == TransformationKind::Fl),
                        "missing non-trigger for a constrained sequence: {}",
                        dsl::print(&seq).unwrap()
                    );
                    without_clean_input += 1;
                }
            }
        }

        // 200 small instances inside the brute-force budget: the enumerated
        // failing set must equal the constraint-characterized set.
        let narrow = Ranges {
            ic_v2: (0, 1),
            sc_s2: (0, 1),
            fl_e: (0, 2),
            pc_n: (1, 2),
            cc_n: (1, 2),
            cc_chars: "01".into(),
        };
        let budget = BruteForceBudget {
            alphabet: vec!['0', '1'],
            max_len: 3,
            int_window: (-1, 2),
            max_vectors: 100_000,
        };
        let mut rng = Rng::new(0xB00B5);
        for i in 0..200 {
            let len = 1 + (rng.below(2) as usize);
            let seq = putforge::random_sequence(len, &ALL_KINDS, &mut rng).unwrap();
            let inst = instantiate(&seq, &narrow, &mut rng, ArgvPolicy::Distinct).unwrap();
            let report = brute_force_check(&inst, &budget).unwrap();
            assert!(
                report.confirmed,
                "instance {i} disagrees: {} {:?}",
                dsl::print(&seq).unwrap(),
                report.counterexample
            );
        }

        let elapsed = started.elapsed();
        assert!(elapsed < Duration::from_secs(120), "took {elapsed:?}");
        println!(
            "  1000/1000 triggers fail, clean inputs clean ({without_clean_input} pure-FL chains have none); 200/200 brute-force agreements; {elapsed:?}"
        );
    });
}

#[test]
fn criterion_4_determinism() {
    criterion(4, "byte determinism", || {
        let dir = tempfile::tempdir().unwrap();
        let (a, b) = (dir.path().join("a"), dir.path().join("b"));
        run_generate("B10", 7, &a);
        run_generate("B10", 7, &b);
        let mut names: Vec<String> = std::fs::read_dir(a.join("B10"))
            .unwrap()
            .map(|e| e.unwrap().file_name().into_string().unwrap())
            .collect();
        names.sort();
        assert_eq!(names.len(), 201); // 200 sources + manifest.json
        let mut compared = 0usize;
        for name in &names {
            let x = std::fs::read(a.join("B10").join(name)).unwrap();
            let y = std::fs::read(b.join("B10").join(name)).unwrap();
            assert_eq!(x, y, "{name} differs between runs");
            compared += 1;
        }
        println!("  {compared} files byte-identical across two runs");
    });
}

/// Assert-payload sample used for the reproducibility protocol, mirroring
/// the experimental batches whose seeded bugs are all assertion failures:
/// the B1 and B2 assert configurations plus the first B10 PUTs.
fn protocol_sample(fx: &Fixture) -> Vec<verify::PutCase> {
    let mut cases = Vec::new();
    for name in ["B1", "B2", "B10"] {
        let dir = fx.batch_dir(name);
        for record in ok_records(&fx.manifests[name]) {
            if record.bug_kind != Some(BugKind::Assert) {
                continue;
            }
            cases.push(verify::PutCase {
                index: cases.len(),
                source_path: dir.join(record.source_path.as_ref().unwrap()),
                expected_sha256: record.source_sha256.clone(),
                trigger: record.trigger.clone().unwrap(),
                non_trigger: record.non_trigger.clone(),
                bug_kind: BugKind::Assert,
            });
            if (name == "B10" && cases.len() == 50) || cases.len() > 50 {
                break;
            }
        }
        if cases.len() >= 50 {
            break;
        }
    }
    cases.truncate(50);
    cases
}

#[test]
fn criterion_5_reproducibility_protocol() {
    criterion(5, "reproducibility protocol", || {
        let compilers = verify::discover_compilers(None);
        if compilers.is_empty() {
            println!("  skipped: no system C compiler available");
            return;
        }
        let configs = verify::build_configs(&compilers);
        let fx = fixture();
        let cases = protocol_sample(fx);
        assert_eq!(cases.len(), 50, "sample size");

        let mut compiled = 0u32;
        let mut aborted = 0u32;
        let mut clean = 0u32;
        let mut clean_total = 0u32;
        let mut findings = 0u64;
        for case in &cases {
            let report = verify::verify_put(&case.clone(), &configs, Duration::from_secs(10))
                .unwrap();
            assert_eq!(
                report.verdict,
                verify::PutVerdict::Pass,
                "{}: {:?}",
                report.source_path,
                report.reasons
            );
            for config in &report.configs {
                assert!(config.compile_ok, "{}: compile", report.source_path);
                assert_eq!(config.warning_count, 0, "{}: warnings", report.source_path);
                assert_eq!(
                    config.trigger_outcome,
                    Some(verify::RunOutcome::Abort),
                    "{}: trigger under {}",
                    report.source_path,
                    config.config
                );
                if case.non_trigger.is_some() {
                    clean_total += 1;
                    if config.non_trigger_outcome == Some(verify::RunOutcome::CleanExit) {
                        clean += 1;
                    }
                }
                if let Some(f) = config.sanitizer_findings {
                    findings += f;
                }
            }
            compiled += 1;
            aborted += 1;
        }
        assert_eq!(clean, clean_total, "every defined non-trigger exits 0");
        assert_eq!(findings, 0, "sanitizer findings");
        println!(
            "  50/50 sampled PUTs: compile clean ({compiled}), abort on trigger ({aborted}), {clean}/{clean_total} non-trigger runs exit 0, 0 sanitizer findings, compilers: {}",
            compilers.join("+")
        );
    });
}

/// External cyclomatic complexity: pmccabe when available, otherwise
/// clang-tidy's readability-function-size branch count plus one (its AST
/// includes the conditional hidden inside the assert macro, so agreement
/// within 1 is the expected envelope).
fn external_cyclomatic(path: &Path) -> Option<u64> {
    if probe("pmccabe") {
        let out = Command::new("pmccabe").arg(path).output().ok()?;
        let text = String::from_utf8_lossy(&out.stdout);
        return text
            .lines()
            .filter(|l| l.contains("main"))
            .filter_map(|l| l.split_whitespace().nth(1)?.parse::<u64>().ok())
            .max();
    }
    if probe("clang-tidy") {
        let out = Command::new("clang-tidy")
            .arg("-checks=-*,readability-function-size")
            .arg("-config={CheckOptions: [{key: readability-function-size.BranchThreshold, value: 0}]}")
            .arg(path)
            .arg("--")
            .output()
            .ok()?;
        let text = String::from_utf8_lossy(&out.stdout);
        let branches = text
            .lines()
            .filter_map(|l| {
                let rest = l.split(" branches").next()?;
                rest.rsplit(' ').next()?.parse::<u64>().ok()
            })
            .max()?;
        return Some(branches + 1);
    }
    None
}

fn probe(tool: &str) -> bool {
    Command::new(tool)
        .arg("--version")
        .stdout(std::process::Stdio::null())
        .stderr(std::process::Stdio::null())
        .status()
        .map(|s| s.success())
        .unwrap_or(false)
}

#[test]
fn criterion_6_complexity_metrics() {
    criterion(6, "complexity metrics", || {
        let fx = fixture();

        // Tool comparison on 20 sampled PUTs across three batches.
        let mut sample: Vec<(PathBuf, u64)> = Vec::new();
        for (name, take) in [("B1", 10), ("B2", 5), ("B10", 5)] {
            let dir = fx.batch_dir(name);
            for record in ok_records(&fx.manifests[name]).into_iter().take(take) {
                sample.push((
                    dir.join(record.source_path.as_ref().unwrap()),
                    record.metrics.as_ref().unwrap().cyclomatic,
                ));
            }
        }
        assert_eq!(sample.len(), 20);
        let mut compared = 0;
        let mut max_diff = 0i64;
        for (path, mine) in &sample {
            match external_cyclomatic(path) {
                Some(ext) => {
                    let diff = (*mine as i64 - ext as i64).abs();
                    assert!(
                        diff <= 1,
                        "{}: computed {mine}, external {ext}",
                        path.display()
                    );
                    max_diff = max_diff.max(diff);
                    compared += 1;
                }
                None => break,
            }
        }
        if compared == 0 {
            println!("  note: no external complexity tool (pmccabe/clang-tidy); tool comparison skipped");
        }

        // Minimum over the whole regenerated batch union is exactly 3.
        let min = fx
            .manifests
            .values()
            .flat_map(|m| ok_records(m))
            .map(|r| r.metrics.as_ref().unwrap().cyclomatic)
            .min()
            .unwrap();
        assert_eq!(min, 3, "minimum cyclomatic over B");

        // Maximum over B1000 lies in the coarse seed-independent range.
        let max = ok_records(&fx.manifests["B1000"])
            .iter()
            .map(|r| r.metrics.as_ref().unwrap().cyclomatic)
            .max()
            .unwrap();
        assert!((1000..=3200).contains(&max), "B1000 max cyclomatic {max}");
        println!(
            "  external tool agreement on {compared}/20 samples (max diff {max_diff}); min over B = 3; B1000 max = {max}"
        );
    });
}

#[test]
fn criterion_7_out_of_scope_statement() {
    criterion(7, "out-of-scope tool measurements", || {
        // Bug-finder comparisons (detection percentages, running-time
        // curves, rarity counts) need AFL/CBMC/KLEE and hour-long budgets;
        // they are intentionally not reproduced here. Criteria 1-6 plus the
        // per-module suites stand in for them. The CLI deliberately has no
        // subcommand that launches an external bug finder.
        let out = Command::new(env!("CARGO_BIN_EXE_putforge"))
            .arg("--help")
            .output()
            .unwrap();
        let help = String::from_utf8_lossy(&out.stdout);
        for sub in ["generate", "parse-check", "derive", "metrics", "verify", "presets"] {
            assert!(help.contains(sub), "missing subcommand {sub}");
        }
        for absent in ["afl", "cbmc", "klee", "fuzz"] {
            assert!(
                !help.to_lowercase().contains(absent),
                "unexpected tool-runner surface: {absent}"
            );
        }
        println!("  replaced by criteria 1-6; no bug-finder entry points exposed");
    });
}
